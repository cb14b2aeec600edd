#include "dpcollab/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "json.hpp"

namespace dpcollab::wire {

namespace {

using nlohmann::json;

json parse_line(const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() || !j.contains("type")) {
    throw std::invalid_argument("wire: malformed message: " + line);
  }
  return j;
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("wire: write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Reads up to and including the next '\n'; returns the line without it.
std::string read_line(int fd, std::string& buffer) {
  for (;;) {
    const std::size_t pos = buffer.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("wire: read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw std::runtime_error("wire: connection closed mid-message");
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string encode_query(const GradientQuery& query) {
  json j;
  j["type"] = "query";
  j["round"] = query.round_k;
  j["theta"] = query.theta;
  return j.dump();
}

GradientQuery decode_query(const std::string& line) {
  const json j = parse_line(line);
  if (j["type"] != "query" || !j.contains("round") || !j.contains("theta")) {
    throw std::invalid_argument("wire: not a query: " + line);
  }
  GradientQuery query;
  query.round_k = j["round"].get<int>();
  query.theta = j["theta"].get<Vec>();
  return query;
}

std::string encode_response(const QueryResponse& response) {
  json j;
  j["type"] = "response";
  j["round"] = response.round_k;
  j["q_bar"] = response.q_bar;
  j["n"] = response.n_l;
  return j.dump();
}

std::string encode_error(const std::string& code, int round) {
  json j;
  j["type"] = "error";
  j["code"] = code;
  j["round"] = round;
  return j.dump();
}

QueryResponse decode_response(const std::string& line) {
  const json j = parse_line(line);
  if (j["type"] == "error") {
    const std::string code = j.value("code", "");
    const int round = j.value("round", 0);
    if (code == "budget_exhausted") {
      throw BudgetExhaustedError("remote owner: budget exhausted at round " + std::to_string(round));
    }
    if (code == "bad_round") {
      throw BadRoundError("remote owner: bad round " + std::to_string(round));
    }
    throw std::invalid_argument("wire: unknown error code: " + code);
  }
  if (j["type"] != "response" || !j.contains("round") || !j.contains("q_bar") || !j.contains("n")) {
    throw std::invalid_argument("wire: not a response: " + line);
  }
  QueryResponse response;
  response.round_k = j["round"].get<int>();
  response.q_bar = j["q_bar"].get<Vec>();
  response.n_l = j["n"].get<int>();
  return response;
}

std::string answer_query_line(DataOwner& owner, const std::string& line) {
  GradientQuery query;
  try {
    query = decode_query(line);
  } catch (const std::invalid_argument&) {
    return encode_error("bad_round", 0);
  }
  try {
    return encode_response(owner_respond(owner, query));
  } catch (const BudgetExhaustedError&) {
    return encode_error("budget_exhausted", query.round_k);
  } catch (const BadRoundError&) {
    return encode_error("bad_round", query.round_k);
  }
}

OwnerServer::OwnerServer(DataOwner& owner) : owner_(owner) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("wire: socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;  // ephemeral
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 1) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error(std::string("wire: bind/listen failed: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

OwnerServer::~OwnerServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void OwnerServer::serve_one_connection() {
  const int conn = ::accept(listen_fd_, nullptr, nullptr);
  if (conn < 0) throw std::runtime_error("wire: accept failed");
  std::string buffer;
  try {
    for (;;) {
      std::string line;
      try {
        line = read_line(conn, buffer);
      } catch (const std::runtime_error&) {
        break;  // peer closed
      }
      if (line.empty()) continue;
      write_all(conn, answer_query_line(owner_, line) + "\n");
    }
  } catch (...) {
    ::close(conn);
    throw;
  }
  ::close(conn);
}

TcpOwnerChannel::TcpOwnerChannel(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("wire: socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw std::invalid_argument("wire: bad host address: " + host);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd_);
    throw std::runtime_error(std::string("wire: connect failed: ") + std::strerror(errno));
  }
}

TcpOwnerChannel::~TcpOwnerChannel() {
  if (fd_ >= 0) ::close(fd_);
}

QueryResponse TcpOwnerChannel::ask(const GradientQuery& query) {
  write_all(fd_, encode_query(query) + "\n");
  return decode_response(read_line(fd_, buffer_));
}

}  // namespace dpcollab::wire
