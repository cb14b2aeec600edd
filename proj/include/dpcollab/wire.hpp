#ifndef DPCOLLAB_WIRE_HPP
#define DPCOLLAB_WIRE_HPP

#include <string>

#include "dpcollab/federation.hpp"

namespace dpcollab::wire {

// Newline-delimited JSON protocol for the networked mode. One UTF-8 JSON
// object per line:
//   query:    {"type":"query","round":k,"theta":[...]}
//   response: {"type":"response","round":k,"q_bar":[...],"n":n_l}
//   error:    {"type":"error","code":"budget_exhausted"|"bad_round","round":k}
// Lines carry no trailing newline; framing is added by the transport.

std::string encode_query(const GradientQuery& query);
GradientQuery decode_query(const std::string& line);

std::string encode_response(const QueryResponse& response);

std::string encode_error(const std::string& code, int round);

// Parses a response line. An error line is raised as the matching exception
// (BudgetExhaustedError / BadRoundError); malformed input raises
// std::invalid_argument.
QueryResponse decode_response(const std::string& line);

// Owner-side dispatch: one request line in, one reply line out. Owner errors
// are mapped onto error lines instead of escaping.
std::string answer_query_line(DataOwner& owner, const std::string& line);

// Minimal TCP demonstration of the protocol on the loopback interface.

// Serves one owner on an ephemeral localhost port. Construction binds and
// listens; serve_one_connection() accepts a single peer and answers its
// query lines until the peer disconnects.
class OwnerServer {
 public:
  explicit OwnerServer(DataOwner& owner);
  ~OwnerServer();
  OwnerServer(const OwnerServer&) = delete;
  OwnerServer& operator=(const OwnerServer&) = delete;

  int port() const { return port_; }
  void serve_one_connection();

 private:
  DataOwner& owner_;
  int listen_fd_ = -1;
  int port_ = 0;
};

// Learner-side channel to a remote owner.
class TcpOwnerChannel {
 public:
  TcpOwnerChannel(const std::string& host, int port);
  ~TcpOwnerChannel();
  TcpOwnerChannel(const TcpOwnerChannel&) = delete;
  TcpOwnerChannel& operator=(const TcpOwnerChannel&) = delete;

  QueryResponse ask(const GradientQuery& query);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace dpcollab::wire

#endif  // DPCOLLAB_WIRE_HPP
