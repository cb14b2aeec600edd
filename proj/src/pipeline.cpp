#include "dpcollab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace dpcollab {

namespace {

// One CSV record, honoring double quotes with "" escapes; fields split on
// commas outside quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

double must_parse_number(const std::string& text, const std::string& context) {
  double v = 0.0;
  if (!parse_number(text, v)) {
    throw std::invalid_argument("cannot parse '" + text + "' as a number in " + context);
  }
  return v;
}

// Uniform double in [0,1) from a raw 64-bit word; fixed mapping, independent
// of the standard library's distributions.
double u64_to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

std::size_t RawTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::invalid_argument("missing column: " + name);
}

RawTable load_csv(const std::string& path, const std::string& target_column,
                  std::span<const std::string> feature_columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": missing header row");
  const std::vector<std::string> header = split_csv_line(line);

  std::vector<std::size_t> keep;
  RawTable out;
  for (const std::string& name : feature_columns) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument(path + ": missing column: " + name);
    keep.push_back(static_cast<std::size_t>(it - header.begin()));
    out.columns.push_back(name);
  }
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end()) {
    throw std::invalid_argument(path + ": missing column: " + target_column);
  }
  keep.push_back(static_cast<std::size_t>(target_it - header.begin()));
  out.columns.push_back(target_column);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(path + ": ragged row at line " + std::to_string(line_no) +
                                  " (" + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()) + ")");
    }
    std::vector<std::string> row;
    row.reserve(keep.size());
    for (const std::size_t idx : keep) row.push_back(cells[idx]);
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) throw std::invalid_argument(path + ": no data rows");
  return out;
}

RawTable encode_categoricals(RawTable table, std::span<const std::string> columns) {
  for (const std::string& name : columns) {
    const std::size_t col = table.column_index(name);
    bool numeric = true;
    double ignored;
    for (const auto& row : table.rows) {
      if (!parse_number(row[col], ignored)) {
        numeric = false;
        break;
      }
    }
    if (numeric) continue;
    std::map<std::string, int> codes;
    for (auto& row : table.rows) {
      const auto it = codes.try_emplace(row[col], static_cast<int>(codes.size())).first;
      row[col] = std::to_string(it->second);
    }
  }
  return table;
}

Dataset table_to_dataset(const RawTable& table, const std::string& target_column) {
  const std::size_t target = table.column_index(target_column);
  Dataset out;
  out.records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Record r;
    r.x.reserve(table.columns.size() - 1);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const double v = must_parse_number(row[c], "column " + table.columns[c]);
      if (c == target) {
        r.y = v;
      } else {
        r.x.push_back(v);
      }
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

Standardizer standardize_fit(const Dataset& data, std::size_t fit_begin, std::size_t fit_end) {
  fit_end = std::min(fit_end, data.size());
  if (fit_begin >= fit_end) throw std::invalid_argument("standardize_fit: empty fit range");
  const std::size_t p = data.feature_dim();
  const double m = static_cast<double>(fit_end - fit_begin);
  Standardizer s{Vec(p, 0.0), Vec(p, 1.0)};
  for (std::size_t i = fit_begin; i < fit_end; ++i) {
    axpy(1.0, data.records[i].x, s.mean);
  }
  for (double& x : s.mean) x /= m;
  Vec var(p, 0.0);
  for (std::size_t i = fit_begin; i < fit_end; ++i) {
    const Vec& x = data.records[i].x;
    for (std::size_t j = 0; j < p; ++j) {
      const double d = x[j] - s.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    const double sd = std::sqrt(var[j] / m);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Dataset standardize_apply(const Standardizer& std_map, const Dataset& data) {
  Dataset out = data;
  for (Record& r : out.records) {
    if (r.x.size() != std_map.mean.size()) {
      throw std::invalid_argument("standardize_apply: dimension mismatch");
    }
    for (std::size_t j = 0; j < r.x.size(); ++j) {
      r.x[j] = (r.x[j] - std_map.mean[j]) / std_map.scale[j];
    }
  }
  return out;
}

PcaBasis pca_fit(const Dataset& data, int k, std::size_t fit_begin, std::size_t fit_end) {
  fit_end = std::min(fit_end, data.size());
  if (fit_begin >= fit_end) throw std::invalid_argument("pca_fit: empty fit range");
  const std::size_t p = data.feature_dim();
  if (k < 1 || static_cast<std::size_t>(k) > p) {
    throw std::invalid_argument("pca_fit: k must be in [1, feature_dim]");
  }
  const std::size_t m = fit_end - fit_begin;

  PcaBasis basis;
  basis.mean.assign(p, 0.0);
  for (std::size_t i = fit_begin; i < fit_end; ++i) axpy(1.0, data.records[i].x, basis.mean);
  for (double& x : basis.mean) x /= static_cast<double>(m);

  Mat cov = zeros(p, p);
  Vec centered(p);
  for (std::size_t i = fit_begin; i < fit_end; ++i) {
    const Vec& x = data.records[i].x;
    for (std::size_t j = 0; j < p; ++j) centered[j] = x[j] - basis.mean[j];
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b <= a; ++b) cov[a][b] += centered[a] * centered[b];
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      cov[a][b] /= static_cast<double>(m);
      cov[b][a] = cov[a][b];
    }
  }

  for (int comp = 0; comp < k; ++comp) {
    EigenPair pair = power_iteration(cov, 1e-10, 10000);
    if (pair.value < 0.0) pair.value = 0.0;  // covariance is PSD; clip roundoff
    // Sign convention: first nonzero entry positive.
    for (double x : pair.vector) {
      if (std::abs(x) > 1e-12) {
        if (x < 0.0) {
          for (double& y : pair.vector) y = -y;
        }
        break;
      }
    }
    basis.eigenvalues.push_back(pair.value);
    basis.components.push_back(pair.vector);
    // Deflate: cov -= value * v v'
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) {
        cov[a][b] -= pair.value * pair.vector[a] * pair.vector[b];
      }
    }
  }
  return basis;
}

Dataset pca_transform(const PcaBasis& basis, const Dataset& data) {
  Dataset out;
  out.records.reserve(data.size());
  Vec centered(basis.input_dim());
  for (const Record& r : data.records) {
    if (r.x.size() != basis.input_dim()) {
      throw std::invalid_argument("pca_transform: dimension mismatch");
    }
    for (std::size_t j = 0; j < centered.size(); ++j) centered[j] = r.x[j] - basis.mean[j];
    Record t;
    t.y = r.y;
    t.x.reserve(basis.rank());
    for (const Vec& component : basis.components) t.x.push_back(dot(component, centered));
    out.records.push_back(std::move(t));
  }
  return out;
}

std::string pca_basis_to_json(const PcaBasis& basis) {
  nlohmann::json j;
  j["mean"] = basis.mean;
  j["eigenvectors"] = basis.components;
  j["eigenvalues"] = basis.eigenvalues;
  return j.dump();
}

PcaBasis pca_basis_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  PcaBasis basis;
  basis.mean = j.at("mean").get<Vec>();
  basis.components = j.at("eigenvectors").get<std::vector<Vec>>();
  basis.eigenvalues = j.at("eigenvalues").get<Vec>();
  return basis;
}

std::vector<Dataset> partition(const Dataset& data, std::span<const int> sizes) {
  std::size_t total = 0;
  for (const int s : sizes) {
    if (s <= 0) throw std::invalid_argument("partition: sizes must be positive");
    total += static_cast<std::size_t>(s);
  }
  if (total > data.size()) {
    throw std::invalid_argument("partition: sizes sum to " + std::to_string(total) +
                                " but only " + std::to_string(data.size()) + " records exist");
  }
  std::vector<Dataset> shards;
  shards.reserve(sizes.size());
  std::size_t offset = 0;
  for (const int s : sizes) {
    Dataset shard;
    shard.records.assign(data.records.begin() + static_cast<std::ptrdiff_t>(offset),
                         data.records.begin() + static_cast<std::ptrdiff_t>(offset + s));
    shards.push_back(std::move(shard));
    offset += static_cast<std::size_t>(s);
  }
  return shards;
}

SynthInstance synth_instance(LossKind kind, int n, int p, double noise_sd, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("synth_instance: n and p must be >= 1");
  std::mt19937_64 rng(seed);
  const auto uniform_pm1 = [&rng]() { return 2.0 * u64_to_unit(rng()) - 1.0; };
  // Box-Muller from the same raw stream (keeps the instance platform-stable).
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const auto gaussian = [&rng, kTwoPi]() {
    double u1 = u64_to_unit(rng());
    if (u1 <= 0.0) u1 = 1e-300;
    const double u2 = u64_to_unit(rng());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  };

  SynthInstance inst;
  const std::size_t dim = kind == LossKind::kLinearSvm ? static_cast<std::size_t>(p) + 1
                                                       : static_cast<std::size_t>(p);
  inst.theta_gen.resize(dim);
  for (double& t : inst.theta_gen) t = uniform_pm1();

  inst.data.records.reserve(static_cast<std::size_t>(n));
  long attempts = 0;
  const long max_attempts = 1000L * n + 1000L;
  while (inst.data.records.size() < static_cast<std::size_t>(n)) {
    if (++attempts > max_attempts) {
      throw std::runtime_error("synth_instance: margin filter rejected almost all samples");
    }
    Record r;
    r.x.resize(static_cast<std::size_t>(p));
    for (double& x : r.x) x = uniform_pm1();
    if (kind == LossKind::kLinearRegression) {
      r.y = dot(inst.theta_gen, r.x);
      if (noise_sd > 0.0) r.y += noise_sd * gaussian();
    } else {
      double margin = inst.theta_gen.back();
      for (int j = 0; j < p; ++j) margin += inst.theta_gen[static_cast<std::size_t>(j)] * r.x[static_cast<std::size_t>(j)];
      if (std::abs(margin) < 0.1) continue;  // margin filtering
      r.y = margin > 0.0 ? 1.0 : -1.0;
    }
    inst.data.records.push_back(std::move(r));
  }
  return inst;
}

}  // namespace dpcollab
