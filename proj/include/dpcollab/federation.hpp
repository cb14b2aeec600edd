#ifndef DPCOLLAB_FEDERATION_HPP
#define DPCOLLAB_FEDERATION_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpcollab/laplace.hpp"
#include "dpcollab/model.hpp"

namespace dpcollab {

// Raised when an owner is asked for a round beyond the agreed horizon T;
// answering would break the composition guarantee.
struct BudgetExhaustedError : std::runtime_error {
  explicit BudgetExhaustedError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when rounds arrive out of order.
struct BadRoundError : std::runtime_error {
  explicit BadRoundError(const std::string& what) : std::runtime_error(what) {}
};

// One data owner in the star topology: a private shard, a budget over the
// horizon, and its own noise stream. Shard disjointness across owners is the
// caller's contract; when shards come from a contiguous partition the source
// index range [src_begin, src_end) is recorded so it can be checked.
struct DataOwner {
  int id = 0;
  LossModel loss;
  Dataset data;
  PrivacyBudget budget;
  int horizon_t = 0;
  NoiseStream stream{0};
  std::size_t src_begin = 0;
  std::size_t src_end = 0;  // src_end == src_begin means "range unknown"

  int dataset_size() const { return static_cast<int>(data.size()); }
};

DataOwner make_owner(int id, LossModel loss, Dataset data, double epsilon,
                     int horizon_t, std::uint64_t seed);

struct GradientQuery {
  int round_k = 0;
  Vec theta;
};

struct QueryResponse {
  int round_k = 0;
  Vec q_bar;  // DP aggregate subgradient
  int n_l = 0;
};

// Exact query value: mean of clipped per-sample subgradients over the shard.
Vec owner_compute_query(const DataOwner& owner, const Vec& theta);

// DP response: exact value plus Laplace noise at scale 2 xi T / (n_l eps_l).
// Enforces the round ledger (query round must be spent_rounds + 1, within T).
QueryResponse owner_respond(DataOwner& owner, const GradientQuery& query);

// Weighted mean sum (n_l / n_total) q_bar_l. All responses must share one
// round, one dimension, and their weights must sum to n_total.
Vec aggregate_responses(std::span<const QueryResponse> responses, int n_total);

// One synchronous protocol round: query every owner, collect every response,
// aggregate. Any owner failure aborts the round before any aggregation.
Vec run_round(const Vec& theta, std::vector<DataOwner>& owners, int round_k);

int total_records(std::span<const DataOwner> owners);

// Rejects owner configurations whose recorded source index ranges overlap.
// Owners without a recorded range are skipped.
void check_disjoint_shards(std::span<const DataOwner> owners);

}  // namespace dpcollab

#endif  // DPCOLLAB_FEDERATION_HPP
