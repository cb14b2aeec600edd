#include "dpcollab/federation.hpp"

#include <algorithm>
#include <string>

namespace dpcollab {

DataOwner make_owner(int id, LossModel loss, Dataset data, double epsilon,
                     int horizon_t, std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("make_owner: empty dataset");
  if (horizon_t < 1) throw std::invalid_argument("make_owner: horizon must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("make_owner: epsilon must be positive");
  DataOwner owner;
  owner.id = id;
  owner.loss = loss;
  owner.data = std::move(data);
  owner.budget = PrivacyBudget{epsilon, 0};
  owner.horizon_t = horizon_t;
  owner.stream = NoiseStream(seed);
  return owner;
}

Vec owner_compute_query(const DataOwner& owner, const Vec& theta) {
  if (owner.data.empty()) throw std::invalid_argument("owner_compute_query: empty dataset");
  Vec sum(theta.size(), 0.0);
  Vec g;
  for (const Record& r : owner.data.records) {
    per_sample_subgradient_into(owner.loss, theta, r, g);
    axpy(1.0, g, sum);
  }
  const double inv_n = 1.0 / static_cast<double>(owner.data.size());
  for (double& x : sum) x *= inv_n;
  return sum;
}

QueryResponse owner_respond(DataOwner& owner, const GradientQuery& query) {
  if (owner.budget.spent_rounds >= owner.horizon_t) {
    throw BudgetExhaustedError("owner " + std::to_string(owner.id) + ": budget exhausted after " +
                               std::to_string(owner.horizon_t) + " rounds");
  }
  if (query.round_k != owner.budget.spent_rounds + 1) {
    throw BadRoundError("owner " + std::to_string(owner.id) + ": expected round " +
                        std::to_string(owner.budget.spent_rounds + 1) + ", got " +
                        std::to_string(query.round_k));
  }
  const Vec exact = owner_compute_query(owner, query.theta);
  const NoiseSpec spec{
      noise_scale(owner.loss.xi_clip, owner.horizon_t, owner.dataset_size(),
                  owner.budget.epsilon),
      static_cast<int>(exact.size())};
  QueryResponse response;
  response.round_k = query.round_k;
  response.q_bar = privatize(exact, spec, owner.stream);
  response.n_l = owner.dataset_size();
  owner.budget.spent_rounds += 1;
  return response;
}

Vec aggregate_responses(std::span<const QueryResponse> responses, int n_total) {
  if (responses.empty()) throw std::invalid_argument("aggregate_responses: no responses");
  if (n_total <= 0) throw std::invalid_argument("aggregate_responses: n_total must be positive");
  const int round = responses.front().round_k;
  const std::size_t dim = responses.front().q_bar.size();
  long long weight_sum = 0;
  Vec agg(dim, 0.0);
  for (const QueryResponse& r : responses) {
    if (r.round_k != round) throw std::invalid_argument("aggregate_responses: mixed rounds");
    if (r.q_bar.size() != dim) throw std::invalid_argument("aggregate_responses: mixed dimensions");
    axpy(static_cast<double>(r.n_l) / static_cast<double>(n_total), r.q_bar, agg);
    weight_sum += r.n_l;
  }
  if (weight_sum != n_total) {
    throw std::invalid_argument("aggregate_responses: weights sum to " +
                                std::to_string(weight_sum) + ", expected " +
                                std::to_string(n_total));
  }
  return agg;
}

Vec run_round(const Vec& theta, std::vector<DataOwner>& owners, int round_k) {
  if (owners.empty()) throw std::invalid_argument("run_round: no owners");
  // Synchronous barrier: every owner answers before anything is aggregated,
  // and a failing owner aborts the whole round.
  std::vector<QueryResponse> responses;
  responses.reserve(owners.size());
  const GradientQuery query{round_k, theta};
  for (DataOwner& owner : owners) {
    responses.push_back(owner_respond(owner, query));
  }
  return aggregate_responses(responses, total_records(owners));
}

int total_records(std::span<const DataOwner> owners) {
  int n = 0;
  for (const DataOwner& owner : owners) n += owner.dataset_size();
  return n;
}

void check_disjoint_shards(std::span<const DataOwner> owners) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const DataOwner& owner : owners) {
    if (owner.src_end > owner.src_begin) ranges.emplace_back(owner.src_begin, owner.src_end);
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first < ranges[i - 1].second) {
      throw std::invalid_argument("owner shards overlap: [" + std::to_string(ranges[i - 1].first) +
                                  "," + std::to_string(ranges[i - 1].second) + ") and [" +
                                  std::to_string(ranges[i].first) + "," +
                                  std::to_string(ranges[i].second) + ")");
    }
  }
}

}  // namespace dpcollab
