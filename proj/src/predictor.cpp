#include "dpcollab/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace dpcollab {

namespace {

// Gram matrix scale * X'X over the (optionally bias-augmented) features.
Mat scaled_gram(std::span<const Dataset> datasets, bool append_bias, double scale) {
  std::size_t p = 0;
  std::size_t n = 0;
  for (const Dataset& d : datasets) {
    if (!d.empty() && p == 0) p = d.feature_dim() + (append_bias ? 1 : 0);
    n += d.size();
  }
  if (n == 0 || p == 0) throw std::invalid_argument("estimate_curvature: no records");
  Mat gram = zeros(p, p);
  Vec row(p, 1.0);
  for (const Dataset& d : datasets) {
    for (const Record& r : d.records) {
      std::copy(r.x.begin(), r.x.end(), row.begin());  // bias slot stays 1
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) gram[i][j] += row[i] * row[j];
      }
    }
  }
  const double s = scale / static_cast<double>(n);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      gram[i][j] *= s;
      gram[j][i] = gram[i][j];
    }
  }
  return gram;
}

double min_eigenvalue(const Mat& a, double max_eig) {
  // Largest eigenvalue of (max_eig I - A) is max_eig - lambda_min.
  Mat shifted = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) shifted[i][j] = -a[i][j];
    shifted[i][i] += max_eig;
  }
  const EigenPair top = power_iteration(shifted, 1e-8);
  return max_eig - top.value;
}

}  // namespace

CurvatureEstimate estimate_curvature(const LossModel& loss, std::span<const Dataset> datasets) {
  CurvatureEstimate est;
  if (loss.kind == LossKind::kLinearRegression) {
    const Mat hessian = scaled_gram(datasets, /*append_bias=*/false, 2.0);
    est.grad_lipschitz = power_iteration(hessian, 1e-8).value;
    est.strong_convexity = std::max(0.0, min_eigenvalue(hessian, est.grad_lipschitz));
    if (est.strong_convexity <= 1e-10 * std::max(1.0, est.grad_lipschitz)) {
      est.strong_convexity = 0.0;
      est.rank_deficient = true;
    }
  } else {
    // Hinge is piecewise linear; only the regularizer contributes curvature.
    const Mat gram = scaled_gram(datasets, /*append_bias=*/true, 1.0);
    est.strong_convexity = 1.0;
    est.grad_lipschitz = 1.0 + power_iteration(gram, 1e-8).value;
  }
  return est;
}

double inverse_epsilon_sq_sum(std::span<const double> epsilons) {
  double sum = 0.0;
  for (double eps : epsilons) {
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!std::isinf(eps)) sum += 1.0 / (eps * eps);
  }
  return sum;
}

BoundForecast smooth_case_bounds(double xi, double rho, double curvature_l, long n_total,
                                 std::span<const double> epsilons, double slack) {
  if (!(xi > 0.0) || !(rho > 0.0)) throw std::invalid_argument("xi and rho must be positive");
  if (!(curvature_l > 0.0)) throw std::invalid_argument("curvature L must be positive");
  if (n_total <= 0) throw std::invalid_argument("n must be positive");
  if (slack < 0.0) throw std::invalid_argument("slack must be >= 0");
  const double n = static_cast<double>(n_total);
  const double s = inverse_epsilon_sq_sum(epsilons);
  BoundForecast out;
  out.fitness_gap_bound = 8.0 * xi * xi * rho / (curvature_l * n * n) * s + slack;
  out.distance_bound =
      32.0 * xi * xi * rho / (curvature_l * curvature_l * n * n) * s + slack / (4.0 * curvature_l);
  out.xi = xi;
  out.step_const = rho;
  out.curvature = curvature_l;
  out.n_total = n_total;
  out.epsilons.assign(epsilons.begin(), epsilons.end());
  out.slack = slack;
  return out;
}

BoundForecast averaged_case_bounds(double xi, double c2, std::optional<double> curvature_l,
                                   long n_total, std::span<const double> epsilons) {
  if (!(xi > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("xi and c2 must be positive");
  if (n_total <= 0) throw std::invalid_argument("n must be positive");
  if (curvature_l && !(*curvature_l > 0.0)) {
    throw std::invalid_argument("curvature L must be positive when given");
  }
  const double n = static_cast<double>(n_total);
  const double root = std::sqrt(inverse_epsilon_sq_sum(epsilons));
  BoundForecast out;
  out.fitness_gap_bound = c2 * xi / n * root;
  if (curvature_l) out.distance_bound = 4.0 * c2 * xi / (*curvature_l * n) * root;
  out.xi = xi;
  out.step_const = c2;
  out.curvature = curvature_l;
  out.n_total = n_total;
  out.epsilons.assign(epsilons.begin(), epsilons.end());
  return out;
}

double calibrate_c2(double observed_mean_psi, double f_star, double xi, long n_total,
                    std::span<const double> epsilons) {
  if (!(observed_mean_psi > 0.0) || !(f_star > 0.0)) {
    throw std::invalid_argument("calibrate_c2: reference psi and f_star must be positive");
  }
  const double root = std::sqrt(inverse_epsilon_sq_sum(epsilons));
  if (root == 0.0) throw std::invalid_argument("calibrate_c2: all budgets infinite");
  // Invert fitness_gap = c2 xi / n * root, with the gap expressed absolutely.
  return observed_mean_psi * f_star * static_cast<double>(n_total) / (xi * root);
}

std::vector<RankedScenario> scenario_rank(std::span<const CollabScenario> scenarios, double c2,
                                          double xi, std::optional<double> curvature_l) {
  if (scenarios.empty()) throw std::invalid_argument("scenario_rank: empty scenario list");
  std::vector<RankedScenario> ranked;
  ranked.reserve(scenarios.size());
  for (const CollabScenario& sc : scenarios) {
    if (sc.owner_sizes.empty() || sc.owner_sizes.size() != sc.epsilons.size()) {
      throw std::invalid_argument("scenario_rank: scenario " + sc.id +
                                  " needs matching sizes and budgets");
    }
    const long n_total = std::accumulate(sc.owner_sizes.begin(), sc.owner_sizes.end(), 0L);
    ranked.push_back({sc, averaged_case_bounds(xi, c2, curvature_l, n_total, sc.epsilons)});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedScenario& a, const RankedScenario& b) {
    if (a.forecast.fitness_gap_bound != b.forecast.fitness_gap_bound) {
      return a.forecast.fitness_gap_bound < b.forecast.fitness_gap_bound;
    }
    return a.forecast.n_total > b.forecast.n_total;
  });
  return ranked;
}

std::string forecast_report_json(const RankedScenario& ranked, bool assumptions_ok) {
  nlohmann::json j;
  j["scenario_id"] = ranked.scenario.id;
  j["n_total"] = ranked.forecast.n_total;
  // infinity has no JSON number form; an infinite budget is spelled "inf"
  nlohmann::json eps = nlohmann::json::array();
  for (double e : ranked.forecast.epsilons) {
    if (std::isinf(e)) {
      eps.push_back("inf");
    } else {
      eps.push_back(e);
    }
  }
  j["epsilons"] = eps;
  j["fitness_bound"] = ranked.forecast.fitness_gap_bound;
  if (ranked.forecast.distance_bound) {
    j["distance_bound"] = *ranked.forecast.distance_bound;
  } else {
    j["distance_bound"] = nullptr;
  }
  j["assumptions_ok"] = assumptions_ok;
  return j.dump();
}

}  // namespace dpcollab
