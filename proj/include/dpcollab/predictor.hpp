#ifndef DPCOLLAB_PREDICTOR_HPP
#define DPCOLLAB_PREDICTOR_HPP

#include <optional>
#include <span>
#include <string>

#include "dpcollab/model.hpp"

namespace dpcollab {

// Curvature constants of the fitness: strong convexity modulus L and gradient
// Lipschitz constant lambda, with L <= lambda.
struct CurvatureEstimate {
  double strong_convexity = 0.0;   // L
  double grad_lipschitz = 0.0;     // lambda
  bool rank_deficient = false;     // regression Gram not full rank; L reported 0
};

// Regression: both constants are extreme eigenvalues of the Hessian
// (2/n) X'X, found by power iteration (lambda) and spectral-shift power
// iteration (L). SVM: L = 1 from the |theta|^2/2 regularizer; the hinge has
// no Lipschitz gradient, so lambda = 1 + max eigenvalue of the augmented data
// Gram (1/n) [X 1]'[X 1] is a surrogate only, and smooth-case forecasts are
// flagged not applicable.
CurvatureEstimate estimate_curvature(const LossModel& loss, std::span<const Dataset> datasets);

// Evaluated bound right-hand sides for a proposed collaboration.
struct BoundForecast {
  double fitness_gap_bound = 0.0;
  std::optional<double> distance_bound;
  // configuration echo
  double xi = 0.0;
  double step_const = 0.0;  // rho or c2
  std::optional<double> curvature = std::nullopt;
  long n_total = 0;
  std::vector<double> epsilons;
  double slack = 0.0;
};

// Smooth strongly-convex forecast for the shrinking-step algorithm:
//   fitness gap  <= 8 xi^2 rho / (L n^2) * sum 1/eps_l^2 + slack
//   distance^2   <= 32 xi^2 rho / (L^2 n^2) * sum 1/eps_l^2 + slack / (4L)
// eps_l = inf drops its term from the sum.
BoundForecast smooth_case_bounds(double xi, double rho, double curvature_l, long n_total,
                                 std::span<const double> epsilons, double slack);

// General convex forecast for the averaged algorithm:
//   fitness gap  <= c2 xi / n * sqrt(sum 1/eps_l^2)
//   distance^2   <= 4 c2 xi / (L n) * sqrt(sum 1/eps_l^2), when L is known.
// c2 is a calibration constant (fixed T); comparisons should use ratios
// where it cancels.
BoundForecast averaged_case_bounds(double xi, double c2, std::optional<double> curvature_l,
                                   long n_total, std::span<const double> epsilons);

// Fits c2 so the averaged-bound forecast reproduces one observed mean
// relative fitness on a reference configuration.
double calibrate_c2(double observed_mean_psi, double f_star, double xi, long n_total,
                    std::span<const double> epsilons);

struct CollabScenario {
  std::string id;
  std::vector<long> owner_sizes;
  std::vector<double> epsilons;
};

struct RankedScenario {
  CollabScenario scenario;
  BoundForecast forecast;
};

// Evaluates the averaged bound per scenario (shared c2 and xi) and sorts
// ascending by fitness bound; exact ties keep larger-n first, then input
// order.
std::vector<RankedScenario> scenario_rank(std::span<const CollabScenario> scenarios, double c2,
                                          double xi, std::optional<double> curvature_l = std::nullopt);

// JSON object for one scenario forecast:
// {scenario_id, n_total, epsilons, fitness_bound, distance_bound, assumptions_ok}.
std::string forecast_report_json(const RankedScenario& ranked, bool assumptions_ok);

// sum over finite budgets of 1/eps^2 (the inf terms vanish).
double inverse_epsilon_sq_sum(std::span<const double> epsilons);

}  // namespace dpcollab

#endif  // DPCOLLAB_PREDICTOR_HPP
