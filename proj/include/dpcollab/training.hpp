#ifndef DPCOLLAB_TRAINING_HPP
#define DPCOLLAB_TRAINING_HPP

#include <iosfwd>
#include <span>
#include <stdexcept>

#include "dpcollab/federation.hpp"
#include "dpcollab/model.hpp"

namespace dpcollab {

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

enum class TrainMode {
  kShrinkingStep,                // step rho / (T^2 k), no projection
  kAveragedProjection,                // step c1 / sqrt(k), projection + averaging
  kNonPrivateConstant,  // constant step to convergence, epsilon = inf baseline
};

struct TrainConfig {
  int rounds_t = 100;  // T; the round loop runs k = 1..T-1
  TrainMode mode = TrainMode::kAveragedProjection;
  double rho = 1.0;          // shrinking-step numerator
  double c1 = 0.1;           // averaged-mode step constant
  double const_step = 0.01;  // non-private constant learning rate
  Vec theta_init;
  int nonprivate_max_iters = 100000;
  double nonprivate_grad_tol = 1e-9;
};

// theta[i] holds the iterate of round i+1 (k = 1..T); theta_bar is filled by
// Algorithm 2 only and satisfies theta_bar[1] = theta[0] (the averaging
// identity theta_bar[2] = theta[1] in round numbering).
struct Trajectory {
  std::vector<Vec> theta;
  std::vector<Vec> theta_bar;

  const Vec& final_theta() const { return theta.back(); }
  const Vec& final_theta_bar() const { return theta_bar.back(); }
};

// One averaging step: theta_bar[k+1] as the convex combination
//   ((k-1)/(1/sqrt(T)+k)) theta_bar[k] + ((1/sqrt(T)+1)/(1/sqrt(T)+k)) theta[k].
// At k = 1 the theta_bar coefficient vanishes, forcing theta_bar[2] = theta[1].
Vec average_update(const Vec& theta_bar_k, const Vec& theta_k, int k, int rounds_t);

// DP gradient descent for strongly convex smooth fitness: rounds k = 1..T-1
// with update theta[k+1] = theta[k] - rho/(T^2 k) (xi_g1 + sum (n_l/n) qbar_l).
// The box is treated as unconstrained; no projection is applied.
Trajectory shrinking_step_descent(const LossModel& loss, std::vector<DataOwner>& owners,
                                  const TrainConfig& cfg);

// DP projected subgradient descent with iterate averaging: step c1/sqrt(k),
// projection onto the theta_max box (must be finite), then the averaging rule.
Trajectory averaged_projected_descent(const LossModel& loss, std::vector<DataOwner>& owners,
                                      const TrainConfig& cfg);

// Non-private baseline: constant-step subgradient descent on the pooled data,
// stopping at gradient norm < nonprivate_grad_tol or nonprivate_max_iters.
Vec nonprivate_train(const LossModel& loss, std::span<const Dataset> pooled,
                     const TrainConfig& cfg);

// Same loop driven through the federation with epsilon = inf owners; used to
// check that the protocol is transparent relative to pooled training.
Vec nonprivate_train_federated(const LossModel& loss, std::vector<DataOwner>& owners,
                               const TrainConfig& cfg);

// Independent regression oracle: solves (X'X + ridge I) theta = X'y by
// Gaussian elimination with partial pivoting.
Vec closed_form_regression(std::span<const Dataset> pooled, double ridge);

// Trajectory export, one row per round: round,psi_theta,psi_theta_bar.
// The theta_bar column is left empty when the trajectory carries none.
void write_trajectory_csv(std::ostream& out, const LossModel& loss,
                          std::span<const Dataset> pooled, const Trajectory& traj,
                          double f_star);

}  // namespace dpcollab

#endif  // DPCOLLAB_TRAINING_HPP
