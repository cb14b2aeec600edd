#include "dpcollab/training.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>

namespace dpcollab {

namespace {

constexpr double kDivergenceBound = 1e12;

void check_iterate(const Vec& theta, int round) {
  if (!all_finite(theta) || linf_norm(theta) > kDivergenceBound) {
    throw DivergenceError("iterate diverged at round " + std::to_string(round));
  }
}

// Exact subgradient of the pooled fitness: xi_g1 + (1/n) sum of clipped
// per-sample subgradients, summed left-to-right.
Vec pooled_subgradient(const LossModel& loss, std::span<const Dataset> pooled, const Vec& theta) {
  Vec g = regularizer_subgradient(loss, theta);
  std::size_t n = 0;
  for (const Dataset& d : pooled) n += d.size();
  if (n == 0) throw std::invalid_argument("pooled_subgradient: no records");
  const double inv_n = 1.0 / static_cast<double>(n);
  Vec sample_grad;
  for (const Dataset& d : pooled) {
    for (const Record& r : d.records) {
      per_sample_subgradient_into(loss, theta, r, sample_grad);
      axpy(inv_n, sample_grad, g);
    }
  }
  return g;
}

Vec constant_step_descent(const std::function<Vec(const Vec&)>& subgradient,
                          const TrainConfig& cfg) {
  if (!(cfg.const_step > 0.0)) {
    throw std::invalid_argument("nonprivate_train: const_step must be positive");
  }
  Vec theta = cfg.theta_init;
  for (int it = 0; it < cfg.nonprivate_max_iters; ++it) {
    const Vec g = subgradient(theta);
    if (l2_norm(g) < cfg.nonprivate_grad_tol) break;
    axpy(-cfg.const_step, g, theta);
    check_iterate(theta, it + 1);
  }
  return theta;
}

}  // namespace

Vec average_update(const Vec& theta_bar_k, const Vec& theta_k, int k, int rounds_t) {
  if (k < 1) throw std::invalid_argument("average_update: k must be >= 1");
  if (rounds_t < 1) throw std::invalid_argument("average_update: T must be >= 1");
  const double inv_sqrt_t = 1.0 / std::sqrt(static_cast<double>(rounds_t));
  const double denom = inv_sqrt_t + static_cast<double>(k);
  const double w_bar = (static_cast<double>(k) - 1.0) / denom;
  const double w_cur = (inv_sqrt_t + 1.0) / denom;
  Vec out(theta_k.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w_bar * theta_bar_k[i] + w_cur * theta_k[i];
  }
  return out;
}

Trajectory shrinking_step_descent(const LossModel& loss, std::vector<DataOwner>& owners,
                                  const TrainConfig& cfg) {
  if (cfg.rounds_t < 2) throw std::invalid_argument("shrinking_step_descent: T must be >= 2");
  if (cfg.rho < 0.0) throw std::invalid_argument("shrinking_step_descent: rho must be >= 0");
  const double t_sq = static_cast<double>(cfg.rounds_t) * static_cast<double>(cfg.rounds_t);

  Trajectory traj;
  traj.theta.reserve(static_cast<std::size_t>(cfg.rounds_t));
  traj.theta.push_back(cfg.theta_init);
  for (int k = 1; k <= cfg.rounds_t - 1; ++k) {
    const Vec& theta = traj.theta.back();
    Vec direction = regularizer_subgradient(loss, theta);
    axpy(1.0, run_round(theta, owners, k), direction);
    Vec next = theta;
    axpy(-cfg.rho / (t_sq * static_cast<double>(k)), direction, next);
    check_iterate(next, k + 1);
    traj.theta.push_back(std::move(next));
  }
  return traj;
}

Trajectory averaged_projected_descent(const LossModel& loss, std::vector<DataOwner>& owners,
                                      const TrainConfig& cfg) {
  if (cfg.rounds_t < 2) throw std::invalid_argument("averaged_projected_descent: T must be >= 2");
  if (cfg.c1 < 0.0) throw std::invalid_argument("averaged_projected_descent: c1 must be >= 0");
  if (std::isinf(loss.theta_max)) {
    throw std::invalid_argument("averaged_projected_descent: theta_max must be finite (projection active)");
  }

  Trajectory traj;
  traj.theta.reserve(static_cast<std::size_t>(cfg.rounds_t));
  traj.theta_bar.reserve(static_cast<std::size_t>(cfg.rounds_t));
  traj.theta.push_back(cfg.theta_init);
  traj.theta_bar.push_back(cfg.theta_init);  // theta_bar[1]; never weighted in
  for (int k = 1; k <= cfg.rounds_t - 1; ++k) {
    const Vec& theta = traj.theta.back();
    Vec direction = regularizer_subgradient(loss, theta);
    axpy(1.0, run_round(theta, owners, k), direction);
    Vec next = theta;
    axpy(-cfg.c1 / std::sqrt(static_cast<double>(k)), direction, next);
    next = project_box(std::move(next), loss.theta_max);
    check_iterate(next, k + 1);
    traj.theta_bar.push_back(average_update(traj.theta_bar.back(), theta, k, cfg.rounds_t));
    traj.theta.push_back(std::move(next));
  }
  return traj;
}

Vec nonprivate_train(const LossModel& loss, std::span<const Dataset> pooled,
                     const TrainConfig& cfg) {
  return constant_step_descent(
      [&](const Vec& theta) { return pooled_subgradient(loss, pooled, theta); }, cfg);
}

Vec nonprivate_train_federated(const LossModel& loss, std::vector<DataOwner>& owners,
                               const TrainConfig& cfg) {
  for (const DataOwner& owner : owners) {
    if (!std::isinf(owner.budget.epsilon)) {
      throw std::invalid_argument("nonprivate_train_federated: all owners must have epsilon = inf");
    }
  }
  int round = 0;
  return constant_step_descent(
      [&](const Vec& theta) {
        ++round;
        Vec g = regularizer_subgradient(loss, theta);
        axpy(1.0, run_round(theta, owners, round), g);
        return g;
      },
      cfg);
}

Vec closed_form_regression(std::span<const Dataset> pooled, double ridge) {
  if (ridge < 0.0) throw std::invalid_argument("closed_form_regression: ridge must be >= 0");
  std::size_t p = 0;
  for (const Dataset& d : pooled) {
    if (!d.empty()) {
      p = d.feature_dim();
      break;
    }
  }
  if (p == 0) throw std::invalid_argument("closed_form_regression: no records");
  Mat gram = zeros(p, p);
  Vec xty(p, 0.0);
  for (const Dataset& d : pooled) {
    for (const Record& r : d.records) {
      if (r.x.size() != p) throw std::invalid_argument("closed_form_regression: ragged features");
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) gram[i][j] += r.x[i] * r.x[j];
        xty[i] += r.x[i] * r.y;
      }
    }
  }
  for (std::size_t i = 0; i < p; ++i) gram[i][i] += ridge;
  return solve_linear(std::move(gram), std::move(xty));
}

void write_trajectory_csv(std::ostream& out, const LossModel& loss,
                          std::span<const Dataset> pooled, const Trajectory& traj,
                          double f_star) {
  out << "round,psi_theta,psi_theta_bar\n";
  char buf[64];
  for (std::size_t i = 0; i < traj.theta.size(); ++i) {
    const double psi = relative_fitness(fitness(loss, traj.theta[i], pooled), f_star);
    std::snprintf(buf, sizeof buf, "%zu,%.12g,", i + 1, psi);
    out << buf;
    if (i < traj.theta_bar.size()) {
      const double psi_bar = relative_fitness(fitness(loss, traj.theta_bar[i], pooled), f_star);
      std::snprintf(buf, sizeof buf, "%.12g", psi_bar);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace dpcollab
