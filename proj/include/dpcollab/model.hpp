#ifndef DPCOLLAB_MODEL_HPP
#define DPCOLLAB_MODEL_HPP

#include <limits>
#include <span>

#include "dpcollab/vec.hpp"

namespace dpcollab {

// One training example. For classification y must be -1 or +1.
struct Record {
  Vec x;
  double y = 0.0;
};

struct Dataset {
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  // Feature dimension, 0 for an empty dataset.
  std::size_t feature_dim() const { return records.empty() ? 0 : records.front().x.size(); }
};

enum class LossKind {
  kLinearRegression,  // M(x;theta) = theta.x,      g1 = 0,           g2 = (y - M)^2
  kLinearSvm,         // M(x;theta) = theta.[x;1],  g1 = |theta|^2/2, g2 = max(0, 1 - M y)
};

// Loss specification plus the two artifact-level knobs: the feasible box
// half-width theta_max (may be +inf) and the hard L1 bound xi_clip enforced
// on every per-sample subgradient before aggregation.
struct LossModel {
  LossKind kind = LossKind::kLinearRegression;
  double theta_max = std::numeric_limits<double>::infinity();
  double xi_clip = 0.0;

  // Model dimension for a given feature dimension (SVM appends a bias input).
  std::size_t param_dim(std::size_t feature_dim) const {
    return kind == LossKind::kLinearSvm ? feature_dim + 1 : feature_dim;
  }
};

// M(x;theta). The SVM classification label is the sign of the return value.
double predict(const LossModel& loss, const Vec& theta, const Vec& x);

// Subgradient of g2(M(x;theta), y) in theta, without the L1 clip.
// Regression: -2(y - theta.x) x. Hinge: -y [x;1] on the active side, zero
// when the margin is met; the kink returns the zero (minimal-norm) element.
Vec per_sample_subgradient_unclipped(const LossModel& loss, const Vec& theta, const Record& r);

// Same, then L1-clipped to loss.xi_clip.
Vec per_sample_subgradient(const LossModel& loss, const Vec& theta, const Record& r);

// In-place variant writing the clipped subgradient into out (resized to fit);
// the hot path for whole-dataset aggregation.
void per_sample_subgradient_into(const LossModel& loss, const Vec& theta, const Record& r,
                                 Vec& out);

// Rescales v onto the L1 ball of radius xi when outside it; direction kept.
Vec clip_l1(Vec v, double xi);

// Subgradient of g1: zero for regression, theta itself for the SVM.
Vec regularizer_subgradient(const LossModel& loss, const Vec& theta);

// f(theta) = g1(theta) + (1/n) sum g2 over the union of the datasets.
// Summation runs left-to-right over datasets and records for reproducibility.
double fitness(const LossModel& loss, const Vec& theta, std::span<const Dataset> datasets);

// psi(theta) = f_theta / f_star - 1. Throws std::domain_error for f_star <= 0,
// where the relative measure is undefined.
double relative_fitness(double f_theta, double f_star);

// Euclidean projection onto {|theta_i| <= theta_max}; identity for theta_max = inf.
Vec project_box(Vec theta, double theta_max);

// Default clip bound: 1.5x the largest per-sample L1 subgradient observed at
// theta_init over the supplied data. The data stands in for the (unspecified)
// bounded feature domain.
double default_xi_clip(const LossModel& loss, const Vec& theta_init,
                       std::span<const Dataset> datasets);

}  // namespace dpcollab

#endif  // DPCOLLAB_MODEL_HPP
