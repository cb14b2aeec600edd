#include "dpcollab/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpcollab {

namespace {

void check_dims(const LossModel& loss, const Vec& theta, const Vec& x) {
  if (theta.size() != loss.param_dim(x.size())) {
    throw std::invalid_argument("model dimension mismatch: theta has " +
                                std::to_string(theta.size()) + " entries for " +
                                std::to_string(x.size()) + " features");
  }
}

double g2_value(const LossModel& loss, const Vec& theta, const Record& r) {
  const double m = predict(loss, theta, r.x);
  if (loss.kind == LossKind::kLinearRegression) {
    const double resid = r.y - m;
    return resid * resid;
  }
  return std::max(0.0, 1.0 - m * r.y);
}

}  // namespace

double predict(const LossModel& loss, const Vec& theta, const Vec& x) {
  check_dims(loss, theta, x);
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m += theta[i] * x[i];
  if (loss.kind == LossKind::kLinearSvm) m += theta.back();  // appended bias input 1
  return m;
}

Vec per_sample_subgradient_unclipped(const LossModel& loss, const Vec& theta, const Record& r) {
  check_dims(loss, theta, r.x);
  if (loss.kind == LossKind::kLinearRegression) {
    const double resid = r.y - dot(theta, r.x);
    return scaled(r.x, -2.0 * resid);
  }
  // Hinge: active side gives -y [x;1]; margin met (or exactly at the kink)
  // gives the zero element of the subdifferential.
  const double margin = 1.0 - predict(loss, theta, r.x) * r.y;
  Vec g(theta.size(), 0.0);
  if (margin > 0.0) {
    for (std::size_t i = 0; i < r.x.size(); ++i) g[i] = -r.y * r.x[i];
    g.back() = -r.y;
  }
  return g;
}

Vec per_sample_subgradient(const LossModel& loss, const Vec& theta, const Record& r) {
  return clip_l1(per_sample_subgradient_unclipped(loss, theta, r), loss.xi_clip);
}

void per_sample_subgradient_into(const LossModel& loss, const Vec& theta, const Record& r,
                                 Vec& out) {
  check_dims(loss, theta, r.x);
  if (!(loss.xi_clip > 0.0)) throw std::invalid_argument("xi_clip must be positive");
  out.assign(theta.size(), 0.0);
  if (loss.kind == LossKind::kLinearRegression) {
    double m = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) m += theta[i] * r.x[i];
    const double coeff = -2.0 * (r.y - m);
    for (std::size_t i = 0; i < r.x.size(); ++i) out[i] = coeff * r.x[i];
  } else {
    double m = theta.back();
    for (std::size_t i = 0; i < r.x.size(); ++i) m += theta[i] * r.x[i];
    if (1.0 - m * r.y > 0.0) {
      for (std::size_t i = 0; i < r.x.size(); ++i) out[i] = -r.y * r.x[i];
      out.back() = -r.y;
    }
  }
  const double norm = l1_norm(out);
  if (norm > loss.xi_clip) {
    const double s = loss.xi_clip / norm;
    for (double& x : out) x *= s;
  }
}

Vec clip_l1(Vec v, double xi) {
  if (!(xi > 0.0)) throw std::invalid_argument("clip_l1: xi must be positive");
  const double norm = l1_norm(v);
  if (norm > xi) {
    const double s = xi / norm;
    for (double& x : v) x *= s;
  }
  return v;
}

Vec regularizer_subgradient(const LossModel& loss, const Vec& theta) {
  if (loss.kind == LossKind::kLinearRegression) return Vec(theta.size(), 0.0);
  return theta;  // gradient of |theta|^2 / 2
}

double fitness(const LossModel& loss, const Vec& theta, std::span<const Dataset> datasets) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const Dataset& d : datasets) {
    for (const Record& r : d.records) {
      sum += g2_value(loss, theta, r);
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("fitness: no records");
  double g1 = 0.0;
  if (loss.kind == LossKind::kLinearSvm) g1 = 0.5 * dot(theta, theta);
  return g1 + sum / static_cast<double>(n);
}

double relative_fitness(double f_theta, double f_star) {
  if (!(f_star > 0.0)) {
    throw std::domain_error("relative_fitness: undefined for f_star <= 0, report the absolute gap");
  }
  return f_theta / f_star - 1.0;
}

Vec project_box(Vec theta, double theta_max) {
  if (!(theta_max > 0.0)) throw std::invalid_argument("project_box: theta_max must be positive");
  if (std::isinf(theta_max)) return theta;
  for (double& x : theta) x = std::clamp(x, -theta_max, theta_max);
  return theta;
}

double default_xi_clip(const LossModel& loss, const Vec& theta_init,
                       std::span<const Dataset> datasets) {
  double max_norm = 0.0;
  for (const Dataset& d : datasets) {
    for (const Record& r : d.records) {
      max_norm = std::max(max_norm, l1_norm(per_sample_subgradient_unclipped(loss, theta_init, r)));
    }
  }
  if (max_norm == 0.0) return 1.0;  // degenerate data: any positive bound is valid
  return 1.5 * max_norm;
}

}  // namespace dpcollab
