#include "dpcollab/laplace.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpcollab {

double noise_scale(double xi, int horizon_t, int n_l, double epsilon_l) {
  if (!(xi > 0.0) || horizon_t <= 0 || n_l <= 0 || !(epsilon_l > 0.0)) {
    throw std::invalid_argument("noise_scale: all arguments must be positive");
  }
  if (std::isinf(epsilon_l)) return 0.0;
  return 2.0 * xi * static_cast<double>(horizon_t) /
         (static_cast<double>(n_l) * epsilon_l);
}

double l1_sensitivity_bound(double xi, int n_l) {
  if (!(xi > 0.0) || n_l <= 0) {
    throw std::invalid_argument("l1_sensitivity_bound: arguments must be positive");
  }
  return 2.0 * xi / static_cast<double>(n_l);
}

double NoiseStream::laplace(double scale_b) {
  if (scale_b == 0.0) return 0.0;
  const double u = uniform_open01() - 0.5;  // (-1/2, 1/2)
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return -scale_b * sign * std::log1p(-2.0 * std::abs(u));
}

Vec sample_laplace_vector(const NoiseSpec& spec, NoiseStream& stream) {
  if (spec.dim < 1) throw std::invalid_argument("sample_laplace_vector: dim must be >= 1");
  Vec w(static_cast<std::size_t>(spec.dim));
  for (double& x : w) x = stream.laplace(spec.scale_b);
  return w;
}

Vec privatize(const Vec& q, const NoiseSpec& spec, NoiseStream& stream) {
  if (q.size() != static_cast<std::size_t>(spec.dim)) {
    throw std::invalid_argument("privatize: query dimension does not match spec");
  }
  Vec out = q;
  for (double& x : out) x += stream.laplace(spec.scale_b);
  return out;
}

}  // namespace dpcollab
