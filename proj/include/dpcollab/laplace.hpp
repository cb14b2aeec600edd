#ifndef DPCOLLAB_LAPLACE_HPP
#define DPCOLLAB_LAPLACE_HPP

#include <cstdint>
#include <random>

#include "dpcollab/vec.hpp"

namespace dpcollab {

// Per-owner budget over the full horizon of T gradient queries. Each answered
// round consumes epsilon / T of it under sequential composition.
// epsilon = +inf is a first-class value meaning non-private (zero noise).
struct PrivacyBudget {
  double epsilon = std::numeric_limits<double>::infinity();
  int spent_rounds = 0;
};

// Laplace scale calibrated to the clipped aggregate gradient query:
// b = 2 xi T / (n_l eps_l). Returns 0 for eps_l = inf.
double noise_scale(double xi, int horizon_t, int n_l, double epsilon_l);

// Guaranteed L1 sensitivity of the clipped aggregate query under one-record
// replacement: 2 xi / n_l.
double l1_sensitivity_bound(double xi, int n_l);

struct NoiseSpec {
  double scale_b = 0.0;
  int dim = 0;
};

// Deterministic per-owner randomness source. Two streams built from the same
// seed produce identical draws; the mapping from raw 64-bit words to doubles
// is fixed here rather than left to the standard library so the sequence is
// bit-identical across platforms.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : rng_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform_open01() {
    return (static_cast<double>(rng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // One Laplace(0, b) draw by inverse CDF: w = -b sign(u) ln(1 - 2|u|),
  // u uniform on (-1/2, 1/2). b = 0 returns 0 without consuming randomness.
  double laplace(double scale_b);

  std::uint64_t next_u64() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

// dim i.i.d. Laplace(0, spec.scale_b) draws; advances the stream.
Vec sample_laplace_vector(const NoiseSpec& spec, NoiseStream& stream);

// q + w with w ~ Laplace(0, spec.scale_b)^dim.
Vec privatize(const Vec& q, const NoiseSpec& spec, NoiseStream& stream);

}  // namespace dpcollab

#endif  // DPCOLLAB_LAPLACE_HPP
