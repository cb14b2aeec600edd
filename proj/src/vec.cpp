#include "dpcollab/vec.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dpcollab {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void axpy(double alpha, std::span<const double> x, Vec& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("axpy: size mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vec scaled(std::span<const double> v, double alpha) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = alpha * v[i];
  return out;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Mat zeros(std::size_t rows, std::size_t cols) {
  return Mat(rows, Vec(cols, 0.0));
}

Vec mat_vec(const Mat& a, std::span<const double> v) {
  Vec out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = dot(a[i], v);
  }
  return out;
}

Vec solve_linear(Mat a, Vec b) {
  const std::size_t n = a.size();
  if (n == 0 || b.size() != n) {
    throw std::invalid_argument("solve_linear: bad dimensions");
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) {
      throw std::runtime_error("solve_linear: singular system");
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  Vec x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
    x[ri] = s / a[ri][ri];
  }
  return x;
}

EigenPair power_iteration(const Mat& a, double tol, int max_iter) {
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("power_iteration: empty matrix");
  // Deterministic start vector with nonzero overlap with any eigenvector.
  Vec v(n);
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  for (std::size_t i = 0; i < n; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    v[i] = 1.0 + static_cast<double>(state >> 52) / 4096.0;
  }
  const double nv = l2_norm(v);
  for (double& x : v) x /= nv;

  double eig = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec av = mat_vec(a, v);
    const double norm = l2_norm(av);
    if (norm < 1e-300) {
      return {0.0, v};  // annihilated: acting like the zero matrix on v
    }
    const double direction = dot(av, v) < 0.0 ? -1.0 : 1.0;
    // Track the iterate change, not the eigenvalue delta: the vector
    // converges at the slower rate and the callers need it accurate too.
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = direction * av[i] / norm;
      change = std::max(change, std::abs(next - v[i]));
      v[i] = next;
    }
    eig = dot(mat_vec(a, v), v);
    if (change <= tol) break;
  }
  return {eig, v};
}

}  // namespace dpcollab
