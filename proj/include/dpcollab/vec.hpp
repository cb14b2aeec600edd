#ifndef DPCOLLAB_VEC_HPP
#define DPCOLLAB_VEC_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace dpcollab {

using Vec = std::vector<double>;
// Dense row-major matrix, kept as nested vectors; everything here is small
// (p x p Gram matrices, p <= a few dozen).
using Mat = std::vector<Vec>;

double dot(std::span<const double> a, std::span<const double> b);
double l1_norm(std::span<const double> v);
double l2_norm(std::span<const double> v);
double linf_norm(std::span<const double> v);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, Vec& y);
Vec scaled(std::span<const double> v, double alpha);

bool all_finite(std::span<const double> v);

Mat zeros(std::size_t rows, std::size_t cols);

// A * v for symmetric or general square A.
Vec mat_vec(const Mat& a, std::span<const double> v);

// Solves A x = b by Gaussian elimination with partial pivoting.
// Throws std::runtime_error when the system is singular to working precision.
Vec solve_linear(Mat a, Vec b);

// Largest-magnitude eigenpair of a symmetric PSD matrix by power iteration.
// Returns {eigenvalue, unit eigenvector}; a zero matrix yields eigenvalue 0.
struct EigenPair {
  double value = 0.0;
  Vec vector;
};
EigenPair power_iteration(const Mat& a, double tol = 1e-10, int max_iter = 10000);

}  // namespace dpcollab

#endif  // DPCOLLAB_VEC_HPP
