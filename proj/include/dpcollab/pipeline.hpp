#ifndef DPCOLLAB_PIPELINE_HPP
#define DPCOLLAB_PIPELINE_HPP

#include <cstdint>
#include <span>
#include <string>

#include "dpcollab/model.hpp"

namespace dpcollab {

// Parsed CSV content, cells kept as text until encoding.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string& name) const;
};

// Loads a header-first CSV restricted to feature_columns plus target_column
// (target last). Handles double-quoted fields with "" escapes. Throws on a
// missing file, missing column, ragged row, or empty data section.
RawTable load_csv(const std::string& path, const std::string& target_column,
                  std::span<const std::string> feature_columns);

// Replaces string values in the named columns with integer codes assigned by
// order of first appearance, starting at 0. Columns that already parse as
// numbers throughout pass through unchanged.
RawTable encode_categoricals(RawTable table, std::span<const std::string> columns);

// Numeric conversion of an encoded table; target_column becomes y.
Dataset table_to_dataset(const RawTable& table, const std::string& target_column);

// Per-feature affine map to zero mean, unit variance, fitted on a record
// range. Zero-variance features keep scale 1.
struct Standardizer {
  Vec mean;
  Vec scale;
};
Standardizer standardize_fit(const Dataset& data, std::size_t fit_begin, std::size_t fit_end);
Dataset standardize_apply(const Standardizer& std_map, const Dataset& data);

// Principal directions of a fitted subset: mean, top-k unit eigenvectors of
// the covariance (descending eigenvalues). Owners share this as the common
// basis for transforming their shards.
struct PcaBasis {
  Vec mean;
  std::vector<Vec> components;  // components[i] is the i-th eigenvector
  Vec eigenvalues;

  std::size_t input_dim() const { return mean.size(); }
  std::size_t rank() const { return components.size(); }
};

// Fits on records [fit_begin, fit_end): centers, forms the covariance, and
// extracts top-k eigenpairs by power iteration with deflation (tolerance
// 1e-10, at most 10^4 iterations per component). Eigenvector signs are fixed
// by making the first nonzero entry positive.
PcaBasis pca_fit(const Dataset& data, int k, std::size_t fit_begin, std::size_t fit_end);

// Projects every record's features onto the basis; targets pass through.
Dataset pca_transform(const PcaBasis& basis, const Dataset& data);

std::string pca_basis_to_json(const PcaBasis& basis);
PcaBasis pca_basis_from_json(const std::string& text);

// Contiguous, order-preserving, disjoint shards of the given sizes; records
// beyond the total go unused. Throws when the sizes overrun the dataset.
std::vector<Dataset> partition(const Dataset& data, std::span<const int> sizes);

// Seeded synthetic instance with a known generating model.
// Regression: x uniform on [-1,1]^p, y = theta_gen.x + gaussian(noise_sd).
// SVM: labels sign(theta_gen.[x;1]); points with |margin| < 0.1 discarded.
struct SynthInstance {
  Dataset data;
  Vec theta_gen;
};
SynthInstance synth_instance(LossKind kind, int n, int p, double noise_sd, std::uint64_t seed);

}  // namespace dpcollab

#endif  // DPCOLLAB_PIPELINE_HPP
