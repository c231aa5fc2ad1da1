#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "fairdtd/matrix.hpp"

namespace fairdtd {

/// Square CSR matrix used for graph propagation operators.
///
/// Invariants (checked by validate()): row offsets start at 0 and are
/// non-decreasing, column indices are in range and strictly increasing within
/// a row, every stored value is > 0, and the pattern is symmetric.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;
  SparseAdjacency(std::size_t n, std::vector<std::size_t> row_offsets,
                  std::vector<std::uint32_t> col_indices, std::vector<double> values);

  /// Builds from (row, col, value) triplets. Duplicates are summed.
  static SparseAdjacency from_triplets(
      std::size_t n, std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets);

  std::size_t dim() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return col_indices_.size(); }
  const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<std::uint32_t>& col_indices() const noexcept { return col_indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Stored value at (i, j) or 0.
  double at(std::size_t i, std::size_t j) const;

  /// this * x
  Matrix multiply(const Matrix& x) const;
  /// this^T * x
  Matrix multiply_transposed(const Matrix& x) const;

  Matrix to_dense() const;
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::uint32_t> col_indices_;
  std::vector<double> values_;
};

}  // namespace fairdtd
