#include "fairdtd/sparse.hpp"

#include <algorithm>
#include <tuple>

#include "fairdtd/error.hpp"

namespace fairdtd {

SparseAdjacency::SparseAdjacency(std::size_t n, std::vector<std::size_t> row_offsets,
                                 std::vector<std::uint32_t> col_indices,
                                 std::vector<double> values)
    : n_(n),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  validate();
}

SparseAdjacency SparseAdjacency::from_triplets(
    std::size_t n, std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  std::int64_t last_r = -1, last_c = -1;
  for (const auto& [r, c, v] : triplets) {
    if (r >= n || c >= n) {
      throw DimensionError("triplet (" + std::to_string(r) + "," + std::to_string(c) +
                           ") outside " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (r == last_r && c == last_c) {
      vals.back() += v;
      continue;
    }
    cols.push_back(c);
    vals.push_back(v);
    ++offsets[r + 1];
    last_r = r;
    last_c = c;
  }
  for (std::size_t i = 1; i <= n; ++i) offsets[i] += offsets[i - 1];
  return SparseAdjacency(n, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseAdjacency::at(std::size_t i, std::size_t j) const {
  const auto begin = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto end = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Matrix SparseAdjacency::multiply(const Matrix& x) const {
  if (x.rows() != n_) {
    throw DimensionError("spmm: adjacency " + std::to_string(n_) + " vs operand " +
                         x.shape_string());
  }
  Matrix out(n_, x.cols());
  const std::size_t f = x.cols();
  for (std::size_t i = 0; i < n_; ++i) {
    double* o = out.data() + i * f;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const double v = values_[k];
      const double* xr = x.data() + static_cast<std::size_t>(col_indices_[k]) * f;
      for (std::size_t j = 0; j < f; ++j) o[j] += v * xr[j];
    }
  }
  return out;
}

Matrix SparseAdjacency::multiply_transposed(const Matrix& x) const {
  if (x.rows() != n_) {
    throw DimensionError("spmm^T: adjacency " + std::to_string(n_) + " vs operand " +
                         x.shape_string());
  }
  Matrix out(n_, x.cols());
  const std::size_t f = x.cols();
  for (std::size_t i = 0; i < n_; ++i) {
    const double* xr = x.data() + i * f;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const double v = values_[k];
      double* o = out.data() + static_cast<std::size_t>(col_indices_[k]) * f;
      for (std::size_t j = 0; j < f; ++j) o[j] += v * xr[j];
    }
  }
  return out;
}

Matrix SparseAdjacency::to_dense() const {
  Matrix d(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      d(i, col_indices_[k]) = values_[k];
  return d;
}

void SparseAdjacency::validate() const {
  if (row_offsets_.size() != n_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != col_indices_.size() || values_.size() != col_indices_.size()) {
    throw DimensionError("CSR arrays are inconsistent with dimension " + std::to_string(n_));
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i])
      throw DomainError("CSR row offsets must be non-decreasing");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (col_indices_[k] >= n_) throw DimensionError("CSR column index out of range");
      if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
        throw DomainError("CSR column indices must be strictly increasing per row");
      if (!(values_[k] > 0.0)) throw DomainError("CSR values must be > 0");
    }
  }
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      if (at(col_indices_[k], i) == 0.0)
        throw DomainError("CSR pattern is not symmetric at (" + std::to_string(i) + "," +
                          std::to_string(col_indices_[k]) + ")");
}

}  // namespace fairdtd
