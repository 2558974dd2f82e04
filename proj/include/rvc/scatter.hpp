#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rvc/common.hpp"

namespace rvc {

// Dense row-major rows x cols matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Bucket id per source row; every id must be < dim_size.
struct SegmentIndex {
  std::vector<std::uint32_t> index;
  std::size_t dim_size = 0;
};

inline constexpr std::int64_t kNoArgmax = -1;

struct SegmentResult {
  Matrix values;                    // dim_size x channels
  std::vector<std::size_t> counts;  // rows per bucket
  // scatter_max only: dim_size x channels source rows, kNoArgmax if empty.
  std::vector<std::int64_t> argmax;
};

// All reductions accumulate each bucket in ascending source-row order, so
// results are bit-identical for any worker count. Empty buckets hold 0.
// Throws ShapeError on size mismatch and BoundsError naming the first row
// whose index is >= dim_size.
SegmentResult scatter_sum(const Matrix& src, const SegmentIndex& idx);
SegmentResult scatter_mean(const Matrix& src, const SegmentIndex& idx);
// Ties resolve to the smallest source row.
SegmentResult scatter_max(const Matrix& src, const SegmentIndex& idx);

// Rows grouped by bucket (CSR layout), stable within a bucket.
struct BucketRows {
  std::vector<std::size_t> offsets;  // dim_size + 1
  std::vector<std::size_t> rows;
};
BucketRows group_rows(const SegmentIndex& idx);

}  // namespace rvc
