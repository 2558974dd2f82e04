#include "rvc/scatter.hpp"

#include <string>

namespace rvc {

namespace {

void check(const Matrix& src, const SegmentIndex& idx) {
  if (src.data.size() != src.rows * src.cols) {
    throw ShapeError("source matrix data does not match its shape");
  }
  if (idx.index.size() != src.rows) {
    throw ShapeError("index has " + std::to_string(idx.index.size()) +
                     " entries for " + std::to_string(src.rows) + " source rows");
  }
  for (std::size_t r = 0; r < idx.index.size(); ++r) {
    if (idx.index[r] >= idx.dim_size) {
      throw BoundsError("row " + std::to_string(r) + " has index " +
                        std::to_string(idx.index[r]) + " >= dim_size " +
                        std::to_string(idx.dim_size));
    }
  }
}

enum class Reduce { kSum, kMax };

// Shared kernel. A single worker streams rows in order; several workers
// each own a contiguous bucket range and walk its rows in CSR order, which
// visits every bucket in the same ascending-row order.
SegmentResult reduce(const Matrix& src, const SegmentIndex& idx, Reduce op) {
  check(src, idx);
  const std::size_t ch = src.cols;
  SegmentResult out;
  out.values = Matrix(idx.dim_size, ch, 0.0);
  out.counts.assign(idx.dim_size, 0);
  if (op == Reduce::kMax) out.argmax.assign(idx.dim_size * ch, kNoArgmax);

  auto visit = [&](std::size_t bucket, std::size_t row) {
    double* dst = out.values.data.data() + bucket * ch;
    const double* s = src.data.data() + row * ch;
    if (op == Reduce::kSum) {
      for (std::size_t c = 0; c < ch; ++c) dst[c] += s[c];
    } else {
      std::int64_t* am = out.argmax.data() + bucket * ch;
      const bool first = out.counts[bucket] == 0;
      for (std::size_t c = 0; c < ch; ++c) {
        if (first || s[c] > dst[c]) {
          dst[c] = s[c];
          am[c] = static_cast<std::int64_t>(row);
        }
      }
    }
    ++out.counts[bucket];
  };

  if (thread_count() <= 1 || idx.dim_size < 2) {
    for (std::size_t r = 0; r < src.rows; ++r) visit(idx.index[r], r);
    return out;
  }
  const BucketRows groups = group_rows(idx);
  parallel_for(idx.dim_size, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      for (std::size_t k = groups.offsets[b]; k < groups.offsets[b + 1]; ++k) {
        visit(b, groups.rows[k]);
      }
    }
  });
  return out;
}

}  // namespace

BucketRows group_rows(const SegmentIndex& idx) {
  BucketRows g;
  g.offsets.assign(idx.dim_size + 1, 0);
  for (std::uint32_t b : idx.index) ++g.offsets[b + 1];
  for (std::size_t b = 0; b < idx.dim_size; ++b) g.offsets[b + 1] += g.offsets[b];
  g.rows.resize(idx.index.size());
  std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t r = 0; r < idx.index.size(); ++r) {
    g.rows[cursor[idx.index[r]]++] = r;
  }
  return g;
}

SegmentResult scatter_sum(const Matrix& src, const SegmentIndex& idx) {
  return reduce(src, idx, Reduce::kSum);
}

SegmentResult scatter_mean(const Matrix& src, const SegmentIndex& idx) {
  SegmentResult out = reduce(src, idx, Reduce::kSum);
  const std::size_t ch = src.cols;
  for (std::size_t b = 0; b < idx.dim_size; ++b) {
    if (out.counts[b] == 0) continue;
    const double n = static_cast<double>(out.counts[b]);
    for (std::size_t c = 0; c < ch; ++c) out.values(b, c) /= n;
  }
  return out;
}

SegmentResult scatter_max(const Matrix& src, const SegmentIndex& idx) {
  return reduce(src, idx, Reduce::kMax);
}

}  // namespace rvc
