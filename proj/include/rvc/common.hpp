#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace rvc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file layout (misaligned binary, bad magic, wrong version).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed file carrying bad values (non-finite floats, unparsable rows).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// Worker count used by the parallel kernels. Reads RVC_THREADS once unless
// overridden with set_thread_count (0 restores the environment value).
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Splits [0, n) into contiguous chunks, one per worker, and calls
// fn(begin, end) for each. Chunk boundaries depend only on n and the worker
// count; callers must make results independent of the partition.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// SplitMix64-seeded xoshiro256** generator with portable float conversions,
// so seeded streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream, deterministic in (state, salt).
  Rng fork(std::uint64_t salt) const;

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0) r += 2.0 * kPi;
  double out = r - kPi;
  return out >= kPi ? -kPi : out;
}

}  // namespace rvc
