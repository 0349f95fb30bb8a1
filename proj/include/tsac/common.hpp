#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsac {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnumerationTooLarge : Error {
  using Error::Error;
};
struct InconsistentTrajectory : Error {
  using Error::Error;
};
struct IndexOutOfRange : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct InvalidGap : Error {
  using Error::Error;
};
struct NonFiniteUpdate : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct InnerLoopDiverged : Error {
  using Error::Error;
};
struct MissingColumn : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Small vector algebra on flat parameter vectors
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline double sq_norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ShapeMismatch("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeMismatch("sub: size mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

// Relative deviation between two vectors, scale-protected.
inline double relative_deviation(std::span<const double> a, std::span<const double> b,
                                 double floor = 1e-12) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
  }
  const double den = std::max({norm2(a), norm2(b), floor});
  return std::sqrt(num) / den;
}

// Projects x onto the ball of the given radius (no-op when inside).
inline void clamp_norm(std::span<double> x, double radius) {
  const double n = norm2(x);
  if (n > radius && n > 0.0) scale(x, radius / n);
}

// ---------------------------------------------------------------------------
// Deterministic seedable RNG with derived substreams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Combines a base seed with a substream id into an independent-looking seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

  // Uniform double in [0, 1) with 53 random bits; avoids distribution
  // objects so streams replay identically across standard libraries.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), unbiased.
  int uniform_int(int n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<int>(x % bound);
  }

  double gaussian() {
    // Box-Muller; consumes two uniforms per pair, caches the second.
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(6.283185307179586 * u2);
    has_cached_ = true;
    return r * std::cos(6.283185307179586 * u2);
  }

  // Derived from the construction seed, not the evolving state, so
  // substream(k) is stable no matter how much the parent consumed.
  Rng substream(std::uint64_t id) const { return Rng(derive_seed(seed_, id)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace tsac
