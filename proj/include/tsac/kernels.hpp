#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "tsac/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsac::kernels {

enum class Exec { Serial, Parallel };

// Items are grouped into fixed-size chunks and chunk partials are combined
// in chunk order, so the parallel result is bit-identical for any thread
// count (though not bit-identical to the plain serial loop).
inline constexpr std::size_t kChunk = 256;

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Serial reference: accumulate(i, acc) must add item i's contribution into
// acc (acc has dim entries, zero-initialized).
template <class AccumulateFn>
Vec accumulate_serial(std::size_t n, std::size_t dim, AccumulateFn&& accumulate) {
  Vec acc(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) accumulate(i, std::span<double>(acc));
  return acc;
}

// OpenMP kernel with deterministic chunked reduction.
template <class AccumulateFn>
Vec accumulate_parallel(std::size_t n, std::size_t dim, AccumulateFn&& accumulate) {
  if (n == 0) return Vec(dim, 0.0);
  const std::size_t num_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Vec> partials(num_chunks);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(num_chunks); ++c) {
    Vec local(dim, 0.0);
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i) accumulate(i, std::span<double>(local));
    partials[static_cast<std::size_t>(c)] = std::move(local);
  }
  Vec acc(dim, 0.0);
  for (const Vec& p : partials) axpy(1.0, p, acc);
  return acc;
}

template <class AccumulateFn>
Vec accumulate(std::size_t n, std::size_t dim, AccumulateFn&& fn, Exec exec) {
  return exec == Exec::Serial ? accumulate_serial(n, dim, fn)
                              : accumulate_parallel(n, dim, fn);
}

// Max-reduction over f(i); -inf for n == 0.
template <class ValueFn>
double max_reduce(std::size_t n, ValueFn&& f, Exec exec) {
  double best = -std::numeric_limits<double>::infinity();
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, f(i));
    return best;
  }
  const std::size_t num_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partials(num_chunks, best);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(num_chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i < hi; ++i) m = std::max(m, f(i));
    partials[static_cast<std::size_t>(c)] = m;
  }
  for (double p : partials) best = std::max(best, p);
  return best;
}

// Independent per-index work (fills caller-owned slots, no reduction).
template <class BodyFn>
void parallel_for(std::size_t n, BodyFn&& body, Exec exec) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    body(static_cast<std::size_t>(i));
}

}  // namespace tsac::kernels
