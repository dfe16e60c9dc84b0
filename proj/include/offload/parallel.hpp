#pragma once

#include <cstddef>

namespace offload {

/// Execution mode for the data-parallel kernels (rate matrices, batched
/// network passes, oracle enumeration). Every kernel has a serial reference
/// path and an OpenMP path that produce bit-identical results: reductions
/// always run in a fixed order, parallelism only splits independent work.
enum class ExecMode { Serial, OpenMP };

/// Dot product with a fixed 8-lane accumulation order. Deterministic for a
/// given input regardless of optimization level, and wide enough for the
/// compiler to keep the lanes in SIMD registers.
inline double dot_fixed(const double* a, const double* b, std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8)
    for (std::size_t u = 0; u < 8; ++u) acc[u] += a[k + u] * b[k + u];
  double tail = 0;
  for (; k < n; ++k) tail += a[k] * b[k];
  return (((acc[0] + acc[1]) + (acc[2] + acc[3])) +
          ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
         tail;
}

}  // namespace offload
