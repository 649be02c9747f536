#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace puccilab {

// Every kernel runs through parallelFor and writes only to its own output slot, so
// serial and OpenMP execution are bit-identical by construction. Reductions over
// kernel outputs are done afterwards in fixed index order. The mode switch keeps a
// serial reference path selectable at runtime for tests and benchmarks.
enum class Exec { Serial, OpenMp };

inline Exec& execMode() {
  static Exec mode = Exec::OpenMp;
  return mode;
}

template <class F>
void parallelFor(std::int64_t n, F&& f) {
#ifdef _OPENMP
  if (execMode() == Exec::OpenMp) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) f(i);
}

// RAII guard for temporarily forcing a mode (used by tests and the benchmark).
struct ExecModeGuard {
  Exec saved;
  explicit ExecModeGuard(Exec m) : saved(execMode()) { execMode() = m; }
  ~ExecModeGuard() { execMode() = saved; }
};

}  // namespace puccilab
