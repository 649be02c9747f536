// Serial-reference vs OpenMP timing for the laboratory's hot kernels, with a
// bit-identity audit: both modes must produce the same bytes, so the speedup is
// the only thing that may differ. Run with no arguments; an optional integer
// selects the grid (default 257 nodes per axis).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "puccilab/contact.hpp"
#include "puccilab/generate.hpp"
#include "puccilab/lattice.hpp"
#include "puccilab/parallel.hpp"
#include "puccilab/pucci.hpp"
#include "puccilab/regularize.hpp"

using namespace puccilab;
using Clock = std::chrono::steady_clock;

namespace {

double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct Timed {
  double serial = 0;
  double openmp = 0;
  bool identical = false;
};

template <class F>
Timed compare(F&& run) {
  Timed t;
  std::string serialBytes, openmpBytes;
  {
    ExecModeGuard g(Exec::Serial);
    const auto t0 = Clock::now();
    serialBytes = run();
    t.serial = seconds(t0, Clock::now());
  }
  {
    ExecModeGuard g(Exec::OpenMp);
    const auto t0 = Clock::now();
    openmpBytes = run();
    t.openmp = seconds(t0, Clock::now());
  }
  t.identical = serialBytes == openmpBytes;
  return t;
}

std::string bytesOf(const std::vector<double>& v) {
  return std::string(reinterpret_cast<const char*>(v.data()),
                     v.size() * sizeof(double));
}

void report(const char* name, const Timed& t, bool& allIdentical) {
  std::printf("%-22s serial %8.3fs   openmp %8.3fs   speedup %5.2fx   bits %s\n",
              name, t.serial, t.openmp, t.serial / (t.openmp > 0 ? t.openmp : 1e-9),
              t.identical ? "identical" : "DIVERGED");
  allIdentical = allIdentical && t.identical;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 257;
  if (n < 17) {
    std::fprintf(stderr, "grid must be at least 17\n");
    return 2;
  }
  const Lattice lat = Lattice::centeredBox(2, 1.1, n);
  const GridFunction u(lat, [](const Point& x) {
    return 1.5 + 0.7 * std::sin(2.0 * x[0]) + 0.4 * x[1] * x[1] +
           0.2 * std::cos(3.0 * (x[0] - x[1]));
  });
  std::printf("grid %d x %d, h = %g\n", n, n, lat.spacing);
  bool allIdentical = true;

  report("hypothesis sweep", compare([&] {
           const EllipticityParams p{1.0, 2.0, 0.5};
           HypothesisReport hr;
           for (int rep = 0; rep < 5; ++rep)
             hr = checkSupersolution(u, 5.0, p, Region::ball(Point{}, 1.0), 0.1);
           return hr.csvRow();
         }),
         allIdentical);

  report("inf-convolution", compare([&] {
           return bytesOf(infConvolve(u, 0.05).smoothed.values);
         }),
         allIdentical);

  report("cascade solve", compare([&] {
           SolveConfig cfg;
           cfg.tol = 5e-3;
           const SolveResult r = solveCascade(
               [](const Point&) { return 1.0; },
               [](const Point& x) { return 1.4 + 0.9 * x[0]; },
               EllipticityParams{1.0, 1.0, 0.0}, cfg, lat);
           return bytesOf(r.u.values) + std::to_string(r.iterations);
         }),
         allIdentical);

  report("contact slides", compare([&] {
           const double core = 3.0 * lat.spacing;
           const GridFunction spike(lat, [=](const Point& x) {
             return 1.0 / std::sqrt(x[0] * x[0] + x[1] * x[1] + core * core);
           });
           const CuspParams c;
           const ContactSet s = buildContactSet(spike, c, Region::ball(Point{}, 0.35),
                                                Region::ball(Point{}, 1.0), c.bigM);
           return contactSetCsv(s, 2);
         }),
         allIdentical);

  std::printf("bit identity across modes: %s\n", allIdentical ? "PASS" : "FAIL");
  return allIdentical ? 0 : 1;
}
