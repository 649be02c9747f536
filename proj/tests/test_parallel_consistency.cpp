#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "puccilab/contact.hpp"
#include "puccilab/covering.hpp"
#include "puccilab/generate.hpp"
#include "puccilab/harness.hpp"
#include "puccilab/parallel.hpp"
#include "puccilab/pucci.hpp"
#include "puccilab/regularize.hpp"

using namespace puccilab;

// Every kernel is written so that serial and OpenMP execution produce the same bits:
// parallel loops write disjoint slots and all reductions happen afterwards in index
// order. These tests pin that contract on one representative kernel per module.

namespace {

bool sameBits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() ||
          std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

template <class F>
auto inMode(Exec mode, F&& f) {
  ExecModeGuard guard(mode);
  return f();
}

GridFunction wavy(const Lattice& lat) {
  return GridFunction(lat, [](const Point& x) {
    return 1.5 + 0.7 * std::sin(2.0 * x[0]) + 0.4 * x[1] * x[1] +
           0.2 * std::cos(3.0 * (x[0] - x[1]));
  });
}

}  // namespace

TEST_CASE("hypothesis sweep is mode independent") {
  const Lattice lat = Lattice::centeredBox(2, 1.1, 65);
  const GridFunction u = wavy(lat);
  const EllipticityParams p{1.0, 2.0, 0.5};
  const Region reg = Region::ball(Point{}, 1.0);
  const auto run = [&] { return checkSupersolution(u, 5.0, p, reg, 0.1); };
  const HypothesisReport serial = inMode(Exec::Serial, run);
  const HypothesisReport openmp = inMode(Exec::OpenMp, run);
  CHECK(serial.csvRow() == openmp.csvRow());
}

TEST_CASE("inf-convolution is mode independent") {
  const Lattice lat = Lattice::centeredBox(2, 1.0, 65);
  const GridFunction u = wavy(lat);
  const auto run = [&] { return infConvolve(u, 0.05); };
  const InfConvResult serial = inMode(Exec::Serial, run);
  const InfConvResult openmp = inMode(Exec::OpenMp, run);
  CHECK(sameBits(serial.smoothed.values, openmp.smoothed.values));
  CHECK(serial.argmin == openmp.argmin);
  CHECK(serial.maxDisplacement == openmp.maxDisplacement);
}

TEST_CASE("solver relaxation is mode independent") {
  const Lattice lat = Lattice::centeredBox(2, 1.1, 33);
  const GridFunction f(lat, [](const Point&) { return 1.0; });
  const GridFunction g(lat, [](const Point& x) { return 1.4 + 0.9 * x[0]; });
  SolveConfig cfg;
  cfg.tol = 1e-2;
  const EllipticityParams p{1.0, 1.0, 0.0};
  const auto run = [&] { return solvePucci(f, g, p, cfg); };
  const SolveResult serial = inMode(Exec::Serial, run);
  const SolveResult openmp = inMode(Exec::OpenMp, run);
  CHECK(serial.iterations == openmp.iterations);
  CHECK(serial.finalResidual == openmp.finalResidual);
  CHECK(sameBits(serial.u.values, openmp.u.values));
}

TEST_CASE("contact slides are mode independent") {
  const Lattice lat = Lattice::centeredBox(2, 1.1, 65);
  const double core = 3.0 * lat.spacing;
  const GridFunction u(lat, [=](const Point& x) {
    return 1.0 / std::sqrt(x[0] * x[0] + x[1] * x[1] + core * core);
  });
  const CuspParams c;
  const Region vertices = Region::ball(Point{}, 0.5);
  const Region search = Region::ball(Point{}, 1.0);
  const auto run = [&] { return buildContactSet(u, c, vertices, search, c.bigM); };
  const ContactSet serial = inMode(Exec::Serial, run);
  const ContactSet openmp = inMode(Exec::OpenMp, run);
  CHECK(contactSetCsv(serial, 2) == contactSetCsv(openmp, 2));
}

TEST_CASE("ink-spots sampling is mode independent") {
  const Lattice lat = Lattice::centeredBox(2, 1.0, 129);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = std::size_t(lat.nodeCount());
  std::vector<char> fBits(n), eBits(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = lat.point(std::int64_t(i));
    const bool inBall = norm(x, lat.dim) < 0.98;
    const bool inF = inBall && unif(rng) < 0.6;
    fBits[i] = inF ? 1 : 0;
    eBits[i] = (inF && unif(rng) < 0.5) ? 1 : 0;
  }
  const MaskSet F(lat, fBits, true), E(lat, eBits, true);
  const auto run = [&] { return inkSpotsCheck(E, F, 0.2, 400, 5); };
  const InkSpotsReport serial = inMode(Exec::Serial, run);
  const InkSpotsReport openmp = inMode(Exec::OpenMp, run);
  CHECK(serial.pass == openmp.pass);
  CHECK(serial.conclusionMargin == openmp.conclusionMargin);
}

TEST_CASE("full corpus build is mode independent") {
  CorpusConfig cc;
  cc.gridN = 65;
  const auto run = [&] { return buildCorpus(cc); };
  const std::vector<CorpusMember> serial = inMode(Exec::Serial, run);
  const std::vector<CorpusMember> openmp = inMode(Exec::OpenMp, run);
  REQUIRE(serial.size() == openmp.size());
  for (std::size_t i = 0; i < serial.size(); ++i)
    CHECK(valuesHash(serial[i].u) == valuesHash(openmp[i].u));
}

TEST_CASE("measure experiment rows are mode independent") {
  CorpusConfig cc;
  cc.gridN = 65;
  const std::vector<CorpusMember> corpus = buildCorpus(cc);
  ExperimentConfig ec;
  ec.name = "measure";
  const auto run = [&] { return runMeasureEstimate(ec, corpus); };
  const ExperimentReport serial = inMode(Exec::Serial, run);
  const ExperimentReport openmp = inMode(Exec::OpenMp, run);
  CHECK(serial.rows == openmp.rows);
  CHECK(serial.measuredConstants == openmp.measuredConstants);
}
