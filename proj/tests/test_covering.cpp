#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <functional>
#include <string>

#include "puccilab/covering.hpp"
#include "support/oracles.hpp"

using namespace puccilab;

namespace {

bool throwsWith(const std::function<void()>& f, const std::string& needle) {
  try {
    f();
  } catch (const std::exception& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

// Small adversarial ink-spots instance: F dilates a union of seeded balls, E fills the
// undilated union at density 1 - delta - 0.05.
void buildInkSpotsInstance(const Lattice& l, std::uint64_t seed, double delta,
                           MaskSet& E, MaskSet& F) {
  Rng rng(seed, 77);
  std::vector<Ball> cores;
  for (int k = 0; k < 3; ++k) {
    double r = rng.uniform(0.15, 0.3);
    double a = rng.uniform(0, 6.283185307179586);
    double d = rng.uniform(0, 0.6 - r > 0 ? 0.6 - r : 0.0);
    cores.push_back(Ball{makePoint(d * std::cos(a), d * std::sin(a)), r});
  }
  auto inUnion = [&](const Point& p, double dilate) {
    for (const Ball& b : cores)
      if (dist(p, b.center, 2) < dilate * b.radius) return true;
    return false;
  };
  F = MaskSet::fromPredicate(l, [&](const Point& p) {
    return norm(p, 2) < 1.0 && inUnion(p, 1.35);
  });
  std::vector<char> ebits(l.nodeCount(), 0);
  Rng fill(seed, 78);
  for (std::int64_t f = 0; f < l.nodeCount(); ++f) {
    const Point p = l.point(f);
    if (norm(p, 2) < 1.0 && inUnion(p, 1.0) && fill.u01() < 1.0 - delta - 0.05)
      ebits[f] = 1;
  }
  E = MaskSet(l, std::move(ebits));
}

}  // namespace

TEST_CASE("mask basics: rasterization, measure, subset") {
  Lattice l = Lattice::centeredBox(2, 1.1, 111);  // h = 0.02
  MaskSet disk = MaskSet::fromRegion(l, Region::ball(makePoint(0, 0), 0.8));
  CHECK(disk.openness);
  CHECK(disk.measure() == doctest::Approx(3.14159265 * 0.64).epsilon(0.03));

  MaskSet smaller = MaskSet::fromRegion(l, Region::ball(makePoint(0, 0), 0.5));
  CHECK(smaller.isSubsetOf(disk));
  CHECK(!disk.isSubsetOf(smaller));

  CHECK(throwsWith([&] { MaskSet(l, std::vector<char>(5, 0)); }, "count"));
  CHECK(throwsWith([&] { MaskSet(l, std::vector<char>(l.nodeCount(), 2)); }, "0 or 1"));
  Lattice other = Lattice::centeredBox(2, 1.1, 55);
  MaskSet otherMask = MaskSet::fromRegion(other, Region::ball(makePoint(0, 0), 0.5));
  CHECK(throwsWith([&] { (void)smaller.isSubsetOf(otherMask); }, "lattice"));
}

TEST_CASE("mask RLE round-trip and reader errors") {
  Lattice l = Lattice::centeredBox(2, 1.0, 17);
  Rng rng(4, 0);
  std::vector<char> bits(l.nodeCount());
  for (char& b : bits) b = rng.u01() < 0.4 ? 1 : 0;
  MaskSet m(l, bits);

  MaskSet back = maskFromString(maskToString(m));
  CHECK(back.lat == l);
  CHECK(back.membership == m.membership);

  // All-on and all-off masks exercise the leading zero-run convention.
  MaskSet allOn(l, std::vector<char>(l.nodeCount(), 1));
  CHECK(maskFromString(maskToString(allOn)).count() == l.nodeCount());
  MaskSet allOff(l, std::vector<char>(l.nodeCount(), 0));
  CHECK(maskFromString(maskToString(allOff)).count() == 0);

  CHECK(throwsWith([] { maskFromString("gfn 2\n", "a"); }, "line 1"));
  std::string good = maskToString(m);
  std::string noisy = good + "garbage\n";
  // Trailing lines after the runs complete are ignored by design, but corrupting a
  // run line is caught with its line number.
  CHECK_NOTHROW(maskFromString(noisy));
  std::string bad = good;
  bad.replace(bad.find("mask rle") + 9, 1, "x");
  CHECK(throwsWith([&] { maskFromString(bad, "b.mask"); }, "line 7"));
  CHECK(throwsWith([&] { maskFromString(bad, "b.mask"); }, "b.mask"));
}

TEST_CASE("vitali: interval example and bookkeeping") {
  CHECK(throwsWith([] { vitaliSelect({}); }, "at least one"));
  CHECK(throwsWith([] { vitaliSelect({Ball{makePoint(0), 0.0}}); }, "positive"));

  BallCover one = vitaliSelect({Ball{makePoint(0.3), 0.2}});
  CHECK(one.balls.size() == 1);
  CHECK(one.coveredBy == std::vector<int>{0});

  // Overlapping equal-radius intervals: lexicographically smaller center wins and its
  // 5-dilation swallows the loser.
  BallCover two = vitaliSelect({Ball{makePoint(1.5), 1.0}, Ball{makePoint(0.0), 1.0}});
  REQUIRE(two.balls.size() == 1);
  CHECK(two.balls[0].center[0] == 0.0);
  CHECK(two.coveredBy[0] == 0);
  CHECK(two.coveredBy[1] == 0);
  // Interval arithmetic: B(1.5,1) = (0.5, 2.5) inside 5B(0,1) = (-5, 5).
  CHECK(std::abs(1.5 - 0.0) + 1.0 <= 5.0 * 1.0);
}

TEST_CASE("vitali: random families are disjoint and 5-covered") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    Rng rng(seed, 9);
    std::vector<Ball> balls;
    for (int k = 0; k < 50; ++k) {
      Ball b;
      b.center = makePoint(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
      b.radius = rng.uniform(0.05, 0.3);
      balls.push_back(b);
    }
    BallCover cover = vitaliSelect(balls);
    CHECK(cover.disjoint);
    for (std::size_t i = 0; i < cover.balls.size(); ++i)
      for (std::size_t j = i + 1; j < cover.balls.size(); ++j)
        CHECK(dist(cover.balls[i].center, cover.balls[j].center, 2) >
              cover.balls[i].radius + cover.balls[j].radius);
    // Analytic containment of every input in its recorded keeper's 5-dilation.
    for (std::size_t i = 0; i < balls.size(); ++i) {
      int k = cover.coveredBy[i];
      REQUIRE(k >= 0);
      REQUIRE(std::size_t(k) < cover.balls.size());
      CHECK(dist(balls[i].center, cover.balls[k].center, 2) + balls[i].radius <=
            cover.dilationFactor * cover.balls[k].radius + 1e-12);
    }
  }
}

TEST_CASE("vitali: bit-mask containment and measure super-additivity") {
  Rng rng(11, 9);
  std::vector<Ball> balls;
  for (int k = 0; k < 10; ++k) {
    Ball b;
    b.center = makePoint(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
    b.radius = rng.uniform(0.05, 0.2);
    balls.push_back(b);
  }
  BallCover cover = vitaliSelect(balls);

  Lattice l = Lattice::centeredBox(2, 1.5, 193);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const Ball& keeper = cover.balls[cover.coveredBy[i]];
    MaskSet dilated = MaskSet::fromRegion(
        l, Region::ball(keeper.center, cover.dilationFactor * keeper.radius));
    MaskSet original = MaskSet::fromRegion(l, Region::ball(balls[i].center, balls[i].radius));
    CHECK(original.isSubsetOf(dilated));
  }

  // Disjoint kept balls never double-count nodes of any mask.
  MaskSet X = MaskSet::fromPredicate(l, [](const Point& p) {
    return std::sin(7 * p[0]) * std::cos(5 * p[1]) > 0.1;
  });
  std::int64_t sum = 0;
  for (const Ball& b : cover.balls) sum += maskNodesInBall(X, b);
  CHECK(sum <= X.count());
}

TEST_CASE("squared distance field matches the brute-force envelope") {
  Lattice l = Lattice::centeredBox(2, 1.0, 21);
  Rng rng(5, 1);
  std::vector<char> bits(l.nodeCount());
  for (char& b : bits) b = rng.u01() < 0.7 ? 1 : 0;
  MaskSet F(l, bits);

  std::vector<double> fast = squaredDistanceToComplement(F);
  std::vector<double> seed(l.nodeCount());
  for (std::int64_t f = 0; f < l.nodeCount(); ++f) seed[f] = F.at(f) ? 1e18 : 0.0;
  oracle::BruteEnvelope slow = oracle::bruteEnvelope(GridFunction(l, seed), 0.5);
  for (std::int64_t f = 0; f < l.nodeCount(); ++f)
    CHECK(std::memcmp(&fast[f], &slow.value[f], sizeof(double)) == 0);
}

TEST_CASE("maximal balls: disk geometry, degenerate node, boundary nodes") {
  Lattice l = Lattice::centeredBox(2, 1.0, 65);  // h = 1/32
  const double h = l.spacing;
  MaskSet disk = MaskSet::fromRegion(l, Region::ball(makePoint(0, 0), 0.5));

  auto center = l.nearestNode(makePoint(0, 0));
  REQUIRE(center.has_value());
  Ball best = maximalBallAt(*center, disk);
  CHECK(best.radius >= 0.5 - 2 * h);
  CHECK(best.radius <= 0.5);
  CHECK(ballWithinMask(disk, best));
  CHECK(dist(best.center, makePoint(0, 0), 2) < best.radius);  // contains x

  // Single-node mask: the convention ball of radius h/2.
  std::vector<char> lone(l.nodeCount(), 0);
  Index mid = makeIndex(32, 32);
  lone[l.flatten(mid)] = 1;
  MaskSet single(l, lone);
  Ball tiny = maximalBallAt(mid, single);
  CHECK(tiny.radius == doctest::Approx(h / 2).epsilon(1e-12));
  CHECK(tiny.center[0] == doctest::Approx(0.0));

  // A node hugging the disk boundary still gets a ball at least as large as its own
  // distance to the complement minus one cell.
  auto edge = l.nearestNode(makePoint(0.46, 0.0));
  REQUIRE(edge.has_value());
  std::vector<double> dsq = squaredDistanceToComplement(disk);
  Ball atEdge = maximalBallAt(*edge, disk);
  CHECK(atEdge.radius >= std::sqrt(dsq[l.flatten(*edge)]) - h);
  CHECK(ballWithinMask(disk, atEdge));
  CHECK(dist(atEdge.center, l.point(*edge), 2) < atEdge.radius);

  CHECK(throwsWith([&] { maximalBallAt(makeIndex(0, 0), disk); }, "not a member"));
}

TEST_CASE("ink spots: empty E and concentric shrink") {
  Lattice l = Lattice::centeredBox(2, 1.05, 65);
  MaskSet F = MaskSet::fromRegion(l, Region::ball(makePoint(0, 0), 0.8));
  MaskSet empty(l, std::vector<char>(l.nodeCount(), 0));
  InkSpotsReport r = inkSpotsCheck(empty, F, 0.3, 100);
  CHECK(r.pass);
  CHECK(r.denseSamples == 0);
  CHECK(r.conclusionMargin == doctest::Approx((1 - r.c * 0.3) * r.fMeasure));

  // F = B_1, E = B_{0.7}, delta = 0.4: (0.7)^2 = 0.49 <= 0.6 and <= 1 - delta/25,
  // with enough slack to absorb node-counting error on both discs.
  MaskSet unit = MaskSet::fromRegion(l, Region::ball(makePoint(0, 0), 1.0));
  MaskSet inner = MaskSet::fromRegion(l, Region::ball(makePoint(0, 0), 0.7));
  InkSpotsReport shrink = inkSpotsCheck(inner, unit, 0.4, 300);
  CHECK(shrink.pass);
  CHECK(shrink.hypothesisViolations == 0);
  CHECK(shrink.c == doctest::Approx(1.0 / 25.0));

  CHECK(throwsWith([&] { inkSpotsCheck(F, inner, 0.3, 10); }, "subset"));
  CHECK(throwsWith([&] { inkSpotsCheck(empty, F, 1.5, 10); }, "delta"));
}

TEST_CASE("ink spots: pinholes are caught by the hypothesis audit") {
  Lattice l = Lattice::centeredBox(2, 1.05, 65);
  // E = F = B_1 minus single-node holes on a 0.2-spaced grid: any medium sampled ball
  // is E-dense yet contains a hole, so it cannot be inside F.
  auto isHole = [&](const Point& p) {
    const double g = 0.2;
    double rx = std::abs(p[0] - g * std::round(p[0] / g));
    double ry = std::abs(p[1] - g * std::round(p[1] / g));
    return rx < l.spacing / 2 && ry < l.spacing / 2;
  };
  MaskSet holed = MaskSet::fromPredicate(l, [&](const Point& p) {
    return norm(p, 2) < 1.0 && !isHole(p);
  });
  InkSpotsReport r = inkSpotsCheck(holed, holed, 0.1, 400);
  CHECK(r.hypothesisViolations > 0);
  CHECK(!r.pass);
}

TEST_CASE("ink spots: adversarial growth families satisfy the conclusion") {
  Lattice l = Lattice::centeredBox(2, 1.05, 65);
  double prevMarginSum = -1e300;
  for (double delta : {0.1, 0.2, 0.4}) {
    double marginSum = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      MaskSet E, F;
      buildInkSpotsInstance(l, seed, delta, E, F);
      REQUIRE(E.isSubsetOf(F));
      InkSpotsReport r = inkSpotsCheck(E, F, delta, 60, seed);
      CHECK(r.conclusion);
      marginSum += r.conclusionMargin;
    }
    // Conclusion margin grows with delta on this family.
    CHECK(marginSum > prevMarginSum);
    prevMarginSum = marginSum;
  }
}
