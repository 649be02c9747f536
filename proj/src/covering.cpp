#include "puccilab/covering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "puccilab/parallel.hpp"
#include "puccilab/regularize.hpp"

namespace puccilab {

MaskSet::MaskSet(const Lattice& l, std::vector<char> bits, bool open)
    : lat(l), membership(std::move(bits)), openness(open) {
  if (std::int64_t(membership.size()) != lat.nodeCount())
    fail("mask: bit count does not match lattice");
  for (char b : membership)
    if (b != 0 && b != 1) fail("mask: membership bits must be 0 or 1");
}

MaskSet MaskSet::fromRegion(const Lattice& l, const Region& region) {
  std::vector<char> bits(l.nodeCount(), 0);
  parallelFor(l.nodeCount(), [&](std::int64_t f) {
    bits[f] = region.contains(l.point(f), l.dim) ? 1 : 0;
  });
  return MaskSet(l, std::move(bits), true);
}

MaskSet MaskSet::fromPredicate(const Lattice& l,
                               const std::function<bool(const Point&)>& pred) {
  std::vector<char> bits(l.nodeCount(), 0);
  for (std::int64_t f = 0; f < l.nodeCount(); ++f) bits[f] = pred(l.point(f)) ? 1 : 0;
  return MaskSet(l, std::move(bits), false);
}

std::int64_t MaskSet::count() const {
  std::int64_t n = 0;
  for (char b : membership) n += b;
  return n;
}

double MaskSet::measure() const {
  return double(count()) * std::pow(lat.spacing, lat.dim);
}

bool MaskSet::isSubsetOf(const MaskSet& o) const {
  if (!(lat == o.lat)) fail("mask: subset test requires a common lattice");
  for (std::size_t k = 0; k < membership.size(); ++k)
    if (membership[k] && !o.membership[k]) return false;
  return true;
}

std::int64_t nodesInBall(const Lattice& l, const Ball& b) {
  std::int64_t n = 0;
  forEachNodeIn(l, Region::ball(b.center, b.radius),
                [&](const Index&, std::int64_t) { ++n; });
  return n;
}

std::int64_t maskNodesInBall(const MaskSet& m, const Ball& b) {
  std::int64_t n = 0;
  forEachNodeIn(m.lat, Region::ball(b.center, b.radius),
                [&](const Index&, std::int64_t f) { n += m.membership[f]; });
  return n;
}

bool ballWithinMask(const MaskSet& m, const Ball& b) {
  bool ok = true;
  forEachNodeIn(m.lat, Region::ball(b.center, b.radius),
                [&](const Index&, std::int64_t f) { ok = ok && m.membership[f] != 0; });
  return ok;
}

BallCover vitaliSelect(const std::vector<Ball>& balls) {
  if (balls.empty()) fail("vitali: need at least one ball");
  for (const Ball& b : balls) {
    if (!(b.radius > 0) || !std::isfinite(b.radius)) fail("vitali: radii must be positive");
    for (double c : b.center)
      if (!std::isfinite(c)) fail("vitali: centers must be finite");
  }

  std::vector<int> order(balls.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (balls[a].radius != balls[b].radius) return balls[a].radius > balls[b].radius;
    return balls[a].center < balls[b].center;
  });

  BallCover cover;
  cover.disjoint = true;
  cover.dilationFactor = 5.0;
  cover.coveredBy.assign(balls.size(), -1);
  for (int idx : order) {
    const Ball& b = balls[idx];
    int blocker = -1;
    for (std::size_t k = 0; k < cover.balls.size(); ++k) {
      const Ball& kept = cover.balls[k];
      if (dist(b.center, kept.center, kMaxDim) <= b.radius + kept.radius) {
        blocker = int(k);
        break;
      }
    }
    if (blocker < 0) {
      cover.coveredBy[idx] = int(cover.balls.size());
      cover.balls.push_back(b);
    } else {
      // The blocker was selected earlier, hence has radius >= b.radius, and its
      // 5-dilation swallows b (3-dilation already would).
      cover.coveredBy[idx] = blocker;
    }
  }
  return cover;
}

InkSpotsReport inkSpotsCheck(const MaskSet& E, const MaskSet& F, double delta,
                             int ballSamples, std::uint64_t seed) {
  if (!(delta > 0 && delta < 1)) fail("ink spots: delta must lie in (0,1)");
  if (ballSamples < 1) fail("ink spots: need a positive sample count");
  if (!(E.lat == F.lat)) fail("ink spots: masks must share a lattice");
  if (!E.isSubsetOf(F)) fail("ink spots: E must be a subset of F");
  const Lattice& l = E.lat;
  MaskSet unit = MaskSet::fromRegion(l, Region::ball(makePoint(0, 0, 0, 0), 1.0));
  if (!F.isSubsetOf(unit)) fail("ink spots: F must be a subset of the unit ball");

  InkSpotsReport rep;
  rep.eMeasure = E.measure();
  rep.fMeasure = F.measure();
  rep.unitMeasure = unit.measure();
  double cInv = 1.0;
  for (int k = 0; k < l.dim; ++k) cInv *= 5.0;
  rep.c = 1.0 / cInv;
  rep.smallness = rep.eMeasure <= (1.0 - delta) * rep.unitMeasure;
  rep.conclusionMargin = (1.0 - rep.c * delta) * rep.fMeasure - rep.eMeasure;
  rep.conclusion = rep.conclusionMargin >= 0;

  // Stratified seeded audit: radii 4h, 8h, 16h, ... capped at 0.9, centers uniform in
  // the concentric ball that keeps B inside B_1.
  std::vector<double> radii;
  for (double r = 4.0 * l.spacing; r <= 0.9; r *= 2.0) radii.push_back(r);
  if (radii.empty()) radii.push_back(4.0 * l.spacing);

  struct Outcome {
    char dense = 0, violation = 0;
  };
  std::vector<Outcome> outcomes(ballSamples);
  parallelFor(std::int64_t(ballSamples), [&](std::int64_t s) {
    Rng rng(seed, std::uint64_t(s));
    const double r = radii[std::size_t(s) % radii.size()];
    Point c{};
    const double span = 1.0 - r;
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (int k = 0; k < l.dim; ++k) c[k] = rng.uniform(-span, span);
      if (norm(c, l.dim) <= span) break;
      if (attempt == 63)
        for (int k = 0; k < l.dim; ++k) c[k] = 0;
    }
    Ball b{c, r};
    const std::int64_t total = nodesInBall(l, b);
    if (total == 0) return;
    const std::int64_t inE = maskNodesInBall(E, b);
    if (double(inE) > (1.0 - delta) * double(total)) {
      outcomes[s].dense = 1;
      if (!ballWithinMask(F, b)) outcomes[s].violation = 1;
    }
  });
  rep.samplesTested = ballSamples;
  for (const Outcome& o : outcomes) {
    rep.denseSamples += o.dense;
    rep.hypothesisViolations += o.violation;
  }
  rep.pass = rep.hypothesisViolations == 0 && rep.smallness && rep.conclusion;
  return rep;
}

std::vector<double> squaredDistanceToComplement(const MaskSet& F) {
  const Lattice& l = F.lat;
  std::vector<double> v(F.membership.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = F.membership[k] ? 1e18 : 0.0;
  // Weight 1/(2 eps) = 1 turns the Moreau envelope into the squared distance
  // transform: envelope(x) = min over complement nodes y of |x - y|^2.
  InfConvResult conv = infConvolve(GridFunction(l, std::move(v)), 0.5);
  return std::move(conv.smoothed.values);
}

Ball maximalBallAt(const Index& x, const MaskSet& F) {
  const Lattice& l = F.lat;
  if (!l.inBounds(x)) fail("maximal ball: node out of bounds");
  if (!F.at(l.flatten(x))) fail("maximal ball: node is not a member of the mask");

  const double h = l.spacing;
  // Cap for the no-complement case: nothing meaningful beyond the lattice diameter.
  double span = 0;
  for (int k = 0; k < l.dim; ++k) {
    const double side = double(l.shape[k] - 1) * h;
    span += side * side;
  }
  const double capSq = 4.0 * span;

  std::vector<double> distSq = squaredDistanceToComplement(F);
  const Point px = l.point(x);

  double bestR = -1;
  std::int64_t bestC = -1;
  for (std::int64_t f = 0; f < l.nodeCount(); ++f) {
    if (!F.at(f)) continue;
    const double dsq = std::min(distSq[f], capSq);
    // Largest half-offset radius h(k + 1/2) with radius^2 <= dsq. Members always
    // clear k = 0: the nearest distinct node sits at distance >= h.
    const std::int64_t k = std::int64_t(std::floor(std::sqrt(dsq) / h - 0.5));
    if (k < 0) continue;
    const double r = h * (double(k) + 0.5);
    if (r <= bestR) continue;  // strict improvement keeps the lexicographic first
    const double dx = dist(px, l.point(f), l.dim);
    if (dx * dx < r * r) {
      bestR = r;
      bestC = f;
    }
  }
  if (bestC < 0) fail("maximal ball: no admissible ball found");  // unreachable for members
  return Ball{l.point(bestC), bestR};
}

// --- RLE serialization ---------------------------------------------------------------

std::string maskToString(const MaskSet& m) {
  const Lattice& l = m.lat;
  std::ostringstream os;
  os << "gfn 1\n";
  os << "dim " << l.dim << "\n";
  os << "shape";
  for (int k = 0; k < l.dim; ++k) os << ' ' << l.shape[k];
  os << "\norigin";
  for (int k = 0; k < l.dim; ++k) os << ' ' << formatHex(l.origin[k]);
  os << "\nspacing " << formatHex(l.spacing) << "\n";
  os << "mask rle\n";

  // Alternating run lengths over the flat row-major order, OFF count first.
  std::vector<std::int64_t> runs;
  char state = 0;
  std::int64_t len = 0;
  for (char b : m.membership) {
    if (b == state) {
      ++len;
    } else {
      runs.push_back(len);
      state = b;
      len = 1;
    }
  }
  runs.push_back(len);
  for (std::size_t k = 0; k < runs.size(); ++k)
    os << runs[k] << ((k % 16 == 15 || k + 1 == runs.size()) ? '\n' : ' ');
  return os.str();
}

namespace {

struct MaskLineReader {
  std::istringstream in;
  std::string name;
  int lineNo = 0;

  MaskLineReader(const std::string& text, const std::string& n) : in(text), name(n) {}

  [[noreturn]] void die(const std::string& what) const {
    fail("mask: " + name + ": line " + std::to_string(lineNo) + ": " + what);
  }

  std::string next() {
    std::string line;
    if (!std::getline(in, line)) {
      ++lineNo;
      die("unexpected end of input");
    }
    ++lineNo;
    return line;
  }
};

}  // namespace

MaskSet maskFromString(const std::string& text, const std::string& name) {
  MaskLineReader r(text, name);

  {
    std::istringstream ls(r.next());
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != "gfn" || version != 1)
      r.die("expected header 'gfn 1'");
  }
  int dim = 0;
  {
    std::istringstream ls(r.next());
    std::string key;
    if (!(ls >> key >> dim) || key != "dim" || dim < 1 || dim > kMaxDim)
      r.die("expected 'dim <1.." + std::to_string(kMaxDim) + ">'");
  }
  Index shape{};
  {
    std::istringstream ls(r.next());
    std::string key;
    if (!(ls >> key) || key != "shape") r.die("expected 'shape ...'");
    for (int k = 0; k < dim; ++k)
      if (!(ls >> shape[k])) r.die("shape needs one extent per axis");
    std::string extra;
    if (ls >> extra) r.die("trailing tokens after shape");
  }
  Point origin{};
  {
    std::istringstream ls(r.next());
    std::string key;
    if (!(ls >> key) || key != "origin") r.die("expected 'origin ...'");
    for (int k = 0; k < dim; ++k) {
      std::string tok;
      if (!(ls >> tok)) r.die("origin needs one coordinate per axis");
      origin[k] = std::strtod(tok.c_str(), nullptr);
    }
  }
  double spacing = 0;
  {
    std::istringstream ls(r.next());
    std::string key, tok;
    if (!(ls >> key >> tok) || key != "spacing") r.die("expected 'spacing <h>'");
    spacing = std::strtod(tok.c_str(), nullptr);
    if (!(spacing > 0)) r.die("spacing must be positive");
  }
  {
    std::istringstream ls(r.next());
    std::string a, b;
    if (!(ls >> a >> b) || a != "mask" || b != "rle") r.die("expected 'mask rle'");
  }

  Lattice lat(dim, shape, origin, spacing);
  const std::int64_t n = lat.nodeCount();
  std::vector<char> bits(n);
  std::int64_t filled = 0;
  char state = 0;
  bool first = true;
  while (filled < n) {
    std::string line = r.next();
    std::istringstream ls(line);
    std::int64_t run;
    while (ls >> run) {
      if (run < 0 || (!first && run == 0)) r.die("run lengths must be positive");
      if (filled + run > n) r.die("run lengths exceed the node count");
      for (std::int64_t k = 0; k < run; ++k) bits[filled + k] = state;
      filled += run;
      state = state ? 0 : 1;
      first = false;
    }
    std::string rest;
    if (ls.clear(), ls >> rest) r.die("malformed run length '" + rest + "'");
  }
  return MaskSet(lat, std::move(bits));
}

void writeMask(const MaskSet& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("mask: cannot open '" + path + "' for writing");
  os << maskToString(m);
  if (!os) fail("mask: write failed for '" + path + "'");
}

MaskSet readMask(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("mask: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return maskFromString(buf.str(), path);
}

}  // namespace puccilab
