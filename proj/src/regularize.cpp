#include "puccilab/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "puccilab/parallel.hpp"

namespace puccilab {

InfConvResult infConvolve(const GridFunction& v, double epsilon) {
  if (!(epsilon > 0) || !std::isfinite(epsilon))
    fail("infConvolve: epsilon must be positive and finite");
  const Lattice& l = v.lat;
  const double h = l.spacing;
  const double wgt = 1.0 / (2.0 * epsilon);
  const std::int64_t n = l.nodeCount();

  std::vector<double> cur = v.values;
  std::vector<double> next(n);
  std::vector<std::int64_t> arg(n), argNext(n);
  for (std::int64_t f = 0; f < n; ++f) arg[f] = f;

  // Axis d-1 first, axis 0 last: the outermost minimum then runs over axis 0 and the
  // per-pass first-wins tie rule composes to a lexicographic global argmin. Values are
  // unaffected by the nesting because adding the next axis term is monotone.
  for (int axis = l.dim - 1; axis >= 0; --axis) {
    std::int64_t stride = 1;
    for (int k = l.dim - 1; k > axis; --k) stride *= l.shape[k];
    const int m = l.shape[axis];
    const std::int64_t lines = n / m;
    parallelFor(lines, [&](std::int64_t line) {
      const std::int64_t inner = line % stride;
      const std::int64_t base = (line / stride) * (stride * m) + inner;
      for (int xi = 0; xi < m; ++xi) {
        double best = std::numeric_limits<double>::infinity();
        int bestY = 0;
        for (int yi = 0; yi < m; ++yi) {
          const double t = h * double(xi - yi);
          const double cand = cur[base + yi * stride] + t * t * wgt;
          if (cand < best) {
            best = cand;
            bestY = yi;
          }
        }
        next[base + std::int64_t(xi) * stride] = best;
        argNext[base + std::int64_t(xi) * stride] = arg[base + std::int64_t(bestY) * stride];
      }
    });
    cur.swap(next);
    arg.swap(argNext);
  }

  InfConvResult out;
  out.epsilon = epsilon;
  out.smoothed = GridFunction(l, std::move(cur));
  out.argmin.resize(n);
  for (std::int64_t f = 0; f < n; ++f) out.argmin[f] = l.unflatten(arg[f]);
  for (std::int64_t f = 0; f < n; ++f) {
    const double d = dist(l.point(out.argmin[f]), l.point(f), l.dim);
    out.maxDisplacement = std::max(out.maxDisplacement, d);
  }
  return out;
}

InfConvResult clampAboveAndConvolve(const GridFunction& u, double M, double epsilon) {
  if (!(M > 0)) fail("clampAboveAndConvolve: M must be positive");
  std::vector<double> clipped(u.values.size());
  const double cap = 2.0 * M;
  parallelFor(std::int64_t(clipped.size()),
              [&](std::int64_t f) { clipped[f] = std::min(u.values[f], cap); });
  return infConvolve(GridFunction(u.lat, std::move(clipped)), epsilon);
}

namespace {

// Axis and diagonal offsets in {-1,0,1}^d, one representative per +/- pair.
std::vector<Index> secondDifferenceDirections(int dim) {
  std::vector<Index> dirs;
  Index e{};
  int count = 1;
  for (int k = 0; k < dim; ++k) count *= 3;
  for (int code = 0; code < count; ++code) {
    int c = code;
    bool zero = true;
    int firstNonZero = 0;
    for (int k = 0; k < dim; ++k) {
      e[k] = (c % 3) - 1;
      c /= 3;
      if (e[k] != 0 && zero) {
        zero = false;
        firstNonZero = e[k];
      }
    }
    if (zero || firstNonZero < 0) continue;  // skip 0 and keep one sign per pair
    dirs.push_back(e);
  }
  return dirs;
}

}  // namespace

SemiConcavityReport semiConcavityCertificate(const GridFunction& f, double bound,
                                             double tol) {
  const Lattice& l = f.lat;
  const std::vector<Index> dirs = secondDifferenceDirections(l.dim);
  const std::int64_t n = l.nodeCount();
  std::vector<double> nodeWorst(n, -std::numeric_limits<double>::infinity());
  parallelFor(n, [&](std::int64_t fl) {
    const Index i = l.unflatten(fl);
    if (!l.interior(i)) return;
    double w = -std::numeric_limits<double>::infinity();
    for (const Index& e : dirs) {
      Index ip = i, im = i;
      double e2 = 0;
      for (int k = 0; k < l.dim; ++k) {
        ip[k] += e[k];
        im[k] -= e[k];
        e2 += double(e[k]) * double(e[k]);
      }
      const double num = f.at(ip) - 2.0 * f.values[fl] + f.at(im);
      w = std::max(w, num / (l.spacing * l.spacing * e2));
    }
    nodeWorst[fl] = w;
  });

  SemiConcavityReport rep;
  rep.worst = -std::numeric_limits<double>::infinity();
  for (std::int64_t fl = 0; fl < n; ++fl) rep.worst = std::max(rep.worst, nodeWorst[fl]);
  rep.pass = rep.worst <= bound + tol;
  return rep;
}

LevelSetReport nestedLevelSets(const GridFunction& u, const std::vector<double>& epsilons,
                               double M) {
  if (epsilons.empty()) fail("nestedLevelSets: need at least one epsilon");
  for (std::size_t k = 1; k < epsilons.size(); ++k)
    if (!(epsilons[k] < epsilons[k - 1]))
      fail("nestedLevelSets: epsilons must be strictly descending");

  const Lattice& l = u.lat;
  const std::int64_t n = l.nodeCount();
  const double cellVol = std::pow(l.spacing, l.dim);

  LevelSetReport rep;
  rep.epsilons = epsilons;
  rep.nested = true;
  rep.monotone = true;

  std::int64_t targetCount = 0;
  const double cap = 2.0 * M;
  for (std::int64_t f = 0; f < n; ++f)
    if (std::min(u.values[f], cap) > M) ++targetCount;
  rep.targetMeasure = double(targetCount) * cellVol;

  std::vector<char> prevAbove;
  for (double eps : epsilons) {
    InfConvResult conv = clampAboveAndConvolve(u, M, eps);
    std::vector<char> above(n);
    std::int64_t count = 0;
    for (std::int64_t f = 0; f < n; ++f) {
      above[f] = conv.smoothed.values[f] > M ? 1 : 0;
      count += above[f];
    }
    if (!prevAbove.empty()) {
      for (std::int64_t f = 0; f < n; ++f)
        if (prevAbove[f] && !above[f]) rep.nested = false;
      if (!rep.measures.empty() && double(count) * cellVol < rep.measures.back())
        rep.monotone = false;
    }
    rep.measures.push_back(double(count) * cellVol);
    prevAbove.swap(above);
  }
  return rep;
}

}  // namespace puccilab
