#include "puccilab/generate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "puccilab/parallel.hpp"

namespace puccilab {

BarrierParams::BarrierParams(double pExp, double amplitude, const EllipticityParams& e)
    : p(pExp), M(amplitude), params(e) {
  if (!(pExp > 0) || !std::isfinite(pExp)) fail("barrier: p must be positive");
  if (!(amplitude >= 0) || !std::isfinite(amplitude))
    fail("barrier: M must be nonnegative");
}

namespace {

void checkBarrierCondition(const BarrierParams& bp, int dim) {
  const double margin = bp.params.lambda * (bp.p + 1.0) -
                        bp.params.Lambda * (static_cast<double>(dim) + 1.0);
  if (margin < 1.0)
    fail("barrier: need lambda (p+1) - Lambda (d+1) >= 1");
}

double pointRadius(const Point& x, int dim) {
  double r2 = 0;
  for (int k = 0; k < dim; ++k) r2 += x[k] * x[k];
  return std::sqrt(r2);
}

}  // namespace

double BarrierOracle::value(const Point& x) const {
  const double r = std::max(pointRadius(x, dim), floorRadius);
  return scale * (std::pow(r, -bp.p) - shift);
}

Point BarrierOracle::gradientAt(const Point& x) const {
  const double r = pointRadius(x, dim);
  if (r < floorRadius) fail("barrier oracle: inside the masked core");
  const double coef = scale * -bp.p * std::pow(r, -bp.p - 2.0);
  Point g{};
  for (int k = 0; k < dim; ++k) g[k] = coef * x[k];
  return g;
}

SymMat BarrierOracle::hessianAt(const Point& x) const {
  const double r = pointRadius(x, dim);
  if (r < floorRadius) fail("barrier oracle: inside the masked core");
  // D^2 r^{-p} = p r^{-p-2} ((p+2) xhat xhat^T - I)
  const double coef = scale * bp.p * std::pow(r, -bp.p - 2.0);
  SymMat h(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const double rank1 = (bp.p + 2.0) * (x[i] / r) * (x[j] / r);
      h.at(i, j) = coef * (rank1 - (i == j ? 1.0 : 0.0));
    }
  return h;
}

double BarrierOracle::mMinusValue(const Point& x) const {
  const double r = pointRadius(x, dim);
  if (r < floorRadius) fail("barrier oracle: inside the masked core");
  const double l = bp.params.lambda, L = bp.params.Lambda;
  const double rp2 = std::pow(r, -bp.p - 2.0);
  return scale * (l * bp.p * (bp.p + 1.0) * rp2 -
                  L * (static_cast<double>(dim) - 1.0) * bp.p * rp2 -
                  L * bp.p * std::pow(r, -bp.p - 1.0));
}

BarrierOracle barrierOracle(const BarrierParams& bp, const Lattice& lat) {
  checkBarrierCondition(bp, lat.dim);
  BarrierOracle o;
  o.bp = bp;
  o.dim = lat.dim;
  o.floorRadius = 4.0 * lat.spacing;
  return o;
}

GridFunction barrier(const BarrierParams& bp, const Lattice& lat) {
  const BarrierOracle o = barrierOracle(bp, lat);
  return GridFunction(lat, [&](const Point& x) { return o.value(x); });
}

ScaledBarrier scaledBarrier(const BarrierParams& bp, const Lattice& lat) {
  checkBarrierCondition(bp, lat.dim);
  const int d = lat.dim;
  const double gamma = bp.params.gamma;
  for (int k = 0; k < d; ++k) {
    const double lo = lat.origin[k];
    const double hi = lat.origin[k] +
                      lat.spacing * static_cast<double>(lat.shape[k] - 1);
    if (std::max(std::abs(lo), std::abs(hi)) < 2.0)
      fail("scaledBarrier: lattice does not cover B_2");
  }

  // Unscaled profile S = (|x|^{-p} - 2^{-p}) / (2 4^p); every certified condition is
  // linear in the amplitude, so grid minima of S, |grad S| and mMinus(S) give the
  // smallest admissible M directly.
  BarrierOracle s = barrierOracle(bp, lat);
  s.shift = std::pow(2.0, -bp.p);
  s.scale = 1.0 / (2.0 * std::pow(4.0, bp.p));

  double minS = 1e300, minGradB1 = 1e300, minGradAnn = 1e300, minOp = 1e300;
  const std::int64_t n = lat.nodeCount();
  for (std::int64_t f = 0; f < n; ++f) {
    const Point x = lat.point(lat.unflatten(f));
    const double r = pointRadius(x, d);
    if (r < 1.0 && r >= s.floorRadius) {
      minS = std::min(minS, s.value(x));
      minGradB1 = std::min(minGradB1, pointRadius(s.gradientAt(x), d));
    }
    // On coarse grids the masked core can poke past r = 1/4; certify the annulus
    // from the cap rim outward (the cap plateau carries no derivative information).
    if (r >= std::max(0.25, s.floorRadius) && r <= 2.0) {
      minGradAnn = std::min(minGradAnn, pointRadius(s.gradientAt(x), d));
      minOp = std::min(minOp, s.mMinusValue(x));
    }
  }
  if (minS >= 1e300 || minOp >= 1e300)
    fail("scaledBarrier: lattice is too coarse to certify the regions");
  if (minOp <= 0) fail("scaledBarrier: annulus operator values are not positive");

  double M = bp.M;
  if (M == 0) {
    double need = 1.0 / minS;                       // B >= 1 on B_1
    need = std::max(need, gamma / minGradB1);       // |grad B| >= gamma on B_1
    need = std::max(need, gamma / minGradAnn);      // cutoff feasible on the annulus
    need = std::max(need, 2.0 / minOp);             // mMinus(B) >= 2 on the annulus
    M = 1.1 * need;
  }

  ScaledBarrier out;
  out.M = M;
  out.minOnB1 = M * minS;
  out.minGradOnB1 = M * minGradB1;
  out.annulusMargin = M * minOp;
  if (out.minOnB1 < 1.0) fail("scaledBarrier: min over B_1 is below 1");
  if (out.minGradOnB1 < gamma)
    fail("scaledBarrier: gradient over B_1 drops below gamma");
  if (M * minGradAnn < gamma)
    fail("scaledBarrier: gradient over the annulus drops below gamma");
  if (out.annulusMargin < 2.0) fail("scaledBarrier: annulus margin falls below 2");

  out.oracle = s;
  out.oracle.scale = M * s.scale;
  out.fn = GridFunction(lat, [&](const Point& x) { return out.oracle.value(x); });
  return out;
}

std::vector<Index> defaultDirections(int dim) {
  std::vector<Index> dirs;
  for (int k = 0; k < dim; ++k) {
    Index v{};
    v[k] = 1;
    dirs.push_back(v);
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      Index v{};
      v[i] = 1;
      v[j] = 1;
      dirs.push_back(v);
      v[j] = -1;
      dirs.push_back(v);
    }
  return dirs;
}

namespace {

struct Frame {
  std::vector<int> members;  // indices into the direction list
};

// Greedy partition of the direction family into mutually orthogonal frames; for the
// default 2-d family this yields {e0, e1} and the two diagonals, the two orthogonal
// frames of the wide-stencil Pucci discretization.
std::vector<Frame> buildFrames(const std::vector<Index>& dirs, int dim) {
  std::vector<char> used(dirs.size(), 0);
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (used[i]) continue;
    Frame fr;
    fr.members.push_back(static_cast<int>(i));
    used[i] = 1;
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      if (used[j]) continue;
      bool ortho = true;
      for (int m : fr.members) {
        long long dp = 0;
        for (int k = 0; k < dim; ++k)
          dp += static_cast<long long>(dirs[static_cast<std::size_t>(m)][k]) *
                dirs[j][k];
        if (dp != 0) {
          ortho = false;
          break;
        }
      }
      if (ortho) {
        fr.members.push_back(static_cast<int>(j));
        used[j] = 1;
      }
    }
    frames.push_back(fr);
  }
  return frames;
}

struct StencilDir {
  std::int64_t strideOffset = 0;
  double invH2Len = 0;  // 1 / (h^2 |v|^2)
};

SolveResult solveImpl(const GridFunction& f, const GridFunction& g,
                      const EllipticityParams& p, const SolveConfig& cfg,
                      const std::vector<double>& init, bool mustConverge = true) {
  const Lattice& lat = f.lat;
  const int d = lat.dim;
  const double h = lat.spacing;
  if (!(g.lat == lat)) fail("solvePucci: f and g must share a lattice");
  if (!(cfg.tol > 0)) fail("solvePucci: tol must be positive");
  if (cfg.maxIters < 1) fail("solvePucci: maxIters must be positive");

  std::vector<Index> dirs = cfg.directions;
  if (dirs.empty()) dirs = defaultDirections(d);
  const double bound =
      h * h / (2.0 * p.Lambda * static_cast<double>(d) *
               static_cast<double>(dirs.size()));
  double dt = cfg.dt;
  if (dt == 0) dt = 0.95 * bound;
  if (dt > bound * (1.0 + 1e-12))
    fail("solvePucci: dt violates the monotonicity bound");
  if (!(dt > 0)) fail("solvePucci: dt must be positive");

  int margin = 1;
  for (const Index& v : dirs)
    for (int k = 0; k < d; ++k) margin = std::max(margin, std::abs(v[k]));

  const std::vector<Frame> frames = buildFrames(dirs, d);
  std::vector<StencilDir> st(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    long long len2 = 0;
    std::int64_t off = 0, stride = 1;
    for (int k = d - 1; k >= 0; --k) {
      off += stride * dirs[i][k];
      stride *= lat.shape[k];
    }
    for (int k = 0; k < d; ++k)
      len2 += static_cast<long long>(dirs[i][k]) * dirs[i][k];
    st[i].strideOffset = off;
    st[i].invH2Len = 1.0 / (h * h * static_cast<double>(len2));
  }
  std::int64_t axisStride[kMaxDim];
  {
    std::int64_t stride = 1;
    for (int k = d - 1; k >= 0; --k) {
      axisStride[k] = stride;
      stride *= lat.shape[k];
    }
  }

  const std::int64_t n = lat.nodeCount();
  std::vector<std::int64_t> interiorNodes;
  for (std::int64_t fl = 0; fl < n; ++fl)
    if (lat.interior(lat.unflatten(fl), margin)) interiorNodes.push_back(fl);

  std::vector<double> cur = init.empty() ? g.values : init;
  // Boundary condition: every non-interior node is pinned to g.
  {
    std::vector<char> isInterior(static_cast<std::size_t>(n), 0);
    for (std::int64_t fl : interiorNodes) isInterior[static_cast<std::size_t>(fl)] = 1;
    for (std::int64_t fl = 0; fl < n; ++fl)
      if (!isInterior[static_cast<std::size_t>(fl)])
        cur[static_cast<std::size_t>(fl)] = g.values[static_cast<std::size_t>(fl)];
  }
  std::vector<double> next = cur;
  std::vector<double> absRes(interiorNodes.size(), 0.0);

  const double lam = p.lambda, Lam = p.Lambda;
  const std::int64_t m = static_cast<std::int64_t>(interiorNodes.size());
  if (m == 0) fail("solvePucci: lattice has no interior nodes at this stencil width");

  std::vector<double> history;
  double residual = 0;
  std::int64_t iter = 0;
  for (; iter < cfg.maxIters; ++iter) {
    parallelFor(m, [&](std::int64_t idx) {
      const std::int64_t fl = interiorNodes[static_cast<std::size_t>(idx)];
      const double uc = cur[static_cast<std::size_t>(fl)];
      double best = 1e300;
      for (const Frame& fr : frames) {
        double acc = 0;
        for (int mi : fr.members) {
          const StencilDir& sd = st[static_cast<std::size_t>(mi)];
          const double d2 =
              (cur[static_cast<std::size_t>(fl + sd.strideOffset)] - 2.0 * uc +
               cur[static_cast<std::size_t>(fl - sd.strideOffset)]) *
              sd.invH2Len;
          acc += d2 > 0 ? lam * d2 : Lam * d2;
        }
        best = std::min(best, acc);
      }
      double g2 = 0;
      for (int k = 0; k < d; ++k) {
        const double um = cur[static_cast<std::size_t>(fl - axisStride[k])];
        const double up = cur[static_cast<std::size_t>(fl + axisStride[k])];
        const double one = std::max((uc - um) / h, (uc - up) / h);
        const double gk = std::max(one, 0.0);
        g2 += gk * gk;
      }
      const double op = best - Lam * std::sqrt(g2);
      const double r = op - f.values[static_cast<std::size_t>(fl)];
      next[static_cast<std::size_t>(fl)] = uc + dt * r;
      absRes[static_cast<std::size_t>(idx)] = std::abs(r);
    });
    residual = 0;
    for (double r : absRes) residual = std::max(residual, r);
    history.push_back(residual);
    std::swap(cur, next);
    if (residual <= cfg.tol) {
      ++iter;
      break;
    }
  }
  if (residual > cfg.tol && mustConverge) {
    std::ostringstream msg;
    msg << "solvePucci: no convergence after " << cfg.maxIters
        << " iterations; residual history:";
    const std::size_t hn = history.size();
    for (int i = 0; i < 8; ++i) {
      const std::size_t at = hn * static_cast<std::size_t>(i) / 8;
      msg << " " << formatG(history[at]);
    }
    msg << " " << formatG(history.back());
    fail(msg.str());
  }

  SolveResult out{GridFunction(lat, cur), residual, iter};
  return out;
}

}  // namespace

SolveResult solvePucci(const GridFunction& f, const GridFunction& g,
                       const EllipticityParams& p, const SolveConfig& cfg) {
  return solveImpl(f, g, p, cfg, {});
}

SolveResult solveCascade(const std::function<double(const Point&)>& f,
                         const std::function<double(const Point&)>& g,
                         const EllipticityParams& p, const SolveConfig& cfg,
                         const Lattice& lat, int minNodes) {
  // Lattice pyramid: halve each axis while it stays factor-of-two nested and at
  // least minNodes wide.
  std::vector<Lattice> levels{lat};
  for (;;) {
    const Lattice& fine = levels.back();
    bool ok = true;
    Index coarseShape{};
    for (int k = 0; k < fine.dim; ++k) {
      if ((fine.shape[k] - 1) % 2 != 0) ok = false;
      coarseShape[k] = (fine.shape[k] - 1) / 2 + 1;
      if (coarseShape[k] < minNodes) ok = false;
    }
    if (!ok) break;
    levels.emplace_back(fine.dim, coarseShape, fine.origin, fine.spacing * 2.0);
  }

  // d-linear prolongation: even fine indices copy the coarse node, odd ones
  // average the adjacent coarse nodes per axis.
  const auto prolong = [](const Lattice& coarse, const Lattice& fineL,
                          const std::vector<double>& v) {
    std::vector<double> out(static_cast<std::size_t>(fineL.nodeCount()), 0.0);
    const std::int64_t fn = fineL.nodeCount();
    for (std::int64_t fl2 = 0; fl2 < fn; ++fl2) {
      const Index fi = fineL.unflatten(fl2);
      double acc = 0;
      int combos = 1;
      int oddAxes[kMaxDim], nOdd = 0;
      Index base{};
      for (int k = 0; k < fineL.dim; ++k) {
        base[k] = fi[k] / 2;
        if (fi[k] % 2 != 0) {
          oddAxes[nOdd++] = k;
          combos *= 2;
        }
      }
      for (int c2 = 0; c2 < combos; ++c2) {
        Index ci = base;
        for (int b = 0; b < nOdd; ++b)
          if (c2 & (1 << b)) ci[oddAxes[b]] += 1;
        acc += v[static_cast<std::size_t>(coarse.flatten(ci))];
      }
      out[static_cast<std::size_t>(fl2)] = acc / static_cast<double>(combos);
    }
    return out;
  };

  // The upwind gradient makes consecutive-level solutions differ by O(h), so a
  // plainly prolonged guess leaves a smooth residual that costs ~1/(dt lambda_1)
  // sweeps per e-fold to relax away -- prohibitive at fine spacing, where only
  // the fast rough transients are affordable.  Two remedies: coarse levels solve
  // to tighter tolerances under a node-sweep budget (coarse e-folds are cheap,
  // and only the finest level's tolerance is contractual), and each handoff
  // Richardson-extrapolates the two levels beneath it, 1.5 u_c - 0.5 P(u_cc),
  // cancelling the O(h) term of the initialization error.
  constexpr double kNodeSweepBudget = 1.2e8;
  const bool trace = std::getenv("PUCCILAB_CASCADE_TRACE") != nullptr;

  std::vector<double> init;         // initial guess for the level being solved
  std::vector<double> grandparent;  // pure prolongation of the level-(li+2) solution
  SolveResult res;
  for (std::size_t li = levels.size(); li-- > 0;) {
    const Lattice& l = levels[li];
    const GridFunction fl(l, f);
    const GridFunction gl(l, g);
    SolveConfig c = cfg;
    c.dt = 0;  // per-level monotone step
    c.tol = cfg.tol * std::pow(4.0, -static_cast<double>(li));
    if (li > 0) {
      const double cap = kNodeSweepBudget / static_cast<double>(l.nodeCount());
      c.maxIters = std::min(cfg.maxIters, std::max<std::int64_t>(
                                              20000, static_cast<std::int64_t>(cap)));
    }
    const auto t0 = std::chrono::steady_clock::now();
    res = solveImpl(fl, gl, p, c, init, /*mustConverge=*/li == 0);
    if (trace) {
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      std::fprintf(stderr, "cascade level %lld  sweeps %lld  residual %.3g  %.0f ms\n",
                   static_cast<long long>(l.shape[0]),
                   static_cast<long long>(res.iterations), res.finalResidual, ms);
    }
    if (li == 0) break;
    const Lattice& fineL = levels[li - 1];
    std::vector<double> blend = res.u.values;
    if (!grandparent.empty())
      for (std::size_t i = 0; i < blend.size(); ++i)
        blend[i] = 1.5 * blend[i] - 0.5 * grandparent[i];
    init = prolong(l, fineL, blend);
    grandparent = prolong(l, fineL, res.u.values);
  }
  return res;
}

GridFunction perturbLowGradient(const GridFunction& u, const EllipticityParams& p,
                                double budget, std::uint64_t seed,
                                const Region& region, double c0, double* etaOut) {
  const Lattice& lat = u.lat;
  const int d = lat.dim;
  const double h = lat.spacing;
  if (!(budget > 0) || !std::isfinite(budget))
    fail("perturb: budget must be positive");
  if (!(c0 > 0)) fail("perturb: c0 must be positive");
  if (etaOut) *etaOut = 0;

  // Low-gradient interior nodes inside the region are the only admissible bump
  // centers; with gamma = 0 the set is empty by convention.
  std::vector<Index> lowNodes;
  if (p.gamma > 0) {
    forEachNodeIn(lat, region, [&](const Index& ix, std::int64_t) {
      if (!lat.interior(ix, 1)) return;
      const Point grad = gradient(u, ix);
      double g2 = 0;
      for (int k = 0; k < d; ++k) g2 += grad[k] * grad[k];
      if (std::sqrt(g2) < 0.5 * p.gamma) lowNodes.push_back(ix);
    });
  }
  if (lowNodes.empty()) return u;

  const double rho = 10.0 * h;
  Rng rng(seed, 0x7065727455ULL);
  std::vector<Point> centers;
  for (int attempt = 0; attempt < 64 && centers.size() < 8; ++attempt) {
    const std::size_t pick = static_cast<std::size_t>(
        rng.uniformInt(0, static_cast<int>(lowNodes.size()) - 1));
    const Point cand = lat.point(lowNodes[pick]);
    bool clear = true;
    for (const Point& c : centers) {
      double d2 = 0;
      for (int k = 0; k < d; ++k) d2 += (cand[k] - c[k]) * (cand[k] - c[k]);
      if (std::sqrt(d2) < 2.0 * rho) {
        clear = false;
        break;
      }
    }
    if (clear) centers.push_back(cand);
  }

  std::vector<double> bump(static_cast<std::size_t>(lat.nodeCount()), 0.0);
  const std::int64_t n = lat.nodeCount();
  parallelFor(n, [&](std::int64_t fl) {
    const Point x = lat.point(lat.unflatten(fl));
    double acc = 0;
    for (const Point& c : centers) {
      double r2 = 0;
      for (int k = 0; k < d; ++k) r2 += (x[k] - c[k]) * (x[k] - c[k]);
      const double t = 1.0 - r2 / (rho * rho);
      if (t > 0) acc += t * t * t;
    }
    bump[static_cast<std::size_t>(fl)] = acc;
  });

  auto passes = [&](double eta) {
    std::vector<double> vals = u.values;
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += eta * bump[i];
    const GridFunction v(lat, vals);
    return checkTwoSided(v, 0.0, p, region, c0).pass;
  };

  double lo = 0.0, hi = budget;
  if (passes(budget)) {
    lo = budget;
  } else {
    for (int i = 0; i < 20; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (passes(mid))
        lo = mid;
      else
        hi = mid;
    }
  }
  if (lo == 0.0) return u;
  if (etaOut) *etaOut = lo;
  std::vector<double> vals = u.values;
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += lo * bump[i];
  return GridFunction(lat, vals);
}

std::string provenanceToString(const Provenance& prov) {
  std::ostringstream out;
  for (const auto& [k, v] : prov) {
    if (k.empty() || k.find('=') != std::string::npos ||
        k.find('\n') != std::string::npos)
      fail("provenance: invalid key '" + k + "'");
    if (v.find('\n') != std::string::npos)
      fail("provenance: value for '" + k + "' contains a newline");
    out << k << "=" << v << "\n";
  }
  return out.str();
}

Provenance provenanceFromString(const std::string& text, const std::string& name) {
  Provenance prov;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("provenance: " + name + ": line " + std::to_string(lineNo) +
           ": missing '='");
    prov.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return prov;
}

void writeProvenance(const Provenance& prov, const std::string& path) {
  const std::string text = provenanceToString(prov);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("provenance: cannot open " + path);
  out << text;
  if (!out) fail("provenance: write failed for " + path);
}

Provenance readProvenance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("provenance: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return provenanceFromString(buf.str(), path);
}

std::optional<std::string> provenanceGet(const Provenance& prov,
                                         const std::string& key) {
  for (const auto& [k, v] : prov)
    if (k == key) return v;
  return std::nullopt;
}

std::string valuesHash(const GridFunction& u) {
  return hexHash(hashValues(u.values));
}

}  // namespace puccilab
