#include "puccilab/pucci.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "puccilab/parallel.hpp"

namespace puccilab {

EllipticityParams::EllipticityParams(double lam, double Lam, double gam)
    : lambda(lam), Lambda(Lam), gamma(gam) {
  if (!(0 < lambda && lambda <= Lambda)) fail("ellipticity: need 0 < lambda <= Lambda");
  if (!(gamma >= 0)) fail("ellipticity: need gamma >= 0");
}

namespace {

// Positive/negative parts of the spectrum: tr(H+) and tr(H-), both nonnegative.
void tracePartsOf(const SymMat& hess, double& trPlus, double& trMinus) {
  trPlus = 0;
  trMinus = 0;
  for (double e : eigenvaluesSym(hess)) {
    if (e > 0)
      trPlus += e;
    else
      trMinus -= e;
  }
}

}  // namespace

OperatorValue mPlus(const SymMat& hess, const Point& grad, const EllipticityParams& p) {
  const double g = norm(grad, hess.dim);
  if (g < p.gamma) return OperatorValue::plusInf();
  double trPlus, trMinus;
  tracePartsOf(hess, trPlus, trMinus);
  return OperatorValue::finite(p.Lambda * trPlus - p.lambda * trMinus + p.Lambda * g);
}

OperatorValue mMinus(const SymMat& hess, const Point& grad, const EllipticityParams& p) {
  const double g = norm(grad, hess.dim);
  if (g < p.gamma) return OperatorValue::minusInf();
  double trPlus, trMinus;
  tracePartsOf(hess, trPlus, trMinus);
  return OperatorValue::finite(p.lambda * trPlus - p.Lambda * trMinus - p.Lambda * g);
}

std::string HypothesisReport::csvRow() const {
  std::ostringstream os;
  os << checkedNodes << ',' << activeNodes << ',' << formatG(maxSuperResidual) << ','
     << formatG(maxSubResidual) << ',' << (pass ? 1 : 0) << ',' << formatG(tolerance);
  return os.str();
}

namespace {

enum class Side { Super, Sub, Both };

HypothesisReport runCheck(const GridFunction& u, double rhs, const EllipticityParams& p,
                          const Region& region, double tol, Side side) {
  const Lattice& l = u.lat;
  if (regionInteriorMargin(l, region) < 1)
    fail("hypothesis check: region must be interior to the lattice with a one-node margin");

  // Gather region nodes once; derivatives and residuals are computed per node in a
  // parallel kernel, reductions afterwards in index order.
  std::vector<Index> nodes;
  forEachNodeIn(l, region, [&](const Index& i, std::int64_t) { nodes.push_back(i); });

  const double band = gradientGuardBand(l.spacing);
  struct Sample {
    double superRes = 0, subRes = 0;
    bool active = false, inBand = false;
  };
  std::vector<Sample> samples(nodes.size());
  parallelFor(std::int64_t(nodes.size()), [&](std::int64_t k) {
    const Index& i = nodes[k];
    const Point g = gradient(u, i);
    const SymMat H = hessian(u, i);
    const double gn = norm(g, l.dim);
    Sample s;
    s.active = gn >= p.gamma;
    s.inBand = s.active && gn < p.gamma + band;
    if (s.active && !s.inBand) {
      if (side == Side::Super || side == Side::Both) {
        OperatorValue mv = mMinus(H, g, p);
        s.superRes = std::max(0.0, mv.v - rhs);
      }
      if (side == Side::Sub || side == Side::Both) {
        OperatorValue pv = mPlus(H, g, p);
        s.subRes = std::max(0.0, -rhs - pv.v);
      }
    }
    samples[k] = s;
  });

  HypothesisReport rep;
  rep.tolerance = tol;
  rep.checkedNodes = std::int64_t(nodes.size());
  for (const Sample& s : samples) {
    if (s.active) ++rep.activeNodes;
    if (s.inBand) ++rep.bandNodes;
    rep.maxSuperResidual = std::max(rep.maxSuperResidual, s.superRes);
    rep.maxSubResidual = std::max(rep.maxSubResidual, s.subRes);
  }
  rep.pass = rep.maxSuperResidual <= tol && rep.maxSubResidual <= tol;
  return rep;
}

}  // namespace

HypothesisReport checkSupersolution(const GridFunction& u, double rhs,
                                    const EllipticityParams& p, const Region& region,
                                    double tol) {
  return runCheck(u, rhs, p, region, tol, Side::Super);
}

HypothesisReport checkSubsolution(const GridFunction& u, double rhs,
                                  const EllipticityParams& p, const Region& region,
                                  double tol) {
  return runCheck(u, rhs, p, region, tol, Side::Sub);
}

HypothesisReport checkTwoSided(const GridFunction& u, double rhs,
                               const EllipticityParams& p, const Region& region,
                               double tol) {
  return runCheck(u, rhs, p, region, tol, Side::Both);
}

ScaledFunction scaleTransform(const GridFunction& u, const Point& x0, double r, double K) {
  const Lattice& l = u.lat;
  Point origin{};
  for (int k = 0; k < l.dim; ++k) origin[k] = (l.origin[k] - x0[k]) / r;
  Lattice target(l.dim, l.shape, origin, l.spacing / r);
  return scaleTransform(u, x0, r, K, target);
}

ScaledFunction scaleTransform(const GridFunction& u, const Point& x0, double r, double K,
                              const Lattice& target) {
  if (!(r > 0 && r <= 1)) fail("scaleTransform: need 0 < r <= 1");
  if (!(K >= 1)) fail("scaleTransform: need K >= 1");
  const Lattice& l = u.lat;
  if (target.dim != l.dim) fail("scaleTransform: dimension mismatch");

  std::vector<double> vals(target.nodeCount());
  const double alignTol = 1e-9 * l.spacing;
  const std::int64_t n = target.nodeCount();
  std::vector<char> bad(n, 0);
  parallelFor(n, [&](std::int64_t f) {
    const Point xt = target.point(f);
    Point s{};
    for (int k = 0; k < l.dim; ++k) s[k] = x0[k] + r * xt[k];
    auto src = l.nearestNode(s);
    if (!src) {
      bad[f] = 1;  // image point escapes u's lattice
      return;
    }
    const Point sp = l.point(*src);
    for (int k = 0; k < l.dim; ++k)
      if (std::abs(sp[k] - s[k]) > alignTol) {
        bad[f] = 2;
        return;
      }
    vals[f] = K * u.values[l.flatten(*src)];
  });
  for (std::int64_t f = 0; f < n; ++f) {
    if (bad[f] == 1)
      fail("scaleTransform: image lattice does not fit inside the source lattice");
    if (bad[f] == 2) fail("scaleTransform: alignment required");
  }

  ScaledFunction out;
  out.fn = GridFunction(target, std::move(vals));
  out.thresholdFactor = r * K;
  out.rhsFactor = r * r * K;
  return out;
}

bool linearOperatorSandwich(const SymMat& hess, const Point& grad,
                            const EllipticityParams& p, const SymMat& A, const Point& b) {
  const int d = hess.dim;
  if (A.dim != d) fail("sandwich: matrix dimension mismatch");
  const double slack = 1e-10 * std::max(1.0, A.maxAbs());
  std::vector<double> ev = eigenvaluesSym(A);  // errors if A is asymmetric
  if (ev.front() < p.lambda - slack || ev.back() > p.Lambda + slack)
    fail("sandwich: A is outside the ellipticity class");
  if (norm(b, d) > p.Lambda + 1e-10 * std::max(1.0, p.Lambda))
    fail("sandwich: drift exceeds Lambda");
  if (norm(grad, d) < p.gamma) fail("sandwich: gradient below cutoff");

  double lin = dot(b, grad, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) lin += A.at(i, j) * hess.at(i, j);

  const OperatorValue lo = mMinus(hess, grad, p);
  const OperatorValue hi = mPlus(hess, grad, p);
  const double tol = 1e-10 * std::max({1.0, std::abs(lo.v), std::abs(hi.v), std::abs(lin)});
  return lo.v - tol <= lin && lin <= hi.v + tol;
}

}  // namespace puccilab
