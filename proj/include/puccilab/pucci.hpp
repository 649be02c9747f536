#pragma once

#include <string>
#include <vector>

#include "puccilab/common.hpp"
#include "puccilab/lattice.hpp"

namespace puccilab {

// Ellipticity bounds plus the gradient cutoff: the extremal operators are only
// informative where |grad| >= gamma; below the cutoff M+ is +inf and M- is -inf.
struct EllipticityParams {
  double lambda = 1.0;
  double Lambda = 1.0;
  double gamma = 0.0;

  EllipticityParams() = default;
  EllipticityParams(double lam, double Lam, double gam);
};

// Tagged extended-real operator value. Infinities are represented by the tag, never
// stored as floating-point infinities.
struct OperatorValue {
  enum class Tag { Finite, PlusInf, MinusInf } tag = Tag::Finite;
  double v = 0;

  static OperatorValue finite(double x) { return {Tag::Finite, x}; }
  static OperatorValue plusInf() { return {Tag::PlusInf, 0}; }
  static OperatorValue minusInf() { return {Tag::MinusInf, 0}; }
  bool isFinite() const { return tag == Tag::Finite; }
};

// Cutoff maximal operator:
//   Lambda * tr(H+) - lambda * tr(H-) + Lambda * |g|   when |g| >= gamma, else +inf.
OperatorValue mPlus(const SymMat& hess, const Point& grad, const EllipticityParams& p);

// Cutoff minimal operator:
//   lambda * tr(H+) - Lambda * tr(H-) - Lambda * |g|   when |g| >= gamma, else -inf.
OperatorValue mMinus(const SymMat& hess, const Point& grad, const EllipticityParams& p);

// Evidence from a certification sweep. Nodes whose gradient falls inside the guard
// band [gamma, gamma + max(10h, 1e-8)) are treated as unconstrained but counted.
struct HypothesisReport {
  std::int64_t checkedNodes = 0;  // interior nodes of the region that were visited
  std::int64_t activeNodes = 0;   // |grad| >= gamma
  std::int64_t bandNodes = 0;     // gamma <= |grad| < gamma + guard band
  double maxSuperResidual = 0;    // max (mMinus - rhs)+ over constrained nodes
  double maxSubResidual = 0;      // max (-rhs - mPlus)+ over constrained nodes
  bool pass = false;
  double tolerance = 0;

  std::string csvRow() const;  // nodes,active,maxSuperResidual,maxSubResidual,pass,tol
};

inline double gradientGuardBand(double spacing) {
  return std::max(10.0 * spacing, 1e-8);
}

// Certify mMinus(D2u, grad u) <= rhs (resp. mPlus >= -rhs) at every interior node of
// `region` whose gradient clears the cutoff plus the guard band. The region must sit
// interior to the lattice with a one-node margin.
HypothesisReport checkSupersolution(const GridFunction& u, double rhs,
                                    const EllipticityParams& p, const Region& region,
                                    double tol);
HypothesisReport checkSubsolution(const GridFunction& u, double rhs,
                                  const EllipticityParams& p, const Region& region,
                                  double tol);

// Both sides at once (residuals land in one report).
HypothesisReport checkTwoSided(const GridFunction& u, double rhs,
                               const EllipticityParams& p, const Region& region,
                               double tol);

// v(x) = K * u(x0 + r x), resampled by exact node alignment only (never
// interpolated). Requires 0 < r <= 1 and K >= 1, so a certification of u at level A
// carries to v at level r^2*K*A with gradient threshold r*K*gamma.
struct ScaledFunction {
  GridFunction fn;
  double thresholdFactor = 1;  // r*K
  double rhsFactor = 1;        // r^2*K
};

ScaledFunction scaleTransform(const GridFunction& u, const Point& x0, double r, double K);
ScaledFunction scaleTransform(const GridFunction& u, const Point& x0, double r, double K,
                              const Lattice& target);

// Check mMinusVal <= tr(A*hess) + b.grad <= mPlusVal for an admissible linear
// operator: lambda I <= A <= Lambda I (symmetric) and |b| <= Lambda. Requires
// |grad| >= gamma. Errors on inadmissible (A, b).
bool linearOperatorSandwich(const SymMat& hess, const Point& grad,
                            const EllipticityParams& p, const SymMat& A, const Point& b);

}  // namespace puccilab
