#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "puccilab/lattice.hpp"
#include "puccilab/pucci.hpp"

namespace puccilab {

// Barrier family b(x) = |x|^{-p}. The ellipticity condition
// lambda (p+1) - Lambda (d+1) >= 1 makes b a strict subsolution of the minimal
// operator on 1/4 <= |x| <= 2; it is checked where the dimension is known.
struct BarrierParams {
  double p = 4.0;
  double M = 0.0;  // scaled-barrier amplitude; 0 selects the automatic rule
  EllipticityParams params;

  BarrierParams() = default;
  BarrierParams(double pExp, double amplitude, const EllipticityParams& e);
};

// Closed forms for b and its derivatives; the grid sampling caps the singular core
// |x| < floorRadius (4h) at the rim value so those nodes exist but are never part
// of any checked annulus.
struct BarrierOracle {
  BarrierParams bp;
  int dim = 2;
  double floorRadius = 0;
  double scale = 1.0;  // value multiplier (positive homogeneity covers mMinus too)
  double shift = 0.0;  // constant subtracted from r^{-p} before scaling

  double value(const Point& x) const;
  Point gradientAt(const Point& x) const;
  SymMat hessianAt(const Point& x) const;
  // lambda p (p+1) r^{-p-2} - Lambda (d-1) p r^{-p-2} - Lambda p r^{-p-1}
  double mMinusValue(const Point& x) const;
};

GridFunction barrier(const BarrierParams& bp, const Lattice& lat);
BarrierOracle barrierOracle(const BarrierParams& bp, const Lattice& lat);

// Scaled barrier B = M (|x|^{-p} - 2^{-p}) / (2 4^p), certified on the grid to
// satisfy B >= 1 on B_1, |grad B| >= gamma on B_1, and mMinus(B) >= 2 on the
// annulus B_2 \ B_{1/4} (analytic derivatives at the nodes). With bp.M == 0 the
// amplitude is the smallest admissible value times a 1.1 safety factor.
struct ScaledBarrier {
  GridFunction fn;
  double M = 0;
  double minOnB1 = 0;
  double minGradOnB1 = 0;
  double annulusMargin = 0;  // min mMinus over the annulus nodes
  BarrierOracle oracle;      // oracle for B itself (scaled units)
};

ScaledBarrier scaledBarrier(const BarrierParams& bp, const Lattice& lat);

struct SolveConfig {
  double dt = 0.0;  // 0 selects 0.95 x the monotonicity bound
  std::int64_t maxIters = 200000;
  double tol = 1e-3;
  std::vector<Index> directions;  // empty selects axes plus 2-combination diagonals
};

struct SolveResult {
  GridFunction u;
  double finalResidual = 0;
  std::int64_t iterations = 0;
};

std::vector<Index> defaultDirections(int dim);

// Damped Jacobi relaxation u <- u + dt (Mminus_h(u) - f) with the box boundary held
// at g. Mminus_h is the wide-stencil operator: minimum over orthogonal direction
// frames of sum_i [lambda (d2_i u)+ - Lambda (d2_i u)-] minus Lambda |grad u| with
// the upwind (Rouy-Tourin) gradient. gamma is treated as 0 here: a gamma = 0
// supersolution is automatically one for any positive threshold.
SolveResult solvePucci(const GridFunction& f, const GridFunction& g,
                       const EllipticityParams& p, const SolveConfig& cfg);

// Coarse-to-fine cascade of solvePucci calls: nested lattices down to ~minNodes per
// axis, Richardson-extrapolated d-linear prolongation between levels, coarse levels
// solved to 4x tighter tolerance per coarsening under a node-sweep budget. Only the
// finest level's tolerance is contractual; the returned result is the finest level's.
SolveResult solveCascade(const std::function<double(const Point&)>& f,
                         const std::function<double(const Point&)>& g,
                         const EllipticityParams& p, const SolveConfig& cfg,
                         const Lattice& lat, int minNodes = 33);

// Largest eta in [0, budget] (20-step bisection) for which u plus eta times a sum of
// smooth bumps seeded into the low-gradient set {|grad u| < gamma/2} still passes
// the two-sided hypothesis check at level c0 over region. Returns u unchanged when
// no low-gradient node exists. etaOut (optional) receives the accepted eta.
GridFunction perturbLowGradient(const GridFunction& u, const EllipticityParams& p,
                                double budget, std::uint64_t seed,
                                const Region& region, double c0,
                                double* etaOut = nullptr);

// Sidecar provenance: ordered key=value lines. values_hash pairs a sidecar with the
// exact bits of its .gfn payload.
using Provenance = std::vector<std::pair<std::string, std::string>>;

std::string provenanceToString(const Provenance& prov);
Provenance provenanceFromString(const std::string& text,
                                const std::string& name = "<string>");
void writeProvenance(const Provenance& prov, const std::string& path);
Provenance readProvenance(const std::string& path);
std::optional<std::string> provenanceGet(const Provenance& prov,
                                         const std::string& key);
std::string valuesHash(const GridFunction& u);

}  // namespace puccilab
