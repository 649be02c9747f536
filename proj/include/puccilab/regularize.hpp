#pragma once

#include <vector>

#include "puccilab/lattice.hpp"

namespace puccilab {

// Result of an inf-convolution sweep. `smoothed` is the Moreau envelope
//   w(x) = min_y [ v(y) + |y - x|^2 / (2 eps) ]
// minimized over every lattice node y; `argmin` holds one minimizing y per node
// (lexicographically smallest among ties); `maxDisplacement` is the largest |y_x - x|.
struct InfConvResult {
  GridFunction smoothed;
  std::vector<Index> argmin;
  double epsilon = 0;
  double maxDisplacement = 0;
};

// Exact separable lower envelope: one exhaustive quadratic scan per axis, axes
// processed last to first so per-pass first-wins ties compose to the global
// lexicographic argmin. The computed minimum is bit-identical to the brute-force
// accumulation  acc = v[y]; for a = dim-1 .. 0: acc += (h*(x_a - y_a))^2 / (2 eps).
InfConvResult infConvolve(const GridFunction& v, double epsilon);

// Truncate at 2M (v = min(u, 2M)) before convolving; with u >= 0 this caps the
// envelope displacement at 2*sqrt(2*(2M)*eps) up to one cell.
InfConvResult clampAboveAndConvolve(const GridFunction& u, double M, double epsilon);

// Directional second-difference certificate of semi-concavity:
//   delta2_e f(x) = (f(x+e) - 2 f(x) + f(x-e)) / |h e|^2  <=  bound + tol
// over every interior node and every axis or diagonal direction e in {-1,0,1}^d.
// `worst` is the largest directional second difference seen.
struct SemiConcavityReport {
  bool pass = false;
  double worst = 0;
};

SemiConcavityReport semiConcavityCertificate(const GridFunction& f, double bound,
                                             double tol = 0);

// Level-set monotonicity of the envelope family: for a strictly descending epsilon
// list, {v_eps1 > M} must be contained in {v_eps2 > M} whenever eps1 > eps2, with
// node-counting measures increasing toward |{min(u, 2M) > M}|.
struct LevelSetReport {
  std::vector<double> epsilons;
  std::vector<double> measures;  // |{v_eps > M}|, one per epsilon
  double targetMeasure = 0;      // |{min(u, 2M) > M}|
  bool nested = false;           // adjacent containments all hold node-wise
  bool monotone = false;         // measures nondecreasing along the list
};

LevelSetReport nestedLevelSets(const GridFunction& u, const std::vector<double>& epsilons,
                               double M);

}  // namespace puccilab
