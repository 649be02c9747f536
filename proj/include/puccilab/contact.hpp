#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "puccilab/lattice.hpp"

namespace puccilab {

// Sliding cusp phi(z) = -amplitude * |z|^exponent with phi(0) = 0, together with the
// threshold constant M used to carve the vertex set {u > M}. The defaults encode the
// canonical cusp (10, 1/2) and M = 2 + 5*sqrt(2), chosen so that a vertex whose
// search region dips to 1 has contact value at most M - 1 = 1 + 5*sqrt(2).
struct CuspParams {
  double amplitude = 10.0;
  double exponent = 0.5;
  double bigM = 2.0 + 5.0 * 1.4142135623730951;

  CuspParams() = default;
  CuspParams(double a, double beta, double M);
};

double cuspValue(const CuspParams& c, const Point& z, int dim);
// Gradient and Hessian of phi away from the singularity (|z| = 0 is an error):
//   grad = -a b |z|^(b-2) z,   hess = -a b |z|^(b-2) (I + (b-2) zhat zhat^T).
Point cuspGradient(const CuspParams& c, const Point& z, int dim);
SymMat cuspHessian(const CuspParams& c, const Point& z, int dim);
// Smallest |grad phi| over 0 < |z| <= radius: a b radius^(b-1); an admissible gradient
// cutoff gamma must stay below it for the sliding argument to see active nodes.
double minCuspGradientNorm(const CuspParams& c, double radius);
// Invert grad phi: the vertex x with cuspGradient(y - x) = grad. Errors on grad = 0.
Point vertexFromContact(const CuspParams& c, const Point& y, const Point& grad, int dim);

struct ContactRecord {
  Index vertex{};        // x, the cusp vertex
  Index y{};             // global discrete argmin of u(z) - phi(z - x)
  double qValue = 0;     // u(y) - phi(y - x)
  Point gradAtY{};       // central-difference gradient of u at y (valid records)
  double separation = 0; // |y - x|
  double jacobianNorm = 0;
  bool jacobianSet = false;
  bool boundaryContact = false;  // argmin pressed against the search-region edge
  bool degenerate = false;       // y == x (separation 0)
};

// Exhaustive slide over the search region: row-major scan, strict-< updates, so ties
// resolve to the lexicographically smallest node. A record is flagged boundaryContact
// when the argmin has a Moore neighbor outside the region (the discrete argmin
// inequalities that the contact machinery needs then fail to certify).
ContactRecord slideCusp(const GridFunction& u, const Index& vertex, const CuspParams& c,
                        const Region& search);

// Same contract with the paraboloid phi(z) = -a |z|^2 / 2.
ContactRecord slideParaboloid(const GridFunction& u, const Index& vertex, double opening,
                              const Region& search);

struct ContactSet {
  std::vector<ContactRecord> records;  // valid (non-boundary) records, vertex order
  std::int64_t uCount = 0;             // |{u > M} cap vertexRegion| in nodes
  std::int64_t tCount = 0;             // distinct contact nodes among records
  double uMeasure = 0;                 // uCount * h^d
  double tMeasure = 0;                 // tCount * h^d
  std::int64_t boundaryCount = 0;      // slides discarded for boundary contact
  std::int64_t degenerateCount = 0;    // records with separation 0
  std::int64_t thresholdViolations = 0;  // contact values above M - 1
  double maxContactValue = 0;            // max u(y) over records
  std::int64_t sharedContactConflicts = 0;  // same y, different gradAtY bits
  double jacobianBoundObserved = 0;  // max |Dm| over records with separation >= 3h
};

// Slide from every node of U = {u > M} cap vertexRegion. Threshold containment
// (contact values <= M - 1) is reported, not enforced: it is a theorem only under
// the measure lemma's hypotheses, which callers may deliberately violate.
ContactSet buildContactSet(const GridFunction& u, const CuspParams& c,
                           const Region& vertexRegion, const Region& searchRegion,
                           double M);

// Contact-map derivative estimate Dm(y) = I - (D^2 phi(y-x))^{-1} D^2 u(y); returns
// its operator norm and stores it on the record. Requires separation >= 3h ("singular
// separation" otherwise): closer to the cusp tip the discrete Hessian is meaningless.
double contactMapJacobian(const GridFunction& u, ContactRecord& rec, const CuspParams& c);

// One row per record: vertex and contact indices, q, |grad u(y)|, separation,
// jacobian, flags. Versioned header comment, stable column order.
std::string contactSetCsv(const ContactSet& set, int dim);

}  // namespace puccilab
