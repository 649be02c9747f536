#include "puccilab/contact.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

#include "puccilab/parallel.hpp"

namespace puccilab {

CuspParams::CuspParams(double a, double beta, double M)
    : amplitude(a), exponent(beta), bigM(M) {
  if (!(a > 0) || !std::isfinite(a)) fail("cusp: amplitude must be positive");
  if (!(beta > 0) || !(beta < 1)) fail("cusp: exponent must lie in (0, 1)");
  // The vertex threshold has to clear the worst contact value 1 + a (1/2)^beta that a
  // unit dip inside B_{1/4} can produce, with one unit to spare.
  if (!(M > 1.0 + a * std::pow(0.5, beta)) || !std::isfinite(M))
    fail("cusp: M must exceed 1 + amplitude * (1/2)^exponent");
}

namespace {

// |z|^beta with a sqrt-only path for the canonical beta = 1/2: (z.z)^(1/4) is two
// square roots, noticeably cheaper than pow inside the O(|U| * |search|) slide loops.
double normPow(double r2, double beta) {
  if (beta == 0.5) return std::sqrt(std::sqrt(r2));
  return std::pow(std::sqrt(r2), beta);
}

double radiusSq(const Point& z, int dim) {
  double r2 = 0;
  for (int k = 0; k < dim; ++k) r2 += z[k] * z[k];
  return r2;
}

}  // namespace

double cuspValue(const CuspParams& c, const Point& z, int dim) {
  const double r2 = radiusSq(z, dim);
  if (r2 == 0) return 0.0;
  return -c.amplitude * normPow(r2, c.exponent);
}

Point cuspGradient(const CuspParams& c, const Point& z, int dim) {
  const double r2 = radiusSq(z, dim);
  if (r2 == 0) fail("cusp: gradient undefined at the vertex");
  const double s = std::sqrt(r2);
  const double coef = -c.amplitude * c.exponent * std::pow(s, c.exponent - 2.0);
  Point g{};
  for (int k = 0; k < dim; ++k) g[k] = coef * z[k];
  return g;
}

SymMat cuspHessian(const CuspParams& c, const Point& z, int dim) {
  const double r2 = radiusSq(z, dim);
  if (r2 == 0) fail("cusp: hessian undefined at the vertex");
  const double s = std::sqrt(r2);
  const double coef = -c.amplitude * c.exponent * std::pow(s, c.exponent - 2.0);
  SymMat h(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const double rank1 = (c.exponent - 2.0) * (z[i] / s) * (z[j] / s);
      h.at(i, j) = coef * ((i == j ? 1.0 : 0.0) + rank1);
    }
  return h;
}

double minCuspGradientNorm(const CuspParams& c, double radius) {
  if (!(radius > 0)) fail("cusp: radius must be positive");
  // |grad phi| = a b s^(b-1) is decreasing in s for b < 1, so the minimum over the
  // punctured ball sits on the outer rim.
  return c.amplitude * c.exponent * std::pow(radius, c.exponent - 1.0);
}

Point vertexFromContact(const CuspParams& c, const Point& y, const Point& grad, int dim) {
  const double g2 = radiusSq(grad, dim);
  if (g2 == 0) fail("cusp: cannot invert a zero contact gradient");
  const double gnorm = std::sqrt(g2);
  // a b s^(b-1) = |g|  =>  s = (a b / |g|)^(1/(1-b)); grad is antiparallel to z = y - x.
  const double s =
      std::pow(c.amplitude * c.exponent / gnorm, 1.0 / (1.0 - c.exponent));
  Point x{};
  for (int k = 0; k < dim; ++k) x[k] = y[k] + (grad[k] / gnorm) * s;
  return x;
}

namespace {

enum class Shape { Cusp, Paraboloid };

struct SlideProblem {
  Shape shape;
  CuspParams cusp;
  double opening = 1.0;  // paraboloid only
};

double profileValue(const SlideProblem& p, double r2) {
  if (p.shape == Shape::Paraboloid) return -0.5 * p.opening * r2;
  if (r2 == 0) return 0.0;
  return -p.cusp.amplitude * normPow(r2, p.cusp.exponent);
}

// Core scan. Assumes u >= 0 on the region and an interior vertex were already
// validated by the caller; strict-< updates on a row-major traversal give the
// lexicographically smallest argmin on ties.
ContactRecord slideImpl(const GridFunction& u, const Index& vertex,
                        const SlideProblem& prob, const Region& search) {
  const Lattice& lat = u.lat;
  const int d = lat.dim;
  const double h = lat.spacing;

  ContactRecord rec;
  rec.vertex = vertex;

  double best = std::numeric_limits<double>::infinity();
  Index bestIdx{};
  bool found = false;
  forEachNodeIn(lat, search, [&](const Index& z, std::int64_t flat) {
    double r2 = 0;
    for (int k = 0; k < d; ++k) {
      const double dz = h * static_cast<double>(z[k] - vertex[k]);
      r2 += dz * dz;
    }
    const double val = u.values[flat] - profileValue(prob, r2);
    if (val < best) {
      best = val;
      bestIdx = z;
      found = true;
    }
  });
  if (!found) fail("slide: search region contains no nodes");

  rec.y = bestIdx;
  rec.qValue = best;
  double sep2 = 0;
  for (int k = 0; k < d; ++k) {
    const double dz = h * static_cast<double>(bestIdx[k] - vertex[k]);
    sep2 += dz * dz;
  }
  rec.separation = std::sqrt(sep2);
  rec.degenerate = (rec.separation == 0);

  // The discrete contact inequalities (q <= u(z) - phi(z - x) for neighbors z of y)
  // certify gradient matching and Hessian domination only when the full Moore
  // neighborhood of y lies inside the search region; otherwise the argmin may just be
  // pressed against the edge, and the record is unusable.
  Index nb{};
  int offsets[kMaxDim];
  std::int64_t total = 1;
  for (int k = 0; k < d; ++k) total *= 3;
  for (std::int64_t code = 0; code < total; ++code) {
    std::int64_t c2 = code;
    bool allZero = true;
    for (int k = 0; k < d; ++k) {
      offsets[k] = static_cast<int>(c2 % 3) - 1;
      c2 /= 3;
      if (offsets[k] != 0) allZero = false;
    }
    if (allZero) continue;
    for (int k = 0; k < d; ++k) nb[k] = bestIdx[k] + offsets[k];
    if (!lat.inBounds(nb) || !search.contains(lat.point(nb), d)) {
      rec.boundaryContact = true;
      break;
    }
  }

  if (!rec.boundaryContact) {
    rec.gradAtY = gradient(u, rec.y);
  }
  return rec;
}

void validateSlideInputs(const GridFunction& u, const Index& vertex,
                         const Region& search) {
  const Lattice& lat = u.lat;
  if (!lat.inBounds(vertex)) fail("slide: vertex is out of bounds");
  if (!lat.interior(vertex, 1)) fail("slide: vertex must be an interior node");
  forEachNodeIn(lat, search, [&](const Index&, std::int64_t flat) {
    if (u.values[flat] < 0) fail("slide: u must be nonnegative on the search region");
  });
}

}  // namespace

ContactRecord slideCusp(const GridFunction& u, const Index& vertex, const CuspParams& c,
                        const Region& search) {
  validateSlideInputs(u, vertex, search);
  SlideProblem p{Shape::Cusp, c, 0.0};
  return slideImpl(u, vertex, p, search);
}

ContactRecord slideParaboloid(const GridFunction& u, const Index& vertex, double opening,
                              const Region& search) {
  if (!(opening > 0) || !std::isfinite(opening))
    fail("slideParaboloid: opening must be positive");
  validateSlideInputs(u, vertex, search);
  SlideProblem p{Shape::Paraboloid, CuspParams{}, opening};
  return slideImpl(u, vertex, p, search);
}

ContactSet buildContactSet(const GridFunction& u, const CuspParams& c,
                           const Region& vertexRegion, const Region& searchRegion,
                           double M) {
  const Lattice& lat = u.lat;
  const int d = lat.dim;
  const double h = lat.spacing;
  if (!(M > 0) || !std::isfinite(M)) fail("contact set: M must be positive");
  if (regionInteriorMargin(lat, vertexRegion) < 1)
    fail("contact set: vertex region must be interior to the lattice");
  forEachNodeIn(lat, searchRegion, [&](const Index&, std::int64_t flat) {
    if (u.values[flat] < 0)
      fail("contact set: u must be nonnegative on the search region");
  });

  std::vector<Index> vertices;
  forEachNodeIn(lat, vertexRegion, [&](const Index& ix, std::int64_t flat) {
    if (u.values[flat] > M) vertices.push_back(ix);
  });

  ContactSet set;
  set.uCount = static_cast<std::int64_t>(vertices.size());
  double hd = 1;
  for (int k = 0; k < d; ++k) hd *= h;
  set.uMeasure = static_cast<double>(set.uCount) * hd;
  if (vertices.empty()) return set;

  SlideProblem prob{Shape::Cusp, c, 0.0};
  std::vector<ContactRecord> raw(vertices.size());
  parallelFor(static_cast<std::int64_t>(vertices.size()), [&](std::int64_t i) {
    raw[static_cast<std::size_t>(i)] =
        slideImpl(u, vertices[static_cast<std::size_t>(i)], prob, searchRegion);
  });

  // Serial aggregation in vertex order keeps the report deterministic.
  std::vector<std::int64_t> contacts;
  std::map<std::int64_t, Point> firstGrad;
  for (ContactRecord& rec : raw) {
    if (rec.boundaryContact) {
      ++set.boundaryCount;
      continue;
    }
    if (rec.degenerate) ++set.degenerateCount;
    const std::int64_t flat = lat.flatten(rec.y);
    contacts.push_back(flat);
    const double uy = u.values[flat];
    set.maxContactValue = std::max(set.maxContactValue, uy);
    if (uy > M - 1.0 + 1e-12) ++set.thresholdViolations;
    auto [it, inserted] = firstGrad.emplace(flat, rec.gradAtY);
    if (!inserted &&
        std::memcmp(it->second.data(), rec.gradAtY.data(), sizeof(Point)) != 0)
      ++set.sharedContactConflicts;
    if (rec.separation >= 3.0 * h) {
      rec.jacobianNorm = contactMapJacobian(u, rec, c);
      set.jacobianBoundObserved = std::max(set.jacobianBoundObserved, rec.jacobianNorm);
    }
    set.records.push_back(rec);
  }
  std::sort(contacts.begin(), contacts.end());
  contacts.erase(std::unique(contacts.begin(), contacts.end()), contacts.end());
  set.tCount = static_cast<std::int64_t>(contacts.size());
  set.tMeasure = static_cast<double>(set.tCount) * hd;
  return set;
}

double contactMapJacobian(const GridFunction& u, ContactRecord& rec,
                          const CuspParams& c) {
  const Lattice& lat = u.lat;
  const int d = lat.dim;
  const double h = lat.spacing;

  Point z{};
  double r2 = 0;
  for (int k = 0; k < d; ++k) {
    z[k] = h * static_cast<double>(rec.y[k] - rec.vertex[k]);
    r2 += z[k] * z[k];
  }
  const double s = std::sqrt(r2);
  if (s < 3.0 * h) fail("contact jacobian: singular separation");
  if (!lat.interior(rec.y, 1)) fail("contact jacobian: contact node is not interior");

  const SymMat hu = hessian(u, rec.y);

  // (D^2 phi)^{-1} = (1/coef) (I - (b-2)/(b-1) zhat zhat^T) with
  // coef = -a b s^(b-2); the rank-one update is exact for b in (0, 1).
  const double b = c.exponent;
  const double coef = -c.amplitude * b * std::pow(s, b - 2.0);
  const double rho = (b - 2.0) / (b - 1.0);
  double inv[kMaxDim][kMaxDim];
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double zi = z[i] / s, zj = z[j] / s;
      inv[i][j] = ((i == j ? 1.0 : 0.0) - rho * zi * zj) / coef;
    }

  // Dm = I - (D^2 phi)^{-1} D^2 u(y); it is not symmetric in general, so take the
  // spectral norm through Dm^T Dm.
  double dm[kMaxDim][kMaxDim];
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0;
      for (int k = 0; k < d; ++k) acc += inv[i][k] * hu.at(k, j);
      dm[i][j] = (i == j ? 1.0 : 0.0) - acc;
    }
  SymMat gram(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0;
      for (int k = 0; k < d; ++k) acc += dm[k][i] * dm[k][j];
      gram.at(i, j) = acc;
    }
  const std::vector<double> ev = eigenvaluesSym(gram);
  double top = 0;
  for (double v : ev) top = std::max(top, v);
  const double norm = std::sqrt(std::max(0.0, top));
  rec.jacobianNorm = norm;
  rec.jacobianSet = true;
  return norm;
}

std::string contactSetCsv(const ContactSet& set, int dim) {
  std::ostringstream out;
  out << "# puccilab contact csv v1\n";
  for (int k = 0; k < dim; ++k) out << (k ? "," : "") << "vertex" << k;
  for (int k = 0; k < dim; ++k) out << ",contact" << k;
  out << ",q,gradNorm,separation,jacobianNorm,boundary,degenerate\n";
  for (const ContactRecord& r : set.records) {
    for (int k = 0; k < dim; ++k) out << (k ? "," : "") << r.vertex[k];
    for (int k = 0; k < dim; ++k) out << "," << r.y[k];
    double g2 = 0;
    for (int k = 0; k < dim; ++k) g2 += r.gradAtY[k] * r.gradAtY[k];
    out << "," << formatG(r.qValue) << "," << formatG(std::sqrt(g2)) << ","
        << formatG(r.separation) << ","
        << formatG(r.jacobianSet ? r.jacobianNorm : 0.0) << ","
        << (r.boundaryContact ? 1 : 0) << "," << (r.degenerate ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace puccilab
