#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "puccilab/contact.hpp"
#include "puccilab/lattice.hpp"

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

bool bitEqual(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

double radius(const Point& p, int d) {
  double r2 = 0;
  for (int k = 0; k < d; ++k) r2 += p[k] * p[k];
  return std::sqrt(r2);
}

// Second difference of the analytic profile along a lattice direction e, matching
// the combination (phi(y+e-x) + phi(y-e-x) - 2 phi(y-x)) used by the discrete
// argmin inequality.
double cuspSecondDifference(const CuspParams& c, const Lattice& lat, const Index& y,
                            const Index& x, const int* e) {
  const int d = lat.dim;
  auto offset = [&](int sign) {
    Point z{};
    for (int k = 0; k < d; ++k)
      z[k] = lat.spacing * static_cast<double>(y[k] + sign * e[k] - x[k]);
    return z;
  };
  Point zp = offset(1), zm = offset(-1), z0 = offset(0);
  return cuspValue(c, zp, d) + cuspValue(c, zm, d) - 2.0 * cuspValue(c, z0, d);
}

}  // namespace

TEST_CASE("cusp profile analytics") {
  CuspParams c;  // defaults (10, 1/2, 2 + 5 sqrt 2)

  SUBCASE("values") {
    Point z{};
    CHECK(cuspValue(c, z, 2) == 0.0);
    z[0] = 0.25;  // |z| = 1/4, |z|^(1/2) = 1/2 exactly in binary
    CHECK(bitEqual(cuspValue(c, z, 2), -5.0));
    z[0] = 0.3;
    z[1] = -0.4;  // |z| = 1/2
    CHECK(cuspValue(c, z, 2) ==
          doctest::Approx(-10.0 * std::sqrt(0.5)).epsilon(1e-14));
  }

  SUBCASE("gradient and hessian against finite differences") {
    Point z{};
    z[0] = 0.3;
    z[1] = -0.17;
    const Point g = cuspGradient(c, z, 2);
    const SymMat h = cuspHessian(c, z, 2);
    const double step = 1e-6;
    for (int k = 0; k < 2; ++k) {
      Point zp = z, zm = z;
      zp[k] += step;
      zm[k] -= step;
      const double fd = (cuspValue(c, zp, 2) - cuspValue(c, zm, 2)) / (2 * step);
      CHECK(g[k] == doctest::Approx(fd).epsilon(1e-7));
    }
    const double hstep = 1e-4;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Point zpp = z, zpm = z, zmp = z, zmm = z;
        zpp[i] += hstep;
        zpp[j] += hstep;
        zpm[i] += hstep;
        zpm[j] -= hstep;
        zmp[i] -= hstep;
        zmp[j] += hstep;
        zmm[i] -= hstep;
        zmm[j] -= hstep;
        const double fd = (cuspValue(c, zpp, 2) - cuspValue(c, zpm, 2) -
                           cuspValue(c, zmp, 2) + cuspValue(c, zmm, 2)) /
                          (4 * hstep * hstep);
        CHECK(h.at(i, j) == doctest::Approx(fd).epsilon(1e-4));
      }
  }

  SUBCASE("hessian eigenstructure on an axis point") {
    // At z = (1/4, 0): coef = -a b s^(b-2) = -40; eigenvalues are coef (tangential)
    // and coef (b-1) = +20 (radial): concave across the arm, convex along it.
    Point z{};
    z[0] = 0.25;
    const std::vector<double> ev = eigenvaluesSym(cuspHessian(c, z, 2));
    CHECK(ev[0] == doctest::Approx(-40.0).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(20.0).epsilon(1e-12));
  }

  SUBCASE("minimum gradient over a ball sits on the rim") {
    CHECK(minCuspGradientNorm(c, 1.25) ==
          doctest::Approx(2.0 * std::sqrt(5.0)).epsilon(1e-14));
    CHECK(minCuspGradientNorm(c, 1.0) == doctest::Approx(5.0).epsilon(1e-14));
  }

  SUBCASE("vertex reconstruction inverts the gradient map") {
    Point y{}, x{};
    y[0] = 0.1;
    y[1] = 0.2;
    x[0] = 0.3;
    x[1] = 0.4;
    Point z{};
    for (int k = 0; k < 2; ++k) z[k] = y[k] - x[k];
    const Point g = cuspGradient(c, z, 2);
    const Point back = vertexFromContact(c, y, g, 2);
    for (int k = 0; k < 2; ++k) CHECK(back[k] == doctest::Approx(x[k]).epsilon(1e-12));
  }

  SUBCASE("parameter validation") {
    CHECK(throwsWith([] { CuspParams(-1.0, 0.5, 9.0); }, "amplitude"));
    CHECK(throwsWith([] { CuspParams(10.0, 0.0, 9.0); }, "exponent"));
    CHECK(throwsWith([] { CuspParams(10.0, 1.0, 9.0); }, "exponent"));
    CHECK(throwsWith([] { CuspParams(10.0, 0.5, 8.0); }, "M must exceed"));
    CHECK_NOTHROW(CuspParams(10.0, 0.5, 2.0 + 5.0 * std::sqrt(2.0)));
  }
}

TEST_CASE("sliding under the zero function contacts the vertex itself") {
  const Lattice lat = Lattice::centeredBox(2, 1.0, 33);
  const GridFunction u(lat, [](const Point&) { return 0.0; });
  Index x{};
  x[0] = 16;
  x[1] = 16;
  const ContactRecord rec =
      slideCusp(u, x, CuspParams{}, Region::ball(Point{}, 0.9));
  CHECK(rec.y == x);
  CHECK(rec.qValue == 0.0);
  CHECK(rec.separation == 0.0);
  CHECK(rec.degenerate);
  CHECK(!rec.boundaryContact);
  CHECK(rec.gradAtY[0] == 0.0);
  CHECK(rec.gradAtY[1] == 0.0);
}

TEST_CASE("1-d cone: the cusp slides off to the region edge") {
  // u(z) = 12 (1 - |z|) is concave and the cusp arms -10|z-x|^(1/2) are convex, so
  // the sliding objective u(z) + 10|z-x|^(1/2) is concave on each arm segment and
  // can only attain its minimum at segment endpoints. The interior stationary point
  // z = x + 25/144 (where the gradients match at -12) has negative second
  // derivative: it is a local maximum of the objective, not a contact. The true
  // minimum over [-1, 1] is the endpoint z = 1 with value 10 sqrt(0.9).
  const Lattice lat = Lattice::centeredBox(1, 1.0, 41);  // h = 0.05, x = 0.1 on-grid
  const GridFunction u(lat, [](const Point& p) { return 12.0 * (1.0 - std::abs(p[0])); });
  Index x{};
  x[0] = 22;

  SUBCASE("closed box search includes the boundary node") {
    Point lo{}, hi{};
    lo[0] = -1.0;
    hi[0] = 1.0;
    const ContactRecord rec = slideCusp(u, x, CuspParams{}, Region::box(lo, hi));
    CHECK(rec.y[0] == 40);  // z = 1
    CHECK(rec.qValue == doctest::Approx(9.486832980505138).epsilon(1e-13));
    CHECK(rec.boundaryContact);
    CHECK(!rec.degenerate);
    CHECK(rec.separation == doctest::Approx(0.9).epsilon(1e-13));
  }

  SUBCASE("open ball search pins the argmin to its rim instead") {
    const ContactRecord rec =
        slideCusp(u, x, CuspParams{}, Region::ball(Point{}, 0.98));
    CHECK(rec.y[0] == 39);  // z = 0.95, outermost node of the open ball
    CHECK(rec.boundaryContact);
  }

  SUBCASE("the interior stationary point loses to both endpoints") {
    // Frozen hand values of the continuum objective G(z) = u(z) + 10 (z - x)^(1/2):
    // G(x + 25/144) = 12.883..., G(x) = 10.8, G(1) = 9.4868... so the stationary
    // point is dominated on both sides.
    const double stat = 0.1 + 25.0 / 144.0;
    const double gStat = 12.0 * (1.0 - stat) + 10.0 * std::sqrt(25.0 / 144.0);
    CHECK(gStat == doctest::Approx(12.0 + 53.0 / 60.0).epsilon(1e-13));
    CHECK(gStat > 10.8);
    CHECK(10.0 * std::sqrt(0.9) < 10.8);
  }
}

TEST_CASE("paraboloid slides") {
  SUBCASE("1-d kink captures the contact at the crease") {
    const Lattice lat = Lattice::centeredBox(1, 1.0, 41);
    const GridFunction u(lat, [](const Point& p) { return std::abs(p[0]); });
    Index x{};
    x[0] = 22;  // 0.1
    Point lo{}, hi{};
    lo[0] = -1.0;
    hi[0] = 1.0;
    const ContactRecord rec = slideParaboloid(u, x, 1.0, Region::box(lo, hi));
    CHECK(rec.y[0] == 20);  // z = 0: |z| + (z - 0.1)^2/2 is minimized at the kink
    CHECK(rec.qValue == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(rec.separation == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(!rec.boundaryContact);
    CHECK(!rec.degenerate);
  }

  SUBCASE("2-d convex quadratic gives the interpolated contact node") {
    const Lattice lat = Lattice::centeredBox(2, 1.0, 41);
    const GridFunction u(lat, [](const Point& p) {
      return p[0] * p[0] + p[1] * p[1];
    });
    Index x{};
    x[0] = 26;  // (0.3, 0)
    x[1] = 20;
    const ContactRecord rec =
        slideParaboloid(u, x, 1.0, Region::ball(Point{}, 0.9));
    CHECK(rec.y[0] == 22);  // continuum argmin x/3 = (0.1, 0) is itself a node
    CHECK(rec.y[1] == 20);
    CHECK(rec.qValue == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(rec.separation == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(rec.gradAtY[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(rec.gradAtY[1] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("contact set of a gaussian bump") {
  const Lattice lat = Lattice::centeredBox(2, 1.1, 65);  // h = 0.034375
  const double h = lat.spacing;
  const GridFunction u(lat, [](const Point& p) {
    return 12.0 * std::exp(-(p[0] * p[0] + p[1] * p[1]) / 0.02);
  });
  const CuspParams c;
  const Region vertexRegion = Region::ball(Point{}, 0.25);
  const Region searchRegion = Region::ball(Point{}, 1.0);
  const ContactSet set = buildContactSet(u, c, vertexRegion, searchRegion, c.bigM);

  SUBCASE("vertex census and bookkeeping") {
    // {u > M} at this width: origin, 4 axis neighbors, 4 diagonal neighbors, and the
    // 4 two-step axis nodes (|z| = 2h = 0.06875 < 0.0748); the (2,1)-type nodes just
    // miss. Frozen count: 13.
    CHECK(set.uCount == 13);
    CHECK(set.records.size() == 13);
    CHECK(set.boundaryCount == 0);
    CHECK(set.degenerateCount == 0);
    CHECK(set.uMeasure == doctest::Approx(13.0 * h * h).epsilon(1e-15));
    CHECK(set.tCount >= 1);
    CHECK(set.tCount <= 13);
  }

  SUBCASE("records stay in vertex scan order") {
    for (std::size_t i = 1; i < set.records.size(); ++i)
      CHECK(lat.flatten(set.records[i - 1].vertex) <
            lat.flatten(set.records[i].vertex));
  }

  SUBCASE("containment below M - 1 under the unit-dip hypothesis") {
    // min over B_{1/4} is u(0.25) = 12 exp(-25/8) ~ 0.53 <= 1, so every contact
    // value must sit below M - 1.
    CHECK(set.thresholdViolations == 0);
    CHECK(set.maxContactValue <= c.bigM - 1.0);
    for (const ContactRecord& r : set.records) {
      CHECK(r.qValue <= c.bigM - 1.0);
      CHECK(r.qValue > 0.0);
    }
  }

  SUBCASE("contacts land on the balance ring, away from the tip") {
    for (const ContactRecord& r : set.records) {
      CHECK(r.separation >= 3.0 * h);  // ring radius ~ 0.265 ~ 7.7 h
      CHECK(r.separation <= 0.45);
      CHECK(r.jacobianSet);
    }
    CHECK(set.jacobianBoundObserved > 0.0);
  }

  SUBCASE("gradient matching at contact") {
    for (const ContactRecord& r : set.records) {
      Point z{};
      for (int k = 0; k < 2; ++k)
        z[k] = h * static_cast<double>(r.y[k] - r.vertex[k]);
      const Point g = cuspGradient(c, z, 2);
      Point diff{};
      for (int k = 0; k < 2; ++k) diff[k] = r.gradAtY[k] - g[k];
      CHECK(radius(diff, 2) <= 100.0 * std::sqrt(h));
    }
  }

  SUBCASE("directional hessian domination is exact at the argmin") {
    // u(y +- e) - phi(y +- e - x) >= q is the defining inequality of the argmin, so
    // second differences of u dominate those of phi along every lattice direction
    // through y; only roundoff slack is allowed.
    const int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (const ContactRecord& r : set.records)
      for (const auto& e : dirs) {
        Index yp = r.y, ym = r.y;
        for (int k = 0; k < 2; ++k) {
          yp[k] += e[k];
          ym[k] -= e[k];
        }
        const double d2u = u.values[lat.flatten(yp)] + u.values[lat.flatten(ym)] -
                           2.0 * u.values[lat.flatten(r.y)];
        const double d2phi = cuspSecondDifference(c, lat, r.y, r.vertex, e);
        CHECK(d2u >= d2phi - 1e-9 * (1.0 + std::abs(d2phi)));
      }
  }

  SUBCASE("injectivity proxy reconstructs the vertex") {
    for (const ContactRecord& r : set.records) {
      const Point xhat = vertexFromContact(c, lat.point(r.y), r.gradAtY, 2);
      const Point x = lat.point(r.vertex);
      Point diff{};
      for (int k = 0; k < 2; ++k) diff[k] = xhat[k] - x[k];
      CHECK(radius(diff, 2) <= 5.0 * h);
    }
  }

  SUBCASE("jacobian norms obey the submultiplicative bound") {
    const double b = c.exponent;
    for (const ContactRecord& r : set.records) {
      const SymMat hu = hessian(u, r.y);
      const double invNorm = std::pow(r.separation, 2.0 - b) /
                             (c.amplitude * b * (1.0 - b));
      CHECK(r.jacobianNorm <= 1.0 + invNorm * operatorNorm(hu) + 1e-9);
    }
  }

  SUBCASE("rebuild is deterministic") {
    const ContactSet again =
        buildContactSet(u, c, vertexRegion, searchRegion, c.bigM);
    REQUIRE(again.records.size() == set.records.size());
    for (std::size_t i = 0; i < set.records.size(); ++i) {
      CHECK(again.records[i].vertex == set.records[i].vertex);
      CHECK(again.records[i].y == set.records[i].y);
      CHECK(bitEqual(again.records[i].qValue, set.records[i].qValue));
      CHECK(bitEqual(again.records[i].jacobianNorm, set.records[i].jacobianNorm));
    }
    CHECK(again.jacobianBoundObserved == set.jacobianBoundObserved);
  }

  SUBCASE("csv export carries one row per record") {
    const std::string csv = contactSetCsv(set, 2);
    CHECK(csv.rfind("# puccilab contact csv v1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          static_cast<long>(set.records.size()) + 2);  // banner + header + rows
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line ==
          "vertex0,vertex1,contact0,contact1,q,gradNorm,separation,jacobianNorm,"
          "boundary,degenerate");
  }
}

TEST_CASE("shared contacts are bit-identical across vertices") {
  // A flat plateau at 20 over the vertex region sends every slide into the single
  // zero well at (0.4, 0.2); all records must then agree bitwise on the contact
  // data, and the contact set collapses to one node.
  const Lattice lat = Lattice::centeredBox(2, 1.1, 45);  // h = 0.05
  std::vector<double> vals(static_cast<std::size_t>(lat.nodeCount()), 20.0);
  Index spike{};
  spike[0] = 22;
  spike[1] = 22;
  Index well{};
  well[0] = 30;  // (0.4, 0.2), outside B_{1/4}, inside B_1
  well[1] = 26;
  vals[static_cast<std::size_t>(lat.flatten(spike))] = 12.0;
  vals[static_cast<std::size_t>(lat.flatten(well))] = 0.0;
  const GridFunction u(lat, vals);
  const CuspParams c;
  const ContactSet set = buildContactSet(u, c, Region::ball(Point{}, 0.25),
                                         Region::ball(Point{}, 1.0), c.bigM);

  // 69 offsets satisfy |o|^2 < 25 outright, and the four axis nodes at nominal
  // +-0.25 evaluate to 0.24999999999999997 on this lattice, so the open ball picks
  // them up as well.
  CHECK(set.uCount == 73);
  CHECK(set.records.size() == static_cast<std::size_t>(set.uCount));
  CHECK(set.boundaryCount == 0);
  CHECK(set.degenerateCount == 0);
  CHECK(set.tCount == 1);
  CHECK(set.sharedContactConflicts == 0);
  CHECK(set.thresholdViolations == 0);
  CHECK(set.maxContactValue == 0.0);
  for (const ContactRecord& r : set.records) {
    CHECK(r.y == well);
    CHECK(r.gradAtY[0] == 0.0);  // well neighbors are all 20, so central differences vanish
    CHECK(r.gradAtY[1] == 0.0);
  }
}

TEST_CASE("contact-map jacobian on a translated cusp") {
  // u = 30 + phi(z): the lattice hessian of u at y reproduces D^2 phi(y - x) up to
  // stencil error, so Dm = I - (D^2 phi)^{-1} D^2 u is near zero.
  const Lattice lat = Lattice::centeredBox(2, 1.1, 65);
  const double h = lat.spacing;
  const CuspParams c;
  const GridFunction u(lat, [&](const Point& p) {
    Point z = p;
    return 30.0 + cuspValue(c, z, 2);
  });
  Index x{};
  x[0] = 32;
  x[1] = 32;

  SUBCASE("near-cancellation at a well-separated contact") {
    ContactRecord rec;
    rec.vertex = x;
    rec.y = x;
    rec.y[0] += 12;
    rec.y[1] += 9;  // separation 15 h ~ 0.52
    rec.separation = 0;  // the jacobian recomputes separation from the indices
    const double norm = contactMapJacobian(u, rec, c);
    CHECK(norm <= 0.08);
    CHECK(rec.jacobianSet);
    CHECK(bitEqual(rec.jacobianNorm, norm));
  }

  SUBCASE("matrix-form hessian domination with the stencil tolerance") {
    // For the exact translate, D^2 u - D^2 phi is pure stencil error; the
    // fourth-derivative bound a b (2-b)(3-b)(4-b)/12 h^2 s^(b-4), doubled per
    // dimension and for safety, must absorb it.
    Index y = x;
    y[0] += 12;
    y[1] += 9;
    const double s = h * 15.0;
    const SymMat hu = hessian(u, y);
    Point z{};
    z[0] = h * 12.0;
    z[1] = h * 9.0;
    const SymMat hphi = cuspHessian(c, z, 2);
    SymMat diff(2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) diff.at(i, j) = hu.at(i, j) - hphi.at(i, j);
    const std::vector<double> ev = eigenvaluesSym(diff);
    const double b = c.exponent;
    const double tol = 2.0 * 2.0 * c.amplitude * b * (2.0 - b) * (3.0 - b) *
                       (4.0 - b) / 12.0 * h * h * std::pow(s, b - 4.0);
    CHECK(ev[0] >= -tol);
  }

  SUBCASE("separation below 3h is refused") {
    ContactRecord rec;
    rec.vertex = x;
    rec.y = x;
    rec.y[0] += 2;
    rec.y[1] += 1;  // separation sqrt(5) h < 3h
    CHECK(throwsWith([&] { contactMapJacobian(u, rec, c); },
                     "singular separation"));
  }
}

TEST_CASE("slide and contact-set validation") {
  const Lattice lat = Lattice::centeredBox(2, 1.0, 33);
  const Region search = Region::ball(Point{}, 0.9);
  Index mid{};
  mid[0] = 16;
  mid[1] = 16;

  SUBCASE("negative u is rejected") {
    const GridFunction u(lat, [](const Point& p) { return p[0]; });
    CHECK(throwsWith([&] { slideCusp(u, mid, CuspParams{}, search); },
                     "nonnegative"));
    CHECK(throwsWith(
        [&] {
          buildContactSet(u, CuspParams{}, Region::ball(Point{}, 0.25), search,
                          9.0);
        },
        "nonnegative"));
  }

  SUBCASE("edge vertices are rejected") {
    const GridFunction u(lat, [](const Point&) { return 1.0; });
    Index edge{};
    edge[0] = 0;
    edge[1] = 5;
    CHECK(throwsWith([&] { slideCusp(u, edge, CuspParams{}, search); },
                     "interior"));
    Index outside{};
    outside[0] = -1;
    outside[1] = 5;
    CHECK(throwsWith([&] { slideCusp(u, outside, CuspParams{}, search); },
                     "out of bounds"));
  }

  SUBCASE("a region holding no nodes is an error") {
    const GridFunction u(lat, [](const Point&) { return 1.0; });
    Point off{};
    off[0] = lat.spacing / 3.0;
    off[1] = lat.spacing / 3.0;
    CHECK(throwsWith(
        [&] { slideCusp(u, mid, CuspParams{}, Region::ball(off, 1e-6)); },
        "no nodes"));
  }

  SUBCASE("contact set argument checks") {
    const GridFunction u(lat, [](const Point&) { return 1.0; });
    CHECK(throwsWith(
        [&] {
          buildContactSet(u, CuspParams{}, Region::ball(Point{}, 0.25), search,
                          -1.0);
        },
        "M must be positive"));
    CHECK(throwsWith(
        [&] {
          buildContactSet(u, CuspParams{}, Region::box(lat.origin, Point{}),
                          search, 9.0);
        },
        "interior"));
  }

  SUBCASE("degenerate records cannot take a jacobian") {
    const GridFunction u(lat, [](const Point&) { return 0.0; });
    ContactRecord rec = slideCusp(u, mid, CuspParams{}, search);
    CHECK(rec.degenerate);
    CHECK(throwsWith([&] { contactMapJacobian(u, rec, CuspParams{}); },
                     "singular separation"));
  }
}
