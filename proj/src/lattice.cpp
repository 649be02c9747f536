#include "puccilab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "puccilab/parallel.hpp"

namespace puccilab {

Lattice::Lattice(int d, const Index& n, const Point& o, double h)
    : dim(d), shape(n), origin(o), spacing(h) {
  if (d < 1 || d > kMaxDim) fail("lattice: dim must be in [1, " + std::to_string(kMaxDim) + "]");
  if (!(h > 0) || !std::isfinite(h)) fail("lattice: spacing must be positive and finite");
  for (int k = 0; k < d; ++k) {
    if (shape[k] < 3) fail("lattice: each extent needs at least 3 nodes");
    if (!std::isfinite(origin[k])) fail("lattice: origin must be finite");
  }
  for (int k = d; k < kMaxDim; ++k) shape[k] = 1;
}

Lattice Lattice::centeredBox(int d, double halfWidth, int n) {
  Index shape{};
  Point origin{};
  for (int k = 0; k < d; ++k) {
    shape[k] = n;
    origin[k] = -halfWidth;
  }
  return Lattice(d, shape, origin, 2.0 * halfWidth / double(n - 1));
}

std::int64_t Lattice::nodeCount() const {
  std::int64_t n = 1;
  for (int k = 0; k < dim; ++k) n *= shape[k];
  return n;
}

std::int64_t Lattice::flatten(const Index& i) const {
  std::int64_t f = 0;
  for (int k = 0; k < dim; ++k) f = f * shape[k] + i[k];
  return f;
}

Index Lattice::unflatten(std::int64_t f) const {
  Index i{};
  for (int k = dim - 1; k >= 0; --k) {
    i[k] = int(f % shape[k]);
    f /= shape[k];
  }
  return i;
}

Point Lattice::point(const Index& i) const {
  Point x{};
  for (int k = 0; k < dim; ++k) x[k] = origin[k] + spacing * i[k];
  return x;
}

bool Lattice::inBounds(const Index& i) const {
  for (int k = 0; k < dim; ++k)
    if (i[k] < 0 || i[k] >= shape[k]) return false;
  return true;
}

bool Lattice::interior(const Index& i, int margin) const {
  for (int k = 0; k < dim; ++k)
    if (i[k] < margin || i[k] >= shape[k] - margin) return false;
  return true;
}

bool Lattice::operator==(const Lattice& o) const {
  if (dim != o.dim || spacing != o.spacing) return false;
  for (int k = 0; k < dim; ++k)
    if (shape[k] != o.shape[k] || origin[k] != o.origin[k]) return false;
  return true;
}

std::optional<Index> Lattice::nearestNode(const Point& x) const {
  Index i{};
  for (int k = 0; k < dim; ++k) {
    double t = (x[k] - origin[k]) / spacing;
    i[k] = int(std::lround(t));
    if (i[k] < 0 || i[k] >= shape[k]) return std::nullopt;
  }
  return i;
}

GridFunction::GridFunction(const Lattice& l, std::vector<double> v)
    : lat(l), values(std::move(v)) {
  if (std::int64_t(values.size()) != lat.nodeCount())
    fail("grid function: value count does not match lattice");
  for (double x : values)
    if (!std::isfinite(x)) fail("grid function: values must be finite");
}

GridFunction::GridFunction(const Lattice& l, const std::function<double(const Point&)>& f)
    : lat(l), values(l.nodeCount()) {
  const std::int64_t n = lat.nodeCount();
  parallelFor(n, [&](std::int64_t i) { values[i] = f(lat.point(i)); });
  for (double x : values)
    if (!std::isfinite(x)) fail("grid function: sampled values must be finite");
}

double GridFunction::maxValue() const {
  double m = values[0];
  for (double v : values) m = std::max(m, v);
  return m;
}

double GridFunction::minValue() const {
  double m = values[0];
  for (double v : values) m = std::min(m, v);
  return m;
}

bool Region::contains(const Point& x, int dim) const {
  if (kind == Kind::Ball) return dist(x, center, dim) < radius;
  for (int k = 0; k < dim; ++k)
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  return true;
}

void Region::indexRange(const Lattice& l, Index& ilo, Index& ihi) const {
  for (int k = 0; k < l.dim; ++k) {
    double a, b;
    if (kind == Kind::Ball) {
      a = center[k] - radius;
      b = center[k] + radius;
    } else {
      a = lo[k];
      b = hi[k];
    }
    ilo[k] = std::max(0, int(std::ceil((a - l.origin[k]) / l.spacing - 1e-12)));
    ihi[k] = std::min(l.shape[k] - 1, int(std::floor((b - l.origin[k]) / l.spacing + 1e-12)));
  }
}

int regionInteriorMargin(const Lattice& l, const Region& region) {
  Index lo{}, hi{};
  region.indexRange(l, lo, hi);
  int margin = l.shape[0];
  bool any = false;
  // Conservative: walk the bounding range; only nodes actually inside count.
  std::function<void(int, Index&)> rec = [&](int axis, Index& i) {
    if (axis == l.dim) {
      if (!region.contains(l.point(i), l.dim)) return;
      any = true;
      for (int k = 0; k < l.dim; ++k)
        margin = std::min({margin, i[k], l.shape[k] - 1 - i[k]});
      return;
    }
    for (i[axis] = lo[axis]; i[axis] <= hi[axis]; ++i[axis]) rec(axis + 1, i);
  };
  Index i{};
  rec(0, i);
  return any ? margin : 0;
}

void forEachNodeIn(const Lattice& l, const Region& region,
                   const std::function<void(const Index&, std::int64_t)>& fn) {
  Index lo{}, hi{};
  region.indexRange(l, lo, hi);
  std::function<void(int, Index&)> rec = [&](int axis, Index& i) {
    if (axis == l.dim) {
      if (region.contains(l.point(i), l.dim)) fn(i, l.flatten(i));
      return;
    }
    for (i[axis] = lo[axis]; i[axis] <= hi[axis]; ++i[axis]) rec(axis + 1, i);
  };
  Index i{};
  rec(0, i);
}

Point gradient(const GridFunction& u, const Index& i) {
  const Lattice& l = u.lat;
  if (!l.interior(i)) fail("gradient: interior node required");
  Point g{};
  const double inv2h = 1.0 / (2.0 * l.spacing);
  for (int k = 0; k < l.dim; ++k) {
    Index p = i, m = i;
    ++p[k];
    --m[k];
    g[k] = (u.values[l.flatten(p)] - u.values[l.flatten(m)]) * inv2h;
  }
  return g;
}

SymMat hessian(const GridFunction& u, const Index& i) {
  const Lattice& l = u.lat;
  if (!l.interior(i)) fail("hessian: interior node required");
  SymMat H(l.dim);
  const double h = l.spacing;
  const double invh2 = 1.0 / (h * h);
  const double inv4h2 = 1.0 / (4.0 * h * h);
  const double c = u.values[l.flatten(i)];
  for (int k = 0; k < l.dim; ++k) {
    Index p = i, m = i;
    ++p[k];
    --m[k];
    H.at(k, k) = (u.values[l.flatten(p)] - 2.0 * c + u.values[l.flatten(m)]) * invh2;
  }
  for (int a = 0; a < l.dim; ++a) {
    for (int b = a + 1; b < l.dim; ++b) {
      Index pp = i, pm = i, mp = i, mm = i;
      ++pp[a]; ++pp[b];
      ++pm[a]; --pm[b];
      --mp[a]; ++mp[b];
      --mm[a]; --mm[b];
      double v = (u.values[l.flatten(pp)] - u.values[l.flatten(pm)] -
                  u.values[l.flatten(mp)] + u.values[l.flatten(mm)]) * inv4h2;
      H.at(a, b) = v;
      H.at(b, a) = v;
    }
  }
  return H;
}

double restrictMeasure(const GridFunction& u, const Region& region,
                       const std::function<bool(double)>& pred) {
  std::int64_t count = 0;
  forEachNodeIn(u.lat, region, [&](const Index&, std::int64_t f) {
    if (pred(u.values[f])) ++count;
  });
  double hd = 1;
  for (int k = 0; k < u.lat.dim; ++k) hd *= u.lat.spacing;
  return double(count) * hd;
}

double regionMeasure(const Lattice& l, const Region& region) {
  std::int64_t count = 0;
  forEachNodeIn(l, region, [&](const Index&, std::int64_t) { ++count; });
  double hd = 1;
  for (int k = 0; k < l.dim; ++k) hd *= l.spacing;
  return double(count) * hd;
}

GridFunction scalarScale(const GridFunction& u, double c) {
  std::vector<double> v(u.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * u.values[i];
  return GridFunction(u.lat, std::move(v));
}

// --- .gfn ---------------------------------------------------------------------------

std::string gfnToString(const GridFunction& u) {
  std::ostringstream os;
  os << "gfn 1\n";
  os << "dim " << u.lat.dim << "\n";
  os << "shape";
  for (int k = 0; k < u.lat.dim; ++k) os << ' ' << u.lat.shape[k];
  os << "\norigin";
  for (int k = 0; k < u.lat.dim; ++k) os << ' ' << formatHex(u.lat.origin[k]);
  os << "\nspacing " << formatHex(u.lat.spacing) << "\n";
  for (double v : u.values) os << formatHex(v) << "\n";
  return os.str();
}

void writeGfn(const GridFunction& u, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("gfn: cannot open '" + path + "' for writing");
  os << gfnToString(u);
  if (!os) fail("gfn: write failed for '" + path + "'");
}

namespace {

struct LineReader {
  std::istringstream in;
  std::string name;
  int lineNo = 0;

  LineReader(const std::string& text, const std::string& n) : in(text), name(n) {}

  [[noreturn]] void die(const std::string& what) {
    fail("gfn: " + name + ": line " + std::to_string(lineNo) + ": " + what);
  }

  std::string next(const std::string& expectation) {
    std::string line;
    if (!std::getline(in, line)) {
      ++lineNo;
      die("unexpected end of file, expected " + expectation);
    }
    ++lineNo;
    return line;
  }

  bool tryNext(std::string& line) {
    if (!std::getline(in, line)) return false;
    ++lineNo;
    return true;
  }
};

double parseReal(LineReader& r, const std::string& tok, const std::string& what) {
  const char* s = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0') r.die("cannot parse " + what + " '" + tok + "'");
  return v;
}

}  // namespace

GridFunction gfnFromString(const std::string& text, const std::string& name) {
  LineReader r(text, name);

  std::string line = r.next("'gfn 1'");
  if (line != "gfn 1") r.die("expected header 'gfn 1', got '" + line + "'");

  line = r.next("'dim <d>'");
  int dim = 0;
  {
    std::istringstream is(line);
    std::string kw;
    if (!(is >> kw >> dim) || kw != "dim" || dim < 1 || dim > kMaxDim)
      r.die("expected 'dim <d>' with d in [1, " + std::to_string(kMaxDim) + "]");
  }

  Index shape{};
  line = r.next("'shape <extents>'");
  {
    std::istringstream is(line);
    std::string kw;
    is >> kw;
    if (kw != "shape") r.die("expected 'shape', got '" + kw + "'");
    for (int k = 0; k < dim; ++k)
      if (!(is >> shape[k]) || shape[k] < 3) r.die("expected " + std::to_string(dim) + " extents >= 3");
    std::string extra;
    if (is >> extra) r.die("trailing token '" + extra + "' after extents");
  }

  Point origin{};
  line = r.next("'origin <coords>'");
  {
    std::istringstream is(line);
    std::string kw;
    is >> kw;
    if (kw != "origin") r.die("expected 'origin', got '" + kw + "'");
    for (int k = 0; k < dim; ++k) {
      std::string tok;
      if (!(is >> tok)) r.die("expected " + std::to_string(dim) + " origin coordinates");
      origin[k] = parseReal(r, tok, "origin coordinate");
    }
  }

  double spacing = 0;
  line = r.next("'spacing <h>'");
  {
    std::istringstream is(line);
    std::string kw, tok;
    is >> kw;
    if (kw != "spacing") r.die("expected 'spacing', got '" + kw + "'");
    if (!(is >> tok)) r.die("expected spacing value");
    spacing = parseReal(r, tok, "spacing");
    if (!(spacing > 0)) r.die("spacing must be positive");
  }

  Lattice lat(dim, shape, origin, spacing);
  std::vector<double> values;
  values.reserve(lat.nodeCount());
  std::string vline;
  while (r.tryNext(vline)) {
    if (vline.empty()) continue;
    values.push_back(parseReal(r, vline, "value"));
    if (!std::isfinite(values.back())) r.die("value must be finite");
  }
  if (std::int64_t(values.size()) != lat.nodeCount())
    fail("gfn: " + name + ": expected " + std::to_string(lat.nodeCount()) + " values, got " +
         std::to_string(values.size()));
  return GridFunction(lat, std::move(values));
}

GridFunction readGfn(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("gfn: cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return gfnFromString(os.str(), path);
}

// --- small-matrix numerics ----------------------------------------------------------

}  // namespace puccilab

#include <Eigen/Dense>

namespace puccilab {

std::vector<double> eigenvaluesSym(const SymMat& m) {
  const int d = m.dim;
  if (d < 1 || d > kMaxDim) fail("eigenvaluesSym: bad dimension");
  double scale = std::max(1.0, m.maxAbs());
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-12 * scale)
        fail("eigenvaluesSym: matrix is not symmetric");

  if (d == 1) return {m.at(0, 0)};
  if (d == 2) {
    const double a = m.at(0, 0), c = m.at(1, 1);
    const double b = 0.5 * (m.at(0, 1) + m.at(1, 0));
    const double mid = 0.5 * (a + c);
    const double delta = 0.5 * (a - c);
    const double rad = std::sqrt(delta * delta + b * b);
    return {mid - rad, mid + rad};
  }

  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = 0.5 * (m.at(i, j) + m.at(j, i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail("eigenvaluesSym: eigensolver failed");
  std::vector<double> ev(d);
  for (int i = 0; i < d; ++i) ev[i] = es.eigenvalues()[i];
  return ev;
}

double operatorNorm(const SymMat& m) {
  const int d = m.dim;
  // sqrt of the largest eigenvalue of M^T M (M need not be symmetric).
  SymMat mtm(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0;
      for (int k = 0; k < d; ++k) s += m.at(k, i) * m.at(k, j);
      mtm.at(i, j) = s;
    }
  // Symmetrize exactly against rounding before the eigensolve.
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double s = 0.5 * (mtm.at(i, j) + mtm.at(j, i));
      mtm.at(i, j) = s;
      mtm.at(j, i) = s;
    }
  std::vector<double> ev = eigenvaluesSym(mtm);
  return std::sqrt(std::max(0.0, ev.back()));
}

}  // namespace puccilab
