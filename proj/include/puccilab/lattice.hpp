#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "puccilab/common.hpp"

namespace puccilab {

// Uniform node-centered lattice: node i sits at origin + spacing * i, extents
// shape[k] nodes per axis, row-major storage with axis 0 slowest.
struct Lattice {
  int dim = 0;
  Index shape{};
  Point origin{};
  double spacing = 0;

  Lattice() = default;
  Lattice(int d, const Index& n, const Point& o, double h);

  // Centered box helper: half-width w per axis, n nodes per axis.
  static Lattice centeredBox(int d, double halfWidth, int n);

  std::int64_t nodeCount() const;
  std::int64_t flatten(const Index& i) const;
  Index unflatten(std::int64_t f) const;
  Point point(const Index& i) const;
  Point point(std::int64_t f) const { return point(unflatten(f)); }
  bool inBounds(const Index& i) const;
  // True when i keeps at least `margin` nodes to every lattice face.
  bool interior(const Index& i, int margin = 1) const;
  bool operator==(const Lattice& o) const;

  // Nearest node to a physical point; nullopt when the rounded index is out of bounds.
  std::optional<Index> nearestNode(const Point& x) const;
};

// Finite grid samples over a lattice. Values are validated finite on construction.
struct GridFunction {
  Lattice lat;
  std::vector<double> values;

  GridFunction() = default;
  GridFunction(const Lattice& l, std::vector<double> v);
  GridFunction(const Lattice& l, const std::function<double(const Point&)>& f);

  double at(const Index& i) const { return values[lat.flatten(i)]; }
  double& at(const Index& i) { return values[lat.flatten(i)]; }

  double maxValue() const;
  double minValue() const;
};

// Membership is decided by node centers. Balls are open (|x-c| < r); boxes are
// closed on both ends.
struct Region {
  enum class Kind { Ball, Box } kind = Kind::Ball;
  Point center{};
  double radius = 0;
  Point lo{}, hi{};

  static Region ball(const Point& c, double r) {
    Region g;
    g.kind = Kind::Ball;
    g.center = c;
    g.radius = r;
    return g;
  }
  static Region box(const Point& lo, const Point& hi) {
    Region g;
    g.kind = Kind::Box;
    g.lo = lo;
    g.hi = hi;
    return g;
  }

  bool contains(const Point& x, int dim) const;
  // Inclusive index range of nodes possibly inside, clamped to the lattice.
  void indexRange(const Lattice& l, Index& lo, Index& hi) const;
};

// Smallest interior margin (in nodes) over all nodes of `region`; 0 when the region
// touches or crosses the lattice boundary.
int regionInteriorMargin(const Lattice& l, const Region& region);

// Visit every node whose point lies in `region` in row-major order.
void forEachNodeIn(const Lattice& l, const Region& region,
                   const std::function<void(const Index&, std::int64_t)>& fn);

// Central first differences, one-sided error O(h^2); exact on quadratics.
// Requires an interior node.
Point gradient(const GridFunction& u, const Index& i);

// Second differences on the axes, 4-point cross stencils for mixed entries.
// Requires an interior node; exact on quadratics.
SymMat hessian(const GridFunction& u, const Index& i);

// Node-counting measure: h^d * #{nodes in region with pred(value)}.
double restrictMeasure(const GridFunction& u, const Region& region,
                       const std::function<bool(double)>& pred);
double regionMeasure(const Lattice& l, const Region& region);

// Pointwise scalar multiple (used by the scaled weak-Harnack checks).
GridFunction scalarScale(const GridFunction& u, double c);

// --- .gfn serialization --------------------------------------------------------------
//
// Text format, one value per line after a five-line header:
//   gfn 1
//   dim <d>
//   shape <n1> ... <nd>
//   origin <o1> ... <od>
//   spacing <h>
// Reals are written as C hex-floats so round-trips are bit-exact. The reader accepts
// any strtod-parsable real and reports malformed content with 1-based line numbers.

void writeGfn(const GridFunction& u, const std::string& path);
GridFunction readGfn(const std::string& path);

std::string gfnToString(const GridFunction& u);
GridFunction gfnFromString(const std::string& text, const std::string& name = "<string>");

}  // namespace puccilab
