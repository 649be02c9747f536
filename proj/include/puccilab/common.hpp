#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace puccilab {

// Grids up to four axes; everything carries an explicit runtime dim <= kMaxDim.
inline constexpr int kMaxDim = 4;

using Index = std::array<int, kMaxDim>;
using Point = std::array<double, kMaxDim>;

inline Index makeIndex(int i0 = 0, int i1 = 0, int i2 = 0, int i3 = 0) {
  return Index{i0, i1, i2, i3};
}
inline Point makePoint(double x0 = 0, double x1 = 0, double x2 = 0, double x3 = 0) {
  return Point{x0, x1, x2, x3};
}

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

inline double dot(const Point& a, const Point& b, int dim) {
  double s = 0;
  for (int k = 0; k < dim; ++k) s += a[k] * b[k];
  return s;
}

// Plain sqrt-of-squares: scale-equivariant under power-of-two scalings, which the
// scaling identity checks rely on. Desk-scale magnitudes, no overflow concern.
inline double norm(const Point& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline Point sub(const Point& a, const Point& b, int dim) {
  Point r{};
  for (int k = 0; k < dim; ++k) r[k] = a[k] - b[k];
  return r;
}

inline double dist(const Point& a, const Point& b, int dim) {
  return norm(sub(a, b, dim), dim);
}

// Dense symmetric d x d matrix, row-major in a fixed buffer.
struct SymMat {
  int dim = 0;
  std::array<double, kMaxDim * kMaxDim> a{};

  SymMat() = default;
  explicit SymMat(int d) : dim(d) {}

  double& at(int i, int j) { return a[i * kMaxDim + j]; }
  double at(int i, int j) const { return a[i * kMaxDim + j]; }

  static SymMat identity(int d, double scale = 1.0) {
    SymMat m(d);
    for (int i = 0; i < d; ++i) m.at(i, i) = scale;
    return m;
  }

  SymMat plus(const SymMat& o, double sign = 1.0) const {
    SymMat r(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) r.at(i, j) = at(i, j) + sign * o.at(i, j);
    return r;
  }

  SymMat scaled(double c) const {
    SymMat r(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) r.at(i, j) = c * at(i, j);
    return r;
  }

  double maxAbs() const {
    double m = 0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m = std::max(m, std::abs(at(i, j)));
    return m;
  }
};

// Eigenvalues ascending. Exact closed forms for d<=2 (hot path, and manifestly
// equivariant under power-of-two input scalings); iterative solver for d>=3.
// Rejects matrices that are asymmetric beyond 1e-12 relative to their magnitude.
std::vector<double> eigenvaluesSym(const SymMat& m);

// Largest singular value of a (not necessarily symmetric) small matrix, given as
// row-major dim x dim entries.
double operatorNorm(const SymMat& m);

// --- deterministic seeded randomness -------------------------------------------------
//
// Counter-style generator: every consumer derives an independent stream from
// (seed, tag) pairs, so results do not depend on call interleaving or scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state(deriveSeed(seed, stream)) {}

  std::uint64_t nextU64() {
    state += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state);
  }
  // Uniform in [0, 1).
  double u01() { return double(nextU64() >> 11) * 0x1p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
  int uniformInt(int lo, int hi) {  // inclusive bounds
    return lo + int(nextU64() % std::uint64_t(hi - lo + 1));
  }
};

// --- hashing / formatting ------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hashValues(const std::vector<double>& v) {
  return fnv1a64(v.data(), v.size() * sizeof(double));
}

inline std::string hexHash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Round-trippable decimal formatting used in CSV output.
inline std::string formatG(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Bit-exact hex-float formatting used in .gfn files and sidecars.
inline std::string formatHex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace puccilab
