#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "puccilab/lattice.hpp"

namespace puccilab {

// Node mask over a lattice: the discrete stand-in for an open subset of B_1.
// `openness` records whether the mask was rasterized from declared balls/boxes.
struct MaskSet {
  Lattice lat;
  std::vector<char> membership;  // one byte per node, 0/1
  bool openness = false;

  MaskSet() = default;
  MaskSet(const Lattice& l, std::vector<char> bits, bool open = false);

  static MaskSet fromRegion(const Lattice& l, const Region& region);
  static MaskSet fromPredicate(const Lattice& l,
                               const std::function<bool(const Point&)>& pred);

  bool at(std::int64_t f) const { return membership[std::size_t(f)] != 0; }
  std::int64_t count() const;
  double measure() const;  // count * h^d
  bool isSubsetOf(const MaskSet& o) const;
};

struct Ball {
  Point center{};
  double radius = 0;
};

// Nodes strictly inside the open ball; the membership variant also requires mask bits.
std::int64_t nodesInBall(const Lattice& l, const Ball& b);
std::int64_t maskNodesInBall(const MaskSet& m, const Ball& b);
// Every lattice node inside the ball is a member.
bool ballWithinMask(const MaskSet& m, const Ball& b);

// Vitali selection: greedy over descending radius (ties by lexicographic center,
// then input order), keeping a ball iff its center distance to every kept ball
// exceeds the radius sum. Every input ball then lies inside the 5-dilation of the
// kept ball recorded in coveredBy.
struct BallCover {
  std::vector<Ball> balls;       // kept balls, in selection order
  bool disjoint = false;
  double dilationFactor = 5.0;
  std::vector<int> coveredBy;    // per input ball: index into `balls`
};

BallCover vitaliSelect(const std::vector<Ball>& balls);

// Growing ink-spots audit. Hypotheses: every sampled ball B inside B_1 that is
// E-dense (|B cap E| > (1-delta)|B|) must satisfy B within F, and |E| <= (1-delta)|B_1|.
// Conclusion: |E| <= (1 - c delta)|F| with the covering constant c = 1/5^d.
struct InkSpotsReport {
  double eMeasure = 0, fMeasure = 0, unitMeasure = 0;
  std::int64_t samplesTested = 0;
  std::int64_t denseSamples = 0;
  std::int64_t hypothesisViolations = 0;  // dense but escaping F
  bool smallness = false;                 // |E| <= (1-delta)|B_1|
  bool conclusion = false;                // |E| <= (1-c delta)|F|
  double conclusionMargin = 0;            // (1-c delta)|F| - |E|
  double c = 0;
  bool pass = false;  // no violations, smallness, conclusion
};

InkSpotsReport inkSpotsCheck(const MaskSet& E, const MaskSet& F, double delta,
                             int ballSamples, std::uint64_t seed = 20260822ULL);

// Squared distance from each node to the nearest non-member node (1e18 when the
// mask covers the whole lattice), computed by the separable envelope passes.
std::vector<double> squaredDistanceToComplement(const MaskSet& F);

// Largest ball on the half-offset radius grid {h/2 + k h} that contains x and whose
// interior nodes all belong to F; centers scanned over F's nodes, ties lexicographic.
Ball maximalBallAt(const Index& x, const MaskSet& F);

// --- RLE serialization (gfn-style header + alternating run lengths, OFF first) ------

std::string maskToString(const MaskSet& m);
MaskSet maskFromString(const std::string& text, const std::string& name = "<string>");
void writeMask(const MaskSet& m, const std::string& path);
MaskSet readMask(const std::string& path);

}  // namespace puccilab
