#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "puccilab/generate.hpp"

namespace puccilab {

// --- corpus --------------------------------------------------------------------------
//
// The shipped corpus is a fixed family of named grid functions: analytic barriers,
// solver outputs on two box profiles (the wide 2.2 half-width box hosts B_2
// hypotheses, the fine 1.1 half-width box hosts B_1 work at the same node count),
// low-gradient perturbations of the solver outputs, a handful of analytic controls,
// and negative controls that deliberately violate one hypothesis each. Members carry
// provenance sidecars; `valid` reflects whether the stored values hash still matches
// the payload (a mismatch marks the certification stale).

struct CorpusMember {
  std::string name;
  std::string kind;  // barrier | doubling | solver | perturbed | control | negative
  GridFunction u;
  Provenance prov;
  bool valid = true;
  std::string note;
};

struct CorpusConfig {
  int gridN = 257;         // nodes per axis (must be 2^k + 1 for the cascade)
  std::uint64_t seed = 7;
  std::string dir;         // cache directory for .gfn + sidecar pairs; empty = in-memory
  bool quiet = true;
};

std::vector<std::string> corpusMemberNames();

// Build every member from scratch (deterministic in cfg). With cfg.dir nonempty the
// .gfn payloads and sidecars are also written there.
std::vector<CorpusMember> buildCorpus(const CorpusConfig& cfg);

// Load the corpus from cfg.dir, rebuilding whenever a file is missing or the stored
// grid/seed metadata disagrees with cfg. Hash mismatches do NOT trigger a rebuild:
// they surface as valid = false so staleness stays observable.
std::vector<CorpusMember> loadCorpus(const CorpusConfig& cfg);

const CorpusMember& corpusFind(const std::vector<CorpusMember>& corpus,
                               const std::string& name);

// Re-run the certification recorded in a member's sidecar against its payload.
struct MemberCheck {
  std::string name;
  bool stale = false;     // stored values_hash does not match the payload
  bool pass = false;      // all recorded hypothesis checks pass and not stale
  std::vector<std::string> lines;  // one human-readable line per executed check
};

MemberCheck checkMember(const CorpusMember& m);

// --- experiments ---------------------------------------------------------------------

struct ExperimentConfig {
  std::string name;
  std::vector<std::string> corpus;          // member names; empty = experiment default
  EllipticityParams params{1.0, 1.0, 0.5};  // gamma is the experiment's cutoff
  double c0 = 3.0;                          // L-infinity normalizer of Thm 1.1/1.2
  std::map<std::string, double> tolerances; // named thresholds, defaults filled per run
  std::uint64_t seed = 7;
  std::string outDir;                       // reports land here when nonempty
};

struct ExperimentReport {
  std::string name;
  bool pass = false;
  std::map<std::string, double> measuredConstants;
  std::vector<std::string> rows;   // CSV payload including the versioned header
  std::vector<std::string> notes;
};

// One dyadic step of the oscillation iteration: extrema of the normalized function
// over B_{2^-k}, the midpoint, the member's fitted exponent, and the epsilon_1 the
// two-alternative test ran with.
struct HolderIteration {
  int k = 0;
  double aK = 0;
  double bK = 0;
  double mK = 0;
  double alpha = 0;
  double epsilon1 = 0;
};

// Sliding-barrier contact data: the exact discrete minimal t with h_t >= u on
// B_{3/4}, its (lexicographically first) contact node, r = (3/4 - |x0|)/2 and
// H0 = tStar (2r)^-beta, plus the (mu, beta) pair the diagnostic ran with.
struct HarnackDiagnostic {
  double tStar = 0;
  Index x0{};
  double r = 0;
  double h0 = 0;
  double beta = 0;
  double mu = 0;
};

// Feasibility of the four (mu, beta) inequalities behind the sliding barrier, given
// (M, eps0, eps, d, gamma) and the worst-case contact radius r = 3/8. `feasible`
// reports whether the direct system admits the returned pair; `recipeHolds` reports
// whether the textbook recipe's own sufficient conditions hold at that pair (they
// need not: the recipe is conservative and its middle condition fails as mu -> 0).
struct MuBetaReport {
  bool feasible = false;
  double mu = 0;
  double beta = 0;
  double slack[4] = {0, 0, 0, 0};  // lhs - rhs per inequality, <= 0 when satisfied
  bool recipeHolds = false;
  double recipeRatio = 0;  // ln(1 + mu gamma/eps) / (-ln(1 - mu/2)), vs gamma/eps
};

MuBetaReport feasibleMuBeta(double M, double eps0, double eps, int d, double gamma);

// The five verification experiments. Each is a pure function of (cfg, corpus):
// rows are fully deterministic, `pass` is re-derivable from rows and tolerances,
// and stale members are excluded from every pass-relevant aggregate (their rows are
// flagged instead). Explicitly listing an unusable member in cfg.corpus is an error.
ExperimentReport runMeasureEstimate(const ExperimentConfig& cfg,
                                    const std::vector<CorpusMember>& corpus);
ExperimentReport runDoubling(const ExperimentConfig& cfg,
                             const std::vector<CorpusMember>& corpus);
ExperimentReport runLepsilon(const ExperimentConfig& cfg,
                             const std::vector<CorpusMember>& corpus);
ExperimentReport runHolder(const ExperimentConfig& cfg,
                           const std::vector<CorpusMember>& corpus);
ExperimentReport runHarnack(const ExperimentConfig& cfg,
                            const std::vector<CorpusMember>& corpus);

HarnackDiagnostic harnackSlideDiagnostic(const GridFunction& u, double beta);

// --- config & reports ----------------------------------------------------------------

// Flat key-value text with [section] headers and '#' comments; keys flatten to
// "section.key". Unknown keys are preserved (forward compatibility); values stay
// strings until an experiment asks for a number.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parseConfig(const std::string& path);
ConfigMap parseConfigText(const std::string& text, const std::string& name = "<string>");
ConfigMap defaultConfig();

// <outDir>/<name>.csv; creates outDir if needed.
void writeReport(const ExperimentReport& rep, const std::string& outDir);
// <outDir>/summary.txt, one line per report: name, pass, key constants.
void writeSummary(const std::vector<ExperimentReport>& reps, const std::string& outDir);

int cliMain(int argc, char** argv);

}  // namespace puccilab
