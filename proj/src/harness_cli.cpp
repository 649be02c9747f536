#include "puccilab/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "puccilab/contact.hpp"
#include "puccilab/covering.hpp"
#include "puccilab/generate.hpp"
#include "puccilab/regularize.hpp"

namespace puccilab {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double cfgNum(const ConfigMap& cm, const std::string& key) {
  const auto it = cm.find(key);
  if (it == cm.end()) fail("config is missing key '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    fail("config value for " + key + " is not numeric: " + it->second);
  }
}

}  // namespace

ConfigMap parseConfigText(const std::string& text, const std::string& name) {
  ConfigMap cm;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(name + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        fail(name + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(name + ":" + std::to_string(lineno) + ": malformed config line (expected key = value)");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      fail(name + ":" + std::to_string(lineno) + ": empty config key");
    cm[section.empty() ? key : section + "." + key] = val;
  }
  return cm;
}

ConfigMap parseConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseConfigText(ss.str(), path);
}

ConfigMap defaultConfig() {
  return {
      {"corpus.grid", "257"},
      {"corpus.seed", "7"},
      {"experiment.lambda", "1"},
      {"experiment.Lambda", "1"},
      {"experiment.gamma", "0.5"},
      {"experiment.c0", "3"},
      {"measure.delta_override", "0"},
      {"lepsilon.kmax", "4"},
      {"lepsilon.slope_max", "-0.05"},
      {"lepsilon.eps1", "0.5"},
      {"holder.eps1", "0.5"},
      {"holder.eps0", "0.05"},
      {"holder.rho_dec", "0.97"},
      {"holder.alpha_affine_tol", "0.02"},
      {"holder.pair_factor", "1.5"},
      {"harnack.stability_factor", "10"},
      {"harnack.eps0", "0.05"},
      {"harnack.eps", "0.05"},
  };
}

void writeReport(const ExperimentReport& rep, const std::string& outDir) {
  std::filesystem::create_directories(outDir);
  std::ofstream out(outDir + "/" + rep.name + ".csv", std::ios::binary);
  if (!out) fail("cannot write report for " + rep.name + " under " + outDir);
  for (const std::string& row : rep.rows) out << row << '\n';
}

void writeSummary(const std::vector<ExperimentReport>& reps, const std::string& outDir) {
  std::filesystem::create_directories(outDir);
  std::ofstream out(outDir + "/summary.txt", std::ios::binary);
  if (!out) fail("cannot write summary under " + outDir);
  for (const ExperimentReport& rep : reps) {
    out << rep.name << (rep.pass ? " PASS" : " FAIL");
    for (const auto& [k, v] : rep.measuredConstants) out << ' ' << k << '=' << formatG(v);
    out << '\n';
    for (const std::string& note : rep.notes) out << "  " << note << '\n';
  }
}

namespace {

ExperimentConfig expFromConfig(const ConfigMap& cm, const std::string& name,
                               const std::string& outDir) {
  ExperimentConfig ec;
  ec.name = name;
  ec.params = EllipticityParams{cfgNum(cm, "experiment.lambda"),
                                cfgNum(cm, "experiment.Lambda"),
                                cfgNum(cm, "experiment.gamma")};
  ec.c0 = cfgNum(cm, "experiment.c0");
  ec.seed = std::uint64_t(cfgNum(cm, "corpus.seed"));
  ec.outDir = outDir;
  const std::string prefix = name + ".";
  for (const auto& [k, v] : cm) {
    if (k.rfind(prefix, 0) != 0) continue;
    const std::string key = k.substr(prefix.size());
    if (key == "corpus") {
      std::istringstream is(v);
      std::string item;
      while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) ec.corpus.push_back(item);
      }
      continue;
    }
    try {
      ec.tolerances[key] = std::stod(v);
    } catch (const std::exception&) {
      fail("config value for " + k + " is not numeric: " + v);
    }
  }
  return ec;
}

ExperimentReport runByName(const std::string& name, const ExperimentConfig& ec,
                           const std::vector<CorpusMember>& corpus) {
  if (name == "measure") return runMeasureEstimate(ec, corpus);
  if (name == "doubling") return runDoubling(ec, corpus);
  if (name == "lepsilon") return runLepsilon(ec, corpus);
  if (name == "holder") return runHolder(ec, corpus);
  if (name == "harnack") return runHarnack(ec, corpus);
  fail("unknown experiment '" + name + "'");
}

void writePgm(const GridFunction& u, const std::string& path) {
  const int w = int(u.lat.shape[0]);
  const int h = int(u.lat.shape[1]);
  const double lo = u.minValue();
  const double hi = u.maxValue();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write plot: " + path);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  std::string bytes;
  bytes.reserve(std::size_t(w) * std::size_t(h));
  for (int j = h - 1; j >= 0; --j)
    for (int i = 0; i < w; ++i) {
      Index idx{};
      idx[0] = i;
      idx[1] = j;
      const double v = u.values[std::size_t(u.lat.flatten(idx))];
      const double s = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      bytes.push_back(char(int(std::lround(255.0 * s))));
    }
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

int runExperimentSet(const std::vector<std::string>& names, const ConfigMap& cm,
                     const std::string& outDir, const std::string& corpusDir,
                     bool plots, bool quiet) {
  CorpusConfig cc;
  cc.gridN = int(cfgNum(cm, "corpus.grid"));
  cc.seed = std::uint64_t(cfgNum(cm, "corpus.seed"));
  cc.dir = corpusDir;
  cc.quiet = quiet;
  const std::vector<CorpusMember> corpus = loadCorpus(cc);
  if (plots) {
    const std::string dir = outDir + "/plots";
    std::filesystem::create_directories(dir);
    for (const CorpusMember& m : corpus) writePgm(m.u, dir + "/" + m.name + ".pgm");
  }
  std::vector<ExperimentReport> reps;
  bool all = true;
  for (const std::string& name : names) {
    ExperimentReport rep;
    try {
      rep = runByName(name, expFromConfig(cm, name, outDir), corpus);
    } catch (const std::exception& e) {
      rep = ExperimentReport{};
      rep.name = name;
      rep.pass = false;
      rep.rows = {"# puccilab " + name + " v1", std::string("# error: ") + e.what()};
      rep.notes = {std::string("# aborted: ") + e.what()};
    }
    writeReport(rep, outDir);
    if (!quiet) std::printf("%s: %s\n", rep.name.c_str(), rep.pass ? "PASS" : "FAIL");
    all = all && rep.pass;
    reps.push_back(std::move(rep));
  }
  writeSummary(reps, outDir);
  return all ? 0 : 1;
}

}  // namespace

int cliMain(int argc, char** argv) {
  CLI::App app{"numerical laboratory for degenerate fully nonlinear regularity"};
  app.require_subcommand(1);

  std::string out = "out", configPath, corpusDir, expName, file;
  int grid = 0;
  std::uint64_t seed = 0;
  bool quiet = false, plots = false;
  double eps = 0, beta = 0, t1 = 0, t2 = 0, delta = 0.2;
  int samples = 400;

  CLI::App* gen = app.add_subcommand("gen", "build the corpus and write it to disk");
  gen->add_option("--out", out, "output directory");
  gen->add_option("--grid", grid, "nodes per axis (2^k + 1)");
  gen->add_option("--seed", seed, "corpus seed");
  gen->add_flag("--quiet", quiet, "suppress progress output");

  CLI::App* chk = app.add_subcommand("check", "re-certify one stored grid function");
  chk->add_option("file", file, "path to a .gfn payload (sidecar .prov expected)")
      ->required();

  CLI::App* inf = app.add_subcommand("infconv", "inf-convolution with certificate");
  inf->add_option("file", file, "path to a .gfn payload")->required();
  inf->add_option("--eps", eps, "inf-convolution parameter")
      ->required()
      ->check(CLI::PositiveNumber);
  inf->add_option("--out", out, "write the envelope to this path");

  CLI::App* sld = app.add_subcommand("slide", "cusp contact-set construction");
  sld->add_option("file", file, "path to a .gfn payload")->required();
  sld->add_option("--beta", beta, "diagnostic exponent (0 = derive from defaults)");
  sld->add_option("--out", out, "write the contact CSV to this path");

  CLI::App* cov = app.add_subcommand("cover", "ink-spots covering check on level sets");
  cov->add_option("file", file, "path to a .gfn payload")->required();
  cov->add_option("--t1", t1, "outer level (set F = {u > t1})")->required();
  cov->add_option("--t2", t2, "inner level (set E = {u > t2})")->required();
  cov->add_option("--delta", delta, "density parameter");
  cov->add_option("--samples", samples, "number of sampled balls");
  cov->add_option("--seed", seed, "sampling seed");

  CLI::App* exp = app.add_subcommand("experiment", "run one experiment");
  exp->add_option("name", expName, "measure|doubling|lepsilon|holder|harnack")
      ->required();
  CLI::App* allCmd = app.add_subcommand("all", "run every experiment in order");
  for (CLI::App* sub : {exp, allCmd}) {
    sub->add_option("--config", configPath, "INI-style config file");
    sub->add_option("--out", out, "report directory");
    sub->add_option("--grid", grid, "override corpus.grid");
    sub->add_option("--seed", seed, "override corpus.seed");
    sub->add_option("--corpus", corpusDir, "corpus cache directory");
    sub->add_flag("--plots", plots, "dump PGM plots of the corpus");
    sub->add_flag("--quiet", quiet, "suppress progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      CorpusConfig cc;
      if (grid > 0) cc.gridN = grid;
      if (gen->count("--seed")) cc.seed = seed;
      cc.dir = out + "/corpus";
      cc.quiet = quiet;
      const std::vector<CorpusMember> corpus = buildCorpus(cc);
      for (const CorpusMember& m : corpus) {
        const MemberCheck mc = checkMember(m);
        const std::string status =
            m.kind == "negative"
                ? (mc.pass ? "UNEXPECTED-PASS"
                           : "expected-fail (" +
                                 provenanceGet(m.prov, "violation").value_or("?") + ")")
                : (mc.pass ? "certified" : "FAILED");
        if (!quiet)
          std::printf("%-12s %-10s %s\n", m.name.c_str(), m.kind.c_str(),
                      status.c_str());
      }
      std::printf("wrote %zu members to %s\n", corpus.size(), cc.dir.c_str());
      return 0;
    }
    if (*chk) {
      std::filesystem::path p(file);
      CorpusMember m;
      m.u = readGfn(file);
      m.prov = readProvenance(p.replace_extension(".prov").string());
      m.name = provenanceGet(m.prov, "name").value_or(p.stem().string());
      m.kind = provenanceGet(m.prov, "kind").value_or("unknown");
      const MemberCheck mc = checkMember(m);
      for (const std::string& l : mc.lines) std::printf("%s\n", l.c_str());
      std::printf("%s: %s\n", mc.name.c_str(), mc.pass ? "PASS" : "FAIL");
      return mc.pass ? 0 : 1;
    }
    if (*inf) {
      const GridFunction u = readGfn(file);
      const InfConvResult r = infConvolve(u, eps);
      const double tol = 4.0 * u.lat.spacing / eps;
      const SemiConcavityReport sc =
          semiConcavityCertificate(r.smoothed, 1.0 / eps, tol);
      std::printf("envelope: eps=%s max_displacement=%s\n", formatG(eps).c_str(),
                  formatG(r.maxDisplacement).c_str());
      std::printf("semiconcavity: bound=%s tol=%s worst=%s %s\n",
                  formatG(1.0 / eps).c_str(), formatG(tol).c_str(),
                  formatG(sc.worst).c_str(), sc.pass ? "PASS" : "FAIL");
      if (inf->count("--out")) writeGfn(r.smoothed, out);
      return sc.pass ? 0 : 1;
    }
    if (*sld) {
      const GridFunction u = readGfn(file);
      const CuspParams c;
      const double b =
          beta > 0 ? beta : feasibleMuBeta(c.bigM, 0.05, 0.05, u.lat.dim, 0.5).beta;
      const HarnackDiagnostic d = harnackSlideDiagnostic(u, b);
      std::printf("diagnostic: tstar=%s x0=(%lld,%lld) r=%s h0=%s beta=%s\n",
                  formatG(d.tStar).c_str(), (long long)d.x0[0], (long long)d.x0[1],
                  formatG(d.r).c_str(), formatG(d.h0).c_str(), formatG(d.beta).c_str());
      const ContactSet set = buildContactSet(u, c, Region::ball(Point{}, 0.25),
                                             Region::ball(Point{}, 1.0), c.bigM);
      std::printf(
          "contact: vertices=%lld contacts=%lld boundary=%lld degenerate=%lld "
          "threshold_violations=%lld conflicts=%lld\n",
          (long long)set.uCount, (long long)set.tCount, (long long)set.boundaryCount,
          (long long)set.degenerateCount, (long long)set.thresholdViolations,
          (long long)set.sharedContactConflicts);
      const std::string csv = contactSetCsv(set, u.lat.dim);
      if (sld->count("--out")) {
        std::ofstream o(out, std::ios::binary);
        if (!o) fail("cannot write contact CSV: " + out);
        o << csv;
      } else {
        std::fputs(csv.c_str(), stdout);
      }
      return 0;
    }
    if (*cov) {
      if (t2 <= t1) fail("cover requires t2 > t1");
      const GridFunction u = readGfn(file);
      const std::int64_t n = u.lat.nodeCount();
      const std::size_t nn = std::size_t(n);
      std::vector<char> fBits(nn), eBits(nn);
      for (std::int64_t f = 0; f < n; ++f) {
        const Point x = u.lat.point(u.lat.unflatten(f));
        const bool in = norm(x, u.lat.dim) < 1.0;
        const double v = u.values[std::size_t(f)];
        fBits[std::size_t(f)] = char(in && v > t1);
        eBits[std::size_t(f)] = char(in && v > t2);
      }
      const MaskSet F(u.lat, fBits, true);
      const MaskSet E(u.lat, eBits, true);
      const InkSpotsReport rep =
          cov->count("--seed")
              ? inkSpotsCheck(E, F, delta, samples, seed)
              : inkSpotsCheck(E, F, delta, samples);
      std::printf("E=%s F=%s unit=%s samples=%d dense=%d violations=%d\n",
                  formatG(rep.eMeasure).c_str(), formatG(rep.fMeasure).c_str(),
                  formatG(rep.unitMeasure).c_str(), int(rep.samplesTested),
                  int(rep.denseSamples), int(rep.hypothesisViolations));
      std::printf("smallness=%s margin=%s c=%s %s\n", rep.smallness ? "yes" : "no",
                  formatG(rep.conclusionMargin).c_str(), formatG(rep.c).c_str(),
                  rep.pass ? "PASS" : "FAIL");
      return rep.pass ? 0 : 1;
    }
    // experiment / all
    ConfigMap cm = defaultConfig();
    if (!configPath.empty())
      for (const auto& [k, v] : parseConfig(configPath)) cm[k] = v;
    if (grid > 0) cm["corpus.grid"] = std::to_string(grid);
    if ((*exp && exp->count("--seed")) || (*allCmd && allCmd->count("--seed")))
      cm["corpus.seed"] = std::to_string(seed);
    const std::string cdir = corpusDir.empty() ? out + "/corpus" : corpusDir;
    const std::vector<std::string> names =
        *allCmd ? std::vector<std::string>{"measure", "doubling", "lepsilon", "holder",
                                           "harnack"}
                : std::vector<std::string>{expName};
    if (*exp && expName != "measure" && expName != "doubling" &&
        expName != "lepsilon" && expName != "holder" && expName != "harnack")
      fail("unknown experiment '" + expName + "'");
    return runExperimentSet(names, cm, out, cdir, plots, quiet);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace puccilab
