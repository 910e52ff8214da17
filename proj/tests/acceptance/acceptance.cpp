// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include "corpus_list.h"
#include "random_program.h"
#include "supa/oracle.h"
#include "supa/pipeline.h"
#include "supa/uninit.h"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

using namespace supa;

namespace {

// Tolerances.
constexpr double kMotivatingSeconds = 1.0;
constexpr double kOracleEqualitySeconds = 60.0;
constexpr int kRandomPrograms = 200;
constexpr int kExpectedCycleRounds = 2;

using Clock = std::chrono::steady_clock;
using Names = std::vector<std::string>;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string &what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string corpus(const std::string &name) { return std::string(SUPA_CORPUS_DIR) + "/" + name; }

Program parseOrDie(const std::string &path) {
  LowerOutcome out = parseProgramFile(path);
  if (!out.program)
    throw std::runtime_error(path + ": " + out.diagnostics.at(0).str());
  return std::move(*out.program);
}

std::unique_ptr<Pipeline> load(const std::string &name, AndersenOptions aopts = {}) {
  return buildPipeline(parseOrDie(corpus(name)), aopts);
}

QueryKey key(const Pipeline &p, const std::string &q) {
  std::string err;
  auto k = p.engine->parseQuery(q, &err);
  if (!k)
    throw std::runtime_error(q + ": " + err);
  return *k;
}

std::vector<QueryKey> loadKeys(const Program &p) {
  std::vector<QueryKey> keys;
  for (LabelId l = 0; l < p.numInstructions(); ++l)
    if (p.instr(l).kind == InstKind::Load)
      keys.push_back({{}, l, VarRef::top(p.instr(l).def)});
  return keys;
}

Names names(const Pipeline &p, const ObjSet &s) { return objectNames(p.ander.objects(), s); }

bool subset(const ObjSet &a, const ObjSet &b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

std::string join(const Names &v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? ", " : "") + v[i];
  return s + "}";
}

std::string where(const Pipeline &p, const std::string &file, const QueryKey &k) {
  return file + " " + p.engine->formatQuery(k);
}

/// Corpus files plus the generated programs, as (name, source) pairs.
std::vector<std::pair<std::string, Program>> allPrograms() {
  std::vector<std::pair<std::string, Program>> out;
  for (const std::string &f : test::corpusFiles())
    out.emplace_back(f, parseOrDie(corpus(f)));
  for (int seed = 0; seed < kRandomPrograms; ++seed) {
    LowerOutcome lowered = parseProgram(test::randomProgram(seed, seed % 2 == 1));
    if (!lowered.program)
      throw std::runtime_error("generated program " + std::to_string(seed) + " is ill-formed");
    out.emplace_back("random#" + std::to_string(seed), std::move(*lowered.program));
  }
  return out;
}

//===----------------------------------------------------------------------===//

Outcome motivating() {
  Outcome o;
  auto t0 = Clock::now();
  auto p = load("motivating.svfir");
  QueryKey z = key(*p, "l16:%z");
  PtsResult full = p->engine->queryFS(z, std::nullopt);
  Names su;
  for (LabelId l : full.strongUpdates)
    su.push_back(p->program.instr(l).label);
  p->engine->clearCache();
  PtsResult small = p->engine->queryFS(z, 3);
  double secs = since(t0);
  o.require(full.fullyResolved, "unlimited query not fully resolved");
  o.require(p->engine->formatPts(full.pts) == Names{"i"}, "pts = " + join(p->engine->formatPts(full.pts)));
  o.require(su == Names{"l6", "l9", "l15"}, "strong updates = " + join(su));
  o.require(!small.fullyResolved, "budget 3 resolved fully");
  o.require(p->engine->formatPts(small.pts) == Names{"i", "uao:a"},
            "budget-3 pts = " + join(p->engine->formatPts(small.pts)));
  o.require(secs < kMotivatingSeconds, "took " + std::to_string(secs) + " s");
  if (o.pass)
    o.detail = "pts {i}, SU {l6, l9, l15}, budget 3 -> {i, uao:a}, " + std::to_string(secs) + " s";
  return o;
}

Outcome fsMatchesOracle() {
  Outcome o;
  auto t0 = Clock::now();
  std::size_t n = 0;
  for (const std::string &file : test::corpusFiles()) {
    auto p = load(file);
    FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
    for (const QueryKey &k : loadKeys(p->program)) {
      ++n;
      PtsResult r = p->engine->queryFS(k, std::nullopt);
      o.require(r.fullyResolved, where(*p, file, k) + " not fully resolved");
      o.require(eraseContexts(r.pts) == fs.pts(k.var.var), where(*p, file, k) + ": engine " +
                                                               join(names(*p, eraseContexts(r.pts))) + " vs oracle " +
                                                               join(names(*p, fs.pts(k.var.var))));
    }
  }
  double secs = since(t0);
  o.require(secs < kOracleEqualitySeconds, "took " + std::to_string(secs) + " s");
  if (o.pass)
    o.detail = std::to_string(n) + " load queries equal the oracle, " + std::to_string(secs) + " s";
  return o;
}

Outcome sandwich() {
  Outcome o;
  const std::vector<Budget> budgets{0, 1, 3, 10, 100, std::nullopt};
  std::size_t checks = 0, fscsBelowOracle = 0;
  for (auto &[name, program] : allPrograms()) {
    bool loopFreeInterp = false;
    auto p = buildPipeline(std::move(program));
    FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
    ConcreteTrace trace = interpretConcrete(p->program, p->ander);
    loopFreeInterp = trace.interpretable && !trace.truncated;
    for (const QueryKey &k : loadKeys(p->program)) {
      VarId v = k.var.var;
      ObjSet concrete;
      for (const TopFact &f : trace.topFacts)
        if (f.label == k.label && f.var == v)
          concrete.insert(f.obj);
      for (Budget b : budgets)
        for (int shape = 0; shape < 3; ++shape) {
          StagePlan plan;
          if (shape == 0)
            plan.stages = {{Mode::FS, b}};
          else if (shape == 1)
            plan.stages = {{Mode::FSCS, b}};
          else
            plan.stages = {{Mode::FSCS, b}, {Mode::FS, b}};
          p->engine->clearCache();
          ObjSet got = eraseContexts(p->engine->runHybrid(k, plan).pts);
          ++checks;
          std::string at = where(*p, name, k) + " plan " + toString(plan);
          o.require(subset(got, p->ander.pts(v)), at + " exceeds the pre-analysis");
          if (shape == 0)
            o.require(subset(fs.pts(v), got), at + " misses oracle facts");
          else if (!subset(fs.pts(v), got))
            ++fscsBelowOracle;
          if (loopFreeInterp)
            o.require(subset(concrete, got), at + " misses concrete facts");
        }
    }
  }
  if (o.pass)
    o.detail = std::to_string(checks) + " checks; FS plans within [oracle, pre-analysis]; plans with an FSCS "
               "stage within [concrete facts, pre-analysis], " +
               std::to_string(fscsBelowOracle) + " of them strictly more precise than the FS oracle";
  return o;
}

Outcome budgetZero() {
  Outcome o;
  std::size_t n = 0;
  for (auto &[name, program] : allPrograms()) {
    auto p = buildPipeline(std::move(program));
    std::vector<QueryKey> keys;
    for (LabelId l = 0; l < p->program.numInstructions(); ++l)
      if (p->program.instr(l).def != kInvalidId)
        keys.push_back({{}, l, VarRef::top(p->program.instr(l).def)});
    BatchResult br = p->engine->answerAll(keys, *parseStagePlan("fs:0"), 1);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      ++n;
      const PtsResult &r = br.results[i];
      o.require(!r.fullyResolved && r.edgesTraversed == 0, where(*p, name, keys[i]) + " spent budget");
      o.require(eraseContexts(r.pts) == p->ander.pts(keys[i].var.var) &&
                    std::all_of(r.pts.begin(), r.pts.end(), [](const CtxObject &c) { return c.ctx.empty(); }),
                where(*p, name, keys[i]) + " differs from the pre-analysis");
    }
  }
  if (o.pass)
    o.detail = std::to_string(n) + " queries equal the pre-analysis";
  return o;
}

Outcome contextSensitivity() {
  Outcome o;
  auto p = load("context.svfir");
  QueryKey z = key(*p, "l5:%z");
  PtsResult cs = p->engine->runHybrid(z, *parseStagePlan("fscs:10000,fs:10000"));
  auto q = load("context.svfir");
  PtsResult fs = q->engine->runHybrid(z, *parseStagePlan("fs:10000"));
  FlowSensitiveResult oracle = solveFsOracle(q->program, q->ander, q->memssa);
  Names csNames = p->engine->formatPts(cs.pts), fsNames = q->engine->formatPts(fs.pts);
  ObjSet csErased = eraseContexts(cs.pts), fsErased = eraseContexts(fs.pts);
  o.require(csNames == Names{"[l4]c"}, "FSCS plan gave " + join(csNames));
  o.require(cs.stage == 0, "not answered by the FSCS stage");
  o.require(subset(csErased, fsErased) && csErased != fsErased, "FS result " + join(fsNames) + " not a strict superset");
  o.require(fsErased == oracle.pts(z.var.var), "FS result disagrees with the oracle");
  if (o.pass)
    o.detail = "FSCS {[l4]c} at stage 0; FS " + join(fsNames) + " (oracle agrees)";
  return o;
}

Outcome fieldSensitivity() {
  Outcome o;
  for (bool sensitive : {true, false}) {
    AndersenOptions opts;
    opts.fieldSensitive = sensitive;
    auto p = load("fields.svfir", opts);
    QueryKey r = key(*p, "l11:%r");
    Names got = p->engine->formatPts(p->engine->queryFS(r, std::nullopt).pts);
    Names want = sensitive ? Names{"c"} : Names{"b", "c"};
    Names oracle = names(*p, solveFsOracle(p->program, p->ander, p->memssa).pts(r.var.var));
    std::string mode = sensitive ? "field-sensitive" : "collapsed";
    o.require(got == want, mode + " gave " + join(got));
    o.require(oracle == want, mode + " oracle gave " + join(oracle));
  }
  if (o.pass)
    o.detail = "field-sensitive {c}, collapsed {b, c}, oracle agrees on both";
  return o;
}

Outcome uninitTrend() {
  Outcome o;
  std::ostringstream counts;
  for (const std::string &file : test::corpusFiles()) {
    Program original = parseOrDie(corpus(file));
    AndersenResult pre = solveAndersen(original);
    auto p = buildPipeline(instrumentUao(original, pre).program);
    std::vector<QueryKey> keys = generateQueries(p->program, p->ander);
    std::size_t fallback =
        classifyUninit(p->ander, keys, p->engine->answerAll(keys, *parseStagePlan("fs:0"), 1).results).numUaos;
    std::size_t fs =
        classifyUninit(p->ander, keys, p->engine->answerAll(keys, *parseStagePlan("fs:inf"), 1).results).numUaos;
    std::size_t oracle =
        classifyWithOracle(p->ander, keys, solveFsOracle(p->program, p->ander, p->memssa)).numUaos;
    o.require(fallback >= fs && fs == oracle, file + ": #UAO fallback " + std::to_string(fallback) + ", fs " +
                                                  std::to_string(fs) + ", oracle " + std::to_string(oracle));
    if (fallback != fs)
      counts << " " << file << " " << fallback << "->" << fs;
  }
  Program original = parseOrDie(corpus("motivating.svfir"));
  auto p = buildPipeline(instrumentUao(original, solveAndersen(original)).program);
  QueryKey z = key(*p, "l16:%z");
  UninitStatus small = classifyUninit(p->ander, {z}, {p->engine->queryFS(z, 3)}).entries[0].status;
  p->engine->clearCache();
  UninitStatus full = classifyUninit(p->ander, {z}, {p->engine->queryFS(z, std::nullopt)}).entries[0].status;
  o.require(small == UninitStatus::PotentiallyUninitialized && full == UninitStatus::Initialized,
            std::string("motivating z: budget 3 ") + toString(small) + ", unlimited " + toString(full));
  if (o.pass)
    o.detail = "fallback >= fs = oracle everywhere; reduced:" + counts.str() + "; z flips";
  return o;
}

Outcome concreteSoundness() {
  Outcome o;
  std::size_t programs = 0, facts = 0, traps = 0;
  for (const std::string &file : test::corpusFiles()) {
    auto p = load(file);
    ConcreteTrace t = interpretConcrete(p->program, p->ander);
    if (!t.interpretable)
      continue;
    ++programs;
    FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
    for (const TopFact &f : t.topFacts) {
      ++facts;
      std::string at = file + " " + p->program.instr(f.label).label + " " + p->program.varName(f.var);
      o.require(fs.pts(f.var).count(f.obj), at + " concrete fact missing from the oracle");
      o.require(subset(fs.pts(f.var), p->ander.pts(f.var)), at + " oracle exceeds the pre-analysis");
    }
    for (const MemFact &f : t.memFacts) {
      ++facts;
      std::string at = file + " " + p->program.instr(f.label).label + " " + p->ander.objects().name(f.obj);
      o.require(fs.ptsAt(f.label, f.obj).count(f.value), at + " concrete memory fact missing from the oracle");
      o.require(subset(fs.ptsAt(f.label, f.obj), p->ander.objPts(f.obj)), at + " oracle exceeds the pre-analysis");
    }
    if (t.traps.empty())
      continue;
    Program original = parseOrDie(corpus(file));
    auto ins = buildPipeline(instrumentUao(original, solveAndersen(original)).program);
    std::vector<QueryKey> keys = generateQueries(ins->program, ins->ander);
    UninitReport report = classifyWithOracle(ins->ander, keys, solveFsOracle(ins->program, ins->ander, ins->memssa));
    for (const Trap &trap : t.traps) {
      ++traps;
      const std::string &label = p->program.instr(trap.label).label;
      LabelId l = *ins->program.findLabel(label);
      bool flagged = false;
      for (const UninitEntry &e : report.entries)
        flagged |= e.key.label == l && e.status == UninitStatus::PotentiallyUninitialized;
      o.require(flagged, file + " trap at " + label + " has no PotentiallyUninitialized verdict");
    }
  }
  if (o.pass)
    o.detail = std::to_string(programs) + " interpretable programs, " + std::to_string(facts) + " facts, " +
               std::to_string(traps) + " traps all flagged";
  return o;
}

Outcome determinism() {
  Outcome o;
  std::size_t queries = 0;
  for (const char *planText : {"fs:10000", "fscs:10000,fs:10000"}) {
    StagePlan plan = *parseStagePlan(planText);
    std::string reference;
    for (bool cache : {true, false})
      for (int workers : {1, 2, 8}) {
        nlohmann::json all = nlohmann::json::array();
        for (const std::string &file : test::corpusFiles()) {
          EngineOptions eopts;
          eopts.cache = cache;
          auto p = buildPipeline(parseOrDie(corpus(file)), {}, eopts);
          std::vector<QueryKey> keys = loadKeys(p->program);
          BatchResult br = p->engine->answerAll(keys, plan, workers);
          for (std::size_t i = 0; i < keys.size(); ++i)
            all.push_back({{"query", file + " " + p->engine->formatQuery(keys[i])},
                           {"pts", p->engine->formatPts(br.results[i].pts)},
                           {"fullyResolved", br.results[i].fullyResolved}});
        }
        std::string text = all.dump();
        if (reference.empty()) {
          reference = text;
          queries = all.size();
        }
        o.require(text == reference, std::string(planText) + " differs with workers=" + std::to_string(workers) +
                                         " cache=" + (cache ? "on" : "off"));
      }
  }
  if (o.pass)
    o.detail = std::to_string(queries) + " queries, byte-identical for workers {1,2,8} x cache {on,off} x 2 plans";
  return o;
}

Outcome cycle() {
  Outcome o;
  auto p = load("cycle.svfir");
  QueryKey z = key(*p, "l6:%z");
  PtsResult r = p->engine->queryFS(z, std::nullopt);
  Names got = p->engine->formatPts(r.pts);
  Names oracle = names(*p, solveFsOracle(p->program, p->ander, p->memssa).pts(z.var.var));
  o.require(r.fullyResolved, "did not terminate within the budget");
  o.require(got == Names{"a", "b"}, "pts = " + join(got));
  o.require(oracle == got, "oracle gave " + join(oracle));
  o.require(r.rounds == kExpectedCycleRounds, "rounds = " + std::to_string(r.rounds));
  if (o.pass)
    o.detail = "{a, b} in " + std::to_string(r.rounds) + " rounds";
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"motivating end-to-end", motivating},
      {"FS equals whole-program oracle", fsMatchesOracle},
      {"soundness sandwich", sandwich},
      {"budget zero is the pre-analysis", budgetZero},
      {"context sensitivity", contextSensitivity},
      {"field sensitivity", fieldSensitivity},
      {"uninit trend", uninitTrend},
      {"concrete soundness", concreteSoundness},
      {"determinism and cache transparency", determinism},
      {"cycle fixpoint", cycle},
  };
  int failed = 0;
  for (const auto &[name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed;
}
