#include "supa/cli.h"

#include "supa/oracle.h"
#include "supa/pipeline.h"
#include "supa/uninit.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace supa {

namespace {

using nlohmann::json;

struct RunConfig {
  std::string inputFile;
  std::string stages = "fs:10000";
  int ctxDepth = 3;
  int threads = 1;
  bool noCache = false;
  bool fieldInsensitive = false;
  bool timing = false;
  bool compareOracle = false;
  std::string output;
  std::string dumpKind = "svfg-dot";
  std::vector<std::string> queries;
};

struct Failure {
  int code;
  std::string message;
};

/// Relative paths that do not exist are looked up under $SUPA_CORPUS.
std::string resolveInput(const std::string &path) {
  namespace fs = std::filesystem;
  if (fs::exists(path) || fs::path(path).is_absolute())
    return path;
  if (const char *root = std::getenv("SUPA_CORPUS")) {
    fs::path alt = fs::path(root) / path;
    if (fs::exists(alt))
      return alt.string();
  }
  return path;
}

Program loadInput(const RunConfig &cfg) {
  std::string path = resolveInput(cfg.inputFile);
  LowerOutcome out;
  try {
    out = parseProgramFile(path);
  } catch (const std::exception &e) {
    throw Failure{1, e.what()};
  }
  if (!out.program) {
    std::string msg;
    for (const Diagnostic &d : out.diagnostics)
      msg += path + ":" + d.str() + "\n";
    throw Failure{1, msg};
  }
  return std::move(*out.program);
}

StagePlan loadPlan(const RunConfig &cfg) {
  auto plan = parseStagePlan(cfg.stages, cfg.ctxDepth);
  if (!plan)
    throw Failure{2, "invalid --stages '" + cfg.stages + "'"};
  return *plan;
}

std::unique_ptr<Pipeline> makePipeline(Program program, const RunConfig &cfg) {
  AndersenOptions aopts;
  aopts.fieldSensitive = !cfg.fieldInsensitive;
  EngineOptions eopts;
  eopts.cache = !cfg.noCache;
  return buildPipeline(std::move(program), aopts, eopts);
}

json resultJson(const Engine &engine, const QueryKey &key, const PtsResult &r) {
  std::vector<std::string> su;
  for (LabelId l : r.strongUpdates)
    su.push_back(engine.program().instr(l).label);
  return {{"query", engine.formatQuery(key)},
          {"pts", engine.formatPts(r.pts)},
          {"fullyResolved", r.fullyResolved},
          {"stage", r.stage},
          {"strongUpdates", su}};
}

json statsJson(const BatchStats &s, const RunConfig &cfg) {
  json j = {{"queries", s.queries},
            {"fallbacks", s.fallbacks},
            {"strongUpdates", s.strongUpdates},
            {"edges", s.edges},
            {"answeredPerStage", s.answeredPerStage}};
  if (cfg.timing) {
    j["totalSeconds"] = s.totalSeconds;
    j["meanSeconds"] = s.meanSeconds;
  }
  return j;
}

std::vector<QueryKey> loadQueries(const Program &program, const AndersenResult &ander) {
  (void)ander;
  std::vector<QueryKey> keys;
  for (LabelId l = 0; l < program.numInstructions(); ++l)
    if (program.instr(l).kind == InstKind::Load)
      keys.push_back({{}, l, VarRef::top(program.instr(l).def)});
  return keys;
}

std::string runAnalyze(const RunConfig &cfg) {
  StagePlan plan = loadPlan(cfg);
  auto p = makePipeline(loadInput(cfg), cfg);
  std::vector<QueryKey> keys = loadQueries(p->program, p->ander);
  BatchResult br = p->engine->answerAll(keys, plan, cfg.threads);
  json results = json::array();
  for (std::size_t i = 0; i < keys.size(); ++i)
    results.push_back(resultJson(*p->engine, keys[i], br.results[i]));
  json j = {{"stages", toString(plan)}, {"results", results}, {"stats", statsJson(br.stats, cfg)}};
  return j.dump(2);
}

std::string runQuery(const RunConfig &cfg) {
  StagePlan plan = loadPlan(cfg);
  auto p = makePipeline(loadInput(cfg), cfg);
  std::vector<QueryKey> keys;
  for (const std::string &q : cfg.queries) {
    std::string err;
    auto k = p->engine->parseQuery(q, &err);
    if (!k)
      throw Failure{1, "query " + q + ": " + err};
    keys.push_back(*k);
  }
  BatchResult br = p->engine->answerAll(keys, plan, cfg.threads);
  if (keys.size() == 1)
    return resultJson(*p->engine, keys[0], br.results[0]).dump(2);
  json results = json::array();
  for (std::size_t i = 0; i < keys.size(); ++i)
    results.push_back(resultJson(*p->engine, keys[i], br.results[i]));
  return results.dump(2);
}

std::string runUninit(const RunConfig &cfg) {
  StagePlan plan = loadPlan(cfg);
  Program original = loadInput(cfg);
  AndersenResult pre = solveAndersen(original);
  auto p = makePipeline(instrumentUao(original, pre).program, cfg);
  std::vector<QueryKey> keys = generateQueries(p->program, p->ander);
  BatchResult br = p->engine->answerAll(keys, plan, cfg.threads);
  UninitReport report = classifyUninit(p->ander, keys, br.results);
  std::optional<UninitReport> oracle;
  if (cfg.compareOracle)
    oracle = classifyWithOracle(p->ander, keys, solveFsOracle(p->program, p->ander, p->memssa));

  json entries = json::array();
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const UninitEntry &e = report.entries[i];
    json row = {{"query", p->engine->formatQuery(e.key)},
                {"status", toString(e.status)},
                {"uaos", objectNames(p->ander.objects(), e.reachingUaos)},
                {"fullyResolved", e.fullyResolved}};
    if (oracle)
      row["oracle"] = toString(oracle->entries[i].status);
    entries.push_back(row);
  }
  json totals = {{"queries", report.numQueries}, {"uninit", report.numUninit}, {"uaos", report.numUaos}};
  if (oracle)
    totals["oracleUaos"] = oracle->numUaos;
  json j = {{"stages", toString(plan)}, {"queries", entries}, {"totals", totals}, {"stats", statsJson(br.stats, cfg)}};
  return j.dump(2);
}

std::string runOracle(const RunConfig &cfg) {
  auto p = makePipeline(loadInput(cfg), cfg);
  return solveFsOracle(p->program, p->ander, p->memssa).toJson(p->program, p->ander);
}

std::string runDump(const RunConfig &cfg) {
  auto p = makePipeline(loadInput(cfg), cfg);
  if (cfg.dumpKind == "svfg-dot")
    return p->svfg.toDot(p->program, p->ander);
  if (cfg.dumpKind == "svfg-json")
    return p->svfg.toJson(p->program, p->ander);
  if (cfg.dumpKind == "ander")
    return p->ander.toJson(p->program);
  if (cfg.dumpKind == "memssa")
    return p->memssa.dump(p->program, p->ander);
  throw Failure{2, "unknown --kind '" + cfg.dumpKind + "'"};
}

} // namespace

int runCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  RunConfig cfg;
  CLI::App app{"Demand-driven flow- and context-sensitive pointer analysis"};
  app.require_subcommand(1);
  auto addCommon = [&](CLI::App *sub) {
    sub->add_option("--file,-f", cfg.inputFile, "Input .svfir program")->required();
    sub->add_option("--output,-o", cfg.output, "Write output here instead of stdout");
    sub->add_flag("--field-insensitive", cfg.fieldInsensitive, "Collapse every object to its base");
  };
  auto addEngine = [&](CLI::App *sub) {
    sub->add_option("--stages", cfg.stages, "Stage plan, e.g. fscs:10000,fs:inf");
    sub->add_option("--cxt-depth", cfg.ctxDepth, "Maximum context depth")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--no-cache", cfg.noCache, "Disable the shared query cache");
    sub->add_flag("--timing", cfg.timing, "Include wall-clock timings in the stats");
  };
  CLI::App *analyze = app.add_subcommand("analyze", "Answer every load-result query");
  addCommon(analyze);
  addEngine(analyze);
  CLI::App *query = app.add_subcommand("query", "Answer the given queries");
  addCommon(query);
  addEngine(query);
  query->add_option("--query,-q", cfg.queries, "LABEL:VAR, e.g. l16:%z")->required();
  CLI::App *uninit = app.add_subcommand("uninit", "Detect potentially uninitialized pointers");
  addCommon(uninit);
  addEngine(uninit);
  uninit->add_flag("--compare-oracle", cfg.compareOracle, "Add the whole-program verdict");
  CLI::App *oracle = app.add_subcommand("oracle", "Whole-program flow-sensitive points-to sets of loads");
  addCommon(oracle);
  CLI::App *dump = app.add_subcommand("dump", "Print an intermediate structure");
  addCommon(dump);
  dump->add_option("--kind", cfg.dumpKind, "svfg-dot, svfg-json, ander or memssa")
      ->check(CLI::IsMember({"svfg-dot", "svfg-json", "ander", "memssa"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    std::string text;
    if (analyze->parsed())
      text = runAnalyze(cfg);
    else if (query->parsed())
      text = runQuery(cfg);
    else if (uninit->parsed())
      text = runUninit(cfg);
    else if (oracle->parsed())
      text = runOracle(cfg);
    else
      text = runDump(cfg);
    if (text.empty() || text.back() != '\n')
      text += '\n';
    if (cfg.output.empty()) {
      out << text;
    } else {
      std::ofstream f(cfg.output);
      if (!f)
        throw Failure{1, "cannot write " + cfg.output};
      f << text;
    }
    return 0;
  } catch (const Failure &f) {
    err << "error: " << f.message << (f.message.empty() || f.message.back() == '\n' ? "" : "\n");
    return f.code;
  }
}

} // namespace supa
