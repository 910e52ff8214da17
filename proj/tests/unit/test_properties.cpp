#include "corpus.h"
#include "corpus_list.h"
#include "supa/oracle.h"

#include <doctest.h>

using namespace supa;
using namespace supa::test;

namespace {
std::vector<QueryKey> loadKeys(const Program &p) {
  std::vector<QueryKey> keys;
  for (LabelId l = 0; l < p.numInstructions(); ++l)
    if (p.instr(l).kind == InstKind::Load)
      keys.push_back({{}, l, VarRef::top(p.instr(l).def)});
  return keys;
}

bool subset(const ObjSet &a, const ObjSet &b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }
} // namespace

TEST_CASE("unlimited flow-sensitive queries equal the oracle") {
  for (const std::string &file : corpusFiles()) {
    CAPTURE(file);
    auto p = load(file);
    FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
    for (const QueryKey &k : loadKeys(p->program)) {
      CAPTURE(p->engine->formatQuery(k));
      PtsResult r = p->engine->queryFS(k, std::nullopt);
      CHECK(r.fullyResolved);
      CHECK(objectNames(p->ander.objects(), eraseContexts(r.pts)) ==
            objectNames(p->ander.objects(), fs.pts(k.var.var)));
    }
  }
}

TEST_CASE("every budget and plan lies between the oracle and the pre-analysis") {
  const std::vector<Budget> budgets{0, 1, 3, 10, 100, std::nullopt};
  for (const std::string &file : corpusFiles()) {
    CAPTURE(file);
    auto p = load(file);
    FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
    for (const QueryKey &k : loadKeys(p->program))
      for (Budget b : budgets)
        for (const char *shape : {"fs", "fscs", "fscs+fs"}) {
          std::string s = shape;
          StagePlan plan;
          if (s == "fs")
            plan.stages = {{Mode::FS, b}};
          else if (s == "fscs")
            plan.stages = {{Mode::FSCS, b}};
          else
            plan.stages = {{Mode::FSCS, b}, {Mode::FS, b}};
          p->engine->clearCache();
          ObjSet got = eraseContexts(p->engine->runHybrid(k, plan).pts);
          CAPTURE(p->engine->formatQuery(k));
          CAPTURE(s);
          CHECK(subset(got, p->ander.pts(k.var.var)));
          if (s == "fs")
            CHECK(subset(fs.pts(k.var.var), got));
        }
  }
}
