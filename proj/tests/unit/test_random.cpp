#include "corpus.h"
#include "random_program.h"
#include "supa/oracle.h"
#include "supa/uninit.h"

#include <doctest.h>

using namespace supa;
using namespace supa::test;

namespace {
bool subset(const ObjSet &a, const ObjSet &b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }
} // namespace

TEST_CASE("random programs are well formed and sound") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    bool loopy = seed % 2 == 1;
    std::string text = randomProgram(seed, loopy);
    CAPTURE(text);
    LowerOutcome lowered = parseProgram(text);
    REQUIRE(lowered.program);
    auto p = buildPipeline(std::move(*lowered.program));
    FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
    for (LabelId l = 0; l < p->program.numInstructions(); ++l) {
      const Instruction &in = p->program.instr(l);
      if (in.kind != InstKind::Load)
        continue;
      QueryKey k{{}, l, VarRef::top(in.def)};
      CAPTURE(in.label);
      PtsResult full = p->engine->queryFS(k, std::nullopt);
      CHECK(full.fullyResolved);
      CHECK(eraseContexts(full.pts) == fs.pts(in.def));
      for (Budget b : std::vector<Budget>{0, 1, 3, 10, 100}) {
        p->engine->clearCache();
        ObjSet got = eraseContexts(p->engine->queryFS(k, b).pts);
        CHECK(subset(fs.pts(in.def), got));
        CHECK(subset(got, p->ander.pts(in.def)));
        ObjSet cs = eraseContexts(p->engine->queryFSCS(k, b, 3).pts);
        CHECK(subset(cs, p->ander.pts(in.def)));
      }
    }
  }
}

TEST_CASE("every concrete read-before-write is flagged on random programs") {
  std::size_t traps = 0;
  for (std::uint64_t seed = 0; seed < 200; seed += 2) {
    std::string text = randomProgram(seed, false);
    CAPTURE(text);
    Program prog = std::move(*parseProgram(text).program);
    AndersenResult ander = solveAndersen(prog);
    ConcreteTrace t = interpretConcrete(prog, ander);
    if (!t.interpretable || t.traps.empty())
      continue;
    auto ins = buildPipeline(instrumentUao(prog, ander).program);
    std::vector<QueryKey> keys = generateQueries(ins->program, ins->ander);
    UninitReport r = classifyUninit(ins->ander, keys, ins->engine->answerAll(keys, *parseStagePlan("fs:inf"), 1).results);
    for (const Trap &trap : t.traps) {
      ++traps;
      LabelId l = *ins->program.findLabel(prog.instr(trap.label).label);
      CAPTURE(prog.instr(trap.label).label);
      CHECK(std::any_of(r.entries.begin(), r.entries.end(), [&](const UninitEntry &e) {
        return e.key.label == l && e.status == UninitStatus::PotentiallyUninitialized;
      }));
    }
  }
  CHECK(traps > 0);
}
