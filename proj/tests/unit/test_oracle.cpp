#include "corpus.h"
#include "supa/oracle.h"

#include <doctest.h>

using namespace supa;
using namespace supa::test;
using Names = std::vector<std::string>;

namespace {
Names names(const Pipeline &p, const ObjSet &s) { return objectNames(p.ander.objects(), s); }
} // namespace

TEST_CASE("oracle on the motivating program") {
  auto p = load("motivating.svfir");
  FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
  VarId z = *p->program.findVar(p->program.mainFunction(), "%z");
  CHECK(names(*p, fs.pts(z)) == Names{"i"});
}

TEST_CASE("oracle on a straight-line copy") {
  auto p = buildPipeline(mustParse("func @main() {\n  l1: %p = alloca\n  l2: %q = copy %p\n  l3: ret\n}\n"));
  FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
  CHECK(names(*p, fs.pts(p->program.instr(*p->program.findLabel("l2")).def)) == Names{"l1"});
}

TEST_CASE("oracle merges branch facts") {
  auto p = load("weak_update.svfir");
  FlowSensitiveResult fs = solveFsOracle(p->program, p->ander, p->memssa);
  LabelId l11 = *p->program.findLabel("l11");
  CHECK(names(*p, fs.pts(p->program.instr(l11).def)) == Names{"c", "d"});
  ObjId a = *p->ander.objects().findByName("a");
  CHECK(names(*p, fs.ptsAt(l11, a)) == Names{"c", "d"});
}

TEST_CASE("interpreter on the motivating program") {
  auto p = load("motivating.svfir");
  ConcreteTrace t = interpretConcrete(p->program, p->ander);
  REQUIRE(t.interpretable);
  REQUIRE(t.paths.size() == 1);
  VarId z = *p->program.findVar(p->program.mainFunction(), "%z");
  CHECK(p->ander.objects().name(t.paths[0].finalEnv.at(z)) == "i");
  CHECK(t.traps.empty());
}

TEST_CASE("interpreter on an empty main") {
  auto p = buildPipeline(mustParse("func @main() {\n  l1: ret\n}\n"));
  ConcreteTrace t = interpretConcrete(p->program, p->ander);
  CHECK(t.interpretable);
  CHECK(t.topFacts.empty());
  CHECK(t.memFacts.empty());
}

TEST_CASE("interpreter swaps values") {
  auto p = load("swap_inline.svfir");
  ConcreteTrace t = interpretConcrete(p->program, p->ander);
  REQUIRE(t.paths.size() == 1);
  const auto &mem = t.paths[0].finalMemory;
  const ObjectTable &objs = p->ander.objects();
  CHECK(names(*p, mem.at(*objs.findByName("a"))) == Names{"d"});
  CHECK(names(*p, mem.at(*objs.findByName("c"))) == Names{"b"});
}

TEST_CASE("interpreter rejects loops") {
  auto p = load("cycle.svfir");
  CHECK_FALSE(interpretConcrete(p->program, p->ander).interpretable);
}

TEST_CASE("interpreter traps on read before write") {
  auto p = buildPipeline(mustParse("func @main() {\n  l1: %p = alloca a\n  l2: %x = load %p\n  l3: ret\n}\n"));
  ConcreteTrace t = interpretConcrete(p->program, p->ander);
  REQUIRE(t.traps.size() == 1);
  CHECK(p->program.instr(t.traps.begin()->label).label == "l2");
}
