#include "corpus.h"

#include <doctest.h>

using namespace supa;
using namespace supa::test;
using Names = std::vector<std::string>;

namespace {
Names ptsOf(const Program &p, const AndersenResult &a, const std::string &fn, const std::string &var) {
  return objectNames(a.objects(), a.pts(*p.findVar(*p.findFunction(fn), var)));
}
} // namespace

TEST_CASE("swap pre-analysis") {
  Program p = loadProgram("swap_inline.svfir");
  AndersenResult a = solveAndersen(p);
  CHECK(ptsOf(p, a, "main", "%p") == Names{"a"});
  CHECK(ptsOf(p, a, "main", "%q") == Names{"c"});
}

TEST_CASE("motivating pre-analysis") {
  Program p = loadProgram("motivating.svfir");
  AndersenResult a = solveAndersen(p);
  CHECK(ptsOf(p, a, "main", "%t3") == Names{"b", "d"});
  CHECK(ptsOf(p, a, "main", "%z") == Names{"i", "uao:a"});
}

TEST_CASE("single allocation") {
  Program p = mustParse("func @main() {\n  l1: %p = alloca\n  l2: ret\n}\n");
  CHECK(ptsOf(p, solveAndersen(p), "main", "%p") == Names{"l1"});
}

TEST_CASE("indirect callees are discovered on the fly") {
  Program p = loadProgram("indirect_call.svfir");
  AndersenResult a = solveAndersen(p);
  LabelId cs = *p.findLabel("l10");
  CHECK((a.callees(cs) == std::set<FuncId>{*p.findFunction("setc"), *p.findFunction("keep")}));
  CHECK(ptsOf(p, a, "main", "%v") == Names{"b", "c"});
}

TEST_CASE("recursion") {
  Program p = loadProgram("mutual_recursion.svfir");
  AndersenResult a = solveAndersen(p);
  FuncId even = *p.findFunction("even"), odd = *p.findFunction("odd");
  CHECK(a.inRecursion(even));
  CHECK(a.inRecursion(odd));
  CHECK(a.sameScc(even, odd));
  CHECK_FALSE(a.inRecursion(p.mainFunction()));
}

TEST_CASE("fields and collapsing") {
  Program p = loadProgram("fields.svfir");
  CHECK(ptsOf(p, solveAndersen(p), "main", "%r") == Names{"c"});
  CHECK(ptsOf(p, solveAndersen(p, {false, 4}), "main", "%r") == Names{"b", "c"});
}

TEST_CASE("a field path reaching the depth limit collapses its base") {
  Program p = mustParse("func @main() {\nbb0:\n  l1: %s = alloca s\n  l2: jmp bb1\nbb1:\n"
                        "  l3: %c = phi [%s, bb0], [%n, bb1]\n  l4: %n = field %c, 1\n  l5: br bb1 bb2\n"
                        "bb2:\n  l6: ret\n}\n");
  AndersenResult a = solveAndersen(p);
  ObjId s = *a.objects().findByName("s");
  CHECK(a.objects().isCollapsed(s));
  CHECK(ptsOf(p, a, "main", "%n") == Names{"s"});
}

TEST_CASE("json export is sorted") {
  Program p = loadProgram("motivating.svfir");
  std::string j = solveAndersen(p).toJson(p);
  CHECK(j.find("\"pts\"") != std::string::npos);
  CHECK(j == solveAndersen(p).toJson(p));
}
