//===- andersen.h -- Inclusion-based pre-analysis ---------------------------//
//
// Flow- and context-insensitive points-to analysis. Seeds the value-flow
// graph, supplies the call graph, and is the fallback answer for queries that
// run out of budget.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "supa/ir.h"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace supa {

using ObjSet = std::set<ObjId>;

struct AndersenOptions {
  /// When false every Field resolves to its base object, which is then
  /// treated as collapsed (never a strong-update target).
  bool fieldSensitive = true;
  /// Field paths longer than this collapse their base object. Any
  /// positive-weight cycle grows paths without bound, so it always trips.
  int maxFieldDepth = 4;
};

class AndersenResult {
public:
  const ObjectTable &objects() const { return objects_; }

  const ObjSet &pts(VarId v) const { return varPts_[v]; }
  const ObjSet &objPts(ObjId o) const;

  /// o.fld as interned by the solver; o itself for monolithic objects.
  ObjId fieldOf(ObjId o, int fld) const;

  const std::set<FuncId> &callees(LabelId callsite) const;
  /// Callsites that may invoke f (Andersen call graph).
  const std::set<LabelId> &callers(FuncId f) const;

  int sccOf(FuncId f) const { return sccOf_[f]; }
  /// Function is part of a call-graph cycle (including self-recursion).
  bool inRecursion(FuncId f) const { return recursive_[f]; }
  bool sameScc(FuncId a, FuncId b) const { return sccOf_[a] == sccOf_[b] && recursive_[a]; }
  const std::vector<std::vector<FuncId>> &sccs() const { return sccs_; }

  const std::vector<Diagnostic> &diagnostics() const { return diags_; }
  const AndersenOptions &options() const { return opts_; }
  int solverRounds() const { return rounds_; }

  /// Deterministic JSON: {"pts": {var: [objs]}, "objects": {...}, "callgraph": {...}}.
  std::string toJson(const Program &program) const;

private:
  friend class AndersenSolver;

  AndersenOptions opts_;
  ObjectTable objects_;
  std::vector<ObjSet> varPts_;
  std::map<ObjId, ObjSet> objPts_;
  std::map<LabelId, std::set<FuncId>> callGraph_;
  std::vector<std::set<LabelId>> callers_;
  std::vector<int> sccOf_;
  std::vector<bool> recursive_;
  std::vector<std::vector<FuncId>> sccs_;
  std::vector<Diagnostic> diags_;
  int rounds_ = 0;
};

AndersenResult solveAndersen(const Program &program, const AndersenOptions &opts = {});

/// Sorted display names.
std::vector<std::string> objectNames(const ObjectTable &table, const ObjSet &objs);

} // namespace supa
