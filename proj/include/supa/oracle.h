//===- oracle.h -- Whole-program flow-sensitive analysis and interpreter ----//
//
// Ground truth for tests. The flow-sensitive solver is a dense iterative
// analysis over every function's CFG; calls are resolved from its own
// points-to sets. The interpreter enumerates every path of a loop-free,
// non-recursive program with concrete object identities.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "supa/andersen.h"
#include "supa/memssa.h"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace supa {

using MemState = std::map<ObjId, ObjSet>;

class FlowSensitiveResult {
public:
  /// Top-level variables are in SSA form, so one set per variable.
  const ObjSet &pts(VarId v) const { return top_[v]; }
  /// Contents of `o` after `l` executes. Only objects the instruction's
  /// function may access are tracked; others read as empty.
  const ObjSet &ptsAt(LabelId l, ObjId o) const;
  const MemState &stateAfter(LabelId l) const { return out_[l]; }
  /// Callees of a callsite resolved from flow-sensitive points-to sets.
  const std::set<FuncId> &callees(LabelId cs) const { return callees_[cs]; }
  int rounds() const { return rounds_; }

  /// {"loads": [{"label", "var", "pts"}]} sorted by label order.
  std::string toJson(const Program &program, const AndersenResult &ander) const;

private:
  friend class FsOracleSolver;
  std::vector<ObjSet> top_;
  std::vector<MemState> out_;
  std::vector<std::set<FuncId>> callees_;
  int rounds_ = 0;
};

FlowSensitiveResult solveFsOracle(const Program &program, const AndersenResult &ander, const MemSSA &memssa);

struct TopFact {
  LabelId label;
  VarId var;
  ObjId obj;
  auto operator<=>(const TopFact &) const = default;
};

/// After store `label`, location `obj` holds a pointer to `value`.
struct MemFact {
  LabelId label;
  ObjId obj;
  ObjId value;
  auto operator<=>(const MemFact &) const = default;
};

/// Load `reader` observed the value written by `writer` into `obj`.
struct DefUsePair {
  LabelId writer;
  LabelId reader;
  ObjId obj;
  auto operator<=>(const DefUsePair &) const = default;
};

/// Load `label` read location `obj` before anything was written to it.
struct Trap {
  LabelId label;
  ObjId obj;
  auto operator<=>(const Trap &) const = default;
};

struct ConcretePath {
  /// Abstract object held by each variable that received a pointer value.
  std::map<VarId, ObjId> finalEnv;
  /// Abstract contents of every written location when the path ended.
  std::map<ObjId, ObjSet> finalMemory;
  bool completed = false;
};

struct ConcreteTrace {
  bool interpretable = false;
  std::string reason;
  /// Path enumeration stopped at a limit; facts cover a subset of paths.
  bool truncated = false;
  std::vector<ConcretePath> paths;
  std::set<TopFact> topFacts;
  std::set<MemFact> memFacts;
  std::set<DefUsePair> defUse;
  std::set<Trap> traps;
};

struct InterpreterLimits {
  std::size_t maxPaths = 4096;
  std::size_t maxSteps = 1'000'000;
};

/// Eligible for a read-before-write trap: stack or heap memory that is not
/// default-initialized, not an array and not owned by a recursive function.
bool trapEligible(const AndersenResult &ander, ObjId o);

ConcreteTrace interpretConcrete(const Program &program, const AndersenResult &ander,
                                const InterpreterLimits &limits = {});

} // namespace supa
