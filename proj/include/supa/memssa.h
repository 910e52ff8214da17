//===- memssa.h -- Mod-ref summaries and memory SSA -------------------------//
//
// Loads carry mu (use) operators, stores carry chi (def and use) operators,
// callsites carry both for the side effects of their callees, and each
// callee's FunEntry/FunExit carries chi/mu for objects passed in and out.
// Address-taken objects are then renamed with iterated dominance frontiers.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "supa/andersen.h"
#include "supa/ir.h"

#include <map>
#include <string>
#include <vector>

namespace supa {

struct ModRefSummary {
  /// Loads: U = AnderPts(q). Callsites: escaping callee uses and defs.
  std::vector<ObjSet> use;
  /// Stores: D = AnderPts(p). Callsites: escaping callee defs.
  std::vector<ObjSet> def;
  std::vector<ObjSet> funcUse;
  std::vector<ObjSet> funcDef;
  /// Objects passed into / out of each function through its callsites.
  std::vector<ObjSet> entryChi;
  std::vector<ObjSet> exitMu;
  int rounds = 0;
};

/// Objects reachable from the callsite's actuals, its result, and globals.
ObjSet escapingObjects(const Program &program, const AndersenResult &ander, LabelId callsite);

ModRefSummary computeModRef(const Program &program, const AndersenResult &ander);

struct MuOp {
  ObjId obj;
  int version;
};

struct ChiOp {
  ObjId obj;
  int def;
  int use;
};

struct MemPhi {
  ObjId obj;
  int def;
  std::vector<std::pair<BlockId, int>> incoming;
};

struct VersionDef {
  enum class Kind { LiveIn, Instr, Phi };
  Kind kind = Kind::LiveIn;
  LabelId label = kInvalidId; // Instr
  BlockId block = kInvalidId; // Phi
  std::size_t phiIndex = 0;   // Phi: index into phis(func, block)
};

class MemSSA {
public:
  const ModRefSummary &modref() const { return modref_; }
  const std::vector<MuOp> &mus(LabelId l) const { return mus_[l]; }
  const std::vector<ChiOp> &chis(LabelId l) const { return chis_[l]; }
  const std::vector<MemPhi> &phis(FuncId f, BlockId b) const;
  const VersionDef &versionDef(FuncId f, ObjId o, int version) const;
  int numVersions(FuncId f, ObjId o) const;

  bool hasMu(LabelId l, ObjId o) const;
  bool hasChi(LabelId l, ObjId o) const;

  /// Non-phi definitions that reach a use of `version`, looking through
  /// memory phis. Sorted; empty when only the live-in value reaches.
  std::vector<LabelId> reachingDefs(FuncId f, ObjId o, int version) const;

  /// Annotated program text, e.g. "    chi a2 = a1".
  std::string dump(const Program &program, const AndersenResult &ander) const;

private:
  friend class MemSSABuilder;

  ModRefSummary modref_;
  std::vector<std::vector<MuOp>> mus_;
  std::vector<std::vector<ChiOp>> chis_;
  std::map<std::pair<FuncId, BlockId>, std::vector<MemPhi>> phis_;
  std::map<std::pair<FuncId, ObjId>, std::vector<VersionDef>> versions_;
};

MemSSA buildMemSSA(const Program &program, const AndersenResult &ander, ModRefSummary modref);
inline MemSSA buildMemSSA(const Program &program, const AndersenResult &ander) {
  return buildMemSSA(program, ander, computeModRef(program, ander));
}

} // namespace supa
