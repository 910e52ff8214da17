//===- ir.h -- Partial-SSA program representation ---------------------------//
//
// A small LLVM-like IR with nine instruction kinds (AddrOf, Copy, Phi, Field,
// Load, Store, Call, FunEntry, FunExit). Top-level variables are in SSA form;
// address-taken objects are only reachable through loads and stores.
//
// Two layers live here:
//   - ModuleAst: a mutable, string-based tree mirroring the .svfir text.
//     The parser produces it, the printer consumes it, and transformations
//     (UAO instrumentation, random generation) edit it.
//   - Program: the validated, index-based, immutable form every analysis
//     consumes. Built from a ModuleAst by lowerModule().
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace supa {

using LabelId = std::uint32_t;
using VarId = std::uint32_t;
using ObjId = std::uint32_t;
using FuncId = std::uint32_t;
using BlockId = std::uint32_t;

inline constexpr std::uint32_t kInvalidId = std::numeric_limits<std::uint32_t>::max();

struct SourceLoc {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  SourceLoc loc;
  std::string rule;
  std::string message;

  std::string str() const;
};

//===----------------------------------------------------------------------===//
// AST
//===----------------------------------------------------------------------===//

enum class AstOp {
  Alloca,
  Heap,
  Heap0,
  Addr,
  Uao,
  Copy,
  Phi,
  Field,
  Load,
  Store,
  Call,
};

struct InstrAst {
  std::string label;
  AstOp op = AstOp::Copy;
  std::string def;                   // "%x" without the sigil; empty if none
  std::vector<std::string> operands; // variable names (no sigil)
  std::vector<std::string> phiBlocks;
  std::string objectName;            // alloca/heap name, addr/uao target ("@g" kept)
  bool isArray = false;
  int field = 0;
  std::string callee;                // "@f" or "%fp"
  SourceLoc loc;
};

struct TermAst {
  enum class Kind { None, Jmp, Br, Ret };
  Kind kind = Kind::None;
  std::string label;
  std::vector<std::string> targets;
  std::string retValue; // empty for `ret`
  SourceLoc loc;
};

struct BlockAst {
  std::string name;
  std::vector<InstrAst> instrs;
  TermAst term;
  SourceLoc loc;
};

struct FunctionAst {
  std::string name;       // without '@'
  std::string entryLabel; // empty = default "<name>.entry"
  std::vector<std::string> params;
  std::vector<BlockAst> blocks;
  SourceLoc loc;
};

struct GlobalAst {
  std::string name; // without '@'
  bool isArray = false;
  std::string initTarget; // without '@', empty if none
  SourceLoc loc;
};

struct ModuleAst {
  std::vector<GlobalAst> globals;
  std::vector<FunctionAst> functions;
};

struct ParseOutcome {
  std::optional<ModuleAst> module;
  std::vector<Diagnostic> diagnostics;
};

/// Parses .svfir text. Syntax errors only; semantic checks run in lowerModule.
ParseOutcome parseModule(std::string_view text);

/// Canonical text form. Parsing the output yields an equivalent module.
std::string printModule(const ModuleAst &module);

//===----------------------------------------------------------------------===//
// Program
//===----------------------------------------------------------------------===//

enum class InstKind { AddrOf, Copy, Phi, Field, Load, Store, Call, FunEntry, FunExit };

enum class ObjectKind { Stack, Heap, Global, Function, UAO };

const char *toString(InstKind kind);
const char *toString(ObjectKind kind);

/// A base (allocation-site) object as declared in the program. Field
/// sub-objects are interned later in an ObjectTable.
struct ObjectInfo {
  ObjectKind kind = ObjectKind::Stack;
  std::string name;                  // display name
  LabelId allocSite = kInvalidId;    // AddrOf label for stack/heap objects
  FuncId owner = kInvalidId;         // owning function for stack/heap objects
  FuncId function = kInvalidId;      // for Function objects
  ObjId uaoOf = kInvalidId;          // for UAO objects
  bool isArray = false;
  bool defaultInit = false;          // heap0 and globals
};

struct Instruction {
  std::string label;
  InstKind kind = InstKind::Copy;
  FuncId func = kInvalidId;
  BlockId block = kInvalidId;
  VarId def = kInvalidId;
  /// Copy: sources. Phi: incoming values. Field/Load: {base}. Store: {ptr, value}.
  /// Call: actual arguments. FunEntry: formal parameters. FunExit: {ret} or {}.
  std::vector<VarId> operands;
  std::vector<BlockId> phiBlocks;
  ObjId object = kInvalidId; // AddrOf
  int field = 0;             // Field
  VarId calleeVar = kInvalidId;
  FuncId calleeFunc = kInvalidId;
  bool synthetic = false; // lowered global initializer
  SourceLoc loc;

  bool definesVar() const { return def != kInvalidId; }
  bool isIndirectCall() const { return kind == InstKind::Call && calleeVar != kInvalidId; }
  VarId storePtr() const { return operands[0]; }
  VarId storeValue() const { return operands[1]; }
  VarId base() const { return operands[0]; }
};

struct Terminator {
  TermAst::Kind kind = TermAst::Kind::None;
  std::string label;
  SourceLoc loc;
};

struct Block {
  std::string name;
  std::vector<LabelId> instrs;
  Terminator term;
  std::vector<BlockId> succs;
  std::vector<BlockId> preds;
};

struct Function {
  std::string name;
  FuncId id = kInvalidId;
  std::vector<VarId> params;
  std::vector<Block> blocks; // blocks[0] is the entry block
  LabelId entry = kInvalidId;
  LabelId exit = kInvalidId;
  VarId retVar = kInvalidId;
  ObjId object = kInvalidId;
};

struct Variable {
  std::string name;
  FuncId func = kInvalidId;
  LabelId def = kInvalidId;
};

struct GlobalInfo {
  ObjId object = kInvalidId;
  ObjId initTarget = kInvalidId;
};

class Program {
public:
  const std::vector<Instruction> &instructions() const { return instrs_; }
  const Instruction &instr(LabelId id) const { return instrs_[id]; }
  std::size_t numInstructions() const { return instrs_.size(); }

  const std::vector<Function> &functions() const { return funcs_; }
  const Function &function(FuncId id) const { return funcs_[id]; }
  FuncId mainFunction() const { return main_; }

  const std::vector<Variable> &variables() const { return vars_; }
  const Variable &var(VarId id) const { return vars_[id]; }

  const std::vector<ObjectInfo> &objects() const { return objs_; }
  const ObjectInfo &object(ObjId id) const { return objs_[id]; }

  const std::vector<GlobalInfo> &globals() const { return globals_; }

  std::optional<LabelId> findLabel(std::string_view label) const;
  std::optional<FuncId> findFunction(std::string_view name) const;
  std::optional<VarId> findVar(FuncId func, std::string_view name) const;
  /// Looks a variable up by name across all functions; fails if ambiguous.
  std::optional<VarId> findVarAnywhere(std::string_view name) const;
  std::optional<ObjId> findObject(std::string_view name) const;

  /// Top-level variables read by the instruction, including phi operands
  /// and an indirect callee.
  std::vector<VarId> usedVars(LabelId id) const;

  /// "%name" or "%name@func" when the name is not unique.
  std::string varName(VarId id) const;

  /// Rebuilds an AST that prints back to equivalent source. Synthetic
  /// instructions (lowered global initializers) are folded back into globals.
  ModuleAst toAst() const;

  /// True if the label is inside a CFG cycle of its function.
  bool inCfgLoop(LabelId id) const;

private:
  friend class ProgramBuilder;

  std::vector<Instruction> instrs_;
  std::vector<Function> funcs_;
  std::vector<Variable> vars_;
  std::vector<ObjectInfo> objs_;
  std::vector<GlobalInfo> globals_;
  std::vector<bool> inLoop_; // per instruction
  FuncId main_ = kInvalidId;
  std::map<std::string, LabelId, std::less<>> labelIndex_;
  std::map<std::string, FuncId, std::less<>> funcIndex_;
  std::map<std::string, ObjId, std::less<>> objIndex_;
  std::map<std::pair<FuncId, std::string>, VarId> varIndex_;
};

struct LowerOutcome {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;
};

/// Validates and lowers an AST: name resolution, SSA (single definition,
/// dominance of defs over uses), phi/predecessor agreement, a single ret per
/// function, reachability of every block. Global initializers become
/// synthetic stores at the entry of main.
LowerOutcome lowerModule(const ModuleAst &module);

/// parseModule followed by lowerModule.
LowerOutcome parseProgram(std::string_view text);

/// One-line rendering of an instruction in source syntax, without label.
std::string formatInstruction(const Program &program, LabelId label);

/// Reads a file and parses it. Throws std::runtime_error on I/O failure.
LowerOutcome parseProgramFile(const std::string &path);

//===----------------------------------------------------------------------===//
// Abstract objects with field paths
//===----------------------------------------------------------------------===//

/// Base objects plus interned field sub-objects. Field objects are created by
/// the pre-analysis; every later stage only looks them up.
class ObjectTable {
public:
  ObjectTable() = default;
  explicit ObjectTable(const Program &program);

  std::size_t size() const { return entries_.size(); }
  std::size_t numBases() const { return bases_.size(); }
  ObjId baseOf(ObjId id) const { return entries_[id].base; }
  const std::vector<int> &fieldPath(ObjId id) const { return entries_[id].path; }
  const ObjectInfo &info(ObjId id) const { return bases_[entries_[id].base]; }
  ObjectKind kind(ObjId id) const { return info(id).kind; }
  bool isField(ObjId id) const { return !entries_[id].path.empty(); }
  const std::string &name(ObjId id) const { return entries_[id].name; }

  /// A collapsed base stands for all of its fields.
  bool isCollapsed(ObjId id) const { return collapsed_[entries_[id].base]; }
  void collapse(ObjId base) { collapsed_[base] = true; }

  /// Interns id.fld. Arrays, functions, UAOs and collapsed bases are
  /// monolithic and map to themselves.
  ObjId field(ObjId id, int fld);
  /// Lookup only; returns id itself for monolithic objects.
  std::optional<ObjId> findField(ObjId id, int fld) const;
  std::optional<ObjId> findByName(std::string_view name) const;

  /// Field objects whose path extends `id`'s path (transitively).
  std::vector<ObjId> descendants(ObjId id) const;

private:
  bool monolithic(ObjId id) const;

  struct Entry {
    ObjId base;
    std::vector<int> path;
    std::string name;
  };
  std::vector<ObjectInfo> bases_;
  std::vector<bool> collapsed_;
  std::vector<Entry> entries_;
  std::map<std::pair<ObjId, int>, ObjId> fieldIndex_;
  std::map<ObjId, std::vector<ObjId>> children_;
  std::map<std::string, ObjId, std::less<>> nameIndex_;
};

/// Dominator tree over one function's CFG (Cooper/Harvey/Kennedy).
class DominatorTree {
public:
  explicit DominatorTree(const Function &fn);

  BlockId idom(BlockId b) const { return idom_[b]; }
  bool reachable(BlockId b) const { return idom_[b] != kInvalidId; }
  bool dominates(BlockId a, BlockId b) const;
  const std::vector<BlockId> &children(BlockId b) const { return children_[b]; }
  const std::vector<BlockId> &frontier(BlockId b) const { return frontier_[b]; }
  const std::vector<BlockId> &reversePostOrder() const { return rpo_; }

private:
  std::vector<BlockId> idom_;
  std::vector<std::vector<BlockId>> children_;
  std::vector<std::vector<BlockId>> frontier_;
  std::vector<BlockId> rpo_;
  std::vector<int> rpoIndex_;
};

} // namespace supa
