// Lowering from ModuleAst to Program, with name resolution and the
// well-formedness checks (SSA, dominance, phi/predecessor agreement, one
// FunExit per function, reachable CFG).

#include "supa/ir.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace supa {

const char *toString(InstKind kind) {
  switch (kind) {
  case InstKind::AddrOf:
    return "AddrOf";
  case InstKind::Copy:
    return "Copy";
  case InstKind::Phi:
    return "Phi";
  case InstKind::Field:
    return "Field";
  case InstKind::Load:
    return "Load";
  case InstKind::Store:
    return "Store";
  case InstKind::Call:
    return "Call";
  case InstKind::FunEntry:
    return "FunEntry";
  case InstKind::FunExit:
    return "FunExit";
  }
  return "?";
}

const char *toString(ObjectKind kind) {
  switch (kind) {
  case ObjectKind::Stack:
    return "Stack";
  case ObjectKind::Heap:
    return "Heap";
  case ObjectKind::Global:
    return "Global";
  case ObjectKind::Function:
    return "Function";
  case ObjectKind::UAO:
    return "UAO";
  }
  return "?";
}

//===----------------------------------------------------------------------===//
// Program queries
//===----------------------------------------------------------------------===//

std::optional<LabelId> Program::findLabel(std::string_view label) const {
  auto it = labelIndex_.find(label);
  if (it == labelIndex_.end())
    return std::nullopt;
  return it->second;
}

std::optional<FuncId> Program::findFunction(std::string_view name) const {
  if (!name.empty() && name.front() == '@')
    name.remove_prefix(1);
  auto it = funcIndex_.find(name);
  if (it == funcIndex_.end())
    return std::nullopt;
  return it->second;
}

std::optional<VarId> Program::findVar(FuncId func, std::string_view name) const {
  if (!name.empty() && name.front() == '%')
    name.remove_prefix(1);
  auto it = varIndex_.find({func, std::string(name)});
  if (it == varIndex_.end())
    return std::nullopt;
  return it->second;
}

std::optional<VarId> Program::findVarAnywhere(std::string_view name) const {
  std::optional<VarId> found;
  for (FuncId f = 0; f < funcs_.size(); ++f) {
    if (auto v = findVar(f, name)) {
      if (found)
        return std::nullopt;
      found = v;
    }
  }
  return found;
}

std::optional<ObjId> Program::findObject(std::string_view name) const {
  auto it = objIndex_.find(name);
  if (it == objIndex_.end())
    return std::nullopt;
  return it->second;
}

std::vector<VarId> Program::usedVars(LabelId id) const {
  const Instruction &in = instrs_[id];
  if (in.kind == InstKind::AddrOf || in.kind == InstKind::FunEntry)
    return {};
  std::vector<VarId> out = in.operands;
  if (in.calleeVar != kInvalidId)
    out.push_back(in.calleeVar);
  return out;
}

std::string Program::varName(VarId id) const {
  const Variable &v = vars_[id];
  int count = 0;
  for (FuncId f = 0; f < funcs_.size(); ++f)
    if (varIndex_.count({f, v.name}))
      ++count;
  if (count > 1)
    return "%" + v.name + "@" + funcs_[v.func].name;
  return "%" + v.name;
}

bool Program::inCfgLoop(LabelId id) const { return inLoop_[id]; }

ModuleAst Program::toAst() const {
  ModuleAst m;
  for (const GlobalInfo &g : globals_) {
    GlobalAst ga;
    ga.name = objs_[g.object].name.substr(1);
    ga.isArray = objs_[g.object].isArray;
    if (g.initTarget != kInvalidId)
      ga.initTarget = objs_[g.initTarget].name.substr(1);
    m.globals.push_back(ga);
  }
  for (const Function &f : funcs_) {
    FunctionAst fa;
    fa.name = f.name;
    fa.entryLabel = instrs_[f.entry].label;
    for (VarId p : f.params)
      fa.params.push_back(vars_[p].name);
    for (const Block &b : f.blocks) {
      BlockAst ba;
      ba.name = b.name;
      for (LabelId l : b.instrs) {
        const Instruction &in = instrs_[l];
        if (in.synthetic || in.kind == InstKind::FunEntry)
          continue;
        if (in.kind == InstKind::FunExit) {
          ba.term.kind = TermAst::Kind::Ret;
          ba.term.label = in.label;
          if (!in.operands.empty())
            ba.term.retValue = vars_[in.operands[0]].name;
          continue;
        }
        InstrAst ia;
        ia.label = in.label;
        if (in.def != kInvalidId)
          ia.def = vars_[in.def].name;
        for (VarId v : in.operands)
          ia.operands.push_back(vars_[v].name);
        switch (in.kind) {
        case InstKind::AddrOf: {
          const ObjectInfo &o = objs_[in.object];
          switch (o.kind) {
          case ObjectKind::Stack:
            ia.op = AstOp::Alloca;
            break;
          case ObjectKind::Heap:
            ia.op = o.defaultInit ? AstOp::Heap0 : AstOp::Heap;
            break;
          case ObjectKind::UAO:
            ia.op = AstOp::Uao;
            break;
          default:
            ia.op = AstOp::Addr;
            break;
          }
          if (o.kind == ObjectKind::UAO)
            ia.objectName = objs_[o.uaoOf].name;
          else
            ia.objectName = o.name;
          ia.isArray = (o.kind == ObjectKind::Stack || o.kind == ObjectKind::Heap) && o.isArray;
          break;
        }
        case InstKind::Copy:
          ia.op = AstOp::Copy;
          break;
        case InstKind::Phi:
          ia.op = AstOp::Phi;
          for (BlockId pb : in.phiBlocks)
            ia.phiBlocks.push_back(f.blocks[pb].name);
          break;
        case InstKind::Field:
          ia.op = AstOp::Field;
          ia.field = in.field;
          break;
        case InstKind::Load:
          ia.op = AstOp::Load;
          break;
        case InstKind::Store:
          ia.op = AstOp::Store;
          break;
        case InstKind::Call:
          ia.op = AstOp::Call;
          ia.callee = in.calleeVar != kInvalidId ? "%" + vars_[in.calleeVar].name
                                                  : "@" + funcs_[in.calleeFunc].name;
          break;
        default:
          break;
        }
        ba.instrs.push_back(std::move(ia));
      }
      if (b.term.kind == TermAst::Kind::Br || b.term.kind == TermAst::Kind::Jmp) {
        ba.term.kind = b.term.kind;
        ba.term.label = b.term.label;
        for (BlockId s : b.succs)
          ba.term.targets.push_back(f.blocks[s].name);
      }
      fa.blocks.push_back(std::move(ba));
    }
    m.functions.push_back(std::move(fa));
  }
  return m;
}

//===----------------------------------------------------------------------===//
// Dominators
//===----------------------------------------------------------------------===//

DominatorTree::DominatorTree(const Function &fn) {
  std::size_t n = fn.blocks.size();
  idom_.assign(n, kInvalidId);
  children_.assign(n, {});
  frontier_.assign(n, {});
  rpoIndex_.assign(n, -1);
  if (n == 0)
    return;

  std::vector<bool> seen(n, false);
  std::vector<BlockId> post;
  std::function<void(BlockId)> dfs = [&](BlockId b) {
    seen[b] = true;
    for (BlockId s : fn.blocks[b].succs)
      if (!seen[s])
        dfs(s);
    post.push_back(b);
  };
  dfs(0);
  rpo_.assign(post.rbegin(), post.rend());
  for (std::size_t i = 0; i < rpo_.size(); ++i)
    rpoIndex_[rpo_[i]] = static_cast<int>(i);

  idom_[0] = 0;
  auto intersect = [&](BlockId a, BlockId b) {
    while (a != b) {
      while (rpoIndex_[a] > rpoIndex_[b])
        a = idom_[a];
      while (rpoIndex_[b] > rpoIndex_[a])
        b = idom_[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 1; i < rpo_.size(); ++i) {
      BlockId b = rpo_[i];
      BlockId nd = kInvalidId;
      for (BlockId p : fn.blocks[b].preds) {
        if (idom_[p] == kInvalidId)
          continue;
        nd = nd == kInvalidId ? p : intersect(p, nd);
      }
      if (nd != idom_[b]) {
        idom_[b] = nd;
        changed = true;
      }
    }
  }
  for (BlockId b : rpo_)
    if (b != 0)
      children_[idom_[b]].push_back(b);
  for (BlockId b : rpo_) {
    std::vector<BlockId> reachablePreds;
    for (BlockId p : fn.blocks[b].preds)
      if (reachable(p))
        reachablePreds.push_back(p);
    if (reachablePreds.size() < 2)
      continue;
    for (BlockId p : reachablePreds) {
      BlockId runner = p;
      while (runner != idom_[b]) {
        auto &df = frontier_[runner];
        if (std::find(df.begin(), df.end(), b) == df.end())
          df.push_back(b);
        if (runner == 0)
          break;
        runner = idom_[runner];
      }
    }
  }
  for (auto &df : frontier_)
    std::sort(df.begin(), df.end());
}

bool DominatorTree::dominates(BlockId a, BlockId b) const {
  if (!reachable(a) || !reachable(b))
    return false;
  while (true) {
    if (a == b)
      return true;
    if (b == 0)
      return false;
    b = idom_[b];
  }
}

//===----------------------------------------------------------------------===//
// Lowering
//===----------------------------------------------------------------------===//

class ProgramBuilder {
public:
  explicit ProgramBuilder(const ModuleAst &m) : m_(m) {}

  LowerOutcome run() {
    LowerOutcome out;
    declareFunctionsAndGlobals();
    declareAllocations();
    if (diags_.empty())
      for (FuncId f = 0; f < m_.functions.size(); ++f)
        lowerFunction(f);
    if (diags_.empty())
      for (FuncId f = 0; f < p_.funcs_.size(); ++f)
        verifyFunction(f);
    if (diags_.empty())
      computeLoops();
    out.diagnostics = std::move(diags_);
    if (out.diagnostics.empty())
      out.program = std::move(p_);
    return out;
  }

private:
  void error(SourceLoc loc, const std::string &rule, const std::string &msg) {
    diags_.push_back({loc, rule, msg});
  }

  ObjId addObject(ObjectInfo info, SourceLoc loc) {
    if (p_.objIndex_.count(info.name)) {
      error(loc, "resolve", "duplicate object name '" + info.name + "'");
      return p_.objIndex_.at(info.name);
    }
    ObjId id = static_cast<ObjId>(p_.objs_.size());
    p_.objIndex_.emplace(info.name, id);
    p_.objs_.push_back(std::move(info));
    return id;
  }

  void declareFunctionsAndGlobals() {
    for (const GlobalAst &g : m_.globals) {
      ObjectInfo o;
      o.kind = ObjectKind::Global;
      o.name = "@" + g.name;
      o.isArray = g.isArray;
      o.defaultInit = true;
      GlobalInfo gi;
      gi.object = addObject(o, g.loc);
      p_.globals_.push_back(gi);
    }
    for (FuncId f = 0; f < m_.functions.size(); ++f) {
      const FunctionAst &fa = m_.functions[f];
      if (p_.funcIndex_.count(fa.name)) {
        error(fa.loc, "resolve", "duplicate function '@" + fa.name + "'");
        continue;
      }
      Function fn;
      fn.name = fa.name;
      fn.id = f;
      ObjectInfo o;
      o.kind = ObjectKind::Function;
      o.name = "@" + fa.name;
      o.function = f;
      fn.object = addObject(o, fa.loc);
      p_.funcIndex_.emplace(fa.name, f);
      p_.funcs_.push_back(std::move(fn));
    }
    if (!p_.funcs_.empty()) {
      auto it = p_.funcIndex_.find("main");
      p_.main_ = it != p_.funcIndex_.end() ? it->second : 0;
    }
    for (std::size_t i = 0; i < m_.globals.size(); ++i) {
      const GlobalAst &g = m_.globals[i];
      if (g.initTarget.empty())
        continue;
      auto t = p_.findObject("@" + g.initTarget);
      if (!t)
        error(g.loc, "resolve", "unknown initializer target '@" + g.initTarget + "'");
      else
        p_.globals_[i].initTarget = *t;
      if (p_.main_ == kInvalidId)
        error(g.loc, "resolve", "global initializer without a main function");
    }
  }

  void declareAllocations() {
    for (FuncId f = 0; f < m_.functions.size(); ++f)
      for (const BlockAst &b : m_.functions[f].blocks)
        for (const InstrAst &in : b.instrs) {
          if (in.op != AstOp::Alloca && in.op != AstOp::Heap && in.op != AstOp::Heap0)
            continue;
          ObjectInfo o;
          o.kind = in.op == AstOp::Alloca ? ObjectKind::Stack : ObjectKind::Heap;
          o.name = in.objectName.empty() ? in.label : in.objectName;
          o.owner = f;
          o.isArray = in.isArray;
          o.defaultInit = in.op == AstOp::Heap0;
          if (o.name.rfind("uao:", 0) == 0)
            error(in.loc, "resolve", "object names may not start with 'uao:'");
          allocObject_[&in] = addObject(o, in.loc);
        }
    for (const FunctionAst &fa : m_.functions)
      for (const BlockAst &b : fa.blocks)
        for (const InstrAst &in : b.instrs) {
          if (in.op != AstOp::Uao)
            continue;
          auto target = p_.findObject(in.objectName);
          if (!target) {
            error(in.loc, "resolve", "unknown object '" + in.objectName + "'");
            continue;
          }
          const ObjectInfo &t = p_.objs_[*target];
          if (t.kind == ObjectKind::UAO || t.kind == ObjectKind::Function) {
            error(in.loc, "resolve", "no unknown abstract object for '" + in.objectName + "'");
            continue;
          }
          std::string name = "uao:" + in.objectName;
          if (auto existing = p_.findObject(name)) {
            allocObject_[&in] = *existing;
            continue;
          }
          ObjectInfo o;
          o.kind = ObjectKind::UAO;
          o.name = name;
          o.uaoOf = *target;
          allocObject_[&in] = addObject(o, in.loc);
        }
  }

  LabelId addInstr(Instruction in) {
    LabelId id = static_cast<LabelId>(p_.instrs_.size());
    if (!labels_.insert(in.label).second)
      error(in.loc, "label", "duplicate label '" + in.label + "'");
    p_.labelIndex_.emplace(in.label, id);
    p_.instrs_.push_back(std::move(in));
    return id;
  }

  VarId defineVar(FuncId f, const std::string &name, SourceLoc loc, const std::string &label) {
    auto key = std::make_pair(f, name);
    if (p_.varIndex_.count(key)) {
      error(loc, "ssa", "SSA violation at " + label + ": %" + name + " is already defined");
      return p_.varIndex_.at(key);
    }
    VarId id = static_cast<VarId>(p_.vars_.size());
    p_.vars_.push_back({name, f, kInvalidId});
    p_.varIndex_.emplace(key, id);
    return id;
  }

  VarId useVar(FuncId f, const std::string &name, SourceLoc loc) {
    auto v = p_.findVar(f, name);
    if (!v) {
      error(loc, "resolve", "unknown variable %" + name + " in @" + p_.funcs_[f].name);
      return kInvalidId;
    }
    return *v;
  }

  void lowerFunction(FuncId f) {
    const FunctionAst &fa = m_.functions[f];
    Function &fn = p_.funcs_[f];
    if (fa.blocks.empty()) {
      error(fa.loc, "funexit", "missing FunExit in @" + fa.name);
      return;
    }
    std::map<std::string, BlockId> blockIndex;
    for (BlockId b = 0; b < fa.blocks.size(); ++b) {
      if (!blockIndex.emplace(fa.blocks[b].name, b).second)
        error(fa.blocks[b].loc, "resolve", "duplicate block '" + fa.blocks[b].name + "'");
      Block blk;
      blk.name = fa.blocks[b].name;
      fn.blocks.push_back(std::move(blk));
    }
    auto resolveBlock = [&](const std::string &name, SourceLoc loc) -> BlockId {
      auto it = blockIndex.find(name);
      if (it == blockIndex.end()) {
        error(loc, "resolve", "unknown block '" + name + "'");
        return kInvalidId;
      }
      return it->second;
    };

    // Definitions first so that phi operands may refer forward.
    Instruction entry;
    entry.label = fa.entryLabel.empty() ? fa.name + ".entry" : fa.entryLabel;
    entry.kind = InstKind::FunEntry;
    entry.func = f;
    entry.block = 0;
    entry.loc = fa.loc;
    for (const std::string &pn : fa.params) {
      VarId v = defineVar(f, pn, fa.loc, entry.label);
      fn.params.push_back(v);
      entry.operands.push_back(v);
    }
    fn.entry = addInstr(entry);
    for (VarId v : fn.params)
      p_.vars_[v].def = fn.entry;
    fn.blocks[0].instrs.push_back(fn.entry);

    std::vector<VarId> initVars;
    if (f == p_.main_) {
      for (const GlobalInfo &g : p_.globals_) {
        if (g.initTarget == kInvalidId)
          continue;
        const std::string gname = p_.objs_[g.object].name.substr(1);
        std::string base = gname + ".init";
        VarId pv = defineVar(f, base + ".p", fa.loc, base);
        VarId tv = defineVar(f, base + ".v", fa.loc, base);
        Instruction a;
        a.label = base + ".0";
        a.kind = InstKind::AddrOf;
        a.func = f;
        a.block = 0;
        a.def = pv;
        a.object = g.object;
        a.synthetic = true;
        Instruction b = a;
        b.label = base + ".1";
        b.def = tv;
        b.object = g.initTarget;
        Instruction s;
        s.label = base + ".2";
        s.kind = InstKind::Store;
        s.func = f;
        s.block = 0;
        s.operands = {pv, tv};
        s.synthetic = true;
        LabelId la = addInstr(a), lb = addInstr(b), ls = addInstr(s);
        p_.vars_[pv].def = la;
        p_.vars_[tv].def = lb;
        fn.blocks[0].instrs.insert(fn.blocks[0].instrs.end(), {la, lb, ls});
      }
    }

    std::vector<std::pair<const InstrAst *, VarId>> defs;
    for (const BlockAst &ba : fa.blocks)
      for (const InstrAst &in : ba.instrs)
        if (!in.def.empty())
          defs.emplace_back(&in, defineVar(f, in.def, in.loc, in.label));
    std::size_t defCursor = 0;

    int rets = 0;
    for (BlockId b = 0; b < fa.blocks.size(); ++b) {
      const BlockAst &ba = fa.blocks[b];
      for (const InstrAst &ia : ba.instrs) {
        Instruction in;
        in.label = ia.label;
        in.func = f;
        in.block = b;
        in.loc = ia.loc;
        if (!ia.def.empty())
          in.def = defs[defCursor++].second;
        switch (ia.op) {
        case AstOp::Alloca:
        case AstOp::Heap:
        case AstOp::Heap0:
        case AstOp::Uao:
          in.kind = InstKind::AddrOf;
          in.object = allocObject_.count(&ia) ? allocObject_.at(&ia) : kInvalidId;
          break;
        case AstOp::Addr: {
          in.kind = InstKind::AddrOf;
          auto o = p_.findObject(ia.objectName);
          if (!o || (p_.objs_[*o].kind != ObjectKind::Global && p_.objs_[*o].kind != ObjectKind::Function))
            error(ia.loc, "resolve", "unknown global or function '" + ia.objectName + "'");
          else
            in.object = *o;
          break;
        }
        case AstOp::Copy:
          in.kind = InstKind::Copy;
          break;
        case AstOp::Phi:
          in.kind = InstKind::Phi;
          for (const std::string &pb : ia.phiBlocks)
            in.phiBlocks.push_back(resolveBlock(pb, ia.loc));
          break;
        case AstOp::Field:
          in.kind = InstKind::Field;
          in.field = ia.field;
          break;
        case AstOp::Load:
          in.kind = InstKind::Load;
          break;
        case AstOp::Store:
          in.kind = InstKind::Store;
          break;
        case AstOp::Call:
          in.kind = InstKind::Call;
          if (!ia.callee.empty() && ia.callee[0] == '%') {
            in.calleeVar = useVar(f, ia.callee.substr(1), ia.loc);
          } else {
            auto cf = p_.findFunction(ia.callee);
            if (!cf) {
              error(ia.loc, "resolve", "unknown function '" + ia.callee + "'");
            } else {
              in.calleeFunc = *cf;
              if (m_.functions[*cf].params.size() != ia.operands.size())
                error(ia.loc, "call",
                      "call to " + ia.callee + " passes " + std::to_string(ia.operands.size()) +
                          " arguments, expected " + std::to_string(m_.functions[*cf].params.size()));
            }
          }
          break;
        }
        for (const std::string &op : ia.operands)
          in.operands.push_back(useVar(f, op, ia.loc));
        bool allocates = ia.op == AstOp::Alloca || ia.op == AstOp::Heap || ia.op == AstOp::Heap0;
        LabelId id = addInstr(std::move(in));
        if (p_.instrs_[id].def != kInvalidId)
          p_.vars_[p_.instrs_[id].def].def = id;
        if (allocates && p_.instrs_[id].object != kInvalidId)
          p_.objs_[p_.instrs_[id].object].allocSite = id;
        fn.blocks[b].instrs.push_back(id);
      }

      const TermAst &t = ba.term;
      Block &blk = fn.blocks[b];
      blk.term.kind = t.kind;
      blk.term.label = t.label;
      blk.term.loc = t.loc;
      switch (t.kind) {
      case TermAst::Kind::Ret: {
        ++rets;
        Instruction ex;
        ex.label = t.label;
        ex.kind = InstKind::FunExit;
        ex.func = f;
        ex.block = b;
        ex.loc = t.loc;
        if (!t.retValue.empty()) {
          ex.operands.push_back(useVar(f, t.retValue, t.loc));
          fn.retVar = ex.operands.back();
        }
        if (rets > 1) {
          error(t.loc, "funexit", "more than one FunExit in @" + fa.name);
          labels_.insert(t.label);
          break;
        }
        fn.exit = addInstr(std::move(ex));
        blk.instrs.push_back(fn.exit);
        break;
      }
      case TermAst::Kind::Br:
      case TermAst::Kind::Jmp:
        if (!labels_.insert(t.label).second)
          error(t.loc, "label", "duplicate label '" + t.label + "'");
        for (const std::string &tn : t.targets)
          blk.succs.push_back(resolveBlock(tn, t.loc));
        break;
      case TermAst::Kind::None:
        if (b + 1 < fa.blocks.size())
          blk.succs.push_back(b + 1);
        else
          error(ba.loc, "cfg", "block '" + ba.name + "' falls off the end of @" + fa.name);
        break;
      }
    }
    if (rets == 0)
      error(fa.loc, "funexit", "missing FunExit in @" + fa.name);
    for (BlockId b = 0; b < fn.blocks.size(); ++b) {
      auto &succs = fn.blocks[b].succs;
      succs.erase(std::remove(succs.begin(), succs.end(), kInvalidId), succs.end());
      std::vector<BlockId> uniq;
      for (BlockId s : succs)
        if (std::find(uniq.begin(), uniq.end(), s) == uniq.end())
          uniq.push_back(s);
      succs = uniq;
      for (BlockId s : succs)
        fn.blocks[s].preds.push_back(b);
    }
  }

  void verifyFunction(FuncId f) {
    const Function &fn = p_.funcs_[f];
    if (!fn.blocks[0].preds.empty())
      error(p_.instrs_[fn.entry].loc, "cfg", "entry block of @" + fn.name + " has predecessors");
    DominatorTree dt(fn);
    for (BlockId b = 0; b < fn.blocks.size(); ++b)
      if (!dt.reachable(b))
        error(m_.functions[f].blocks[b].loc, "cfg", "block '" + fn.blocks[b].name + "' is unreachable");
    if (!diags_.empty())
      return;

    std::vector<std::size_t> position(p_.instrs_.size(), 0);
    for (const Block &blk : fn.blocks)
      for (std::size_t i = 0; i < blk.instrs.size(); ++i)
        position[blk.instrs[i]] = i;

    for (BlockId b = 0; b < fn.blocks.size(); ++b) {
      const Block &blk = fn.blocks[b];
      bool seenNonPhi = false;
      for (LabelId l : blk.instrs) {
        const Instruction &in = p_.instrs_[l];
        if (in.kind == InstKind::Phi) {
          if (seenNonPhi)
            error(in.loc, "phi", "phi at " + in.label + " is not at the head of its block");
          std::multiset<BlockId> incoming(in.phiBlocks.begin(), in.phiBlocks.end());
          std::multiset<BlockId> preds(blk.preds.begin(), blk.preds.end());
          if (incoming != preds)
            error(in.loc, "phi", "phi predecessor mismatch at " + in.label);
        } else if (in.kind != InstKind::FunEntry) {
          seenNonPhi = true;
        }
        for (std::size_t k = 0; k < in.operands.size() + 1; ++k) {
          VarId v = k < in.operands.size() ? in.operands[k] : in.calleeVar;
          if (v == kInvalidId || in.kind == InstKind::FunEntry)
            continue;
          LabelId d = p_.vars_[v].def;
          const Instruction &di = p_.instrs_[d];
          bool ok;
          if (in.kind == InstKind::Phi && k < in.phiBlocks.size()) {
            ok = dt.dominates(di.block, in.phiBlocks[k]);
          } else if (di.block == b) {
            ok = position[d] < position[l];
          } else {
            ok = dt.dominates(di.block, b);
          }
          if (!ok)
            error(in.loc, "dominance",
                  "use of %" + p_.vars_[v].name + " at " + in.label + " is not dominated by its definition");
        }
      }
    }
  }

  void computeLoops() {
    p_.inLoop_.assign(p_.instrs_.size(), false);
    for (const Function &fn : p_.funcs_) {
      std::size_t n = fn.blocks.size();
      // A block is in a loop iff it can reach itself.
      for (BlockId b = 0; b < n; ++b) {
        std::vector<bool> seen(n, false);
        std::vector<BlockId> stack(fn.blocks[b].succs.begin(), fn.blocks[b].succs.end());
        bool loop = false;
        while (!stack.empty() && !loop) {
          BlockId x = stack.back();
          stack.pop_back();
          if (x == b) {
            loop = true;
            break;
          }
          if (seen[x])
            continue;
          seen[x] = true;
          for (BlockId s : fn.blocks[x].succs)
            stack.push_back(s);
        }
        if (loop)
          for (LabelId l : fn.blocks[b].instrs)
            p_.inLoop_[l] = true;
      }
    }
  }

  const ModuleAst &m_;
  Program p_;
  std::vector<Diagnostic> diags_;
  std::set<std::string> labels_;
  std::map<const InstrAst *, ObjId> allocObject_;
};

LowerOutcome lowerModule(const ModuleAst &module) { return ProgramBuilder(module).run(); }

LowerOutcome parseProgram(std::string_view text) {
  ParseOutcome parsed = parseModule(text);
  if (!parsed.module)
    return {std::nullopt, std::move(parsed.diagnostics)};
  return lowerModule(*parsed.module);
}

LowerOutcome parseProgramFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseProgram(ss.str());
}

//===----------------------------------------------------------------------===//
// ObjectTable
//===----------------------------------------------------------------------===//

ObjectTable::ObjectTable(const Program &program) : bases_(program.objects()) {
  collapsed_.assign(bases_.size(), false);
  for (ObjId o = 0; o < bases_.size(); ++o) {
    entries_.push_back({o, {}, bases_[o].name});
    nameIndex_.emplace(bases_[o].name, o);
  }
}

bool ObjectTable::monolithic(ObjId id) const {
  const ObjectInfo &i = info(id);
  return i.isArray || i.kind == ObjectKind::Function || i.kind == ObjectKind::UAO || isCollapsed(id);
}

ObjId ObjectTable::field(ObjId id, int fld) {
  if (monolithic(id))
    return baseOf(id);
  auto key = std::make_pair(id, fld);
  auto it = fieldIndex_.find(key);
  if (it != fieldIndex_.end())
    return it->second;
  Entry e;
  e.base = entries_[id].base;
  e.path = entries_[id].path;
  e.path.push_back(fld);
  e.name = entries_[id].name + "." + std::to_string(fld);
  ObjId nid = static_cast<ObjId>(entries_.size());
  nameIndex_.emplace(e.name, nid);
  entries_.push_back(std::move(e));
  fieldIndex_.emplace(key, nid);
  children_[id].push_back(nid);
  return nid;
}

std::optional<ObjId> ObjectTable::findField(ObjId id, int fld) const {
  if (monolithic(id))
    return baseOf(id);
  auto it = fieldIndex_.find({id, fld});
  if (it == fieldIndex_.end())
    return std::nullopt;
  return it->second;
}

std::optional<ObjId> ObjectTable::findByName(std::string_view name) const {
  auto it = nameIndex_.find(name);
  if (it == nameIndex_.end())
    return std::nullopt;
  return it->second;
}

std::vector<ObjId> ObjectTable::descendants(ObjId id) const {
  std::vector<ObjId> out;
  std::vector<ObjId> stack{id};
  while (!stack.empty()) {
    ObjId x = stack.back();
    stack.pop_back();
    auto it = children_.find(x);
    if (it == children_.end())
      continue;
    for (ObjId c : it->second) {
      out.push_back(c);
      stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace supa
