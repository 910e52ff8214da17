#include "supa/oracle.h"
#include "supa/engine.h"

#include <json.hpp>

namespace supa {

namespace {
const ObjSet kEmpty;

bool addAll(ObjSet &dst, const ObjSet &src) {
  std::size_t before = dst.size();
  dst.insert(src.begin(), src.end());
  return dst.size() != before;
}

const ObjSet &lookup(const MemState &s, ObjId o) {
  auto it = s.find(o);
  return it == s.end() ? kEmpty : it->second;
}
} // namespace

const ObjSet &FlowSensitiveResult::ptsAt(LabelId l, ObjId o) const { return lookup(out_[l], o); }

/// Chaotic iteration to the least fixed point. Every transfer only grows its
/// output as its inputs grow (a larger pointer set moves a store from
/// kill-all to strong to weak update), so accumulating outputs is exact.
class FsOracleSolver {
public:
  FsOracleSolver(const Program &p, const AndersenResult &a, const MemSSA &m)
      : p_(p), a_(a), mr_(m.modref()), singles_(p, a) {
    r_.top_.assign(p.variables().size(), {});
    r_.out_.assign(p.numInstructions(), {});
    r_.callees_.assign(p.numInstructions(), {});
    for (const Function &fn : p.functions())
      blockOut_.emplace_back(fn.blocks.size());
  }

  FlowSensitiveResult run() {
    bool changed = true;
    while (changed) {
      changed = false;
      ++r_.rounds_;
      for (const Function &fn : p_.functions())
        for (BlockId b = 0; b < fn.blocks.size(); ++b) {
          MemState in = blockEntry(fn, b);
          for (LabelId l : fn.blocks[b].instrs) {
            changed |= transfer(l, in);
            in = r_.out_[l];
          }
          // Blocks without instructions still carry memory to successors.
          if (blockOut_[fn.id][b] != in) {
            blockOut_[fn.id][b] = std::move(in);
            changed = true;
          }
        }
    }
    return std::move(r_);
  }

private:
  MemState blockEntry(const Function &fn, BlockId b) const {
    MemState in;
    for (BlockId pred : fn.blocks[b].preds)
      for (const auto &[o, s] : blockOut_[fn.id][pred])
        in[o].insert(s.begin(), s.end());
    return in;
  }

  MemState stateBefore(LabelId l) const {
    const Instruction &in = p_.instr(l);
    const Function &fn = p_.function(in.func);
    const Block &b = fn.blocks[in.block];
    for (std::size_t i = 0; i < b.instrs.size(); ++i)
      if (b.instrs[i] == l)
        return i == 0 ? blockEntry(fn, in.block) : r_.out_[b.instrs[i - 1]];
    return {};
  }

  std::set<FuncId> resolve(LabelId cs) const {
    const Instruction &in = p_.instr(cs);
    if (in.calleeFunc != kInvalidId)
      return {in.calleeFunc};
    std::set<FuncId> out;
    const ObjectTable &t = a_.objects();
    for (ObjId o : r_.top_[in.calleeVar])
      if (t.kind(o) == ObjectKind::Function && !t.isField(o) && a_.callees(cs).count(t.info(o).function))
        out.insert(t.info(o).function);
    return out;
  }

  bool transfer(LabelId l, const MemState &in) {
    const Instruction &ins = p_.instr(l);
    MemState out = in;
    ObjSet def;
    switch (ins.kind) {
    case InstKind::AddrOf:
      def.insert(ins.object);
      break;
    case InstKind::Copy:
    case InstKind::Phi:
      for (VarId v : ins.operands)
        addAll(def, r_.top_[v]);
      break;
    case InstKind::Field:
      for (ObjId o : r_.top_[ins.base()])
        def.insert(a_.fieldOf(o, ins.field));
      break;
    case InstKind::Load:
      for (ObjId o : r_.top_[ins.base()])
        addAll(def, lookup(in, o));
      break;
    case InstKind::Store: {
      const ObjSet &ptr = r_.top_[ins.storePtr()];
      const ObjSet &val = r_.top_[ins.storeValue()];
      CtxObjSet cptr;
      for (ObjId o : ptr)
        cptr.insert({{}, o});
      KillSet k = killSet(Mode::FS, cptr, singles_);
      for (ObjId o : mr_.def[l]) {
        ObjSet v;
        bool killed = k.kind == KillKind::KillAll || (k.kind == KillKind::Kill && k.objects.count({{}, o}));
        if (!killed)
          v = lookup(in, o);
        if (ptr.count(o))
          addAll(v, val);
        out[o] = std::move(v);
      }
      break;
    }
    case InstKind::Call: {
      std::set<FuncId> fs = resolve(l);
      r_.callees_[l].insert(fs.begin(), fs.end());
      for (ObjId o : mr_.def[l]) {
        ObjSet v;
        for (FuncId f : fs)
          if (mr_.exitMu[f].count(o))
            addAll(v, ptsBeforeExit(f, o));
        out[o] = std::move(v);
      }
      if (ins.def != kInvalidId)
        for (FuncId f : fs)
          if (p_.function(f).retVar != kInvalidId)
            addAll(def, r_.top_[p_.function(f).retVar]);
      break;
    }
    case InstKind::FunEntry: {
      out.clear();
      const Function &fn = p_.function(ins.func);
      for (LabelId cs : a_.callers(ins.func)) {
        if (!resolve(cs).count(ins.func))
          continue;
        const Instruction &call = p_.instr(cs);
        for (std::size_t i = 0; i < fn.params.size() && i < call.operands.size(); ++i)
          changed_ |= addAll(r_.top_[fn.params[i]], r_.top_[call.operands[i]]);
        MemState before = stateBefore(cs);
        for (ObjId o : mr_.use[cs])
          if (mr_.entryChi[ins.func].count(o))
            addAll(out[o], lookup(before, o));
      }
      break;
    }
    case InstKind::FunExit:
      break;
    }
    bool changed = std::exchange(changed_, false);
    if (ins.def != kInvalidId && ins.kind != InstKind::FunEntry)
      changed |= addAll(r_.top_[ins.def], def);
    MemState &stored = r_.out_[l];
    for (auto &[o, s] : out)
      changed |= addAll(stored[o], s);
    return changed;
  }

  ObjSet ptsBeforeExit(FuncId f, ObjId o) const {
    const Function &fn = p_.function(f);
    return lookup(r_.out_[fn.exit], o); // FunExit passes memory through
  }

  const Program &p_;
  const AndersenResult &a_;
  const ModRefSummary &mr_;
  SingletonInfo singles_;
  FlowSensitiveResult r_;
  std::vector<std::vector<MemState>> blockOut_;
  bool changed_ = false;
};

FlowSensitiveResult solveFsOracle(const Program &program, const AndersenResult &ander, const MemSSA &memssa) {
  return FsOracleSolver(program, ander, memssa).run();
}

std::string FlowSensitiveResult::toJson(const Program &program, const AndersenResult &ander) const {
  nlohmann::json loads = nlohmann::json::array();
  for (LabelId l = 0; l < program.numInstructions(); ++l) {
    const Instruction &in = program.instr(l);
    if (in.kind != InstKind::Load)
      continue;
    loads.push_back({{"label", in.label},
                     {"var", "%" + program.var(in.def).name},
                     {"pts", objectNames(ander.objects(), top_[in.def])}});
  }
  nlohmann::json j;
  j["loads"] = loads;
  j["rounds"] = rounds_;
  return j.dump(2);
}

} // namespace supa
