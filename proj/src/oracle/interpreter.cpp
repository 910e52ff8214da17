#include "supa/oracle.h"

#include <optional>

namespace supa {

bool trapEligible(const AndersenResult &ander, ObjId o) {
  const ObjectInfo &info = ander.objects().info(o);
  if (info.kind != ObjectKind::Stack && info.kind != ObjectKind::Heap)
    return false;
  return !info.isArray && !info.defaultInit && !ander.inRecursion(info.owner);
}

namespace {

/// A concrete location: an allocation instance plus the abstract (field)
/// object it belongs to. Instance 0 is shared by globals, functions and UAOs.
struct Loc {
  std::uint32_t inst;
  ObjId obj;
  auto operator<=>(const Loc &) const = default;
};

using Value = std::optional<Loc>; // nullopt is null

struct Cell {
  Value value;
  LabelId writer;
};

struct Frame {
  FuncId func;
  BlockId block = 0;
  std::size_t idx = 0;
  BlockId prev = kInvalidId;
  std::map<VarId, Value> env;
};

struct State {
  std::vector<Frame> stack;
  std::map<Loc, Cell> memory;
  std::uint32_t nextInst = 1;
  ConcretePath path;
};

class Interpreter {
public:
  Interpreter(const Program &p, const AndersenResult &a, const InterpreterLimits &lim)
      : p_(p), a_(a), lim_(lim) {}

  ConcreteTrace run() {
    for (LabelId l = 0; l < p_.numInstructions(); ++l)
      if (p_.inCfgLoop(l)) {
        t_.reason = "program has a loop at " + p_.instr(l).label;
        return std::move(t_);
      }
    for (FuncId f = 0; f < p_.functions().size(); ++f)
      if (a_.inRecursion(f)) {
        t_.reason = "@" + p_.function(f).name + " is recursive";
        return std::move(t_);
      }
    t_.interpretable = true;
    FuncId main = p_.mainFunction();
    if (main == kInvalidId)
      return std::move(t_);

    State init;
    init.stack.emplace_back().func = main;
    std::vector<State> work{std::move(init)};
    while (!work.empty()) {
      if (t_.paths.size() >= lim_.maxPaths) {
        t_.truncated = true;
        break;
      }
      State s = std::move(work.back());
      work.pop_back();
      execute(s, work);
      if (steps_ > lim_.maxSteps) {
        t_.truncated = true;
        break;
      }
    }
    return std::move(t_);
  }

private:
  void define(State &s, LabelId l, VarId v, const Value &val) {
    s.stack.back().env[v] = val;
    if (val) {
      t_.topFacts.insert({l, v, val->obj});
      s.path.finalEnv[v] = val->obj;
    }
  }

  Value get(const State &s, VarId v) const {
    const auto &env = s.stack.back().env;
    auto it = env.find(v);
    return it == env.end() ? std::nullopt : it->second;
  }

  void finish(State &s, bool completed) {
    for (const auto &[loc, cell] : s.memory)
      if (cell.value)
        s.path.finalMemory[loc.obj].insert(cell.value->obj);
    s.path.completed = completed;
    t_.paths.push_back(std::move(s.path));
  }

  /// Runs one path to completion, pushing forks onto `work`.
  void execute(State &s, std::vector<State> &work) {
    const ObjectTable &t = a_.objects();
    while (true) {
      if (++steps_ > lim_.maxSteps)
        return finish(s, false);
      Frame &fr = s.stack.back();
      const Function &fn = p_.function(fr.func);
      const Block &b = fn.blocks[fr.block];
      if (fr.idx >= b.instrs.size()) {
        if (b.succs.empty())
          return finish(s, false);
        for (std::size_t i = 1; i < b.succs.size(); ++i) {
          State fork = s;
          Frame &ff = fork.stack.back();
          ff.prev = ff.block;
          ff.block = b.succs[i];
          ff.idx = 0;
          work.push_back(std::move(fork));
        }
        fr.prev = fr.block;
        fr.block = b.succs[0];
        fr.idx = 0;
        continue;
      }
      LabelId l = b.instrs[fr.idx];
      const Instruction &in = p_.instr(l);
      switch (in.kind) {
      case InstKind::FunEntry:
        break;
      case InstKind::AddrOf: {
        ObjectKind k = t.kind(in.object);
        std::uint32_t inst = (k == ObjectKind::Stack || k == ObjectKind::Heap) ? s.nextInst++ : 0;
        define(s, l, in.def, Loc{inst, in.object});
        break;
      }
      case InstKind::Copy:
        // A copy of several sources picks any one of them.
        for (std::size_t i = 1; i < in.operands.size(); ++i) {
          State fork = s;
          define(fork, l, in.def, get(fork, in.operands[i]));
          ++fork.stack.back().idx;
          work.push_back(std::move(fork));
        }
        define(s, l, in.def, get(s, in.operands[0]));
        break;
      case InstKind::Phi: {
        Value v;
        for (std::size_t i = 0; i < in.operands.size(); ++i)
          if (in.phiBlocks[i] == fr.prev) {
            v = get(s, in.operands[i]);
            break;
          }
        define(s, l, in.def, v);
        break;
      }
      case InstKind::Field: {
        Value base = get(s, in.base());
        if (!base)
          return finish(s, false);
        define(s, l, in.def, Loc{base->inst, a_.fieldOf(base->obj, in.field)});
        break;
      }
      case InstKind::Load: {
        Value ptr = get(s, in.base());
        if (!ptr)
          return finish(s, false);
        auto it = s.memory.find(*ptr);
        if (it == s.memory.end()) {
          if (trapEligible(a_, ptr->obj)) {
            t_.traps.insert({l, ptr->obj});
            return finish(s, false);
          }
          if (!t.info(ptr->obj).defaultInit)
            return finish(s, false); // garbage contents
          define(s, l, in.def, std::nullopt);
          break;
        }
        t_.defUse.insert({it->second.writer, l, ptr->obj});
        define(s, l, in.def, it->second.value);
        break;
      }
      case InstKind::Store: {
        Value ptr = get(s, in.storePtr());
        if (!ptr || t.kind(ptr->obj) == ObjectKind::Function)
          return finish(s, false);
        Value val = get(s, in.storeValue());
        s.memory[*ptr] = Cell{val, l};
        if (val)
          t_.memFacts.insert({l, ptr->obj, val->obj});
        break;
      }
      case InstKind::Call: {
        FuncId callee = in.calleeFunc;
        if (callee == kInvalidId) {
          Value fp = get(s, in.calleeVar);
          if (!fp || t.kind(fp->obj) != ObjectKind::Function || t.isField(fp->obj))
            return finish(s, false);
          callee = t.info(fp->obj).function;
        }
        const Function &cf = p_.function(callee);
        Frame next;
        next.func = callee;
        for (std::size_t i = 0; i < cf.params.size() && i < in.operands.size(); ++i) {
          Value v = get(s, in.operands[i]);
          next.env[cf.params[i]] = v;
          if (v) {
            t_.topFacts.insert({cf.entry, cf.params[i], v->obj});
            s.path.finalEnv[cf.params[i]] = v->obj;
          }
        }
        s.stack.push_back(std::move(next));
        continue; // the caller resumes at FunExit
      }
      case InstKind::FunExit: {
        Value ret = in.operands.empty() ? std::nullopt : get(s, in.operands[0]);
        s.stack.pop_back();
        if (s.stack.empty())
          return finish(s, true);
        Frame &caller = s.stack.back();
        LabelId cs = p_.function(caller.func).blocks[caller.block].instrs[caller.idx];
        if (p_.instr(cs).def != kInvalidId)
          define(s, cs, p_.instr(cs).def, ret);
        break;
      }
      }
      ++s.stack.back().idx;
    }
  }

  const Program &p_;
  const AndersenResult &a_;
  InterpreterLimits lim_;
  ConcreteTrace t_;
  std::size_t steps_ = 0;
};

} // namespace

ConcreteTrace interpretConcrete(const Program &program, const AndersenResult &ander, const InterpreterLimits &limits) {
  return Interpreter(program, ander, limits).run();
}

} // namespace supa
