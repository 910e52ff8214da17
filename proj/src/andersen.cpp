#include "supa/andersen.h"

#include <json.hpp>

#include <algorithm>
#include <functional>

namespace supa {

namespace {
const ObjSet kEmptyObjs;
const std::set<FuncId> kEmptyFuncs;
const std::set<LabelId> kEmptyLabels;

bool unionInto(ObjSet &dst, const ObjSet &src) {
  std::size_t before = dst.size();
  dst.insert(src.begin(), src.end());
  return dst.size() != before;
}
} // namespace

const ObjSet &AndersenResult::objPts(ObjId o) const {
  auto it = objPts_.find(o);
  return it == objPts_.end() ? kEmptyObjs : it->second;
}

ObjId AndersenResult::fieldOf(ObjId o, int fld) const {
  if (auto f = objects_.findField(o, fld))
    return *f;
  // Not interned: the solver never saw o flow into this field access.
  return objects_.baseOf(o);
}

const std::set<FuncId> &AndersenResult::callees(LabelId callsite) const {
  auto it = callGraph_.find(callsite);
  return it == callGraph_.end() ? kEmptyFuncs : it->second;
}

const std::set<LabelId> &AndersenResult::callers(FuncId f) const {
  return f < callers_.size() ? callers_[f] : kEmptyLabels;
}

std::vector<std::string> objectNames(const ObjectTable &table, const ObjSet &objs) {
  std::vector<std::string> out;
  for (ObjId o : objs)
    out.push_back(table.name(o));
  std::sort(out.begin(), out.end());
  return out;
}

std::string AndersenResult::toJson(const Program &program) const {
  nlohmann::json j;
  nlohmann::json pts = nlohmann::json::object();
  for (VarId v = 0; v < varPts_.size(); ++v)
    pts[program.varName(v)] = objectNames(objects_, varPts_[v]);
  nlohmann::json objs = nlohmann::json::object();
  for (const auto &[o, s] : objPts_)
    if (!s.empty())
      objs[objects_.name(o)] = objectNames(objects_, s);
  nlohmann::json cg = nlohmann::json::object();
  for (const auto &[cs, fs] : callGraph_) {
    std::vector<std::string> names;
    for (FuncId f : fs)
      names.push_back("@" + program.function(f).name);
    std::sort(names.begin(), names.end());
    cg[program.instr(cs).label] = names;
  }
  j["pts"] = pts;
  j["objects"] = objs;
  j["callgraph"] = cg;
  return j.dump(2);
}

class AndersenSolver {
public:
  AndersenSolver(const Program &p, const AndersenOptions &opts) : p_(p) { r_.opts_ = opts; }

  AndersenResult run() {
    std::set<ObjId> collapsed;
    while (true) {
      r_.objects_ = ObjectTable(p_);
      for (ObjId b : collapsed)
        r_.objects_.collapse(b);
      r_.varPts_.assign(p_.variables().size(), {});
      r_.objPts_.clear();
      r_.callGraph_.clear();
      badCallees_.clear();
      std::optional<ObjId> overflow = propagate();
      if (!overflow)
        break;
      collapsed.insert(*overflow);
    }
    for (const auto &[cs, o] : badCallees_)
      r_.diags_.push_back({p_.instr(cs).loc, "callee",
                           "callsite " + p_.instr(cs).label + " may call non-function object " +
                               r_.objects_.name(o) + "; ignored"});
    buildCallGraphInfo();
    return std::move(r_);
  }

private:
  /// Returns a base object to collapse when a field path grows too deep.
  std::optional<ObjId> propagate() {
    bool changed = true;
    while (changed) {
      changed = false;
      ++r_.rounds_;
      for (LabelId l = 0; l < p_.numInstructions(); ++l) {
        const Instruction &in = p_.instr(l);
        auto &pts = r_.varPts_;
        switch (in.kind) {
        case InstKind::AddrOf:
          changed |= pts[in.def].insert(in.object).second;
          break;
        case InstKind::Copy:
        case InstKind::Phi:
          for (VarId v : in.operands)
            changed |= unionInto(pts[in.def], pts[v]);
          break;
        case InstKind::Field: {
          ObjSet src = pts[in.base()];
          for (ObjId o : src) {
            if (!r_.opts_.fieldSensitive)
              r_.objects_.collapse(r_.objects_.baseOf(o));
            if (static_cast<int>(r_.objects_.fieldPath(o).size()) >= r_.opts_.maxFieldDepth &&
                !r_.objects_.isCollapsed(o) && !r_.objects_.info(o).isArray &&
                r_.objects_.kind(o) != ObjectKind::Function && r_.objects_.kind(o) != ObjectKind::UAO)
              return r_.objects_.baseOf(o);
            changed |= pts[in.def].insert(r_.objects_.field(o, in.field)).second;
          }
          break;
        }
        case InstKind::Load: {
          ObjSet src = pts[in.base()];
          for (ObjId o : src)
            changed |= unionInto(pts[in.def], r_.objPts(o));
          break;
        }
        case InstKind::Store: {
          ObjSet dst = pts[in.storePtr()];
          for (ObjId o : dst) {
            if (r_.objects_.kind(o) == ObjectKind::Function)
              continue;
            changed |= unionInto(r_.objPts_[o], pts[in.storeValue()]);
          }
          break;
        }
        case InstKind::Call: {
          std::set<FuncId> targets;
          if (in.calleeFunc != kInvalidId) {
            targets.insert(in.calleeFunc);
          } else {
            for (ObjId o : pts[in.calleeVar]) {
              if (r_.objects_.kind(o) == ObjectKind::Function && !r_.objects_.isField(o))
                targets.insert(r_.objects_.info(o).function);
              else
                badCallees_.insert({l, o});
            }
          }
          for (FuncId f : targets) {
            changed |= r_.callGraph_[l].insert(f).second;
            const Function &fn = p_.function(f);
            std::size_t n = std::min(fn.params.size(), in.operands.size());
            for (std::size_t i = 0; i < n; ++i)
              changed |= unionInto(pts[fn.params[i]], pts[in.operands[i]]);
            if (in.def != kInvalidId && fn.retVar != kInvalidId)
              changed |= unionInto(pts[in.def], pts[fn.retVar]);
          }
          break;
        }
        case InstKind::FunEntry:
        case InstKind::FunExit:
          break;
        }
      }
    }
    return std::nullopt;
  }

  void buildCallGraphInfo() {
    std::size_t n = p_.functions().size();
    r_.callers_.assign(n, {});
    std::vector<std::set<FuncId>> succ(n);
    for (const auto &[cs, fs] : r_.callGraph_)
      for (FuncId f : fs) {
        r_.callers_[f].insert(cs);
        succ[p_.instr(cs).func].insert(f);
      }
    // Tarjan's SCC algorithm.
    r_.sccOf_.assign(n, -1);
    r_.recursive_.assign(n, false);
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> onStack(n, false);
    std::vector<FuncId> stack;
    int counter = 0;
    std::function<void(FuncId)> strong = [&](FuncId v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      onStack[v] = true;
      for (FuncId w : succ[v]) {
        if (index[w] < 0) {
          strong(w);
          low[v] = std::min(low[v], low[w]);
        } else if (onStack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        std::vector<FuncId> comp;
        FuncId w;
        do {
          w = stack.back();
          stack.pop_back();
          onStack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        int id = static_cast<int>(r_.sccs_.size());
        bool rec = comp.size() > 1 || succ[v].count(v);
        for (FuncId c : comp) {
          r_.sccOf_[c] = id;
          r_.recursive_[c] = rec;
        }
        r_.sccs_.push_back(std::move(comp));
      }
    };
    for (FuncId f = 0; f < n; ++f)
      if (index[f] < 0)
        strong(f);
  }

  const Program &p_;
  AndersenResult r_;
  std::set<std::pair<LabelId, ObjId>> badCallees_;
};

AndersenResult solveAndersen(const Program &program, const AndersenOptions &opts) {
  return AndersenSolver(program, opts).run();
}

} // namespace supa
