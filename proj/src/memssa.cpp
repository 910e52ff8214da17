#include "supa/memssa.h"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace supa {

namespace {
const std::vector<MemPhi> kNoPhis;
const VersionDef kLiveIn;

ObjSet storableTargets(const AndersenResult &ander, const ObjSet &pts) {
  ObjSet out;
  for (ObjId o : pts)
    if (ander.objects().kind(o) != ObjectKind::Function)
      out.insert(o);
  return out;
}

ObjSet intersect(const ObjSet &a, const ObjSet &b) {
  ObjSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}
} // namespace

ObjSet escapingObjects(const Program &program, const AndersenResult &ander, LabelId callsite) {
  const Instruction &in = program.instr(callsite);
  const ObjectTable &table = ander.objects();
  std::vector<ObjId> work;
  for (VarId a : in.operands)
    work.insert(work.end(), ander.pts(a).begin(), ander.pts(a).end());
  if (in.def != kInvalidId)
    work.insert(work.end(), ander.pts(in.def).begin(), ander.pts(in.def).end());
  for (ObjId o = 0; o < table.size(); ++o) {
    ObjectKind k = table.kind(o);
    if (k == ObjectKind::Global || k == ObjectKind::UAO)
      work.push_back(o);
  }
  ObjSet seen;
  while (!work.empty()) {
    ObjId o = work.back();
    work.pop_back();
    if (!seen.insert(o).second)
      continue;
    for (ObjId d : table.descendants(o))
      work.push_back(d);
    for (ObjId t : ander.objPts(o))
      work.push_back(t);
  }
  return seen;
}

ModRefSummary computeModRef(const Program &program, const AndersenResult &ander) {
  ModRefSummary s;
  std::size_t nl = program.numInstructions(), nf = program.functions().size();
  s.use.assign(nl, {});
  s.def.assign(nl, {});
  s.funcUse.assign(nf, {});
  s.funcDef.assign(nf, {});
  s.entryChi.assign(nf, {});
  s.exitMu.assign(nf, {});

  std::map<LabelId, ObjSet> esc;
  for (LabelId l = 0; l < nl; ++l) {
    const Instruction &in = program.instr(l);
    if (in.kind == InstKind::Load)
      s.use[l] = ander.pts(in.base());
    else if (in.kind == InstKind::Store)
      s.def[l] = storableTargets(ander, ander.pts(in.storePtr()));
    else if (in.kind == InstKind::Call)
      esc[l] = escapingObjects(program, ander, l);
  }

  bool changed = true;
  while (changed) {
    changed = false;
    ++s.rounds;
    for (LabelId l = 0; l < nl; ++l) {
      const Instruction &in = program.instr(l);
      if (in.kind == InstKind::Call) {
        ObjSet u, d;
        for (FuncId g : ander.callees(l)) {
          u.insert(s.funcUse[g].begin(), s.funcUse[g].end());
          u.insert(s.funcDef[g].begin(), s.funcDef[g].end());
          d.insert(s.funcDef[g].begin(), s.funcDef[g].end());
        }
        u = intersect(u, esc[l]);
        d = intersect(d, esc[l]);
        if (u != s.use[l] || d != s.def[l]) {
          s.use[l] = std::move(u);
          s.def[l] = std::move(d);
          changed = true;
        }
      }
      std::size_t before = s.funcUse[in.func].size() + s.funcDef[in.func].size();
      s.funcUse[in.func].insert(s.use[l].begin(), s.use[l].end());
      s.funcDef[in.func].insert(s.def[l].begin(), s.def[l].end());
      changed |= before != s.funcUse[in.func].size() + s.funcDef[in.func].size();
    }
  }

  for (FuncId f = 0; f < nf; ++f)
    for (LabelId cs : ander.callers(f)) {
      s.entryChi[f].insert(s.use[cs].begin(), s.use[cs].end());
      s.exitMu[f].insert(s.def[cs].begin(), s.def[cs].end());
    }
  return s;
}

//===----------------------------------------------------------------------===//
// Memory SSA construction
//===----------------------------------------------------------------------===//

class MemSSABuilder {
public:
  MemSSABuilder(const Program &p, ModRefSummary modref) : p_(p) { m_.modref_ = std::move(modref); }

  MemSSA run() {
    std::size_t nl = p_.numInstructions();
    m_.mus_.assign(nl, {});
    m_.chis_.assign(nl, {});
    for (FuncId f = 0; f < p_.functions().size(); ++f)
      buildFunction(f);
    return std::move(m_);
  }

private:
  /// Objects used (mu) and defined (chi) by an instruction.
  void accesses(LabelId l, ObjSet &uses, ObjSet &defs) const {
    const Instruction &in = p_.instr(l);
    const ModRefSummary &s = m_.modref_;
    switch (in.kind) {
    case InstKind::Load:
      uses = s.use[l];
      break;
    case InstKind::Store:
      defs = s.def[l];
      break;
    case InstKind::Call:
      uses = s.use[l];
      defs = s.def[l];
      break;
    case InstKind::FunEntry:
      defs = s.entryChi[in.func];
      break;
    case InstKind::FunExit:
      uses = s.exitMu[in.func];
      break;
    default:
      break;
    }
  }

  void buildFunction(FuncId f) {
    const Function &fn = p_.function(f);
    DominatorTree dt(fn);
    std::map<ObjId, std::set<BlockId>> defBlocks;
    ObjSet objects;
    for (BlockId b = 0; b < fn.blocks.size(); ++b)
      for (LabelId l : fn.blocks[b].instrs) {
        ObjSet u, d;
        accesses(l, u, d);
        for (ObjId o : d)
          defBlocks[o].insert(b);
        objects.insert(u.begin(), u.end());
        objects.insert(d.begin(), d.end());
      }

    for (ObjId o : objects)
      m_.versions_[{f, o}].push_back(kLiveIn); // index 0 unused
    for (ObjId o : objects)
      m_.versions_[{f, o}].push_back(kLiveIn); // version 1: value on entry

    // Phi placement on iterated dominance frontiers.
    for (const auto &[o, blocks] : defBlocks) {
      std::set<BlockId> placed;
      std::vector<BlockId> work(blocks.begin(), blocks.end());
      while (!work.empty()) {
        BlockId b = work.back();
        work.pop_back();
        for (BlockId y : dt.frontier(b))
          if (placed.insert(y).second) {
            m_.phis_[{f, y}].push_back({o, 0, {}});
            if (!blocks.count(y))
              work.push_back(y);
          }
      }
    }
    for (auto &[key, list] : m_.phis_)
      if (key.first == f)
        std::sort(list.begin(), list.end(), [](const MemPhi &a, const MemPhi &b) { return a.obj < b.obj; });

    std::map<ObjId, std::vector<int>> stacks;
    for (ObjId o : objects)
      stacks[o].push_back(1);
    auto newVersion = [&](ObjId o, VersionDef vd) {
      auto &vs = m_.versions_[{f, o}];
      int v = static_cast<int>(vs.size());
      vs.push_back(vd);
      stacks[o].push_back(v);
      return v;
    };

    std::function<void(BlockId)> rename = [&](BlockId b) {
      std::map<ObjId, std::size_t> pushed;
      auto phiIt = m_.phis_.find({f, b});
      if (phiIt != m_.phis_.end())
        for (std::size_t i = 0; i < phiIt->second.size(); ++i) {
          MemPhi &phi = phiIt->second[i];
          VersionDef vd;
          vd.kind = VersionDef::Kind::Phi;
          vd.block = b;
          vd.phiIndex = i;
          phi.def = newVersion(phi.obj, vd);
          ++pushed[phi.obj];
        }
      for (LabelId l : fn.blocks[b].instrs) {
        ObjSet u, d;
        accesses(l, u, d);
        for (ObjId o : u)
          m_.mus_[l].push_back({o, stacks[o].back()});
        for (ObjId o : d) {
          int use = stacks[o].back();
          VersionDef vd;
          vd.kind = VersionDef::Kind::Instr;
          vd.label = l;
          int def = newVersion(o, vd);
          ++pushed[o];
          m_.chis_[l].push_back({o, def, use});
        }
      }
      for (BlockId s : fn.blocks[b].succs) {
        auto it = m_.phis_.find({f, s});
        if (it == m_.phis_.end())
          continue;
        for (MemPhi &phi : it->second)
          phi.incoming.emplace_back(b, stacks[phi.obj].back());
      }
      for (BlockId c : dt.children(b))
        rename(c);
      for (const auto &[o, n] : pushed)
        stacks[o].resize(stacks[o].size() - n);
    };
    if (!fn.blocks.empty())
      rename(0);
  }

  const Program &p_;
  MemSSA m_;
};

MemSSA buildMemSSA(const Program &program, const AndersenResult &ander, ModRefSummary modref) {
  (void)ander;
  return MemSSABuilder(program, std::move(modref)).run();
}

const std::vector<MemPhi> &MemSSA::phis(FuncId f, BlockId b) const {
  auto it = phis_.find({f, b});
  return it == phis_.end() ? kNoPhis : it->second;
}

const VersionDef &MemSSA::versionDef(FuncId f, ObjId o, int version) const {
  auto it = versions_.find({f, o});
  if (it == versions_.end() || version <= 0 || version >= static_cast<int>(it->second.size()))
    return kLiveIn;
  return it->second[version];
}

int MemSSA::numVersions(FuncId f, ObjId o) const {
  auto it = versions_.find({f, o});
  return it == versions_.end() ? 0 : static_cast<int>(it->second.size()) - 1;
}

bool MemSSA::hasMu(LabelId l, ObjId o) const {
  for (const MuOp &m : mus_[l])
    if (m.obj == o)
      return true;
  return false;
}

bool MemSSA::hasChi(LabelId l, ObjId o) const {
  for (const ChiOp &c : chis_[l])
    if (c.obj == o)
      return true;
  return false;
}

std::vector<LabelId> MemSSA::reachingDefs(FuncId f, ObjId o, int version) const {
  std::set<LabelId> out;
  std::set<int> seen;
  std::vector<int> work{version};
  while (!work.empty()) {
    int v = work.back();
    work.pop_back();
    if (!seen.insert(v).second)
      continue;
    const VersionDef &vd = versionDef(f, o, v);
    if (vd.kind == VersionDef::Kind::Instr) {
      out.insert(vd.label);
    } else if (vd.kind == VersionDef::Kind::Phi) {
      for (const auto &[pred, inV] : phis(f, vd.block)[vd.phiIndex].incoming) {
        (void)pred;
        work.push_back(inV);
      }
    }
  }
  return {out.begin(), out.end()};
}

std::string MemSSA::dump(const Program &program, const AndersenResult &ander) const {
  const ObjectTable &t = ander.objects();
  auto ver = [&](ObjId o, int v) { return t.name(o) + std::to_string(v); };
  std::ostringstream os;
  for (const Function &fn : program.functions()) {
    os << "func @" << fn.name << "\n";
    for (BlockId b = 0; b < fn.blocks.size(); ++b) {
      os << fn.blocks[b].name << ":\n";
      for (const MemPhi &phi : phis(fn.id, b)) {
        os << "    phi " << ver(phi.obj, phi.def) << " =";
        for (std::size_t i = 0; i < phi.incoming.size(); ++i)
          os << (i ? ", [" : " [") << ver(phi.obj, phi.incoming[i].second) << ", "
             << fn.blocks[phi.incoming[i].first].name << "]";
        os << "\n";
      }
      for (LabelId l : fn.blocks[b].instrs) {
        if (program.instr(l).synthetic)
          os << "  ; synthetic\n";
        for (const MuOp &m : mus_[l])
          os << "    mu " << ver(m.obj, m.version) << "\n";
        os << "  " << program.instr(l).label << ": " << formatInstruction(program, l) << "\n";
        for (const ChiOp &c : chis_[l])
          os << "    chi " << ver(c.obj, c.def) << " = " << ver(c.obj, c.use) << "\n";
      }
    }
  }
  return os.str();
}

} // namespace supa
