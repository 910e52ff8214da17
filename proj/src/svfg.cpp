#include "supa/svfg.h"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace supa {

namespace {
const std::vector<VFEdge> kNoEdges;

std::string escapeDot(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c;
  }
  return out;
}
} // namespace

const char *toString(EdgeKind kind) {
  switch (kind) {
  case EdgeKind::IntraDirect:
    return "intra-direct";
  case EdgeKind::CallDirect:
    return "call-direct";
  case EdgeKind::RetDirect:
    return "ret-direct";
  case EdgeKind::IntraIndirect:
    return "intra-indirect";
  case EdgeKind::CallIndirect:
    return "call-indirect";
  case EdgeKind::RetIndirect:
    return "ret-indirect";
  }
  return "?";
}

std::size_t SVFG::numIndirectEdges() const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](const VFEdge &e) { return isIndirect(e.kind); }));
}

const std::vector<VFEdge> &SVFG::in(LabelId dst, EdgeKind kind, std::uint32_t var) const {
  auto it = inIndex_.find({dst, kind, var});
  return it == inIndex_.end() ? kNoEdges : it->second;
}

std::vector<VFEdge> SVFG::outgoing(LabelId src) const {
  std::vector<VFEdge> out;
  for (const VFEdge &e : edges_)
    if (e.src == src)
      out.push_back(e);
  return out;
}

SVFG buildSVFG(const Program &program, const AndersenResult &ander, const MemSSA &memssa) {
  std::set<VFEdge> edges;
  const ModRefSummary &mr = memssa.modref();
  for (LabelId l = 0; l < program.numInstructions(); ++l) {
    const Instruction &in = program.instr(l);
    for (VarId v : program.usedVars(l))
      edges.insert({program.var(v).def, l, EdgeKind::IntraDirect, v});

    for (const MuOp &mu : memssa.mus(l))
      for (LabelId d : memssa.reachingDefs(in.func, mu.obj, mu.version))
        edges.insert({d, l, EdgeKind::IntraIndirect, mu.obj});
    if (in.kind == InstKind::Store)
      for (const ChiOp &chi : memssa.chis(l))
        for (LabelId d : memssa.reachingDefs(in.func, chi.obj, chi.use))
          edges.insert({d, l, EdgeKind::IntraIndirect, chi.obj});

    if (in.kind != InstKind::Call)
      continue;
    for (FuncId f : ander.callees(l)) {
      const Function &fn = program.function(f);
      std::size_t n = std::min(fn.params.size(), in.operands.size());
      for (std::size_t i = 0; i < n; ++i)
        edges.insert({l, fn.entry, EdgeKind::CallDirect, fn.params[i]});
      if (in.def != kInvalidId && fn.retVar != kInvalidId)
        edges.insert({fn.exit, l, EdgeKind::RetDirect, fn.retVar});
      for (ObjId o : mr.use[l])
        if (mr.entryChi[f].count(o))
          edges.insert({l, fn.entry, EdgeKind::CallIndirect, o});
      for (ObjId o : mr.def[l])
        if (mr.exitMu[f].count(o))
          edges.insert({fn.exit, l, EdgeKind::RetIndirect, o});
    }
  }

  SVFG g;
  g.numNodes_ = program.numInstructions();
  g.edges_.assign(edges.begin(), edges.end());
  for (const VFEdge &e : g.edges_)
    g.inIndex_[{e.dst, e.kind, e.var}].push_back(e);
  return g;
}

std::string SVFG::toDot(const Program &program, const AndersenResult &ander) const {
  std::ostringstream os;
  os << "digraph svfg {\n";
  for (LabelId l = 0; l < program.numInstructions(); ++l) {
    const std::string &lbl = program.instr(l).label;
    os << "  \"" << escapeDot(lbl) << "\" [label=\"" << escapeDot(lbl + ": " + formatInstruction(program, l))
       << "\"];\n";
  }
  for (const VFEdge &e : edges_) {
    std::string var = isIndirect(e.kind) ? ander.objects().name(e.var) : program.varName(e.var);
    os << "  \"" << escapeDot(program.instr(e.src).label) << "\" -> \"" << escapeDot(program.instr(e.dst).label)
       << "\" [label=\"" << escapeDot(var) << "\", style=" << (isIndirect(e.kind) ? "dashed" : "solid") << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string SVFG::toJson(const Program &program, const AndersenResult &ander) const {
  nlohmann::json nodes = nlohmann::json::array();
  for (LabelId l = 0; l < program.numInstructions(); ++l) {
    const Instruction &in = program.instr(l);
    nodes.push_back({{"label", in.label},
                     {"function", "@" + program.function(in.func).name},
                     {"kind", toString(in.kind)},
                     {"text", formatInstruction(program, l)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const VFEdge &e : edges_) {
    std::string var = isIndirect(e.kind) ? ander.objects().name(e.var) : program.varName(e.var);
    edges.push_back({{"src", program.instr(e.src).label},
                     {"dst", program.instr(e.dst).label},
                     {"kind", toString(e.kind)},
                     {"var", var}});
  }
  nlohmann::json j;
  j["nodes"] = nodes;
  j["edges"] = edges;
  return j.dump(2);
}

} // namespace supa
