#include "supa/uninit.h"

#include <functional>
#include <optional>
#include <set>
#include <stdexcept>

namespace supa {

const char *toString(UninitStatus s) {
  return s == UninitStatus::Initialized ? "Initialized" : "PotentiallyUninitialized";
}

namespace {
std::string freshName(std::set<std::string> &taken, const std::string &base) {
  std::string name = base;
  for (int i = 1; taken.count(name); ++i)
    name = base + "." + std::to_string(i);
  taken.insert(name);
  return name;
}
} // namespace

Instrumented instrumentUao(const Program &program, const AndersenResult &ander) {
  ModuleAst ast = program.toAst();
  std::set<std::string> labels;
  for (const Instruction &in : program.instructions())
    labels.insert(in.label);
  for (const Function &fn : program.functions())
    for (const Block &b : fn.blocks)
      labels.insert(b.term.label);

  std::vector<std::pair<std::string, std::string>> stores; // store label, object
  for (FunctionAst &fa : ast.functions) {
    FuncId f = *program.findFunction(fa.name);
    if (ander.inRecursion(f))
      continue;
    std::set<std::string> vars(fa.params.begin(), fa.params.end());
    for (const BlockAst &b : fa.blocks)
      for (const InstrAst &in : b.instrs)
        if (!in.def.empty())
          vars.insert(in.def);
    for (BlockAst &b : fa.blocks) {
      std::vector<InstrAst> out;
      for (InstrAst &in : b.instrs) {
        out.push_back(in);
        if ((in.op != AstOp::Alloca && in.op != AstOp::Heap) || in.isArray)
          continue;
        std::string object = in.objectName.empty() ? in.label : in.objectName;
        InstrAst addr;
        addr.op = AstOp::Uao;
        addr.label = freshName(labels, in.label + "u.a");
        addr.def = freshName(vars, "u_" + in.label);
        addr.objectName = object;
        addr.loc = in.loc;
        InstrAst store;
        store.op = AstOp::Store;
        store.label = freshName(labels, in.label + "u");
        store.operands = {in.def, addr.def};
        store.loc = in.loc;
        stores.emplace_back(store.label, object);
        std::string uaoVar = addr.def;
        out.push_back(std::move(addr));
        out.push_back(std::move(store));
        // Field sub-objects are distinct locations and start uninitialized too.
        const ObjectTable &table = ander.objects();
        std::optional<ObjId> base = table.findByName(object);
        if (!base)
          continue;
        for (ObjId fo : table.descendants(*base)) {
          std::string ptr = in.def;
          for (int fld : table.fieldPath(fo)) {
            InstrAst f;
            f.op = AstOp::Field;
            f.label = freshName(labels, in.label + "u.f");
            f.def = freshName(vars, "u_" + in.label + "_f");
            f.operands = {ptr};
            f.field = fld;
            f.loc = in.loc;
            ptr = f.def;
            out.push_back(std::move(f));
          }
          InstrAst fs;
          fs.op = AstOp::Store;
          fs.label = freshName(labels, in.label + "u");
          fs.operands = {ptr, uaoVar};
          fs.loc = in.loc;
          stores.emplace_back(fs.label, object);
          out.push_back(std::move(fs));
        }
      }
      b.instrs = std::move(out);
    }
  }

  LowerOutcome lowered = lowerModule(ast);
  if (!lowered.program)
    throw std::logic_error("instrumentation produced an invalid program: " + lowered.diagnostics.at(0).str());
  Instrumented r{std::move(*lowered.program), {}};
  for (const auto &[label, object] : stores) {
    r.uao.insertedStores.push_back(*r.program.findLabel(label));
    r.uao.association[*r.program.findObject(object)] = *r.program.findObject("uao:" + object);
  }
  return r;
}

std::vector<QueryKey> generateQueries(const Program &program, const AndersenResult &ander) {
  std::vector<QueryKey> out;
  for (LabelId l = 0; l < program.numInstructions(); ++l) {
    const Instruction &in = program.instr(l);
    if (in.kind != InstKind::Load)
      continue;
    for (ObjId o : ander.pts(in.def))
      if (ander.objects().kind(o) == ObjectKind::UAO) {
        out.push_back(QueryKey{{}, l, VarRef::top(in.def)});
        break;
      }
  }
  return out;
}

namespace {
UninitReport classify(const AndersenResult &ander, const std::vector<QueryKey> &keys,
                      const std::function<std::pair<ObjSet, bool>(std::size_t)> &ptsOf) {
  UninitReport r;
  ObjSet all;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    UninitEntry e;
    e.key = keys[i];
    auto [pts, resolved] = ptsOf(i);
    e.fullyResolved = resolved;
    for (ObjId o : pts)
      if (ander.objects().kind(o) == ObjectKind::UAO)
        e.reachingUaos.insert(o);
    if (!e.reachingUaos.empty()) {
      e.status = UninitStatus::PotentiallyUninitialized;
      ++r.numUninit;
    }
    all.insert(e.reachingUaos.begin(), e.reachingUaos.end());
    r.entries.push_back(std::move(e));
  }
  r.numQueries = keys.size();
  r.numUaos = all.size();
  return r;
}
} // namespace

UninitReport classifyUninit(const AndersenResult &ander, const std::vector<QueryKey> &keys,
                            const std::vector<PtsResult> &results) {
  if (results.size() != keys.size())
    throw std::invalid_argument("one result per query expected");
  return classify(ander, keys, [&](std::size_t i) {
    return std::make_pair(eraseContexts(results[i].pts), results[i].fullyResolved);
  });
}

UninitReport classifyWithOracle(const AndersenResult &ander, const std::vector<QueryKey> &keys,
                                const FlowSensitiveResult &oracle) {
  return classify(ander, keys, [&](std::size_t i) { return std::make_pair(oracle.pts(keys[i].var.var), true); });
}

} // namespace supa
