#include "supa/ir.h"

#include <sstream>

namespace supa {

namespace {

void printInstr(std::ostream &os, const InstrAst &in) {
  os << "  " << in.label << ": ";
  if (!in.def.empty())
    os << "%" << in.def << " = ";
  switch (in.op) {
  case AstOp::Alloca:
  case AstOp::Heap:
  case AstOp::Heap0:
    os << (in.op == AstOp::Alloca ? "alloca" : in.op == AstOp::Heap ? "heap" : "heap0");
    if (!in.objectName.empty() && in.objectName != in.label)
      os << " " << in.objectName;
    if (in.isArray)
      os << " [array]";
    break;
  case AstOp::Addr:
    os << "addr " << in.objectName;
    break;
  case AstOp::Uao:
    os << "uao " << in.objectName;
    break;
  case AstOp::Copy:
    os << "copy";
    for (std::size_t i = 0; i < in.operands.size(); ++i)
      os << (i ? ", %" : " %") << in.operands[i];
    break;
  case AstOp::Phi:
    os << "phi";
    for (std::size_t i = 0; i < in.operands.size(); ++i)
      os << (i ? ", [%" : " [%") << in.operands[i] << ", " << in.phiBlocks[i] << "]";
    break;
  case AstOp::Field:
    os << "field %" << in.operands[0] << ", " << in.field;
    break;
  case AstOp::Load:
    os << "load %" << in.operands[0];
    break;
  case AstOp::Store:
    os << "store %" << in.operands[0] << ", %" << in.operands[1];
    break;
  case AstOp::Call:
    os << "call " << in.callee << "(";
    for (std::size_t i = 0; i < in.operands.size(); ++i)
      os << (i ? ", %" : "%") << in.operands[i];
    os << ")";
    break;
  }
  os << "\n";
}

void printTerm(std::ostream &os, const TermAst &t) {
  if (t.kind == TermAst::Kind::None)
    return;
  os << "  " << t.label << ": ";
  switch (t.kind) {
  case TermAst::Kind::Br:
    os << "br " << t.targets[0] << " " << t.targets[1];
    break;
  case TermAst::Kind::Jmp:
    os << "jmp " << t.targets[0];
    break;
  case TermAst::Kind::Ret:
    os << "ret";
    if (!t.retValue.empty())
      os << " %" << t.retValue;
    break;
  case TermAst::Kind::None:
    break;
  }
  os << "\n";
}

} // namespace

std::string printModule(const ModuleAst &module) {
  std::ostringstream os;
  for (const GlobalAst &g : module.globals) {
    os << "global @" << g.name;
    if (g.isArray)
      os << " [array]";
    if (!g.initTarget.empty())
      os << " -> @" << g.initTarget;
    os << "\n";
  }
  for (const FunctionAst &f : module.functions) {
    if (!module.globals.empty() || &f != &module.functions.front())
      os << "\n";
    if (!f.entryLabel.empty() && f.entryLabel != f.name + ".entry")
      os << f.entryLabel << ": ";
    os << "func @" << f.name << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i)
      os << (i ? ", %" : "%") << f.params[i];
    os << ") {\n";
    for (const BlockAst &b : f.blocks) {
      os << b.name << ":\n";
      for (const InstrAst &in : b.instrs)
        printInstr(os, in);
      printTerm(os, b.term);
    }
    os << "}\n";
  }
  return os.str();
}

std::string formatInstruction(const Program &program, LabelId label) {
  const Instruction &in = program.instr(label);
  auto var = [&](VarId v) { return "%" + program.var(v).name; };
  std::ostringstream os;
  if (in.def != kInvalidId)
    os << var(in.def) << " = ";
  switch (in.kind) {
  case InstKind::AddrOf: {
    const ObjectInfo &o = program.object(in.object);
    switch (o.kind) {
    case ObjectKind::Stack:
      os << "alloca " << o.name;
      break;
    case ObjectKind::Heap:
      os << (o.defaultInit ? "heap0 " : "heap ") << o.name;
      break;
    case ObjectKind::UAO:
      os << "uao " << program.object(o.uaoOf).name;
      break;
    default:
      os << "addr " << o.name;
      break;
    }
    if (o.isArray && o.kind != ObjectKind::Global)
      os << " [array]";
    break;
  }
  case InstKind::Copy:
    os << "copy";
    for (std::size_t i = 0; i < in.operands.size(); ++i)
      os << (i ? ", " : " ") << var(in.operands[i]);
    break;
  case InstKind::Phi: {
    os << "phi";
    const Function &fn = program.function(in.func);
    for (std::size_t i = 0; i < in.operands.size(); ++i)
      os << (i ? ", [" : " [") << var(in.operands[i]) << ", " << fn.blocks[in.phiBlocks[i]].name << "]";
    break;
  }
  case InstKind::Field:
    os << "field " << var(in.base()) << ", " << in.field;
    break;
  case InstKind::Load:
    os << "load " << var(in.base());
    break;
  case InstKind::Store:
    os << "store " << var(in.storePtr()) << ", " << var(in.storeValue());
    break;
  case InstKind::Call:
    os << "call " << (in.calleeVar != kInvalidId ? var(in.calleeVar) : "@" + program.function(in.calleeFunc).name)
       << "(";
    for (std::size_t i = 0; i < in.operands.size(); ++i)
      os << (i ? ", " : "") << var(in.operands[i]);
    os << ")";
    break;
  case InstKind::FunEntry:
    os << "entry @" << program.function(in.func).name << "(";
    for (std::size_t i = 0; i < in.operands.size(); ++i)
      os << (i ? ", " : "") << var(in.operands[i]);
    os << ")";
    break;
  case InstKind::FunExit:
    os << "ret";
    if (!in.operands.empty())
      os << " " << var(in.operands[0]);
    break;
  }
  return os.str();
}

} // namespace supa
