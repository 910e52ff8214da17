//===- svfg.h -- Sparse value-flow graph ------------------------------------//
//
// Nodes are instructions. Direct edges carry top-level def-use chains;
// indirect edges carry address-taken def-use chains taken from memory SSA.
// Edge labels name the variable or object, never its SSA version.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "supa/andersen.h"
#include "supa/memssa.h"

#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace supa {

enum class EdgeKind {
  IntraDirect,
  CallDirect,
  RetDirect,
  IntraIndirect,
  CallIndirect,
  RetIndirect,
};

const char *toString(EdgeKind kind);
inline bool isIndirect(EdgeKind k) {
  return k == EdgeKind::IntraIndirect || k == EdgeKind::CallIndirect || k == EdgeKind::RetIndirect;
}

struct VFEdge {
  LabelId src;
  LabelId dst;
  EdgeKind kind;
  /// VarId for direct edges, ObjId for indirect ones.
  std::uint32_t var;

  auto key() const { return std::make_tuple(src, dst, kind, var); }
  bool operator<(const VFEdge &o) const { return key() < o.key(); }
  bool operator==(const VFEdge &o) const { return key() == o.key(); }
};

class SVFG {
public:
  const std::vector<VFEdge> &edges() const { return edges_; }
  std::size_t numNodes() const { return numNodes_; }
  std::size_t numIndirectEdges() const;

  /// Incoming edges of `dst` of the given kind labelled `var`, sorted by source.
  const std::vector<VFEdge> &in(LabelId dst, EdgeKind kind, std::uint32_t var) const;
  std::vector<VFEdge> outgoing(LabelId src) const;

  std::string toDot(const Program &program, const AndersenResult &ander) const;
  std::string toJson(const Program &program, const AndersenResult &ander) const;

private:
  friend SVFG buildSVFG(const Program &, const AndersenResult &, const MemSSA &);

  std::size_t numNodes_ = 0;
  std::vector<VFEdge> edges_;
  std::map<std::tuple<LabelId, EdgeKind, std::uint32_t>, std::vector<VFEdge>> inIndex_;
};

SVFG buildSVFG(const Program &program, const AndersenResult &ander, const MemSSA &memssa);

} // namespace supa
