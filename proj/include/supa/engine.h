//===- engine.h -- Demand-driven points-to queries with strong updates ------//
//
// A query ⟨c, ℓ, v⟩ is answered by walking the value-flow graph backwards
// from ℓ. Stores kill the old contents of a singleton destination; calls are
// resolved on the fly from the query's own results. Every edge traversal
// costs one unit of budget; exhausting it falls back to the pre-analysis.
//
// Two modes share one traversal: flow-sensitive (FS) keeps every context
// empty, flow- and context-sensitive (FSCS) matches calls and returns with a
// k-limited stack of callsites.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "supa/andersen.h"
#include "supa/memssa.h"
#include "supa/svfg.h"

#include <atomic>
#include <chrono>
#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace supa {

enum class Mode { FS, FSCS };
const char *toString(Mode m);

/// Callsites, most recent last. `truncated` records that k-limiting dropped
/// outer frames.
struct Context {
  std::vector<LabelId> frames;
  bool truncated = false;

  bool empty() const { return frames.empty() && !truncated; }
  auto operator<=>(const Context &) const = default;
  bool operator==(const Context &) const = default;
};

struct CtxObject {
  Context ctx;
  ObjId obj;

  auto operator<=>(const CtxObject &) const = default;
  bool operator==(const CtxObject &) const = default;
};

using CtxObjSet = std::set<CtxObject>;

/// A top-level variable or a (context-qualified) abstract object.
struct VarRef {
  bool isObject = false;
  VarId var = kInvalidId;
  CtxObject obj{{}, kInvalidId};

  static VarRef top(VarId v) { return {false, v, {{}, kInvalidId}}; }
  static VarRef object(ObjId o, Context c = {}) { return {true, kInvalidId, {std::move(c), o}}; }
  auto operator<=>(const VarRef &) const = default;
  bool operator==(const VarRef &) const = default;
};

struct QueryKey {
  Context ctx;
  LabelId label = kInvalidId;
  VarRef var;

  auto operator<=>(const QueryKey &) const = default;
  bool operator==(const QueryKey &) const = default;
};

/// std::nullopt means unlimited.
using Budget = std::optional<std::uint64_t>;

struct PtsResult {
  CtxObjSet pts;
  bool fullyResolved = false;
  std::uint64_t edgesTraversed = 0;
  std::set<LabelId> strongUpdates;
  /// Index of the answering stage, or -1 for the pre-analysis fallback.
  int stage = -1;
  /// Times the root was (re)computed before its value stabilised.
  int rounds = 0;
  bool cacheHit = false;
};

struct Stage {
  Mode kind = Mode::FS;
  Budget budget;
};

struct StagePlan {
  std::vector<Stage> stages;
  int maxCtxDepth = 3;
};

/// Parses "fscs:10000,fs:inf".
std::optional<StagePlan> parseStagePlan(const std::string &text, int maxCtxDepth = 3);
std::string toString(const StagePlan &plan);

class SingletonInfo {
public:
  SingletonInfo(const Program &program, const AndersenResult &ander);

  /// Flow-sensitive singleton: a non-array, non-collapsed stack or global
  /// object (or field thereof) whose owner is not recursive.
  bool singleton(ObjId o) const;
  /// Adds heap objects under a concrete context.
  bool cxtSingleton(const CtxObject &o) const;
  /// The name denotes exactly one runtime location relative to main.
  bool preciseName(const CtxObject &o) const;
  const std::set<ObjId> &singletons() const { return singletons_; }

private:
  const Program &program_;
  const AndersenResult &ander_;
  std::set<ObjId> singletons_;
  bool mainIsRoot_ = false;
};

enum class KillKind { Kill, KillAll, KillNone };
struct KillSet {
  KillKind kind = KillKind::KillNone;
  CtxObjSet objects;
};

KillSet killSet(Mode mode, const CtxObjSet &ptrPts, const SingletonInfo &singles);

struct EngineOptions {
  bool cache = true;
};

struct BatchStats {
  std::size_t queries = 0;
  double totalSeconds = 0;
  double meanSeconds = 0;
  std::size_t strongUpdates = 0;
  std::size_t fallbacks = 0;
  std::uint64_t edges = 0;
  std::vector<std::size_t> answeredPerStage;
};

struct BatchResult {
  std::vector<PtsResult> results;
  BatchStats stats;
};

class Engine {
public:
  Engine(const Program &program, const AndersenResult &ander, const MemSSA &memssa, const SVFG &svfg,
         EngineOptions opts = {});
  ~Engine();

  const Program &program() const { return program_; }
  const AndersenResult &ander() const { return ander_; }
  const SingletonInfo &singletons() const { return singles_; }

  /// Empty when the key names an existing label and a variable defined or
  /// used there (an object needs a mu or chi at the label).
  std::optional<Diagnostic> validate(const QueryKey &key) const;

  /// Parses "l16:%z", "l15:b", "[l3,l7]l16:%z" or "[(l3,l7)]l16:%z".
  std::optional<QueryKey> parseQuery(const std::string &text, std::string *error = nullptr) const;
  std::string formatQuery(const QueryKey &key) const;
  std::string formatObject(const CtxObject &o) const;
  std::vector<std::string> formatPts(const CtxObjSet &pts) const;

  /// Pre-analysis answer with empty contexts.
  CtxObjSet fallback(const QueryKey &key) const;

  PtsResult queryFS(const QueryKey &key, Budget budget);
  PtsResult queryFSCS(const QueryKey &key, Budget budget, int maxDepth);
  PtsResult runHybrid(const QueryKey &key, const StagePlan &plan);
  BatchResult answerAll(const std::vector<QueryKey> &keys, const StagePlan &plan, int workers);

  std::size_t cacheSize() const;
  void clearCache();

  /// Throws std::invalid_argument for an invalid key.
  void requireValid(const QueryKey &key) const;

  struct Impl;

private:
  const Program &program_;
  const AndersenResult &ander_;
  const MemSSA &memssa_;
  const SVFG &svfg_;
  EngineOptions opts_;
  SingletonInfo singles_;
  std::unique_ptr<Impl> impl_;
};

/// Erases contexts.
ObjSet eraseContexts(const CtxObjSet &pts);

} // namespace supa
