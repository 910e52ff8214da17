#include "supa/engine.h"

#include <algorithm>
#include <deque>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace supa {

const char *toString(Mode m) { return m == Mode::FS ? "fs" : "fscs"; }

ObjSet eraseContexts(const CtxObjSet &pts) {
  ObjSet out;
  for (const CtxObject &o : pts)
    out.insert(o.obj);
  return out;
}

//===----------------------------------------------------------------------===//
// Stage plans
//===----------------------------------------------------------------------===//

std::optional<StagePlan> parseStagePlan(const std::string &text, int maxCtxDepth) {
  StagePlan plan;
  plan.maxCtxDepth = maxCtxDepth;
  std::stringstream ss(text);
  std::string item;
  int fscsStages = 0;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      return std::nullopt;
    std::string kind = item.substr(0, colon), budget = item.substr(colon + 1);
    Stage st;
    if (kind == "fs") {
      st.kind = Mode::FS;
    } else if (kind == "fscs") {
      st.kind = Mode::FSCS;
      ++fscsStages;
    } else {
      return std::nullopt;
    }
    if (budget == "inf") {
      st.budget = std::nullopt;
    } else {
      if (budget.empty() || budget.find_first_not_of("0123456789") != std::string::npos)
        return std::nullopt;
      st.budget = std::stoull(budget);
    }
    plan.stages.push_back(st);
  }
  // Reuse between two FSCS stages of different depths is undefined.
  if (plan.stages.empty() || fscsStages > 1)
    return std::nullopt;
  return plan;
}

std::string toString(const StagePlan &plan) {
  std::string out;
  for (const Stage &s : plan.stages) {
    if (!out.empty())
      out += ",";
    out += std::string(toString(s.kind)) + ":" + (s.budget ? std::to_string(*s.budget) : "inf");
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Singletons and kill sets
//===----------------------------------------------------------------------===//

SingletonInfo::SingletonInfo(const Program &program, const AndersenResult &ander)
    : program_(program), ander_(ander) {
  const ObjectTable &t = ander.objects();
  for (ObjId o = 0; o < t.size(); ++o) {
    const ObjectInfo &info = t.info(o);
    if (info.isArray || t.isCollapsed(o))
      continue;
    if (info.kind == ObjectKind::Global ||
        (info.kind == ObjectKind::Stack && !ander.inRecursion(info.owner)))
      singletons_.insert(o);
  }
  FuncId main = program.mainFunction();
  mainIsRoot_ = main != kInvalidId && ander.callers(main).empty();
}

bool SingletonInfo::singleton(ObjId o) const { return singletons_.count(o) != 0; }

bool SingletonInfo::preciseName(const CtxObject &co) const {
  const ObjectTable &t = ander_.objects();
  const ObjectInfo &info = t.info(co.obj);
  if (info.kind != ObjectKind::Heap)
    return true;
  if (info.isArray || t.isCollapsed(co.obj) || ander_.inRecursion(info.owner) || !mainIsRoot_ ||
      co.ctx.truncated || program_.inCfgLoop(info.allocSite))
    return false;
  FuncId outermost = co.ctx.frames.empty() ? info.owner : program_.instr(co.ctx.frames.front()).func;
  if (outermost != program_.mainFunction())
    return false;
  for (LabelId cs : co.ctx.frames)
    if (program_.inCfgLoop(cs) || ander_.inRecursion(program_.instr(cs).func))
      return false;
  return true;
}

bool SingletonInfo::cxtSingleton(const CtxObject &o) const {
  if (singleton(o.obj))
    return true;
  return ander_.objects().kind(o.obj) == ObjectKind::Heap && preciseName(o);
}

KillSet killSet(Mode mode, const CtxObjSet &ptrPts, const SingletonInfo &singles) {
  KillSet k;
  if (ptrPts.empty()) {
    k.kind = KillKind::KillAll;
    return k;
  }
  if (ptrPts.size() == 1) {
    const CtxObject &only = *ptrPts.begin();
    bool eligible = mode == Mode::FS ? singles.singleton(only.obj) : singles.cxtSingleton(only);
    if (eligible) {
      k.kind = KillKind::Kill;
      k.objects = ptrPts;
    }
  }
  return k;
}

//===----------------------------------------------------------------------===//
// Traversal state
//===----------------------------------------------------------------------===//

namespace {

enum class LvKind : std::uint8_t { Top, TopUse, Obj, ObjUse };

/// A labelled variable ⟨c, ℓ, v⟩. Top: value of var at its def `node`.
/// TopUse: var read at `node`. Obj: contents of `loc` after `node` (which
/// defines it). ObjUse: contents of `loc` reaching `node`.
struct LV {
  Context ctx;
  LabelId node = kInvalidId;
  LvKind kind = LvKind::Top;
  VarId var = kInvalidId;
  CtxObject loc{{}, kInvalidId};

  auto operator<=>(const LV &) const = default;
  bool operator==(const LV &) const = default;
};

struct CacheKey {
  Mode mode;
  int depth;
  LV lv;
  auto operator<=>(const CacheKey &) const = default;
};

struct CacheValue {
  CtxObjSet pts;
  std::set<LabelId> strongUpdates;
};

struct FailureKey {
  Mode mode;
  int depth;
  LV lv;
  auto operator<=>(const FailureKey &) const = default;
};

struct OutOfBudget {};

/// Writes produced by one query, applied to the shared cache later.
struct PendingWrites {
  std::vector<std::pair<CacheKey, CacheValue>> entries;
  std::vector<std::pair<FailureKey, Budget>> failures;
};

bool budgetAtLeast(const Budget &a, const Budget &b) {
  if (!a)
    return true;
  if (!b)
    return false;
  return *a >= *b;
}

} // namespace

struct Engine::Impl {
  mutable std::shared_mutex mutex;
  std::map<CacheKey, CacheValue> cache;
  std::map<FailureKey, Budget> failures; // largest failed budget

  std::optional<CacheValue> lookup(const CacheKey &k) const {
    std::shared_lock lock(mutex);
    auto it = cache.find(k);
    if (it == cache.end())
      return std::nullopt;
    return it->second;
  }

  bool failedBefore(const FailureKey &k, const Budget &b) const {
    std::shared_lock lock(mutex);
    auto it = failures.find(k);
    return it != failures.end() && budgetAtLeast(it->second, b);
  }

  void apply(PendingWrites &w) {
    std::unique_lock lock(mutex);
    for (auto &[k, v] : w.entries)
      cache.emplace(k, std::move(v)); // insert-once
    for (auto &[k, b] : w.failures) {
      auto it = failures.find(k);
      if (it == failures.end() || !budgetAtLeast(it->second, b))
        failures[k] = b;
    }
  }
};

namespace {

class QueryRun {
public:
  QueryRun(const Program &p, const AndersenResult &a, const MemSSA &m, const SVFG &g, const SingletonInfo &s,
           Engine::Impl *cache, Mode mode, int depth, Budget budget)
      : p_(p), a_(a), m_(m), g_(g), s_(s), cache_(cache), mode_(mode), depth_(mode == Mode::FS ? -1 : depth),
        budget_(budget) {}

  PtsResult run(const LV &root, PendingWrites &out) {
    PtsResult r;
    if (cache_) {
      if (auto hit = cache_->lookup({mode_, depth_, root})) {
        r.pts = hit->pts;
        r.strongUpdates = hit->strongUpdates;
        r.fullyResolved = true;
        r.cacheHit = true;
        return r;
      }
    }
    try {
      root_ = create(root);
      if (!entries_[root_].fromCache) {
        charge(); // the root is a demand like any other
        evaluate(root_);
      }
      while (!work_.empty()) {
        int idx = work_.front();
        work_.pop_front();
        entries_[idx].queued = false;
        evaluate(idx);
      }
    } catch (const OutOfBudget &) {
      r.edgesTraversed = used_;
      r.rounds = rounds_;
      return r;
    }
    r.pts = entries_[root_].pts;
    r.fullyResolved = true;
    r.edgesTraversed = used_;
    r.rounds = rounds_;
    r.strongUpdates = transitiveStrongUpdates(root_);
    if (cache_)
      for (std::size_t i = 0; i < entries_.size(); ++i)
        if (!entries_[i].fromCache)
          out.entries.push_back({{mode_, depth_, entries_[i].lv},
                                 {entries_[i].pts, transitiveStrongUpdates(static_cast<int>(i))}});
    return r;
  }

private:
  struct Entry {
    LV lv;
    CtxObjSet pts;
    std::uint64_t version = 0;
    bool queued = false;
    bool fromCache = false;
    std::set<LabelId> ownSU;
    std::vector<int> deps;
    std::map<int, std::uint64_t> readers;
  };

  void charge() {
    if (budget_ && used_ >= *budget_)
      throw OutOfBudget{};
    ++used_;
  }

  int create(const LV &lv) {
    auto it = index_.find(lv);
    if (it != index_.end())
      return it->second;
    int idx = static_cast<int>(entries_.size());
    entries_.emplace_back();
    entries_.back().lv = lv;
    index_.emplace(lv, idx);
    if (cache_) {
      if (auto hit = cache_->lookup({mode_, depth_, lv})) {
        Entry &e = entries_.back();
        e.fromCache = true;
        e.pts = hit->pts;
        e.ownSU = hit->strongUpdates;
        e.version = 1;
      }
    }
    return idx;
  }

  CtxObjSet demand(const LV &lv) {
    charge();
    bool fresh = !index_.count(lv);
    int idx = create(lv);
    if (fresh && !entries_[idx].fromCache)
      evaluate(idx);
    Entry &e = entries_[idx];
    if (current_ >= 0) {
      e.readers[current_] = e.version;
      entries_[current_].deps.push_back(idx);
    }
    return e.pts;
  }

  CtxObjSet demandVar(const Context &ctx, VarId v) {
    return demand(LV{ctx, p_.var(v).def, LvKind::Top, v, {{}, kInvalidId}});
  }

  void evaluate(int idx) {
    int saved = current_;
    current_ = idx;
    entries_[idx].deps.clear();
    entries_[idx].ownSU.clear();
    if (idx == root_)
      ++rounds_;
    LV lv = entries_[idx].lv;
    CtxObjSet result = compute(lv, entries_[idx]);
    current_ = saved;
    Entry &e = entries_[idx];
    std::size_t before = e.pts.size();
    e.pts.insert(result.begin(), result.end());
    if (e.pts.size() != before) {
      ++e.version;
      for (const auto &[reader, seen] : e.readers)
        if (seen < e.version && !entries_[reader].queued) {
          entries_[reader].queued = true;
          work_.push_back(reader);
        }
    }
  }

  std::set<LabelId> transitiveStrongUpdates(int from) const {
    std::set<LabelId> out;
    std::vector<bool> seen(entries_.size(), false);
    std::vector<int> stack{from};
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      if (seen[i])
        continue;
      seen[i] = true;
      out.insert(entries_[i].ownSU.begin(), entries_[i].ownSU.end());
      for (int d : entries_[i].deps)
        stack.push_back(d);
    }
    return out;
  }

  Context objectContext(const Context &ctx, ObjId o) const {
    if (mode_ == Mode::FSCS && a_.objects().kind(o) == ObjectKind::Heap)
      return ctx;
    return {};
  }

  std::optional<Context> push(const Context &ctx, LabelId cs, FuncId callee) const {
    if (mode_ == Mode::FS || a_.sameScc(p_.instr(cs).func, callee))
      return ctx;
    Context c = ctx;
    c.frames.push_back(cs);
    if (static_cast<int>(c.frames.size()) > depth_) {
      c.frames.erase(c.frames.begin());
      c.truncated = true;
    }
    return c;
  }

  std::optional<Context> pop(const Context &ctx, LabelId cs, FuncId callee) const {
    if (mode_ == Mode::FS || a_.sameScc(p_.instr(cs).func, callee) || ctx.frames.empty())
      return ctx;
    if (ctx.frames.back() != cs)
      return std::nullopt;
    Context c = ctx;
    c.frames.pop_back();
    return c;
  }

  std::set<FuncId> resolve(const Context &ctx, LabelId cs) {
    const Instruction &in = p_.instr(cs);
    if (in.calleeFunc != kInvalidId)
      return {in.calleeFunc};
    std::set<FuncId> out;
    const std::set<FuncId> &possible = a_.callees(cs);
    for (const CtxObject &o : demandVar(ctx, in.calleeVar)) {
      const ObjectTable &t = a_.objects();
      if (t.kind(o.obj) != ObjectKind::Function || t.isField(o.obj))
        continue;
      FuncId f = t.info(o.obj).function;
      if (possible.count(f))
        out.insert(f);
    }
    return out;
  }

  bool mayAlias(const CtxObject &a, const CtxObject &b) const {
    if (a.obj != b.obj)
      return false;
    return a.ctx == b.ctx || !s_.preciseName(a) || !s_.preciseName(b);
  }

  CtxObjSet useOf(const Context &ctx, LabelId node, const CtxObject &loc) {
    CtxObjSet out;
    for (const VFEdge &e : g_.in(node, EdgeKind::IntraIndirect, loc.obj)) {
      CtxObjSet v = demand(LV{ctx, e.src, LvKind::Obj, kInvalidId, loc});
      out.insert(v.begin(), v.end());
    }
    return out;
  }

  CtxObjSet compute(const LV &lv, Entry &self) {
    const Instruction &in = p_.instr(lv.node);
    CtxObjSet out;
    auto add = [&out](const CtxObjSet &s) { out.insert(s.begin(), s.end()); };

    switch (lv.kind) {
    case LvKind::TopUse:
      return demandVar(lv.ctx, lv.var);
    case LvKind::ObjUse:
      return useOf(lv.ctx, lv.node, lv.loc);
    case LvKind::Top:
      switch (in.kind) {
      case InstKind::AddrOf:
        out.insert({objectContext(lv.ctx, in.object), in.object});
        return out;
      case InstKind::Copy:
      case InstKind::Phi:
        for (VarId v : in.operands)
          add(demandVar(lv.ctx, v));
        return out;
      case InstKind::Field:
        for (const CtxObject &o : demandVar(lv.ctx, in.base()))
          out.insert({o.ctx, a_.fieldOf(o.obj, in.field)});
        return out;
      case InstKind::Load:
        for (const CtxObject &o : demandVar(lv.ctx, in.base()))
          add(useOf(lv.ctx, lv.node, o));
        return out;
      case InstKind::Call:
        for (FuncId f : resolve(lv.ctx, lv.node)) {
          const Function &fn = p_.function(f);
          if (fn.retVar == kInvalidId)
            continue;
          add(demandVar(*push(lv.ctx, lv.node, f), fn.retVar));
        }
        return out;
      case InstKind::FunEntry: {
        const Function &fn = p_.function(in.func);
        std::size_t i = std::find(fn.params.begin(), fn.params.end(), lv.var) - fn.params.begin();
        for (LabelId cs : a_.callers(in.func)) {
          auto c = pop(lv.ctx, cs, in.func);
          if (!c || !resolve(*c, cs).count(in.func))
            continue;
          const Instruction &call = p_.instr(cs);
          if (i < call.operands.size())
            add(demandVar(*c, call.operands[i]));
        }
        return out;
      }
      case InstKind::Store:
      case InstKind::FunExit:
        return out;
      }
      return out;
    case LvKind::Obj:
      switch (in.kind) {
      case InstKind::Store: {
        CtxObjSet ptr = demandVar(lv.ctx, in.storePtr());
        bool written = false;
        for (const CtxObject &o : ptr)
          written |= mayAlias(o, lv.loc);
        if (written)
          add(demandVar(lv.ctx, in.storeValue()));
        KillSet k = killSet(mode_, ptr, s_);
        if (k.kind == KillKind::KillAll || (k.kind == KillKind::Kill && k.objects.count(lv.loc))) {
          self.ownSU.insert(lv.node);
          return out;
        }
        add(useOf(lv.ctx, lv.node, lv.loc));
        return out;
      }
      case InstKind::Call:
        for (FuncId f : resolve(lv.ctx, lv.node)) {
          LabelId exit = p_.function(f).exit;
          for (const VFEdge &e : g_.in(lv.node, EdgeKind::RetIndirect, lv.loc.obj))
            if (e.src == exit)
              add(demand(LV{*push(lv.ctx, lv.node, f), exit, LvKind::Obj, kInvalidId, lv.loc}));
        }
        return out;
      case InstKind::FunEntry: {
        const auto &calls = g_.in(lv.node, EdgeKind::CallIndirect, lv.loc.obj);
        for (const VFEdge &e : calls) {
          auto c = pop(lv.ctx, e.src, in.func);
          if (!c || !resolve(*c, e.src).count(in.func))
            continue;
          add(useOf(*c, e.src, lv.loc));
        }
        return out;
      }
      default:
        return useOf(lv.ctx, lv.node, lv.loc);
      }
    }
    return out;
  }

  const Program &p_;
  const AndersenResult &a_;
  const MemSSA &m_;
  const SVFG &g_;
  const SingletonInfo &s_;
  Engine::Impl *cache_;
  Mode mode_;
  int depth_;
  Budget budget_;
  std::uint64_t used_ = 0;
  int rounds_ = 0;
  int root_ = -1;
  int current_ = -1;
  std::deque<Entry> entries_;
  std::map<LV, int> index_;
  std::deque<int> work_;
};

} // namespace

//===----------------------------------------------------------------------===//
// Engine
//===----------------------------------------------------------------------===//

Engine::Engine(const Program &program, const AndersenResult &ander, const MemSSA &memssa, const SVFG &svfg,
               EngineOptions opts)
    : program_(program), ander_(ander), memssa_(memssa), svfg_(svfg), opts_(opts), singles_(program, ander),
      impl_(std::make_unique<Impl>()) {}

Engine::~Engine() = default;

std::size_t Engine::cacheSize() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->cache.size();
}

void Engine::clearCache() {
  std::unique_lock lock(impl_->mutex);
  impl_->cache.clear();
  impl_->failures.clear();
}

std::optional<Diagnostic> Engine::validate(const QueryKey &key) const {
  auto fail = [](const std::string &msg) { return Diagnostic{{}, "query", msg}; };
  if (key.label >= program_.numInstructions())
    return fail("unknown label");
  const Instruction &in = program_.instr(key.label);
  for (LabelId cs : key.ctx.frames)
    if (cs >= program_.numInstructions() || program_.instr(cs).kind != InstKind::Call)
      return fail("context frame is not a callsite");
  if (!key.var.isObject) {
    VarId v = key.var.var;
    if (v >= program_.variables().size())
      return fail("unknown variable");
    if (program_.var(v).func != in.func)
      return fail("variable " + program_.varName(v) + " does not belong to the function of " + in.label);
    if (in.def == v || program_.var(v).def == key.label)
      return std::nullopt;
    auto used = program_.usedVars(key.label);
    if (std::find(used.begin(), used.end(), v) == used.end())
      return fail("variable " + program_.varName(v) + " is neither defined nor used at " + in.label);
    return std::nullopt;
  }
  ObjId o = key.var.obj.obj;
  if (o >= ander_.objects().size())
    return fail("unknown object");
  if (!memssa_.hasChi(key.label, o) && !memssa_.hasMu(key.label, o))
    return fail("object " + ander_.objects().name(o) + " is not accessed at " + in.label);
  return std::nullopt;
}

void Engine::requireValid(const QueryKey &key) const {
  if (auto d = validate(key))
    throw std::invalid_argument(d->message);
}

CtxObjSet Engine::fallback(const QueryKey &key) const {
  const ObjSet &s = key.var.isObject ? ander_.objPts(key.var.obj.obj) : ander_.pts(key.var.var);
  CtxObjSet out;
  for (ObjId o : s)
    out.insert({{}, o});
  return out;
}

namespace {
LV rootLV(const Program &p, const MemSSA &m, const QueryKey &key, Mode mode) {
  LV lv;
  lv.ctx = mode == Mode::FS ? Context{} : key.ctx;
  lv.node = key.label;
  if (!key.var.isObject) {
    lv.var = key.var.var;
    lv.kind = p.var(lv.var).def == key.label ? LvKind::Top : LvKind::TopUse;
  } else {
    lv.loc = key.var.obj;
    if (mode == Mode::FS)
      lv.loc.ctx = {};
    lv.kind = m.hasChi(key.label, lv.loc.obj) ? LvKind::Obj : LvKind::ObjUse;
  }
  return lv;
}
} // namespace

struct StageRunner {
  const Engine &engine;
  const Program &p;
  const AndersenResult &a;
  const MemSSA &m;
  const SVFG &g;
  Engine::Impl *cache;

  PtsResult runStage(const QueryKey &key, Mode mode, Budget budget, int depth, PendingWrites &writes) const {
    LV root = rootLV(p, m, key, mode);
    QueryRun run(p, a, m, g, engine.singletons(), cache, mode, depth, budget);
    PtsResult r = run.run(root, writes);
    if (!r.fullyResolved) {
      r.pts = engine.fallback(key);
      r.strongUpdates.clear();
      r.stage = -1;
      if (cache)
        writes.failures.push_back({{mode, mode == Mode::FS ? -1 : depth, root}, budget});
    } else {
      r.stage = 0;
    }
    return r;
  }

  PtsResult hybrid(const QueryKey &key, const StagePlan &plan, PendingWrites &writes) const {
    PtsResult last;
    for (std::size_t i = 0; i < plan.stages.size(); ++i) {
      const Stage &st = plan.stages[i];
      int depth = st.kind == Mode::FS ? -1 : plan.maxCtxDepth;
      LV root = rootLV(p, m, key, st.kind);
      if (cache) {
        // Backward reuse of a context-free FSCS answer by an FS stage.
        if (st.kind == Mode::FS && key.ctx.empty()) {
          LV fscsRoot = rootLV(p, m, key, Mode::FSCS);
          if (auto hit = cache->lookup({Mode::FSCS, plan.maxCtxDepth, fscsRoot})) {
            bool contextFree = std::all_of(hit->pts.begin(), hit->pts.end(),
                                           [](const CtxObject &o) { return o.ctx.empty(); });
            if (contextFree) {
              PtsResult r;
              r.pts = hit->pts;
              r.strongUpdates = hit->strongUpdates;
              r.fullyResolved = true;
              r.cacheHit = true;
              r.stage = static_cast<int>(i);
              return r;
            }
          }
        }
        // Forward reuse: this stage already failed with at least this budget.
        if (cache->failedBefore({st.kind, depth, root}, st.budget))
          continue;
      }
      last = runStage(key, st.kind, st.budget, plan.maxCtxDepth, writes);
      if (last.fullyResolved) {
        last.stage = static_cast<int>(i);
        return last;
      }
    }
    last.pts = engine.fallback(key);
    last.fullyResolved = false;
    last.strongUpdates.clear();
    last.stage = -1;
    return last;
  }
};

PtsResult Engine::queryFS(const QueryKey &key, Budget budget) {
  requireValid(key);
  PendingWrites w;
  StageRunner sr{*this, program_, ander_, memssa_, svfg_, opts_.cache ? impl_.get() : nullptr};
  PtsResult r = sr.runStage(key, Mode::FS, budget, -1, w);
  if (opts_.cache)
    impl_->apply(w);
  return r;
}

PtsResult Engine::queryFSCS(const QueryKey &key, Budget budget, int maxDepth) {
  requireValid(key);
  PendingWrites w;
  StageRunner sr{*this, program_, ander_, memssa_, svfg_, opts_.cache ? impl_.get() : nullptr};
  PtsResult r = sr.runStage(key, Mode::FSCS, budget, maxDepth, w);
  if (opts_.cache)
    impl_->apply(w);
  return r;
}

PtsResult Engine::runHybrid(const QueryKey &key, const StagePlan &plan) {
  requireValid(key);
  if (plan.stages.empty())
    throw std::invalid_argument("empty stage plan");
  PendingWrites w;
  StageRunner sr{*this, program_, ander_, memssa_, svfg_, opts_.cache ? impl_.get() : nullptr};
  PtsResult r = sr.hybrid(key, plan, w);
  if (opts_.cache)
    impl_->apply(w);
  return r;
}

BatchResult Engine::answerAll(const std::vector<QueryKey> &keys, const StagePlan &plan, int workers) {
  if (workers < 1)
    throw std::invalid_argument("workers must be at least 1");
  if (plan.stages.empty())
    throw std::invalid_argument("empty stage plan");
  for (const QueryKey &k : keys)
    requireValid(k);
  BatchResult out;
  out.results.resize(keys.size());
  std::vector<PendingWrites> writes(keys.size());
  std::vector<double> seconds(keys.size(), 0.0);
  StageRunner sr{*this, program_, ander_, memssa_, svfg_, opts_.cache ? impl_.get() : nullptr};

  // Every query reads the cache as it was before the batch; its own writes
  // are published afterwards in input order, so results do not depend on
  // scheduling.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= keys.size())
        break;
      auto t0 = std::chrono::steady_clock::now();
      out.results[i] = sr.hybrid(keys[i], plan, writes[i]);
      seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> pool;
  int n = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(keys.size(), 1)));
  for (int t = 1; t < n; ++t)
    pool.emplace_back(worker);
  worker();
  for (std::thread &t : pool)
    t.join();
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (opts_.cache)
    for (PendingWrites &w : writes)
      impl_->apply(w);

  BatchStats &st = out.stats;
  st.queries = keys.size();
  st.answeredPerStage.assign(plan.stages.size(), 0);
  st.totalSeconds = wall;
  double sum = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const PtsResult &r = out.results[i];
    sum += seconds[i];
    st.strongUpdates += r.strongUpdates.size();
    st.edges += r.edgesTraversed;
    if (r.stage < 0)
      ++st.fallbacks;
    else
      ++st.answeredPerStage[r.stage];
  }
  st.meanSeconds = keys.empty() ? 0.0 : sum / static_cast<double>(keys.size());
  return out;
}

//===----------------------------------------------------------------------===//
// Query syntax
//===----------------------------------------------------------------------===//

std::optional<QueryKey> Engine::parseQuery(const std::string &text, std::string *error) const {
  auto fail = [&](const std::string &msg) -> std::optional<QueryKey> {
    if (error)
      *error = msg;
    return std::nullopt;
  };
  QueryKey key;
  std::string rest = text;
  if (!rest.empty() && rest[0] == '[') {
    auto close = rest.find(']');
    if (close == std::string::npos)
      return fail("unterminated context in '" + text + "'");
    std::string frames = rest.substr(1, close - 1);
    rest = rest.substr(close + 1);
    std::string cleaned;
    for (char c : frames)
      if (c != '(' && c != ')' && c != ' ')
        cleaned += c;
    std::stringstream ss(cleaned);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty())
        continue;
      auto l = program_.findLabel(item);
      if (!l)
        return fail("unknown label '" + item + "' in context");
      key.ctx.frames.push_back(*l);
    }
  }
  auto colon = rest.rfind(':');
  if (colon == std::string::npos)
    return fail("expected LABEL:VAR, got '" + text + "'");
  std::string label = rest.substr(0, colon), var = rest.substr(colon + 1);
  auto l = program_.findLabel(label);
  if (!l)
    return fail("unknown label '" + label + "'");
  key.label = *l;
  if (!var.empty() && var[0] == '%') {
    auto v = program_.findVar(program_.instr(*l).func, var);
    if (!v)
      return fail("unknown variable '" + var + "' at " + label);
    key.var = VarRef::top(*v);
  } else {
    auto o = ander_.objects().findByName(var);
    if (!o)
      return fail("unknown object '" + var + "'");
    key.var = VarRef::object(*o);
  }
  if (auto d = validate(key))
    return fail(d->message);
  return key;
}

std::string Engine::formatObject(const CtxObject &o) const {
  const std::string &name = ander_.objects().name(o.obj);
  if (o.ctx.empty())
    return name;
  std::string out = "[";
  if (o.ctx.truncated)
    out += o.ctx.frames.empty() ? ".." : "..,";
  for (std::size_t i = 0; i < o.ctx.frames.size(); ++i)
    out += (i ? "," : "") + program_.instr(o.ctx.frames[i]).label;
  return out + "]" + name;
}

std::vector<std::string> Engine::formatPts(const CtxObjSet &pts) const {
  std::vector<std::string> out;
  for (const CtxObject &o : pts)
    out.push_back(formatObject(o));
  std::sort(out.begin(), out.end());
  return out;
}

std::string Engine::formatQuery(const QueryKey &key) const {
  std::string out;
  if (!key.ctx.frames.empty()) {
    out = "[";
    for (std::size_t i = 0; i < key.ctx.frames.size(); ++i)
      out += (i ? "," : "") + program_.instr(key.ctx.frames[i]).label;
    out += "]";
  }
  out += program_.instr(key.label).label + ":";
  if (key.var.isObject)
    out += ander_.objects().name(key.var.obj.obj);
  else
    out += "%" + program_.var(key.var.var).name;
  return out;
}

} // namespace supa
