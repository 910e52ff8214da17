//===- uninit.h -- Uninitialized-pointer detection client --------------------//
//
// Each eligible allocation `p = alloca a` is followed by a store of a fresh
// unknown object u_a into *p. A load whose result may point to some u_a may
// read an uninitialized pointer.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "supa/engine.h"
#include "supa/oracle.h"

#include <map>
#include <string>
#include <vector>

namespace supa {

struct UaoMap {
  /// Instrumented base object to its UAO, both in the instrumented program.
  std::map<ObjId, ObjId> association;
  std::vector<LabelId> insertedStores;
};

struct Instrumented {
  Program program;
  UaoMap uao;
};

/// Skips arrays, heap0 objects and allocations in recursive functions.
/// `ander` must be the pre-analysis of `program`; it decides recursion.
Instrumented instrumentUao(const Program &program, const AndersenResult &ander);

/// One flow-sensitive query per load whose pre-analysis result holds a UAO.
std::vector<QueryKey> generateQueries(const Program &program, const AndersenResult &ander);

enum class UninitStatus { Initialized, PotentiallyUninitialized };
const char *toString(UninitStatus s);

struct UninitEntry {
  QueryKey key;
  UninitStatus status = UninitStatus::Initialized;
  ObjSet reachingUaos;
  bool fullyResolved = false;
};

struct UninitReport {
  std::vector<UninitEntry> entries;
  std::size_t numQueries = 0;
  std::size_t numUninit = 0;
  /// Distinct UAOs reaching any queried variable.
  std::size_t numUaos = 0;
};

UninitReport classifyUninit(const AndersenResult &ander, const std::vector<QueryKey> &keys,
                            const std::vector<PtsResult> &results);
UninitReport classifyWithOracle(const AndersenResult &ander, const std::vector<QueryKey> &keys,
                                const FlowSensitiveResult &oracle);

} // namespace supa
