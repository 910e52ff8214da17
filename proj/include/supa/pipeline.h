//===- pipeline.h -- Pre-analysis, memory SSA, SVFG and engine in one place -//

#pragma once

#include "supa/andersen.h"
#include "supa/engine.h"
#include "supa/memssa.h"
#include "supa/svfg.h"

#include <memory>

namespace supa {

/// Owns every stage. Not movable: the engine refers to the other members.
struct Pipeline {
  Program program;
  AndersenResult ander;
  MemSSA memssa;
  SVFG svfg;
  std::unique_ptr<Engine> engine;

  Pipeline(Program p, const AndersenOptions &aopts, const EngineOptions &eopts);
  Pipeline(const Pipeline &) = delete;
  Pipeline &operator=(const Pipeline &) = delete;
};

std::unique_ptr<Pipeline> buildPipeline(Program program, const AndersenOptions &aopts = {},
                                        const EngineOptions &eopts = {});

} // namespace supa
