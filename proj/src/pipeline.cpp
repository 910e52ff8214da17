#include "supa/pipeline.h"

namespace supa {

Pipeline::Pipeline(Program p, const AndersenOptions &aopts, const EngineOptions &eopts)
    : program(std::move(p)), ander(solveAndersen(program, aopts)), memssa(buildMemSSA(program, ander)),
      svfg(buildSVFG(program, ander, memssa)),
      engine(std::make_unique<Engine>(program, ander, memssa, svfg, eopts)) {}

std::unique_ptr<Pipeline> buildPipeline(Program program, const AndersenOptions &aopts,
                                        const EngineOptions &eopts) {
  return std::make_unique<Pipeline>(std::move(program), aopts, eopts);
}

} // namespace supa
