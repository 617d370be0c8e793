#pragma once
// End-to-end compile driver shared by the CLI and the test suites:
// parse -> CFG -> dead code elimination -> loop pruning -> expected
// execution counts -> dominators -> allocation.

#include "quilcc/allocate.hpp"
#include "quilcc/cfg.hpp"
#include "quilcc/device.hpp"
#include "quilcc/dominators.hpp"
#include "quilcc/quil.hpp"
#include "quilcc/weights.hpp"

namespace quilcc {

struct CompileConfig {
  AllocConfig anneal;
  bool cf_unaware = false;
  double default_branch_probability = 0.5;
};

struct CompileResult {
  ControlFlowGraph cfg_full;  // as built, before dead code elimination
  ControlFlowGraph cfg;       // dead-code-free; allocation runs on this
  BlockWeights weights;       // solved on the pruned edge set
  DominatorTree dom;
  AllocatedProgram allocated;
};

inline CompileResult compile_program(const Program& p, const DeviceGraph& d,
                                     const CompileConfig& config = {}) {
  CompileResult r;
  r.cfg_full = build_cfg(p, config.default_branch_probability);
  r.cfg = eliminate_dead_code(r.cfg_full);
  auto pruned = prune_infinite_loops(r.cfg);
  r.weights = expected_executions(pruned);
  r.dom = compute_dominators(r.cfg);
  r.allocated = config.cf_unaware
                    ? allocate_cf_unaware(r.cfg, d, config.anneal)
                    : allocate(r.cfg, r.weights, d, config.anneal);
  return r;
}

}  // namespace quilcc
