#pragma once
// Dominator tree via the iterative two-finger algorithm over reverse
// postorder (Cooper/Harvey/Kennedy style). Expects a CFG whose blocks are
// all reachable, i.e. run dead code elimination first.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quilcc/cfg.hpp"

namespace quilcc {

struct DominatorTree {
  int entry = 0;
  std::map<int, int> idom;       // immediate dominator; entry maps to itself
  std::map<int, int> rpo_index;  // position in reverse postorder
  std::map<int, int> depth;      // strict dominator count (entry = 0)

  int immediate_dominator(int b) const {
    auto it = idom.find(b);
    if (it == idom.end())
      throw std::out_of_range("unknown block id " + std::to_string(b));
    return it->second;
  }
};

inline DominatorTree compute_dominators(const ControlFlowGraph& cfg) {
  auto rpo = reverse_postorder(cfg);
  if (rpo.size() != cfg.blocks.size())
    throw std::logic_error(
        "dominator computation requires every block to be reachable; run "
        "dead code elimination first");

  DominatorTree t;
  t.entry = cfg.entry;
  for (std::size_t i = 0; i < rpo.size(); ++i)
    t.rpo_index[rpo[i]] = static_cast<int>(i);

  std::map<int, std::vector<int>> preds;
  for (int b : rpo) preds[b] = cfg.predecessors(b);

  auto intersect = [&](int x, int y) {
    while (x != y) {
      while (t.rpo_index.at(x) > t.rpo_index.at(y)) x = t.idom.at(x);
      while (t.rpo_index.at(y) > t.rpo_index.at(x)) y = t.idom.at(y);
    }
    return x;
  };

  t.idom[cfg.entry] = cfg.entry;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b : rpo) {
      if (b == cfg.entry) continue;
      int new_idom = -1;
      for (int p : preds[b]) {
        if (!t.idom.count(p)) continue;  // not processed yet
        new_idom = (new_idom == -1) ? p : intersect(p, new_idom);
      }
      if (new_idom == -1) continue;
      auto it = t.idom.find(b);
      if (it == t.idom.end() || it->second != new_idom) {
        t.idom[b] = new_idom;
        changed = true;
      }
    }
  }

  for (int b : rpo)
    t.depth[b] = (b == cfg.entry) ? 0 : t.depth.at(t.idom.at(b)) + 1;
  return t;
}

// True also when a == b; every block dominates itself.
inline bool dominates(const DominatorTree& t, int a, int b) {
  if (!t.idom.count(a))
    throw std::out_of_range("unknown block id " + std::to_string(a));
  if (!t.idom.count(b))
    throw std::out_of_range("unknown block id " + std::to_string(b));
  while (true) {
    if (a == b) return true;
    if (b == t.entry) return false;
    b = t.idom.at(b);
  }
}

inline bool strictly_dominates(const DominatorTree& t, int a, int b) {
  return a != b && dominates(t, a, b);
}

}  // namespace quilcc
