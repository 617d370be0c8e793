#pragma once
// Expected execution counts per block. The counts solve the flow system
//   F_b = [b == entry] + sum over predecessors p of F_p * P(p, b)
// after removing back edges that can never lead to an exit (infinite loops),
// which would otherwise make the system singular.

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "quilcc/cfg.hpp"

namespace quilcc {

struct PruneResult {
  ControlFlowGraph cfg;            // same blocks, offending edges removed
  std::vector<Edge> pruned_edges;  // what was removed
};

namespace detail {

// Back edges (u, v) where v is an ancestor of u on the DFS stack. The DFS
// runs as a forest: entry first, remaining roots in ascending id order, and
// successors in ascending id order, so classification is deterministic.
inline std::set<std::pair<int, int>> back_edge_pairs(
    const ControlFlowGraph& cfg) {
  std::set<std::pair<int, int>> back;
  std::set<int> seen;
  std::map<int, bool> on_stack;

  std::vector<int> roots;
  if (cfg.blocks.count(cfg.entry)) roots.push_back(cfg.entry);
  for (const auto& [id, b] : cfg.blocks)
    if (id != cfg.entry) roots.push_back(id);

  for (int root : roots) {
    if (seen.count(root)) continue;
    std::vector<std::pair<int, std::size_t>> stack;
    seen.insert(root);
    on_stack[root] = true;
    stack.push_back({root, 0});
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      auto succ = cfg.successors(u);
      if (next < succ.size()) {
        int v = succ[next++];
        if (on_stack[v]) back.insert({u, v});
        if (!seen.count(v)) {
          seen.insert(v);
          on_stack[v] = true;
          stack.push_back({v, 0});
        }
      } else {
        on_stack[u] = false;
        stack.pop_back();
      }
    }
  }
  return back;
}

}  // namespace detail

// Removes back edges whose target cannot reach an exit block. Every cycle a
// program can never leave contains such an edge, so the flow system on the
// result is guaranteed nonsingular. Edges into loops the program can escape
// (positive exit probability) are kept.
inline PruneResult prune_infinite_loops(const ControlFlowGraph& cfg) {
  auto exits = can_reach_exit(cfg);
  auto back = detail::back_edge_pairs(cfg);
  PruneResult out;
  out.cfg = cfg;
  out.cfg.edges.clear();
  for (const auto& e : cfg.edges) {
    if (back.count({e.from, e.to}) && !exits.count(e.to))
      out.pruned_edges.push_back(e);
    else
      out.cfg.edges.push_back(e);
  }
  return out;
}

struct BlockWeights {
  std::map<int, double> weights;   // expected executions per block id
  std::vector<Edge> pruned_edges;  // edges removed before solving
};

// Solves the flow system by Gaussian elimination with partial pivoting.
// Expects a pruned CFG; an unpruned infinite loop makes the system singular,
// reported with the blocks involved. Unreachable blocks get weight 0.
inline BlockWeights expected_executions(const ControlFlowGraph& cfg,
                                        std::vector<Edge> pruned_edges = {}) {
  std::vector<int> ids;
  for (const auto& [id, b] : cfg.blocks) ids.push_back(id);
  const std::size_t m = ids.size();
  if (m == 0) throw std::invalid_argument("empty control flow graph");
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < m; ++i) index[ids[i]] = i;

  // Augmented system rows: F_v - sum_u P(u, v) F_u = [v == entry].
  std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) a[i][i] = 1.0;
  for (const auto& e : cfg.edges)
    a[index.at(e.to)][index.at(e.from)] -= e.probability;
  a[index.at(cfg.entry)][m] = 1.0;
  const auto orig = a;

  auto singular_error = [&]() -> std::runtime_error {
    auto exits = can_reach_exit(cfg);
    std::string trapped;
    for (int id : ids)
      if (!exits.count(id)) trapped += " " + std::to_string(id);
    if (!trapped.empty())
      return std::runtime_error(
          "flow system is singular: blocks{" + trapped +
          " } form a loop that never reaches an exit (prune first)");
    return std::runtime_error("flow system is singular");
  };

  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12) throw singular_error();
    std::swap(a[col], a[piv]);
    for (std::size_t r = col + 1; r < m; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> f(m, 0.0);
  for (std::size_t i = m; i-- > 0;) {
    double s = a[i][m];
    for (std::size_t c = i + 1; c < m; ++c) s -= a[i][c] * f[c];
    f[i] = s / a[i][i];
  }

  // The solve should be well conditioned for these systems; verify.
  for (std::size_t r = 0; r < m; ++r) {
    double s = -orig[r][m];
    for (std::size_t c = 0; c < m; ++c) s += orig[r][c] * f[c];
    if (std::abs(s) > 1e-9)
      throw std::logic_error("flow system residual too large");
  }

  BlockWeights out;
  out.pruned_edges = std::move(pruned_edges);
  for (std::size_t i = 0; i < m; ++i) {
    double v = f[i];
    if (v < 0.0) {
      if (v < -1e-9)
        throw std::logic_error("negative execution count for block " +
                               std::to_string(ids[i]));
      v = 0.0;
    }
    out.weights[ids[i]] = v;
  }
  return out;
}

inline BlockWeights expected_executions(const PruneResult& pruned) {
  return expected_executions(pruned.cfg, pruned.pruned_edges);
}

// Weights scaled to sum to 1, for comparison against observed frequencies.
inline std::map<int, double> normalized_weights(const BlockWeights& w) {
  double sum = 0.0;
  for (const auto& [id, v] : w.weights) sum += v;
  if (!(sum > 0.0))
    throw std::invalid_argument("weights sum to zero; nothing to normalize");
  std::map<int, double> out;
  for (const auto& [id, v] : w.weights) out[id] = v / sum;
  return out;
}

}  // namespace quilcc
