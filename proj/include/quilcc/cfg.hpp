#pragma once
// Control flow graph construction over the parsed instruction list: basic
// blocks, probability-annotated edges, reachability, dead code elimination
// and a DOT export for debugging.

#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quilcc/quil.hpp"

namespace quilcc {

enum class EdgeKind { Taken, Fallthrough, Unconditional };

struct Edge {
  int from = -1;
  int to = -1;
  double probability = 1.0;
  EdgeKind kind = EdgeKind::Unconditional;
};

struct Terminator {
  enum class Type { Jump, Cond, Fallthrough, Halt };
  Type type = Type::Halt;
  int target = -1;  // Jump target or Fallthrough successor
  // Conditional jumps only:
  CondKind kind = CondKind::When;
  MemRef condition;
  int taken = -1;
  int fallthrough = -1;
  double taken_probability = 0.5;
  bool explicit_probability = false;  // true if set via pragma
};

struct BasicBlock {
  int id = -1;
  std::optional<std::string> label;
  // Gates, measures, declares and pragmas; labels and jumps live in the
  // block boundary / terminator.
  std::vector<Instruction> body;
  Terminator term;
};

struct ControlFlowGraph {
  std::map<int, BasicBlock> blocks;  // keyed by id; ids stay stable under DCE
  int entry = 0;
  std::vector<Edge> edges;
  std::vector<int> exit_blocks;  // HALT-terminated, ascending

  const BasicBlock& block(int id) const {
    auto it = blocks.find(id);
    if (it == blocks.end())
      throw std::out_of_range("unknown block id " + std::to_string(id));
    return it->second;
  }
  BasicBlock& block(int id) {
    auto it = blocks.find(id);
    if (it == blocks.end())
      throw std::out_of_range("unknown block id " + std::to_string(id));
    return it->second;
  }

  std::vector<Edge> out_edges(int id) const {
    std::vector<Edge> out;
    for (const auto& e : edges)
      if (e.from == id) out.push_back(e);
    return out;
  }
  std::vector<Edge> in_edges(int id) const {
    std::vector<Edge> out;
    for (const auto& e : edges)
      if (e.to == id) out.push_back(e);
    return out;
  }
  // Ascending and deduplicated, so traversal orders are deterministic.
  std::vector<int> successors(int id) const {
    std::set<int> s;
    for (const auto& e : edges)
      if (e.from == id) s.insert(e.to);
    return {s.begin(), s.end()};
  }
  std::vector<int> predecessors(int id) const {
    std::set<int> s;
    for (const auto& e : edges)
      if (e.to == id) s.insert(e.from);
    return {s.begin(), s.end()};
  }
};

// Splits the instruction list at leaders (first instruction, every label,
// every instruction following a jump or HALT). Throws std::invalid_argument
// if control can fall off the end of the program.
inline ControlFlowGraph build_cfg(const Program& p,
                                  double default_branch_probability = 0.5) {
  if (!(default_branch_probability >= 0.0 && default_branch_probability <= 1.0))
    throw std::invalid_argument("default branch probability must be in [0, 1]");
  const auto& ins = p.instructions;
  const std::size_t n = ins.size();
  if (n == 0)
    throw std::invalid_argument(
        "control falls off the end of the program (empty program)");

  auto is_block_end = [](const Instruction& i) {
    return std::holds_alternative<Jump>(i) ||
           std::holds_alternative<CondJump>(i) ||
           std::holds_alternative<Halt>(i);
  };

  ControlFlowGraph cfg;
  std::map<std::string, int> label_to_block;
  std::vector<std::size_t> block_start;  // index of each block's leader
  std::vector<std::size_t> block_end;    // one past the block's last instr

  // A block starts at the program start, at every label, and after every
  // jump or HALT; it ends at the next such boundary.
  for (std::size_t i = 0; i < n;) {
    int id = static_cast<int>(block_start.size());
    block_start.push_back(i);
    BasicBlock b;
    b.id = id;
    if (auto* l = std::get_if<LabelDef>(&ins[i])) {
      b.label = l->name;
      label_to_block[l->name] = id;
      ++i;
    }
    while (i < n && !is_block_end(ins[i]) &&
           !std::holds_alternative<LabelDef>(ins[i])) {
      b.body.push_back(ins[i]);
      ++i;
    }
    if (i < n && is_block_end(ins[i])) ++i;  // terminator consumed below
    block_end.push_back(i);
    cfg.blocks.emplace(id, std::move(b));
  }
  cfg.entry = 0;

  auto block_at_index = [&](std::size_t idx) {
    for (std::size_t b = 0; b < block_start.size(); ++b)
      if (block_start[b] == idx) return static_cast<int>(b);
    throw std::logic_error("no block starts at instruction index");
  };

  for (std::size_t b = 0; b < block_start.size(); ++b) {
    BasicBlock& blk = cfg.blocks.at(static_cast<int>(b));
    std::size_t last = block_end[b] - 1;
    const Instruction& tail = ins[last];
    Terminator t;
    if (std::holds_alternative<Halt>(tail)) {
      t.type = Terminator::Type::Halt;
    } else if (auto* j = std::get_if<Jump>(&tail)) {
      t.type = Terminator::Type::Jump;
      t.target = label_to_block.at(j->target);
    } else if (auto* cj = std::get_if<CondJump>(&tail)) {
      if (block_end[b] >= n)
        throw std::invalid_argument(
            "control falls off the end of the program after a conditional "
            "jump");
      t.type = Terminator::Type::Cond;
      t.kind = cj->kind;
      t.condition = cj->condition;
      t.taken = label_to_block.at(cj->target);
      t.fallthrough = block_at_index(block_end[b]);
      t.taken_probability = cj->probability.value_or(default_branch_probability);
      t.explicit_probability = cj->probability.has_value();
      if (t.taken == t.fallthrough) {
        // Both arms reach the same block; collapse to an unconditional jump.
        // A pragma annotating the collapsed jump would no longer precede a
        // conditional jump on re-emission, so drop it.
        t.type = Terminator::Type::Jump;
        t.target = t.taken;
        if (!blk.body.empty() &&
            std::holds_alternative<BranchProbPragma>(blk.body.back()))
          blk.body.pop_back();
      }
    } else {
      // Block ended because the next instruction is a label.
      if (block_end[b] >= n)
        throw std::invalid_argument(
            "control falls off the end of the program");
      t.type = Terminator::Type::Fallthrough;
      t.target = block_at_index(block_end[b]);
    }
    blk.term = t;

    switch (t.type) {
      case Terminator::Type::Halt:
        cfg.exit_blocks.push_back(static_cast<int>(b));
        break;
      case Terminator::Type::Jump:
        cfg.edges.push_back({static_cast<int>(b), t.target, 1.0,
                             EdgeKind::Unconditional});
        break;
      case Terminator::Type::Fallthrough:
        cfg.edges.push_back({static_cast<int>(b), t.target, 1.0,
                             EdgeKind::Fallthrough});
        break;
      case Terminator::Type::Cond:
        cfg.edges.push_back({static_cast<int>(b), t.taken,
                             t.taken_probability, EdgeKind::Taken});
        cfg.edges.push_back({static_cast<int>(b), t.fallthrough,
                             1.0 - t.taken_probability, EdgeKind::Fallthrough});
        break;
    }
  }
  return cfg;
}

inline std::set<int> reachable_from_entry(const ControlFlowGraph& cfg) {
  std::set<int> seen;
  std::queue<int> q;
  if (cfg.blocks.count(cfg.entry)) {
    seen.insert(cfg.entry);
    q.push(cfg.entry);
  }
  while (!q.empty()) {
    int b = q.front();
    q.pop();
    for (int s : cfg.successors(b))
      if (seen.insert(s).second) q.push(s);
  }
  return seen;
}

inline std::set<int> can_reach_exit(const ControlFlowGraph& cfg) {
  std::set<int> seen;
  std::queue<int> q;
  for (int e : cfg.exit_blocks)
    if (seen.insert(e).second) q.push(e);
  while (!q.empty()) {
    int b = q.front();
    q.pop();
    for (const auto& e : cfg.edges)
      if (e.to == b && seen.insert(e.from).second) q.push(e.from);
  }
  return seen;
}

// Removes blocks unreachable from the entry. Block ids are preserved.
inline ControlFlowGraph eliminate_dead_code(const ControlFlowGraph& cfg) {
  auto live = reachable_from_entry(cfg);
  ControlFlowGraph out;
  out.entry = cfg.entry;
  for (const auto& [id, b] : cfg.blocks)
    if (live.count(id)) out.blocks.emplace(id, b);
  for (const auto& e : cfg.edges)
    if (live.count(e.from) && live.count(e.to)) out.edges.push_back(e);
  for (int e : cfg.exit_blocks)
    if (live.count(e)) out.exit_blocks.push_back(e);
  return out;
}

// Depth-first traversal from the entry, successors visited in ascending id
// order; returns blocks in reverse postorder. Only reachable blocks appear.
inline std::vector<int> reverse_postorder(const ControlFlowGraph& cfg) {
  std::vector<int> post;
  std::set<int> seen;
  // Iterative DFS; the second stack element tracks the next successor index.
  std::vector<std::pair<int, std::size_t>> stack;
  if (cfg.blocks.count(cfg.entry)) {
    seen.insert(cfg.entry);
    stack.push_back({cfg.entry, 0});
  }
  while (!stack.empty()) {
    auto& [b, next] = stack.back();
    auto succ = cfg.successors(b);
    if (next < succ.size()) {
      int s = succ[next++];
      if (seen.insert(s).second) stack.push_back({s, 0});
    } else {
      post.push_back(b);
      stack.pop_back();
    }
  }
  return {post.rbegin(), post.rend()};
}

inline std::string to_dot(const ControlFlowGraph& cfg,
                          const std::map<int, double>* weights = nullptr) {
  std::ostringstream os;
  os << "digraph cfg {\n";
  os << "  node [shape=box];\n";
  for (const auto& [id, b] : cfg.blocks) {
    os << "  b" << id << " [label=\"B" << id;
    if (b.label) os << " (@" << *b.label << ")";
    os << "\\n" << b.body.size() << " instr";
    if (weights && weights->count(id)) os << "\\nF=" << weights->at(id);
    if (id == cfg.entry) os << "\\nentry";
    os << "\"];\n";
  }
  for (const auto& e : cfg.edges) {
    os << "  b" << e.from << " -> b" << e.to << " [label=\"" << e.probability
       << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace quilcc
