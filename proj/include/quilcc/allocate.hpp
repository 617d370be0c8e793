#pragma once
// Qubit allocation with control flow: simulated annealing over entry
// mappings; lazy SWAP insertion along fidelity-weighted shortest paths;
// inverse-SWAP trampoline blocks on every edge (b1, b2) where the swapping
// block dominates b1 but not strictly b2, which keeps the logical-to-
// physical mapping at each block entry identical along every path; MEASURE
// indices rewritten through the mapping in effect at the instruction.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "quilcc/cfg.hpp"
#include "quilcc/device.hpp"
#include "quilcc/dominators.hpp"
#include "quilcc/quil.hpp"
#include "quilcc/rng.hpp"
#include "quilcc/weights.hpp"

namespace quilcc {

// Partial bijection logical qubit -> physical qubit.
class Allocation {
 public:
  Allocation() = default;
  Allocation(int max_logical, int max_physical)
      : l2p_(static_cast<std::size_t>(max_logical) + 1, -1),
        p2l_(static_cast<std::size_t>(max_physical) + 1, -1) {}

  int physical_of(int l) const {
    return (l >= 0 && l < static_cast<int>(l2p_.size())) ? l2p_[l] : -1;
  }
  int logical_at(int p) const {
    return (p >= 0 && p < static_cast<int>(p2l_.size())) ? p2l_[p] : -1;
  }
  bool is_mapped(int l) const { return physical_of(l) >= 0; }

  void bind(int l, int p) {
    if (l < 0 || l >= static_cast<int>(l2p_.size()) || p < 0 ||
        p >= static_cast<int>(p2l_.size()))
      throw std::out_of_range("allocation bind outside register bounds");
    if (l2p_[l] != -1 || p2l_[p] != -1)
      throw std::logic_error("allocation bind would break bijectivity");
    l2p_[l] = p;
    p2l_[p] = l;
  }

  // Effect of a compiler SWAP on physical qubits p and q: their logical
  // occupants (either may be none) trade places.
  void apply_phys_swap(int p, int q) {
    if (p < 0 || q < 0 || p >= static_cast<int>(p2l_.size()) ||
        q >= static_cast<int>(p2l_.size()))
      throw std::out_of_range("swap outside physical register bounds");
    int lp = p2l_[p];
    int lq = p2l_[q];
    p2l_[p] = lq;
    p2l_[q] = lp;
    if (lp != -1) l2p_[lp] = q;
    if (lq != -1) l2p_[lq] = p;
  }

  int num_mapped() const {
    int n = 0;
    for (int p : l2p_)
      if (p != -1) ++n;
    return n;
  }
  const std::vector<int>& logical_to_physical() const { return l2p_; }

  bool operator==(const Allocation& o) const { return l2p_ == o.l2p_; }
  bool lex_less(const Allocation& o) const { return l2p_ < o.l2p_; }

 private:
  std::vector<int> l2p_;
  std::vector<int> p2l_;
};

struct SwapOp {
  int block = -1;
  int position = -1;  // index into the routed block body
  int p0 = -1;
  int p1 = -1;
};

struct RoutedInstruction {
  Instruction ins;        // physical operands
  bool inserted = false;  // true for compiler-inserted SWAPs
};

struct RoutedBlock {
  int id = -1;
  std::vector<RoutedInstruction> body;
  std::vector<SwapOp> swaps;  // compiler-inserted, in emission order
  Allocation incoming;
  Allocation outgoing;
  // Mapping in effect before each body instruction; filled only when
  // routing is asked to record (used for measure rewriting proofs/tests).
  std::vector<Allocation> mapping_before;
};

enum class RoutingMode { Lazy, Eager };

namespace detail {

// Free physical qubit for a fresh logical. Preference order: minimize the
// given cost function, then lowest id.
template <typename CostFn>
int best_free_physical(const DeviceGraph& d, const Allocation& m, CostFn cost) {
  int best = -1;
  double best_cost = 0.0;
  for (int p : d.qubits) {
    if (m.logical_at(p) != -1) continue;
    double c = cost(p);
    if (best == -1 || c < best_cost - 1e-12) {
      best = p;
      best_cost = c;
    }
  }
  if (best == -1)
    throw std::runtime_error("device too small: no free physical qubit");
  return best;
}

}  // namespace detail

// Routes one block: scans instructions in order, binds unmapped logicals
// greedily, and when a two-qubit gate's operands are non-adjacent inserts
// SWAPs along the shortest path immediately before it, moving the first
// operand toward the second (stopping at the penultimate node). Source
// SWAP gates are routed to adjacency like any two-qubit gate but do not
// change the mapping; only compiler-inserted SWAPs do, so the mapping at
// any point is independent of the quantum data flowing through the gates.
inline RoutedBlock lazy_route_block(const BasicBlock& b,
                                    const Allocation& incoming,
                                    const DeviceGraph& d,
                                    const PathTable& paths,
                                    RoutingMode mode = RoutingMode::Lazy,
                                    bool record_mappings = false) {
  RoutedBlock out;
  out.id = b.id;
  out.incoming = incoming;
  Allocation m = incoming;

  auto snapshot = [&]() {
    if (record_mappings) out.mapping_before.push_back(m);
  };
  auto push = [&](Instruction ins, bool inserted) {
    snapshot();
    out.body.push_back({std::move(ins), inserted});
  };

  auto ensure_single = [&](int l, double (*fid)(const DeviceGraph&, int)) {
    if (m.is_mapped(l)) return;
    int p = detail::best_free_physical(
        d, m, [&](int q) { return -std::log(fid(d, q)); });
    m.bind(l, p);
  };
  auto single_fid = [](const DeviceGraph& dd, int q) {
    return dd.single_fidelity(q);
  };
  auto readout_fid = [](const DeviceGraph& dd, int q) { return dd.readout(q); };

  auto ensure_pair = [&](int la, int lb) {
    // Bind unmapped operands near their partner; if both are fresh, place
    // the first on the best single-qubit site and the second next to it.
    if (!m.is_mapped(la) && !m.is_mapped(lb)) ensure_single(la, single_fid);
    if (!m.is_mapped(la)) {
      int pb = m.physical_of(lb);
      int p = detail::best_free_physical(
          d, m, [&](int q) { return paths.path(q, pb).cost; });
      m.bind(la, p);
    }
    if (!m.is_mapped(lb)) {
      int pa = m.physical_of(la);
      int p = detail::best_free_physical(
          d, m, [&](int q) { return paths.path(pa, q).cost; });
      m.bind(lb, p);
    }
  };

  for (const auto& ins : b.body) {
    if (auto* g = std::get_if<GateApp>(&ins)) {
      if (g->qubits.size() == 1) {
        ensure_single(g->qubits[0], single_fid);
        GateApp phys = *g;
        phys.qubits = {m.physical_of(g->qubits[0])};
        push(std::move(phys), false);
        continue;
      }
      ensure_pair(g->qubits[0], g->qubits[1]);
      int pa = m.physical_of(g->qubits[0]);
      int pb = m.physical_of(g->qubits[1]);
      std::vector<std::pair<int, int>> moves;
      if (!d.has_edge(pa, pb)) {
        const SwapPath& sp = paths.path(pa, pb);
        for (std::size_t k = 0; k + 2 < sp.qubits.size(); ++k)
          moves.push_back({sp.qubits[k], sp.qubits[k + 1]});
      }
      for (const auto& [p, q] : moves) {
        out.swaps.push_back({b.id, static_cast<int>(out.body.size()), p, q});
        GateApp sw;
        sw.gate = GateKind::SWAP;
        sw.qubits = {p, q};
        push(std::move(sw), true);
        m.apply_phys_swap(p, q);
      }
      GateApp phys = *g;
      phys.qubits = {m.physical_of(g->qubits[0]), m.physical_of(g->qubits[1])};
      push(std::move(phys), false);
      if (mode == RoutingMode::Eager) {
        // Undo immediately so the block leaves the mapping untouched.
        for (auto it = moves.rbegin(); it != moves.rend(); ++it) {
          out.swaps.push_back(
              {b.id, static_cast<int>(out.body.size()), it->first, it->second});
          GateApp sw;
          sw.gate = GateKind::SWAP;
          sw.qubits = {it->first, it->second};
          push(std::move(sw), true);
          m.apply_phys_swap(it->first, it->second);
        }
      }
    } else if (auto* ms = std::get_if<Measure>(&ins)) {
      ensure_single(ms->qubit, readout_fid);
      Measure phys = *ms;
      phys.qubit = m.physical_of(ms->qubit);
      push(std::move(phys), false);
    } else {
      push(ins, false);  // declares and pragmas pass through
    }
  }
  out.outgoing = m;
  return out;
}

// Convenience overload matching the operation's minimal signature.
inline RoutedBlock lazy_route_block(const BasicBlock& b,
                                    const Allocation& incoming,
                                    const DeviceGraph& d) {
  PathTable paths(d);
  return lazy_route_block(b, incoming, d, paths);
}

// Every edge that needs an inverse of b's swaps: b dominates the source and
// does not strictly dominate the target. Sorted by (from, to).
inline std::vector<Edge> inverse_swap_edges(const ControlFlowGraph& cfg,
                                            const DominatorTree& t, int b) {
  std::vector<Edge> out;
  for (const auto& e : cfg.edges)
    if (dominates(t, b, e.from) && !strictly_dominates(t, b, e.to))
      out.push_back(e);
  std::sort(out.begin(), out.end(), [](const Edge& x, const Edge& y) {
    return std::pair{x.from, x.to} < std::pair{y.from, y.to};
  });
  return out;
}

struct PlannedTrampoline {
  Edge edge;                               // the edge being split
  std::vector<std::pair<int, int>> swaps;  // physical pairs, emission order
};

// Splits each planned edge (b1, b2) with a fresh block holding the inverse
// swaps followed by JUMP to b2, and retargets b1's terminator. Returns the
// rewritten graph; new block ids are appended past the current maximum and
// reported through new_ids when given.
inline ControlFlowGraph insert_trampolines(
    const ControlFlowGraph& cfg, const std::vector<PlannedTrampoline>& plan,
    std::set<int>* new_ids = nullptr) {
  ControlFlowGraph out = cfg;
  int next_id = out.blocks.empty() ? 0 : out.blocks.rbegin()->first + 1;

  for (const auto& pt : plan) {
    int b1 = pt.edge.from;
    int b2 = pt.edge.to;
    int tid = next_id++;
    if (new_ids) new_ids->insert(tid);

    BasicBlock tb;
    tb.id = tid;
    for (const auto& [p, q] : pt.swaps) {
      GateApp sw;
      sw.gate = GateKind::SWAP;
      sw.qubits = {p, q};
      tb.body.emplace_back(std::move(sw));
    }
    tb.term.type = Terminator::Type::Jump;
    tb.term.target = b2;

    Terminator& t1 = out.block(b1).term;
    switch (pt.edge.kind) {
      case EdgeKind::Unconditional:
        if (t1.type != Terminator::Type::Jump &&
            t1.type != Terminator::Type::Fallthrough)
          throw std::logic_error("trampoline edge kind mismatch");
        t1.target = tid;
        break;
      case EdgeKind::Taken:
        if (t1.type != Terminator::Type::Cond)
          throw std::logic_error("trampoline edge kind mismatch");
        t1.taken = tid;
        break;
      case EdgeKind::Fallthrough:
        if (t1.type == Terminator::Type::Cond)
          t1.fallthrough = tid;
        else if (t1.type == Terminator::Type::Fallthrough)
          t1.target = tid;
        else
          throw std::logic_error("trampoline edge kind mismatch");
        break;
    }

    bool rewired = false;
    for (auto& e : out.edges) {
      if (e.from == b1 && e.to == b2 && e.kind == pt.edge.kind && !rewired) {
        e.to = tid;
        rewired = true;
      }
    }
    if (!rewired) throw std::logic_error("trampoline edge not found in CFG");
    out.edges.push_back({tid, b2, 1.0, EdgeKind::Unconditional});
    out.blocks.emplace(tid, std::move(tb));
  }
  return out;
}

// Rewrites each MEASURE's qubit through the mapping in effect at that
// instruction (per block, per body position). Classical targets unchanged.
inline ControlFlowGraph rewrite_measures(
    const ControlFlowGraph& cfg,
    const std::map<int, std::vector<Allocation>>& mapping_before) {
  ControlFlowGraph out = cfg;
  for (auto& [id, b] : out.blocks) {
    auto it = mapping_before.find(id);
    for (std::size_t i = 0; i < b.body.size(); ++i) {
      auto* m = std::get_if<Measure>(&b.body[i]);
      if (!m) continue;
      if (it == mapping_before.end() || i >= it->second.size())
        throw std::invalid_argument("no mapping recorded for measure in block " +
                                    std::to_string(id));
      int phys = it->second[i].physical_of(m->qubit);
      if (phys < 0)
        throw std::invalid_argument("logical qubit " + std::to_string(m->qubit) +
                                    " unmapped at its measurement");
      m->qubit = phys;
    }
  }
  return out;
}

struct RoutedProgram {
  std::map<int, RoutedBlock> blocks;
  std::vector<PlannedTrampoline> trampolines;
  Allocation entry_mapping;
};

// Routes every block in reverse postorder. Each block's incoming mapping is
// its immediate dominator's outgoing mapping: trampolines restore exactly
// that mapping on every other edge, so the choice is path-independent.
inline RoutedProgram route_program(const ControlFlowGraph& cfg,
                                   const DominatorTree& dom,
                                   const DeviceGraph& d, const PathTable& paths,
                                   const Allocation& entry_mapping,
                                   RoutingMode mode,
                                   bool record_mappings = false) {
  RoutedProgram rp;
  rp.entry_mapping = entry_mapping;
  auto rpo = reverse_postorder(cfg);
  for (int b : rpo) {
    const Allocation& incoming =
        (b == cfg.entry) ? entry_mapping
                         : rp.blocks.at(dom.idom.at(b)).outgoing;
    rp.blocks.emplace(
        b, lazy_route_block(cfg.block(b), incoming, d, paths, mode,
                            record_mappings));
  }
  if (mode == RoutingMode::Eager) return rp;  // mappings already restored

  // Plan one trampoline per edge; deeper blocks' inverses run first, each
  // block's swaps reversed, which composes to exactly the mapping the
  // target expects.
  std::map<std::pair<int, int>, PlannedTrampoline> per_edge;
  std::vector<int> swap_blocks;
  for (int b : rpo)
    if (!rp.blocks.at(b).swaps.empty()) swap_blocks.push_back(b);
  std::sort(swap_blocks.begin(), swap_blocks.end(), [&](int x, int y) {
    return dom.depth.at(x) > dom.depth.at(y);
  });
  for (int b : swap_blocks) {
    for (const Edge& e : inverse_swap_edges(cfg, dom, b)) {
      auto& pt = per_edge[{e.from, e.to}];
      pt.edge = e;
      const auto& swaps = rp.blocks.at(b).swaps;
      for (auto it = swaps.rbegin(); it != swaps.rend(); ++it)
        pt.swaps.push_back({it->p0, it->p1});
    }
  }
  for (auto& [key, pt] : per_edge) rp.trampolines.push_back(std::move(pt));
  return rp;
}

// Weighted expected-error cost of a routed program:
//   sum over blocks b of F_b * sum over gates g of -ln f(g)
// with trampoline blocks weighted by F_source * edge probability.
inline double instruction_cost(const Instruction& ins, const DeviceGraph& d) {
  if (auto* g = std::get_if<GateApp>(&ins)) {
    switch (g->gate) {
      case GateKind::RX:
      case GateKind::RZ:
        return -std::log(d.single_fidelity(g->qubits[0]));
      case GateKind::CZ:
        return -std::log(d.edge_fidelity(g->qubits[0], g->qubits[1]));
      case GateKind::SWAP:
        return -3.0 * std::log(d.edge_fidelity(g->qubits[0], g->qubits[1]));
    }
  }
  if (auto* m = std::get_if<Measure>(&ins)) return -std::log(d.readout(m->qubit));
  return 0.0;
}

inline double allocation_cost(const RoutedProgram& rp, const BlockWeights& w,
                              const DeviceGraph& d) {
  double cost = 0.0;
  for (const auto& [id, rb] : rp.blocks) {
    double f = w.weights.at(id);
    if (f == 0.0) continue;
    for (const auto& ri : rb.body) cost += f * instruction_cost(ri.ins, d);
  }
  for (const auto& pt : rp.trampolines) {
    double f = w.weights.at(pt.edge.from) * pt.edge.probability;
    if (f == 0.0) continue;
    for (const auto& [p, q] : pt.swaps)
      cost += f * -3.0 * std::log(d.edge_fidelity(p, q));
  }
  return cost;
}

struct AllocConfig {
  std::uint64_t seed = 42;
  int iterations = 20000;
  double t0 = 10.0;
  double alpha = 0.995;
  int restarts = 4;
};

struct AllocatedProgram {
  Program program;  // physical indices; re-parseable
  Allocation entry_mapping;
  double cost = 0.0;
  std::set<int> trampolines;  // block ids of trampoline blocks in output_cfg
  ControlFlowGraph output_cfg;
  RoutedProgram routed;  // per-point mappings recorded
};

namespace detail {

// Replace block bodies with their routed physical instructions, then splice
// in the trampolines.
inline ControlFlowGraph materialize_cfg(const ControlFlowGraph& cfg,
                                        const RoutedProgram& rp,
                                        std::set<int>* tramp_ids) {
  ControlFlowGraph out = cfg;
  for (auto& [id, b] : out.blocks) {
    const RoutedBlock& rb = rp.blocks.at(id);
    b.body.clear();
    for (const auto& ri : rb.body) b.body.push_back(ri.ins);
  }
  return insert_trampolines(out, rp.trampolines, tramp_ids);
}

}  // namespace detail

// Lays out a CFG back into a flat instruction list. Fallthrough chains stay
// adjacent; every jump target gets a label (originals preserved, fresh ones
// generated collision-free).
inline Program cfg_to_program(const ControlFlowGraph& cfg) {
  // Fallthrough edges form disjoint chains: at most one out of and one into
  // any block (guaranteed by construction).
  std::map<int, int> ft_succ;
  std::map<int, int> ft_pred;
  for (const auto& e : cfg.edges) {
    if (e.kind != EdgeKind::Fallthrough) continue;
    if (ft_succ.count(e.from) || ft_pred.count(e.to))
      throw std::logic_error("fallthrough edges do not form chains");
    ft_succ[e.from] = e.to;
    ft_pred[e.to] = e.from;
  }
  std::vector<int> layout;
  for (const auto& [id, b] : cfg.blocks) {
    if (ft_pred.count(id)) continue;  // chain head only
    for (int cur = id;;) {
      layout.push_back(cur);
      auto it = ft_succ.find(cur);
      if (it == ft_succ.end()) break;
      cur = it->second;
    }
  }
  if (layout.size() != cfg.blocks.size())
    throw std::logic_error("fallthrough chains do not cover the CFG");
  if (!layout.empty() && layout.front() != cfg.entry)
    throw std::logic_error("entry block must lead the layout");

  std::set<int> needs_label;
  std::set<std::string> used_names;
  for (const auto& [id, b] : cfg.blocks) {
    if (b.label) used_names.insert(*b.label);
    if (b.term.type == Terminator::Type::Jump) needs_label.insert(b.term.target);
    if (b.term.type == Terminator::Type::Cond) needs_label.insert(b.term.taken);
  }
  std::map<int, std::string> label_of;
  for (const auto& [id, b] : cfg.blocks) {
    if (b.label) {
      label_of[id] = *b.label;
    } else if (needs_label.count(id)) {
      std::string name = "B" + std::to_string(id);
      while (used_names.count(name)) name += "_";
      used_names.insert(name);
      label_of[id] = name;
    }
  }

  Program out;
  std::map<int, int> layout_pos;
  for (std::size_t i = 0; i < layout.size(); ++i)
    layout_pos[layout[i]] = static_cast<int>(i);

  auto append = [&](Instruction ins) {
    out.instructions.push_back(std::move(ins));
    out.instruction_lines.push_back(
        static_cast<int>(out.instructions.size()));
  };

  for (std::size_t i = 0; i < layout.size(); ++i) {
    const BasicBlock& b = cfg.block(layout[i]);
    if (label_of.count(b.id)) append(LabelDef{label_of.at(b.id)});
    for (const auto& ins : b.body) {
      if (auto* dec = std::get_if<Declare>(&ins))
        out.declared.emplace_back(dec->name, dec->size);
      append(ins);
    }
    switch (b.term.type) {
      case Terminator::Type::Halt:
        append(Halt{});
        break;
      case Terminator::Type::Jump:
        append(Jump{label_of.at(b.term.target)});
        break;
      case Terminator::Type::Fallthrough:
        if (i + 1 >= layout.size() || layout[i + 1] != b.term.target)
          throw std::logic_error("fallthrough target not adjacent in layout");
        break;
      case Terminator::Type::Cond: {
        if (i + 1 >= layout.size() || layout[i + 1] != b.term.fallthrough)
          throw std::logic_error(
              "conditional fallthrough not adjacent in layout");
        CondJump cj;
        cj.kind = b.term.kind;
        cj.target = label_of.at(b.term.taken);
        cj.condition = b.term.condition;
        if (b.term.explicit_probability)
          cj.probability = b.term.taken_probability;
        append(std::move(cj));
        break;
      }
    }
  }
  return out;
}

namespace detail {

inline std::vector<int> collect_logicals(const ControlFlowGraph& cfg) {
  std::set<int> ls;
  for (const auto& [id, b] : cfg.blocks)
    for (const auto& ins : b.body) {
      if (auto* g = std::get_if<GateApp>(&ins))
        for (int q : g->qubits) ls.insert(q);
      if (auto* m = std::get_if<Measure>(&ins)) ls.insert(m->qubit);
    }
  return {ls.begin(), ls.end()};
}

inline AllocatedProgram anneal_allocate(const ControlFlowGraph& cfg,
                                        const BlockWeights& w,
                                        const DeviceGraph& d,
                                        const AllocConfig& config,
                                        RoutingMode mode) {
  auto logicals = collect_logicals(cfg);
  if (logicals.size() > d.qubits.size())
    throw std::runtime_error(
        "device too small: " + std::to_string(logicals.size()) +
        " logical qubits, " + std::to_string(d.qubits.size()) + " physical");
  if (config.iterations < 0 || config.restarts < 1)
    throw std::invalid_argument("bad annealing schedule");

  PathTable paths(d);
  DominatorTree dom = compute_dominators(cfg);
  int max_logical = logicals.empty() ? 0 : logicals.back();
  int max_physical = d.max_qubit_id();

  auto energy = [&](const Allocation& m) {
    return allocation_cost(route_program(cfg, dom, d, paths, m, mode), w, d);
  };

  constexpr double tie_eps = 1e-12;

  // First-improvement descent over all transpositions; leaves the state in
  // a local minimum of the energy.
  auto polish = [&](Allocation& best, double& best_e) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i + 1 < d.qubits.size(); ++i) {
        for (std::size_t j = i + 1; j < d.qubits.size(); ++j) {
          int p0 = d.qubits[i];
          int p1 = d.qubits[j];
          if (best.logical_at(p0) == -1 && best.logical_at(p1) == -1)
            continue;
          Allocation cand = best;
          cand.apply_phys_swap(p0, p1);
          double cand_e = energy(cand);
          if (cand_e < best_e - tie_eps) {
            best = std::move(cand);
            best_e = cand_e;
            improved = true;
          }
        }
      }
    }
  };

  Allocation global_best;
  double global_cost = 0.0;
  bool have_global = false;

  for (int restart = 0; restart < config.restarts; ++restart) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(restart)));
    std::vector<int> phys = d.qubits;
    rng.shuffle(phys);
    Allocation cur(max_logical, max_physical);
    for (std::size_t i = 0; i < logicals.size(); ++i)
      cur.bind(logicals[i], phys[i]);

    double cur_e = energy(cur);
    Allocation best = cur;
    double best_e = cur_e;
    double temp = config.t0;

    // With nothing to move (or nowhere to move it) the initial state is
    // already optimal.
    int iters = (logicals.empty() || phys.size() < 2) ? 0 : config.iterations;
    // Cooling ladder is capped at 1000 geometric steps; larger budgets spend
    // more moves per temperature instead of freezing early.
    int epoch = std::max(1, config.iterations / 1000);
    for (int it = 0; it < iters; ++it) {
      // Transpose two physical slots, at least one of them occupied.
      int p0;
      int p1;
      do {
        p0 = phys[rng.below(phys.size())];
        p1 = phys[rng.below(phys.size())];
      } while (p0 == p1 ||
               (cur.logical_at(p0) == -1 && cur.logical_at(p1) == -1));
      Allocation cand = cur;
      cand.apply_phys_swap(p0, p1);
      double cand_e = energy(cand);
      double delta = cand_e - cur_e;
      bool accept = delta <= 0.0;
      if (!accept && temp > 0.0)
        accept = rng.uniform() < std::exp(-delta / temp);
      if (accept) {
        cur = std::move(cand);
        cur_e = cand_e;
        if (cur_e < best_e - tie_eps ||
            (std::abs(cur_e - best_e) <= tie_eps && cur.lex_less(best))) {
          best = cur;
          best_e = cur_e;
        }
      }
      if ((it + 1) % epoch == 0) temp *= config.alpha;
    }
    // Descend from the chain's best state so every restart ends in a local
    // minimum.
    if (iters > 0) polish(best, best_e);
    // Earlier restarts win cost ties, so results do not depend on whether
    // restarts would run sequentially or in parallel.
    if (!have_global || best_e < global_cost - tie_eps) {
      global_best = best;
      global_cost = best_e;
      have_global = true;
    }
  }

  // The per-block coupling of the lazy energy makes its landscape rugged.
  // The eager energy decomposes per block and anneals far more reliably,
  // so its solution under the same weights is a strong warm start: score
  // it under the lazy energy, descend, and let it compete with the chains.
  if (mode == RoutingMode::Lazy && !logicals.empty() && d.qubits.size() >= 2) {
    AllocatedProgram warm =
        anneal_allocate(cfg, w, d, config, RoutingMode::Eager);
    Allocation wbest = warm.entry_mapping;
    double wbest_e = energy(wbest);
    polish(wbest, wbest_e);
    if (!have_global || wbest_e < global_cost - tie_eps) {
      global_best = wbest;
      global_cost = wbest_e;
      have_global = true;
    }
  }

  AllocatedProgram out;
  out.entry_mapping = global_best;
  out.routed =
      route_program(cfg, dom, d, paths, global_best, mode, true);
  out.cost = allocation_cost(out.routed, w, d);
  out.output_cfg = materialize_cfg(cfg, out.routed, &out.trampolines);
  out.program = cfg_to_program(out.output_cfg);
  return out;
}

}  // namespace detail

// Simulated annealing over entry mappings; energy is the cost of the fully
// routed program (lazy swaps, trampolines, rewritten measures). cfg must be
// dead-code-free; w holds its expected execution counts.
inline AllocatedProgram allocate(const ControlFlowGraph& cfg,
                                 const BlockWeights& w, const DeviceGraph& d,
                                 const AllocConfig& config = {}) {
  return detail::anneal_allocate(cfg, w, d, config, RoutingMode::Lazy);
}

// Control-flow-unaware baseline: uniform block weights and eager inversion
// (every SWAP undone right after the gate it enables), no trampolines.
inline AllocatedProgram allocate_cf_unaware(const ControlFlowGraph& cfg,
                                            const DeviceGraph& d,
                                            const AllocConfig& config = {}) {
  BlockWeights uniform;
  for (const auto& [id, b] : cfg.blocks) uniform.weights[id] = 1.0;
  return detail::anneal_allocate(cfg, uniform, d, config, RoutingMode::Eager);
}

}  // namespace quilcc
