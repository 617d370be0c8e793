#pragma once
// Shared test utilities: a deterministic random program generator, brute
// force graph oracles (simple paths, dominance, inverse-swap edges), a
// Markov-chain walker for expected block executions, small device builders,
// and a permutation fixpoint check for swap bookkeeping in emitted programs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "quilcc/allocate.hpp"
#include "quilcc/cfg.hpp"
#include "quilcc/device.hpp"
#include "quilcc/dominators.hpp"
#include "quilcc/quil.hpp"
#include "quilcc/rng.hpp"
#include "quilcc/weights.hpp"

namespace testutil {

inline std::string repo_path(const std::string& rel) {
  return std::string(QUILCC_REPO_DIR "/") + rel;
}

// ---------------------------------------------------------------------------
// Devices

// Direct construction (bypasses the JSON loader on purpose; the loader has
// its own tests). Edges are normalized to a < b and sorted.
inline quilcc::DeviceGraph make_device(
    std::vector<int> qubits, std::vector<std::tuple<int, int, double>> edges,
    double single_fidelity = 1.0, double readout_fidelity = 1.0) {
  quilcc::DeviceGraph d;
  std::sort(qubits.begin(), qubits.end());
  d.qubits = std::move(qubits);
  for (auto [a, b, f] : edges) {
    if (a > b) std::swap(a, b);
    d.edges.push_back({a, b, f});
  }
  std::sort(d.edges.begin(), d.edges.end(),
            [](const quilcc::DeviceEdge& x, const quilcc::DeviceEdge& y) {
              return std::pair{x.a, x.b} < std::pair{y.a, y.b};
            });
  for (int q : d.qubits) {
    if (single_fidelity != 1.0) d.single_qubit_fidelity[q] = single_fidelity;
    if (readout_fidelity != 1.0) d.readout_fidelity[q] = readout_fidelity;
  }
  return d;
}

inline quilcc::DeviceGraph line_device(int n, double f = 0.99) {
  std::vector<int> qs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) qs[static_cast<std::size_t>(i)] = i;
  std::vector<std::tuple<int, int, double>> es;
  for (int i = 0; i + 1 < n; ++i) es.push_back({i, i + 1, f});
  return make_device(qs, es);
}

inline quilcc::DeviceGraph ring_device(int n, std::vector<double> fids) {
  std::vector<int> qs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) qs[static_cast<std::size_t>(i)] = i;
  std::vector<std::tuple<int, int, double>> es;
  for (int i = 0; i < n; ++i)
    es.push_back({i, (i + 1) % n, fids[static_cast<std::size_t>(i)]});
  return make_device(qs, es);
}

// Random connected device on qubits 0..n-1: a random attachment tree plus a
// few extra edges, fidelities on a coarse grid in [0.80, 0.99] so that cost
// ties are exact when they happen.
inline quilcc::DeviceGraph random_device(quilcc::Rng& rng, int n,
                                         int extra_edges = 2) {
  std::set<std::pair<int, int>> used;
  std::vector<std::tuple<int, int, double>> es;
  auto fid = [&] { return 0.80 + 0.01 * static_cast<double>(rng.below(20)); };
  for (int i = 1; i < n; ++i) {
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    used.insert({j, i});
    es.push_back({j, i, fid()});
  }
  for (int k = 0; k < extra_edges && n >= 2; ++k) {
    int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.insert({a, b}).second) continue;
    es.push_back({a, b, fid()});
  }
  std::vector<int> qs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) qs[static_cast<std::size_t>(i)] = i;
  return make_device(qs, es);
}

// ---------------------------------------------------------------------------
// Random programs

struct GenOptions {
  int max_blocks = 10;
  int max_qubits = 6;
  bool allow_swap = false;    // source SWAPs off by default
  double pragma_chance = 0.5; // chance a conditional carries a probability
};

// Emits random but always-valid source text and parses it. Shapes covered:
// forward/backward jumps, conditionals with and without pragmas, fallthrough
// chains, self-loops, unreachable blocks, measures anywhere. The final block
// always halts so control cannot fall off the end.
inline quilcc::Program random_program(quilcc::Rng& rng,
                                      const GenOptions& opt = {}) {
  using std::to_string;
  int nb = 1 + static_cast<int>(
                   rng.below(static_cast<std::uint64_t>(opt.max_blocks)));
  int nq = 1 + static_cast<int>(
                   rng.below(static_cast<std::uint64_t>(opt.max_qubits)));
  int nbits = nb;
  bool entry_labeled = rng.below(2) == 0;

  std::vector<int> labeled;
  if (entry_labeled) labeled.push_back(0);
  for (int b = 1; b < nb; ++b) labeled.push_back(b);

  std::string text = "DECLARE ro BIT[" + to_string(nbits) + "]\n";
  static const char* kRxAngles[] = {"pi", "-pi", "pi/2", "-pi/2"};

  for (int b = 0; b < nb; ++b) {
    if (b > 0 || entry_labeled) text += "LABEL @L" + to_string(b) + "\n";

    int ngates = static_cast<int>(rng.below(4));
    for (int g = 0; g < ngates; ++g) {
      int kind = static_cast<int>(rng.below(opt.allow_swap ? 4 : 3));
      int q0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(nq)));
      if (kind >= 2 && nq < 2) kind = 0;
      if (kind == 0) {
        text += "RX(" + std::string(kRxAngles[rng.below(4)]) + ") " +
                to_string(q0) + "\n";
      } else if (kind == 1) {
        double phi = rng.uniform() * 2.0 * quilcc::kPi - quilcc::kPi;
        text += "RZ(" + quilcc::detail::format_double(phi) + ") " +
                to_string(q0) + "\n";
      } else {
        int q1 = q0;
        while (q1 == q0)
          q1 = static_cast<int>(rng.below(static_cast<std::uint64_t>(nq)));
        text += std::string(kind == 2 ? "CZ " : "SWAP ") + to_string(q0) +
                " " + to_string(q1) + "\n";
      }
    }
    if (rng.below(100) < 35) {
      int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(nq)));
      text += "MEASURE " + to_string(q) + " ro[" +
              to_string(rng.below(static_cast<std::uint64_t>(nbits))) + "]\n";
    }

    auto jump_target = [&]() -> std::string {
      return "@L" + to_string(labeled[rng.below(labeled.size())]);
    };
    if (b == nb - 1 || labeled.empty()) {
      text += "HALT\n";
    } else {
      std::uint64_t r = rng.below(100);
      if (r < 20) {
        text += "HALT\n";
      } else if (r < 45) {
        text += "JUMP " + jump_target() + "\n";
      } else if (r < 75) {
        if (rng.uniform() < opt.pragma_chance) {
          int tenths = 1 + static_cast<int>(rng.below(9));
          text += "PRAGMA BRANCH_PROBABILITY 0." + to_string(tenths) + "\n";
        }
        std::string op = rng.below(2) == 0 ? "JUMP-WHEN" : "JUMP-UNLESS";
        text += op + " " + jump_target() + " ro[" +
                to_string(rng.below(static_cast<std::uint64_t>(nbits))) +
                "]\n";
      }
      // else: fall through to the next block's label
    }
  }
  return quilcc::parse_program(text, "<random>");
}

// ---------------------------------------------------------------------------
// Graph oracles

// Every simple path from -> to over CFG edges, as vertex sequences.
inline std::vector<std::vector<int>> all_simple_paths(
    const quilcc::ControlFlowGraph& cfg, int from, int to,
    std::size_t cap = 1u << 20) {
  std::vector<std::vector<int>> out;
  std::vector<int> path{from};
  std::set<int> on_path{from};
  auto dfs = [&](auto&& self, int cur) -> void {
    if (cur == to) {
      out.push_back(path);
      if (out.size() > cap) throw std::runtime_error("path explosion");
      return;
    }
    for (int s : cfg.successors(cur)) {
      if (on_path.count(s)) continue;
      on_path.insert(s);
      path.push_back(s);
      self(self, s);
      path.pop_back();
      on_path.erase(s);
    }
  };
  dfs(dfs, from);
  return out;
}

// Dominator sets from first principles: a dominates b iff a is on every
// simple entry->b path. Only defined for reachable b.
inline std::map<int, std::set<int>> oracle_dominator_sets(
    const quilcc::ControlFlowGraph& cfg) {
  std::map<int, std::set<int>> out;
  for (const auto& [id, blk] : cfg.blocks) {
    auto paths = all_simple_paths(cfg, cfg.entry, id);
    if (paths.empty()) continue;  // unreachable
    std::set<int> inter(paths[0].begin(), paths[0].end());
    for (std::size_t i = 1; i < paths.size(); ++i) {
      std::set<int> cur(paths[i].begin(), paths[i].end());
      std::set<int> next;
      std::set_intersection(inter.begin(), inter.end(), cur.begin(),
                            cur.end(), std::inserter(next, next.begin()));
      inter = std::move(next);
    }
    out[id] = std::move(inter);
  }
  return out;
}

// Brute-force version of the inverse-swap edge rule for a swap in block b:
// every edge (b1, b2) with b dom b1 and not (b sdom b2).
inline std::set<std::pair<int, int>> oracle_inverse_swap_edges(
    const quilcc::ControlFlowGraph& cfg,
    const std::map<int, std::set<int>>& domsets, int b) {
  std::set<std::pair<int, int>> out;
  for (const auto& e : cfg.edges) {
    bool dom_from = domsets.at(e.from).count(b) > 0;
    bool sdom_to = b != e.to && domsets.at(e.to).count(b) > 0;
    if (dom_from && !sdom_to) out.insert({e.from, e.to});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Markov-chain walker

struct MarkovStats {
  std::map<int, double> mean;  // empirical visit count per block
  std::map<int, double> se;    // standard error of that mean
  long long walks = 0;
};

// Random walks over a pruned CFG. Out-probabilities may sum below one where
// edges were pruned; the missing mass ends the walk (control disappeared
// into a loop that never exits, which the expected counts also ignore).
inline MarkovStats markov_visit_stats(const quilcc::ControlFlowGraph& cfg,
                                      long long walks, std::uint64_t seed) {
  std::vector<int> ids;
  std::map<int, std::size_t> index;
  for (const auto& [id, b] : cfg.blocks) {
    index[id] = ids.size();
    ids.push_back(id);
  }
  std::vector<std::vector<std::pair<double, std::size_t>>> out(ids.size());
  for (const auto& e : cfg.edges)
    out[index.at(e.from)].push_back({e.probability, index.at(e.to)});

  std::vector<double> sum(ids.size(), 0.0), sumsq(ids.size(), 0.0);
  std::vector<double> visits(ids.size());
  quilcc::Rng rng(seed);
  for (long long w = 0; w < walks; ++w) {
    std::fill(visits.begin(), visits.end(), 0.0);
    std::size_t cur = index.at(cfg.entry);
    for (long long step = 0;; ++step) {
      if (step > 1000000)
        throw std::runtime_error("markov walk did not terminate");
      visits[cur] += 1.0;
      const auto& es = out[cur];
      if (es.empty()) break;
      double u = rng.uniform();
      double cum = 0.0;
      std::size_t next = SIZE_MAX;
      for (const auto& [p, t] : es) {
        cum += p;
        if (u < cum) {
          next = t;
          break;
        }
      }
      if (next == SIZE_MAX) break;  // pruned or exiting mass
      cur = next;
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      sum[i] += visits[i];
      sumsq[i] += visits[i] * visits[i];
    }
  }

  MarkovStats st;
  st.walks = walks;
  double n = static_cast<double>(walks);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double m = sum[i] / n;
    double var = (sumsq[i] - sum[i] * sum[i] / n) / (n - 1.0);
    if (var < 0.0) var = 0.0;
    st.mean[ids[i]] = m;
    st.se[ids[i]] = std::sqrt(var / n);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Swap algebra over emitted programs

// Walks every statically possible path of an emitted program, composing the
// effect of its SWAP instructions on physical qubit positions, and checks
// that each block is always entered with one and the same permutation. The
// state space (block, permutation) is finite, so this is an exact fixpoint,
// covering loops as well as simple paths. Programs fed here must not contain
// source-level SWAPs (the generator defaults to none), so every SWAP seen is
// compiler bookkeeping. Returns an empty string when the invariant holds.
inline std::string swap_permutation_conflict(const quilcc::Program& p) {
  auto cfg = quilcc::build_cfg(p);
  int maxq = 0;
  for (const auto& ins : p.instructions)
    if (const auto* g = std::get_if<quilcc::GateApp>(&ins))
      for (int q : g->qubits) maxq = std::max(maxq, q);

  std::vector<int> identity(static_cast<std::size_t>(maxq) + 1);
  for (int i = 0; i <= maxq; ++i) identity[static_cast<std::size_t>(i)] = i;

  std::map<int, std::vector<int>> at_entry;
  std::deque<std::pair<int, std::vector<int>>> work;
  work.push_back({cfg.entry, identity});
  while (!work.empty()) {
    auto [b, perm] = work.front();
    work.pop_front();
    auto it = at_entry.find(b);
    if (it != at_entry.end()) {
      if (it->second != perm) {
        std::string msg = "block " + std::to_string(b) +
                          " entered with two different permutations";
        return msg;
      }
      continue;  // already expanded with this permutation
    }
    at_entry.emplace(b, perm);
    for (const auto& ins : cfg.block(b).body)
      if (const auto* g = std::get_if<quilcc::GateApp>(&ins))
        if (g->gate == quilcc::GateKind::SWAP)
          std::swap(perm[static_cast<std::size_t>(g->qubits[0])],
                    perm[static_cast<std::size_t>(g->qubits[1])]);
    for (int s : cfg.successors(b)) work.push_back({s, perm});
  }
  return "";
}

// ---------------------------------------------------------------------------
// Exhaustive allocation search

// All injective placements of the given logical qubits onto the device.
inline std::vector<quilcc::Allocation> all_injections(
    const std::vector<int>& logicals, const quilcc::DeviceGraph& d) {
  std::vector<quilcc::Allocation> out;
  int maxl = logicals.empty() ? 0 : *std::max_element(logicals.begin(),
                                                      logicals.end());
  std::vector<int> chosen(logicals.size(), -1);
  std::set<int> used;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == logicals.size()) {
      quilcc::Allocation m(maxl, d.max_qubit_id());
      for (std::size_t k = 0; k < logicals.size(); ++k)
        m.bind(logicals[k], chosen[k]);
      out.push_back(std::move(m));
      return;
    }
    for (int p : d.qubits) {
      if (used.count(p)) continue;
      used.insert(p);
      chosen[i] = p;
      self(self, i + 1);
      used.erase(p);
    }
  };
  rec(rec, 0);
  return out;
}

// Minimum routed cost over every placement; the same routing the annealer
// scores, so the two are directly comparable.
inline double brute_force_best_cost(const quilcc::ControlFlowGraph& cfg,
                                    const quilcc::DominatorTree& dom,
                                    const quilcc::DeviceGraph& d,
                                    const quilcc::BlockWeights& w,
                                    quilcc::RoutingMode mode) {
  quilcc::PathTable paths(d);
  auto logicals = quilcc::detail::collect_logicals(cfg);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : all_injections(logicals, d)) {
    auto rp = quilcc::route_program(cfg, dom, d, paths, m, mode);
    best = std::min(best, quilcc::allocation_cost(rp, w, d));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Assorted

inline int count_swaps(const quilcc::Program& p) {
  int n = 0;
  for (const auto& ins : p.instructions)
    if (const auto* g = std::get_if<quilcc::GateApp>(&ins))
      if (g->gate == quilcc::GateKind::SWAP) ++n;
  return n;
}

// True when every CZ and SWAP acts on a device edge.
inline bool two_qubit_gates_adjacent(const quilcc::Program& p,
                                     const quilcc::DeviceGraph& d) {
  for (const auto& ins : p.instructions)
    if (const auto* g = std::get_if<quilcc::GateApp>(&ins))
      if (g->qubits.size() == 2 && !d.has_edge(g->qubits[0], g->qubits[1]))
        return false;
  return true;
}

}  // namespace testutil
