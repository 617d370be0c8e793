#pragma once
// Control-flow-capable state-vector simulator. Executes the CFG directly:
// gates update 2^n complex amplitudes, measurements collapse the state and
// write classical bits, and terminators pick the next block, so loops and
// conditional jumps behave exactly as in the source. An optional Pauli
// noise channel and readout flips model a device's gate fidelities.

#include <complex>
#include <cstdint>
#include <exception>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "quilcc/cfg.hpp"
#include "quilcc/device.hpp"
#include "quilcc/metrics.hpp"
#include "quilcc/quil.hpp"
#include "quilcc/rng.hpp"

namespace quilcc {

inline constexpr int kMaxSimQubits = 20;

// Highest referenced qubit index + 1.
inline int required_qubits(const Program& p) {
  int max_q = -1;
  for (const auto& ins : p.instructions) {
    if (auto* g = std::get_if<GateApp>(&ins))
      for (int q : g->qubits) max_q = std::max(max_q, q);
    if (auto* m = std::get_if<Measure>(&ins)) max_q = std::max(max_q, m->qubit);
  }
  return max_q + 1;
}

class QuantumState {
 public:
  explicit QuantumState(int n) : n_(n) {
    if (n < 0 || n > kMaxSimQubits)
      throw std::invalid_argument("qubit count must be in [0, " +
                                  std::to_string(kMaxSimQubits) + "]");
    amp_.assign(std::size_t{1} << n, {0.0, 0.0});
    amp_[0] = {1.0, 0.0};
  }

  int num_qubits() const { return n_; }
  const std::vector<std::complex<double>>& amplitudes() const { return amp_; }

  void apply_rx(int q, double theta) {
    check(q);
    const double c = std::cos(theta / 2);
    const std::complex<double> ms{0.0, -std::sin(theta / 2)};
    pair_loop(q, [&](std::complex<double>& a0, std::complex<double>& a1) {
      auto x0 = c * a0 + ms * a1;
      auto x1 = ms * a0 + c * a1;
      a0 = x0;
      a1 = x1;
    });
  }

  void apply_rz(int q, double phi) {
    check(q);
    const std::complex<double> e0 = std::polar(1.0, -phi / 2);
    const std::complex<double> e1 = std::polar(1.0, phi / 2);
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      amp_[i] *= (i & mask) ? e1 : e0;
  }

  void apply_cz(int a, int b) {
    check(a);
    check(b);
    const std::size_t ma = std::size_t{1} << a;
    const std::size_t mb = std::size_t{1} << b;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      if ((i & ma) && (i & mb)) amp_[i] = -amp_[i];
  }

  void apply_swap(int a, int b) {
    check(a);
    check(b);
    const std::size_t ma = std::size_t{1} << a;
    const std::size_t mb = std::size_t{1} << b;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      if ((i & ma) && !(i & mb)) std::swap(amp_[i], amp_[i ^ ma ^ mb]);
  }

  void apply_gate(const GateApp& g) {
    switch (g.gate) {
      case GateKind::RX: apply_rx(g.qubits[0], g.params[0]); break;
      case GateKind::RZ: apply_rz(g.qubits[0], g.params[0]); break;
      case GateKind::CZ: apply_cz(g.qubits[0], g.qubits[1]); break;
      case GateKind::SWAP: apply_swap(g.qubits[0], g.qubits[1]); break;
    }
  }

  void apply_pauli_x(int q) {
    check(q);
    pair_loop(q, [](std::complex<double>& a0, std::complex<double>& a1) {
      std::swap(a0, a1);
    });
  }
  void apply_pauli_y(int q) {
    check(q);
    const std::complex<double> im{0.0, 1.0};
    pair_loop(q, [&](std::complex<double>& a0, std::complex<double>& a1) {
      auto x0 = -im * a1;
      auto x1 = im * a0;
      a0 = x0;
      a1 = x1;
    });
  }
  void apply_pauli_z(int q) {
    check(q);
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      if (i & mask) amp_[i] = -amp_[i];
  }

  double prob_one(int q) const {
    check(q);
    const std::size_t mask = std::size_t{1} << q;
    double p = 0.0;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      if (i & mask) p += std::norm(amp_[i]);
    return p;
  }

  // Born-rule measurement: outcome 1 iff u < P(1), then collapse and
  // renormalize. u is the caller's uniform draw in [0, 1).
  int measure_collapse(int q, double u) {
    double p1 = prob_one(q);
    int bit = (u < p1) ? 1 : 0;
    double pk = bit ? p1 : 1.0 - p1;
    const double f = 1.0 / std::sqrt(pk);
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t i = 0; i < amp_.size(); ++i) {
      if (static_cast<int>((i & mask) != 0) == bit)
        amp_[i] *= f;
      else
        amp_[i] = {0.0, 0.0};
    }
    return bit;
  }

  double norm() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return s;
  }

 private:
  void check(int q) const {
    if (q < 0 || q >= n_)
      throw std::out_of_range("qubit index " + std::to_string(q) +
                              " outside simulated register of size " +
                              std::to_string(n_));
  }
  template <typename F>
  void pair_loop(int q, F&& f) {
    const std::size_t step = std::size_t{1} << q;
    for (std::size_t base = 0; base < amp_.size(); base += 2 * step)
      for (std::size_t i = base; i < base + step; ++i)
        f(amp_[i], amp_[i + step]);
  }

  int n_;
  std::vector<std::complex<double>> amp_;
};

struct RunOptions {
  std::uint64_t seed = 0;
  long long step_cap = 1'000'000;
  // Noise is off when device is null. With a device set, each gate flips
  // each involved qubit with probability (1 - fidelity) * scale to a
  // uniformly random Pauli, and readout bits flip with probability
  // (1 - readout_fidelity) * scale. scale = 0 reproduces the noiseless
  // run exactly (no extra RNG draws are consumed for zero-probability
  // events).
  const DeviceGraph* noise_device = nullptr;
  double noise_scale = 1.0;
};

struct RunResult {
  std::string readout;
  std::vector<int> block_trace;  // entry first
  long long steps = 0;
};

namespace detail {

struct ClassicalMemory {
  // Region name -> bits, plus declaration order for readout layout.
  std::map<std::string, std::vector<std::uint8_t>> bits;
  std::vector<std::string> order;

  explicit ClassicalMemory(const Program& p) {
    for (const auto& [name, size] : p.declared) {
      bits[name].assign(static_cast<std::size_t>(size), 0);
      order.push_back(name);
    }
  }
  std::uint8_t read(const MemRef& m) const {
    return bits.at(m.region).at(static_cast<std::size_t>(m.index));
  }
  void write(const MemRef& m, std::uint8_t v) {
    bits.at(m.region).at(static_cast<std::size_t>(m.index)) = v;
  }
  std::string readout() const {
    std::string out;
    for (const auto& name : order)
      for (std::uint8_t b : bits.at(name)) out += b ? '1' : '0';
    return out;
  }
};

inline void apply_noise(QuantumState& st, Rng& rng, const RunOptions& opt,
                        const GateApp& g) {
  const DeviceGraph& d = *opt.noise_device;
  double fid = 1.0;
  switch (g.gate) {
    case GateKind::RX:
    case GateKind::RZ:
      fid = d.single_fidelity(g.qubits[0]);
      break;
    case GateKind::CZ:
      fid = d.edge_fidelity(g.qubits[0], g.qubits[1]);
      break;
    case GateKind::SWAP: {
      // A SWAP decomposes into three two-qubit gates on the coupler.
      double fe = d.edge_fidelity(g.qubits[0], g.qubits[1]);
      fid = fe * fe * fe;
      break;
    }
  }
  for (int q : g.qubits) {
    double p = (1.0 - fid) * opt.noise_scale;
    if (p <= 0.0) continue;
    if (rng.uniform() < p) {
      switch (rng.below(3)) {
        case 0: st.apply_pauli_x(q); break;
        case 1: st.apply_pauli_y(q); break;
        default: st.apply_pauli_z(q); break;
      }
    }
  }
}

inline RunResult run_impl(const ControlFlowGraph& cfg, const Program& p,
                          int n_qubits, const RunOptions& opt) {
  if (opt.noise_device) {
    for (const auto& [id, b] : cfg.blocks)
      for (const auto& ins : b.body)
        if (auto* g = std::get_if<GateApp>(&ins)) {
          for (int q : g->qubits)
            if (!opt.noise_device->has_qubit(q))
              throw std::runtime_error(
                  "qubit " + std::to_string(q) +
                  " is not a device qubit; cannot apply noise model");
          if (g->qubits.size() == 2 &&
              !opt.noise_device->has_edge(g->qubits[0], g->qubits[1]))
            throw std::runtime_error(
                "two-qubit gate on non-adjacent qubits " +
                std::to_string(g->qubits[0]) + ", " +
                std::to_string(g->qubits[1]) +
                "; route the program to the device first");
        }
  }

  QuantumState st(n_qubits);
  Rng rng(opt.seed);
  ClassicalMemory mem(p);
  RunResult res;
  int current = cfg.entry;
  res.block_trace.push_back(current);

  while (true) {
    if (res.steps > opt.step_cap)
      throw std::runtime_error(
          "step limit exceeded; program may not terminate");
    const BasicBlock& b = cfg.block(current);
    for (const auto& ins : b.body) {
      ++res.steps;
      if (res.steps > opt.step_cap)
        throw std::runtime_error(
            "step limit exceeded; program may not terminate");
      if (auto* g = std::get_if<GateApp>(&ins)) {
        st.apply_gate(*g);
        if (opt.noise_device) apply_noise(st, rng, opt, *g);
      } else if (auto* m = std::get_if<Measure>(&ins)) {
        int bit = st.measure_collapse(m->qubit, rng.uniform());
        if (opt.noise_device) {
          double pf = (1.0 - opt.noise_device->readout(m->qubit)) *
                      opt.noise_scale;
          if (pf > 0.0 && rng.uniform() < pf) bit ^= 1;
        }
        mem.write(m->target, static_cast<std::uint8_t>(bit));
      }
      // Declares and pragmas have no runtime effect.
    }
    ++res.steps;
    const Terminator& t = b.term;
    if (t.type == Terminator::Type::Halt) break;
    if (t.type == Terminator::Type::Cond) {
      bool bit = mem.read(t.condition) != 0;
      bool taken = (t.kind == CondKind::When) ? bit : !bit;
      current = taken ? t.taken : t.fallthrough;
    } else {
      current = t.target;
    }
    res.block_trace.push_back(current);
  }
  res.readout = mem.readout();
  return res;
}

}  // namespace detail

inline RunResult run(const Program& p, const RunOptions& opt = {}) {
  auto cfg = build_cfg(p);
  int n = required_qubits(p);
  return detail::run_impl(cfg, p, n, opt);
}

struct ManyResult {
  Histogram histogram;
  std::map<int, std::uint64_t> block_visits;  // summed over all trials
  int trials = 0;

  std::map<int, double> mean_block_visits() const {
    std::map<int, double> out;
    for (const auto& [id, c] : block_visits)
      out[id] = static_cast<double>(c) / static_cast<double>(trials);
    return out;
  }
};

// Repeated runs with per-trial seeds derived from one master seed. Results
// are independent of the thread count: trial i always uses stream i, and
// merges are commutative integer sums.
inline ManyResult run_many_opts(const Program& p, int trials,
                                const RunOptions& base, int threads = 0) {
  if (trials <= 0) throw std::invalid_argument("trial count must be >= 1");
  auto cfg = build_cfg(p);
  int n = required_qubits(p);

  int t = threads > 0 ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  t = std::min<int>({t, trials, 16});

  std::vector<Histogram> hists(static_cast<std::size_t>(t));
  std::vector<std::map<int, std::uint64_t>> visits(
      static_cast<std::size_t>(t));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t));

  auto worker = [&](int w) {
    try {
      for (int i = w; i < trials; i += t) {
        RunOptions opt = base;
        opt.seed = derive_seed(base.seed, static_cast<std::uint64_t>(i));
        auto r = detail::run_impl(cfg, p, n, opt);
        hists[static_cast<std::size_t>(w)].add(r.readout);
        for (int b : r.block_trace)
          ++visits[static_cast<std::size_t>(w)][b];
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (t == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int w = 0; w < t; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ManyResult out;
  out.trials = trials;
  for (const auto& [id, b] : cfg.blocks) out.block_visits[id] = 0;
  for (int w = 0; w < t; ++w) {
    out.histogram.merge(hists[static_cast<std::size_t>(w)]);
    for (const auto& [id, c] : visits[static_cast<std::size_t>(w)])
      out.block_visits[id] += c;
  }
  return out;
}

inline ManyResult run_many(const Program& p, int trials, std::uint64_t seed,
                           int threads = 0) {
  RunOptions opt;
  opt.seed = seed;
  return run_many_opts(p, trials, opt, threads);
}

inline ManyResult run_noisy(const Program& p, const DeviceGraph& d, int trials,
                            std::uint64_t seed, double noise_scale = 1.0,
                            int threads = 0) {
  if (noise_scale < 0.0)
    throw std::invalid_argument("noise scale must be >= 0");
  RunOptions opt;
  opt.seed = seed;
  opt.noise_device = &d;
  opt.noise_scale = noise_scale;
  return run_many_opts(p, trials, opt, threads);
}

// Exact readout distribution for branch-free programs: applies the gate
// sequence once and reads joint probabilities of the measured qubits off
// the final state. Requires each measured qubit to be measured exactly once
// and left untouched afterwards.
inline std::map<std::string, double> exact_distribution(const Program& p) {
  auto cfg = build_cfg(p);
  int n = required_qubits(p);

  std::vector<const BasicBlock*> chain;
  std::set<int> visited;
  int current = cfg.entry;
  while (true) {
    if (!visited.insert(current).second)
      throw std::invalid_argument(
          "exact distribution requires a loop-free program");
    const BasicBlock& b = cfg.block(current);
    chain.push_back(&b);
    if (b.term.type == Terminator::Type::Halt) break;
    if (b.term.type == Terminator::Type::Cond)
      throw std::invalid_argument(
          "exact distribution requires a branch-free program");
    current = b.term.target;
  }

  QuantumState st(n);
  std::map<int, MemRef> measured;  // qubit -> classical slot
  for (const BasicBlock* b : chain) {
    for (const auto& ins : b->body) {
      if (auto* g = std::get_if<GateApp>(&ins)) {
        for (int q : g->qubits)
          if (measured.count(q))
            throw std::invalid_argument(
                "exact distribution requires measured qubits to stay "
                "untouched; qubit " + std::to_string(q) +
                " is used after its measurement");
        st.apply_gate(*g);
      } else if (auto* m = std::get_if<Measure>(&ins)) {
        if (!measured.emplace(m->qubit, m->target).second)
          throw std::invalid_argument(
              "exact distribution requires each qubit to be measured at "
              "most once; qubit " + std::to_string(m->qubit) +
              " is measured twice");
      }
    }
  }

  detail::ClassicalMemory mem(p);
  std::map<std::string, double> dist;
  const auto& amp = st.amplitudes();
  for (std::size_t i = 0; i < amp.size(); ++i) {
    double pr = std::norm(amp[i]);
    if (pr == 0.0) continue;
    for (const auto& [q, slot] : measured)
      mem.write(slot, static_cast<std::uint8_t>((i >> q) & 1));
    dist[mem.readout()] += pr;
  }
  return dist;
}

struct SsoSample {
  int trials = 0;  // parallel executions per histogram
  int repeat = 0;
  double value = 0.0;
};

// Convergence experiment: for each trial count n, builds two independent
// n-trial histograms of the same program and records their overlap. As n
// grows the overlap approaches 1 and its spread tightens.
inline std::vector<SsoSample> parallel_sso(const Program& p,
                                           const std::vector<int>& ns,
                                           int repeats, std::uint64_t seed,
                                           int threads = 0) {
  if (repeats <= 0) throw std::invalid_argument("repeats must be >= 1");
  std::vector<SsoSample> out;
  std::uint64_t stream = 0;
  for (int n : ns) {
    for (int r = 0; r < repeats; ++r) {
      auto a = run_many(p, n, derive_seed(seed, 2 * stream), threads);
      auto b = run_many(p, n, derive_seed(seed, 2 * stream + 1), threads);
      out.push_back({n, r, sso(a.histogram, b.histogram)});
      ++stream;
    }
  }
  return out;
}

}  // namespace quilcc
