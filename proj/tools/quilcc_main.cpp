// quilcc command line: compile (allocate a program to a device), weights
// (expected block execution counts), simulate (sampled readout histograms),
// compare (overlap of two histograms), convergence (overlap vs trial count).
// All stochastic stages run off a single --seed, so equal invocations give
// byte-identical output.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quilcc/metrics.hpp"
#include "quilcc/pipeline.hpp"
#include "quilcc/simulate.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

quilcc::Histogram read_histogram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open histogram file: " + path);
  quilcc::Histogram h;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("bitstring,", 0) == 0) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected \"bitstring,count\"");
    std::string key = line.substr(0, comma);
    unsigned long long count = 0;
    try {
      count = std::stoull(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": bad count");
    }
    h.counts[key] += count;
    h.trials += count;
  }
  if (h.trials == 0)
    throw std::runtime_error(path + ": histogram holds no trials");
  return h;
}

std::string histogram_csv(const quilcc::Histogram& h) {
  std::string out = "bitstring,count\n";
  for (const auto& [k, c] : h.counts)
    out += k + "," + std::to_string(c) + "\n";
  return out;
}

int cmd_compile(const std::string& input, const std::string& device_path,
                const std::string& output, const std::string& emit_cfg,
                const quilcc::CompileConfig& config) {
  auto program = quilcc::parse_program(read_file(input), input);
  auto device = quilcc::load_device(device_path);
  auto result = quilcc::compile_program(program, device, config);

  write_output(output, quilcc::emit_program(result.allocated.program));
  if (!emit_cfg.empty()) {
    std::map<int, double> w = result.weights.weights;
    write_output(emit_cfg, quilcc::to_dot(result.allocated.output_cfg, &w));
  }

  int inserted = 0;
  for (const auto& [id, rb] : result.allocated.routed.blocks)
    inserted += static_cast<int>(rb.swaps.size());
  int tramp_swaps = 0;
  for (const auto& t : result.allocated.routed.trampolines)
    tramp_swaps += static_cast<int>(t.swaps.size());
  std::cerr << "cost: " << fmt(result.allocated.cost) << "\n"
            << "inserted swaps: " << inserted << "\n"
            << "trampolines: " << result.allocated.trampolines.size()
            << " (holding " << tramp_swaps << " swaps)\n";
  return 0;
}

int cmd_weights(const std::string& input, bool normalized, double default_p,
                const std::string& output) {
  auto program = quilcc::parse_program(read_file(input), input);
  auto cfg = quilcc::build_cfg(program, default_p);
  auto pruned = quilcc::prune_infinite_loops(cfg);
  auto w = quilcc::expected_executions(pruned);

  std::string out = "block,weight\n";
  if (normalized) {
    for (const auto& [id, v] : quilcc::normalized_weights(w))
      out += std::to_string(id) + "," + fmt(v) + "\n";
  } else {
    for (const auto& [id, v] : w.weights)
      out += std::to_string(id) + "," + fmt(v) + "\n";
  }
  write_output(output, out);
  for (const auto& e : w.pruned_edges)
    std::cerr << "pruned infinite-loop edge " << e.from << " -> " << e.to
              << "\n";
  return 0;
}

int cmd_simulate(const std::string& input, int trials, std::uint64_t seed,
                 bool noisy, const std::string& device_path, double noise_scale,
                 int threads, const std::string& output,
                 const std::string& block_freq) {
  auto program = quilcc::parse_program(read_file(input), input);
  quilcc::ManyResult res;
  if (noisy) {
    if (device_path.empty())
      throw std::runtime_error("--noisy requires --device");
    auto device = quilcc::load_device(device_path);
    res = quilcc::run_noisy(program, device, trials, seed, noise_scale,
                            threads);
  } else {
    res = quilcc::run_many(program, trials, seed, threads);
  }
  write_output(output, histogram_csv(res.histogram));
  if (!block_freq.empty()) {
    std::string out = "block,mean_visits\n";
    for (const auto& [id, v] : res.mean_block_visits())
      out += std::to_string(id) + "," + fmt(v) + "\n";
    write_output(block_freq, out);
  }
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path) {
  auto a = read_histogram_csv(a_path);
  auto b = read_histogram_csv(b_path);
  std::cout << fmt(quilcc::sso(a, b)) << "\n";
  return 0;
}

int cmd_convergence(const std::string& input, const std::string& ns_arg,
                    int repeats, std::uint64_t seed, int threads,
                    const std::string& output) {
  auto program = quilcc::parse_program(read_file(input), input);
  std::vector<int> ns;
  std::stringstream ss(ns_arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    int n = std::stoi(tok);
    if (n <= 0) throw std::runtime_error("trial counts must be >= 1");
    ns.push_back(n);
  }
  if (ns.empty()) throw std::runtime_error("no trial counts given");
  auto samples = quilcc::parallel_sso(program, ns, repeats, seed, threads);
  std::string out = "n,repeat,sso\n";
  for (const auto& s : samples)
    out += std::to_string(s.trials) + "," + std::to_string(s.repeat) + "," +
           fmt(s.value) + "\n";
  write_output(output, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Control-flow-aware qubit allocation and simulation for a "
               "Quil subset"};
  app.require_subcommand(1);

  // compile
  std::string c_input, c_device, c_output, c_emit_cfg;
  quilcc::CompileConfig c_config;
  auto* compile = app.add_subcommand(
      "compile", "Allocate a program onto a device");
  compile->add_option("input", c_input, "Quil source file")->required();
  compile->add_option("--device", c_device, "device JSON file")->required();
  compile->add_option("--seed", c_config.anneal.seed, "annealing seed");
  compile->add_option("--iterations", c_config.anneal.iterations,
                      "annealing iterations per restart");
  compile->add_option("--restarts", c_config.anneal.restarts,
                      "annealing restarts");
  compile->add_option("--t0", c_config.anneal.t0, "initial temperature");
  compile->add_option("--alpha", c_config.anneal.alpha, "geometric cooling");
  compile->add_flag("--cf-unaware", c_config.cf_unaware,
                    "uniform block weights and eager swap inversion");
  compile->add_option("--default-branch-probability",
                      c_config.default_branch_probability,
                      "probability of unannotated conditional branches");
  compile->add_option("--emit-cfg", c_emit_cfg,
                      "write the allocated control flow graph as DOT");
  compile->add_option("-o,--output", c_output,
                      "output file (default: stdout)");

  // weights
  std::string w_input, w_output;
  bool w_normalized = false;
  double w_default_p = 0.5;
  auto* weights = app.add_subcommand(
      "weights", "Expected execution count per basic block");
  weights->add_option("input", w_input, "Quil source file")->required();
  weights->add_flag("--normalized", w_normalized, "scale weights to sum 1");
  weights->add_option("--default-branch-probability", w_default_p,
                      "probability of unannotated conditional branches");
  weights->add_option("-o,--output", w_output, "output file (default: stdout)");

  // simulate
  std::string s_input, s_device, s_output, s_block_freq;
  int s_trials = 200;
  std::uint64_t s_seed = 42;
  bool s_noisy = false;
  double s_noise_scale = 1.0;
  int s_threads = 0;
  auto* simulate = app.add_subcommand(
      "simulate", "Sample readout histograms from repeated runs");
  simulate->add_option("input", s_input, "Quil source file")->required();
  simulate->add_option("--trials", s_trials, "number of runs");
  simulate->add_option("--seed", s_seed, "master seed");
  simulate->add_flag("--noisy", s_noisy, "apply the device noise model");
  simulate->add_option("--device", s_device, "device JSON file (for --noisy)");
  simulate->add_option("--noise-scale", s_noise_scale,
                       "scales all error probabilities");
  simulate->add_option("--threads", s_threads, "worker threads (0 = auto)");
  simulate->add_option("-o,--output", s_output,
                       "histogram CSV (default: stdout)");
  simulate->add_option("--block-freq", s_block_freq,
                       "write mean block visit counts as CSV");

  // compare
  std::string m_a, m_b;
  auto* compare = app.add_subcommand(
      "compare", "Squared statistical overlap of two histogram CSVs");
  compare->add_option("a", m_a, "first histogram CSV")->required();
  compare->add_option("b", m_b, "second histogram CSV")->required();

  // convergence
  std::string v_input, v_output;
  std::string v_ns = "1,2,5,10,20,50,100,200";
  int v_repeats = 20;
  std::uint64_t v_seed = 42;
  int v_threads = 0;
  auto* convergence = app.add_subcommand(
      "convergence", "Overlap of independent histogram pairs vs trial count");
  convergence->add_option("input", v_input, "Quil source file")->required();
  convergence->add_option("--ns", v_ns, "comma-separated trial counts");
  convergence->add_option("--repeats", v_repeats, "pairs per trial count");
  convergence->add_option("--seed", v_seed, "master seed");
  convergence->add_option("--threads", v_threads, "worker threads (0 = auto)");
  convergence->add_option("-o,--output", v_output,
                          "output CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile->parsed())
      return cmd_compile(c_input, c_device, c_output, c_emit_cfg, c_config);
    if (weights->parsed())
      return cmd_weights(w_input, w_normalized, w_default_p, w_output);
    if (simulate->parsed())
      return cmd_simulate(s_input, s_trials, s_seed, s_noisy, s_device,
                          s_noise_scale, s_threads, s_output, s_block_freq);
    if (compare->parsed()) return cmd_compare(m_a, m_b);
    if (convergence->parsed())
      return cmd_convergence(v_input, v_ns, v_repeats, v_seed, v_threads,
                             v_output);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
