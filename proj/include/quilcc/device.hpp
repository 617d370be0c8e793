#pragma once
// Device connectivity model: qubits, coupler edges with two-qubit gate
// fidelities, optional per-qubit single-qubit and readout fidelities, plus
// fidelity-aware shortest swap paths (edge cost -ln f).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "quilcc/quil.hpp"

namespace quilcc {

struct DeviceEdge {
  int a = -1;  // a < b
  int b = -1;
  double fidelity = 1.0;
};

struct DeviceGraph {
  std::string name = "device";
  std::vector<int> qubits;  // ascending
  std::vector<DeviceEdge> edges;
  std::map<int, double> single_qubit_fidelity;  // absent entries mean 1.0
  std::map<int, double> readout_fidelity;

  bool has_qubit(int q) const {
    return std::binary_search(qubits.begin(), qubits.end(), q);
  }
  bool has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (const auto& e : edges)
      if (e.a == a && e.b == b) return true;
    return false;
  }
  double edge_fidelity(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (const auto& e : edges)
      if (e.a == a && e.b == b) return e.fidelity;
    throw std::invalid_argument("no coupler between qubits " +
                                std::to_string(a) + " and " +
                                std::to_string(b));
  }
  double single_fidelity(int q) const {
    auto it = single_qubit_fidelity.find(q);
    return it == single_qubit_fidelity.end() ? 1.0 : it->second;
  }
  double readout(int q) const {
    auto it = readout_fidelity.find(q);
    return it == readout_fidelity.end() ? 1.0 : it->second;
  }
  // (neighbor, edge fidelity), ascending by neighbor id.
  std::vector<std::pair<int, double>> neighbors(int q) const {
    std::vector<std::pair<int, double>> out;
    for (const auto& e : edges) {
      if (e.a == q) out.push_back({e.b, e.fidelity});
      if (e.b == q) out.push_back({e.a, e.fidelity});
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  int max_qubit_id() const { return qubits.empty() ? -1 : qubits.back(); }
};

// Schema:
// {
//   "qubits": [0, 1, ...],
//   "edges": [{"pair": [a, b], "fidelity": f}, ...],
//   "single_qubit_fidelity": {"0": f, ...},   // optional
//   "readout_fidelity": {"0": f, ...}         // optional
// }
inline DeviceGraph device_from_json(const nlohmann::json& j,
                                    std::string name = "device") {
  auto fail = [&name](const std::string& msg) -> std::runtime_error {
    return std::runtime_error(name + ": " + msg);
  };

  DeviceGraph d;
  d.name = name;
  if (!j.is_object()) throw fail("device file must hold a JSON object");
  if (!j.contains("qubits") || !j["qubits"].is_array())
    throw fail("missing \"qubits\" array");
  for (const auto& q : j["qubits"]) {
    if (!q.is_number_integer() || q.get<int>() < 0)
      throw fail("qubit ids must be nonnegative integers");
    d.qubits.push_back(q.get<int>());
  }
  if (d.qubits.empty()) throw fail("device has no qubits");
  std::sort(d.qubits.begin(), d.qubits.end());
  if (std::adjacent_find(d.qubits.begin(), d.qubits.end()) != d.qubits.end())
    throw fail("duplicate qubit id");

  std::set<std::pair<int, int>> seen;
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw fail("\"edges\" must be an array");
    for (const auto& ej : j["edges"]) {
      if (!ej.is_object() || !ej.contains("pair") || !ej.contains("fidelity"))
        throw fail("each edge needs \"pair\" and \"fidelity\"");
      const auto& pair = ej["pair"];
      if (!pair.is_array() || pair.size() != 2 ||
          !pair[0].is_number_integer() || !pair[1].is_number_integer())
        throw fail("edge \"pair\" must hold two qubit ids");
      int a = pair[0].get<int>();
      int b = pair[1].get<int>();
      if (a == b) throw fail("self-loop edge on qubit " + std::to_string(a));
      if (!d.has_qubit(a) || !d.has_qubit(b))
        throw fail("edge endpoint not in \"qubits\"");
      if (a > b) std::swap(a, b);
      if (!seen.insert({a, b}).second)
        throw fail("duplicate edge (" + std::to_string(a) + ", " +
                   std::to_string(b) + ")");
      if (!ej["fidelity"].is_number())
        throw fail("edge fidelity must be a number");
      double f = ej["fidelity"].get<double>();
      if (!(f > 0.0 && f <= 1.0))
        throw fail("edge fidelity must be in (0, 1]");
      d.edges.push_back({a, b, f});
    }
  }
  std::sort(d.edges.begin(), d.edges.end(), [](const auto& x, const auto& y) {
    return std::pair{x.a, x.b} < std::pair{y.a, y.b};
  });

  auto read_fid_map = [&](const char* key, std::map<int, double>& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_object())
      throw fail(std::string("\"") + key + "\" must be an object");
    for (const auto& [k, v] : j[key].items()) {
      int q = 0;
      try {
        std::size_t used = 0;
        q = std::stoi(k, &used);
        if (used != k.size()) throw std::invalid_argument(k);
      } catch (const std::exception&) {
        throw fail(std::string("bad qubit id \"") + k + "\" in " + key);
      }
      if (!d.has_qubit(q))
        throw fail(std::string("unknown qubit ") + k + " in " + key);
      if (!v.is_number())
        throw fail(std::string("fidelity for qubit ") + k + " must be a number");
      double f = v.get<double>();
      if (!(f > 0.0 && f <= 1.0))
        throw fail(std::string("fidelity for qubit ") + k +
                   " must be in (0, 1]");
      out[q] = f;
    }
  };
  read_fid_map("single_qubit_fidelity", d.single_qubit_fidelity);
  read_fid_map("readout_fidelity", d.readout_fidelity);

  // Routing assumes any qubit can be swapped next to any other.
  if (d.qubits.size() > 1) {
    std::set<int> seen_q{d.qubits[0]};
    std::vector<int> work{d.qubits[0]};
    while (!work.empty()) {
      int q = work.back();
      work.pop_back();
      for (const auto& [nb, f] : d.neighbors(q))
        if (seen_q.insert(nb).second) work.push_back(nb);
    }
    if (seen_q.size() != d.qubits.size())
      throw fail("coupling graph is not connected");
  }
  return d;
}

inline DeviceGraph load_device(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open device file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return device_from_json(j, path);
}

struct SwapPath {
  std::vector<int> qubits;  // physical ids from source to target, inclusive
  double cost = std::numeric_limits<double>::infinity();  // sum of -ln f
};

// Dijkstra with cost -ln(fidelity) per edge; among minimum-cost paths the
// lexicographically smallest qubit-id sequence wins, which keeps routing
// deterministic on devices with uniform fidelities.
inline SwapPath shortest_swap_path(const DeviceGraph& d, int a, int b) {
  if (!d.has_qubit(a) || !d.has_qubit(b))
    throw std::invalid_argument("swap path endpoint is not a device qubit");
  if (a == b) return {{a}, 0.0};

  constexpr double eps = 1e-12;
  std::map<int, SwapPath> best;
  for (int q : d.qubits) best[q] = SwapPath{};
  best[a] = {{a}, 0.0};
  std::set<int> done;

  auto path_less = [eps](const SwapPath& x, const SwapPath& y) {
    if (x.cost < y.cost - eps) return true;
    if (x.cost > y.cost + eps) return false;
    return x.qubits < y.qubits;
  };

  while (static_cast<int>(done.size()) < static_cast<int>(d.qubits.size())) {
    int u = -1;
    for (int q : d.qubits) {
      if (done.count(q) || best[q].qubits.empty()) continue;
      if (u == -1 || path_less(best[q], best[u])) u = q;
    }
    if (u == -1) break;  // rest unreachable
    if (u == b) break;
    done.insert(u);
    for (const auto& [v, fid] : d.neighbors(u)) {
      if (done.count(v)) continue;
      SwapPath cand;
      cand.cost = best[u].cost - std::log(fid);
      cand.qubits = best[u].qubits;
      cand.qubits.push_back(v);
      if (best[v].qubits.empty() || path_less(cand, best[v])) best[v] = cand;
    }
  }
  if (best[b].qubits.empty())
    throw std::runtime_error("no path between qubits " + std::to_string(a) +
                             " and " + std::to_string(b));
  return best[b];
}

// All-pairs table so the allocator's inner loop never re-runs Dijkstra.
class PathTable {
 public:
  explicit PathTable(const DeviceGraph& d) {
    size_ = d.max_qubit_id() + 1;
    paths_.resize(static_cast<std::size_t>(size_) * size_);
    for (int a : d.qubits)
      for (int b : d.qubits)
        paths_[static_cast<std::size_t>(a) * size_ + b] =
            shortest_swap_path(d, a, b);
  }
  const SwapPath& path(int a, int b) const {
    if (a < 0 || b < 0 || a >= size_ || b >= size_ ||
        paths_[static_cast<std::size_t>(a) * size_ + b].qubits.empty())
      throw std::invalid_argument("no path entry for qubits " +
                                  std::to_string(a) + ", " +
                                  std::to_string(b));
    return paths_[static_cast<std::size_t>(a) * size_ + b];
  }

 private:
  int size_ = 0;
  std::vector<SwapPath> paths_;
};

}  // namespace quilcc
