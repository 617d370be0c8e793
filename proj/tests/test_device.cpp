// Device graph loading and validation, and shortest swap paths against a
// brute-force simple-path search.

#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "helpers.hpp"
#include "quilcc/device.hpp"

using namespace quilcc;
using nlohmann::json;

namespace {

json minimal_device_json() {
  return json{{"qubits", {0, 1}},
              {"edges", {{{"pair", {0, 1}}, {"fidelity", 1.0}}}}};
}

}  // namespace

TEST(Device, LoadsBundledAspen16) {
  auto d = load_device(testutil::repo_path("devices/aspen-16.json"));
  EXPECT_EQ(d.qubits.size(), 16u);
  EXPECT_TRUE(d.has_qubit(1));
  EXPECT_TRUE(d.has_qubit(16));
  EXPECT_FALSE(d.has_qubit(0));
  // The two forbidden couplers are absent; their ring neighbours exist.
  EXPECT_FALSE(d.has_edge(1, 16));
  EXPECT_FALSE(d.has_edge(4, 5));
  EXPECT_TRUE(d.has_edge(1, 2));
  EXPECT_TRUE(d.has_edge(9, 16));
}

TEST(Device, MinimalTwoQubitDevice) {
  auto d = device_from_json(minimal_device_json(), "mini");
  EXPECT_EQ(d.qubits.size(), 2u);
  EXPECT_NEAR(d.edge_fidelity(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(d.edge_fidelity(1, 0), 1.0, 1e-12);
  EXPECT_NEAR(d.single_fidelity(0), 1.0, 1e-12);  // defaults
  EXPECT_NEAR(d.readout(1), 1.0, 1e-12);
}

TEST(Device, RejectsBadInputs) {
  auto base = minimal_device_json();

  auto j = base;
  j["edges"][0]["fidelity"] = 0.0;
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["edges"][0]["fidelity"] = 1.5;
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["qubits"] = {0, 1, 2};  // qubit 2 disconnected
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["edges"].push_back({{"pair", {1, 0}}, {"fidelity", 0.9}});  // duplicate
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["edges"][0]["pair"] = {1, 1};  // self loop
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["edges"][0]["pair"] = {0, 7};  // endpoint not a device qubit
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["qubits"] = {0, 0, 1};  // duplicate qubit id
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["single_qubit_fidelity"] = {{"9", 0.99}};  // key is not a device qubit
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);

  j = base;
  j["readout_fidelity"] = {{"0", 0.0}};  // out of (0, 1]
  EXPECT_THROW(device_from_json(j, "d"), std::runtime_error);
}

TEST(Device, MissingFileErrorNamesThePath) {
  try {
    load_device("/no/such/device.json");
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/no/such/device.json"),
              std::string::npos);
  }
}

TEST(Device, MalformedJsonErrorNamesThePath) {
  std::string path = "/tmp/quilcc_bad_device.json";
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  try {
    load_device(path);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }
}

TEST(Device, AdjacentPathIsDirect) {
  auto d = testutil::line_device(3, 0.98);
  auto p = shortest_swap_path(d, 0, 1);
  EXPECT_EQ(p.qubits, (std::vector<int>{0, 1}));
  EXPECT_NEAR(p.cost, -std::log(0.98), 1e-12);
}

TEST(Device, IdentityPathIsFree) {
  auto d = testutil::line_device(3, 0.98);
  auto p = shortest_swap_path(d, 2, 2);
  EXPECT_EQ(p.qubits, (std::vector<int>{2}));
  EXPECT_EQ(p.cost, 0.0);
}

TEST(Device, UnknownEndpointThrows) {
  auto d = testutil::line_device(3, 0.98);
  EXPECT_THROW(shortest_swap_path(d, 0, 9), std::invalid_argument);
}

TEST(Device, RingRoutesAroundLowFidelityEdge) {
  // 4-ring where the direct hop 0-3 has terrible fidelity: the three-hop
  // detour is cheaper because 3 * (-ln 0.99) << -ln 0.5.
  auto d = testutil::ring_device(4, {0.99, 0.99, 0.99, 0.5});
  auto p = shortest_swap_path(d, 0, 3);
  EXPECT_EQ(p.qubits, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_NEAR(p.cost, 3 * -std::log(0.99), 1e-12);
}

TEST(Device, TieBreaksLexicographically) {
  // Both ways around a uniform 4-ring cost the same; the reported path must
  // be the lexicographically smaller sequence.
  auto d = testutil::ring_device(4, {0.9, 0.9, 0.9, 0.9});
  auto p = shortest_swap_path(d, 0, 2);
  EXPECT_EQ(p.qubits, (std::vector<int>{0, 1, 2}));
}

TEST(Device, DijkstraMatchesBruteForce) {
  quilcc::Rng rng(424242);
  for (int i = 0; i < 60; ++i) {
    int n = 2 + static_cast<int>(rng.below(7));  // up to 8 qubits
    auto d = testutil::random_device(rng, n, 3);
    for (int a : d.qubits) {
      for (int b : d.qubits) {
        auto got = shortest_swap_path(d, a, b);
        // Brute force over every simple path.
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> best_path;
        std::vector<int> path{a};
        std::set<int> on{a};
        auto dfs = [&](auto&& self, int cur, double cost) -> void {
          if (cur == b) {
            if (cost < best - 1e-12 ||
                (cost < best + 1e-12 && path < best_path)) {
              best = cost;
              best_path = path;
            }
            return;
          }
          for (auto [nb, f] : d.neighbors(cur)) {
            if (on.count(nb)) continue;
            on.insert(nb);
            path.push_back(nb);
            self(self, nb, cost - std::log(f));
            path.pop_back();
            on.erase(nb);
          }
        };
        dfs(dfs, a, 0.0);
        ASSERT_FALSE(best_path.empty()) << "device not connected";
        EXPECT_NEAR(got.cost, best, 1e-9) << "pair " << a << "," << b;
        EXPECT_EQ(got.qubits, best_path) << "pair " << a << "," << b;
      }
    }
  }
}

TEST(Device, PathCostIsSymmetric) {
  quilcc::Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    auto d = testutil::random_device(rng, 6, 3);
    for (int a : d.qubits)
      for (int b : d.qubits)
        EXPECT_NEAR(shortest_swap_path(d, a, b).cost,
                    shortest_swap_path(d, b, a).cost, 1e-12);
  }
}

TEST(Device, PathTableMatchesSingleQueries) {
  quilcc::Rng rng(99);
  auto d = testutil::random_device(rng, 7, 4);
  PathTable table(d);
  for (int a : d.qubits)
    for (int b : d.qubits) {
      const auto& t = table.path(a, b);
      auto s = shortest_swap_path(d, a, b);
      EXPECT_EQ(t.qubits, s.qubits);
      EXPECT_NEAR(t.cost, s.cost, 1e-12);
    }
}

TEST(Device, NeighborsSortedAndEdgeQueriesNormalize) {
  auto d = testutil::make_device({0, 1, 2}, {{1, 0, 0.9}, {2, 1, 0.8}});
  auto nb = d.neighbors(1);
  ASSERT_EQ(nb.size(), 2u);
  EXPECT_EQ(nb[0].first, 0);
  EXPECT_EQ(nb[1].first, 2);
  EXPECT_TRUE(d.has_edge(2, 1));
  EXPECT_THROW(d.edge_fidelity(0, 2), std::invalid_argument);
  EXPECT_EQ(d.max_qubit_id(), 2);
}
