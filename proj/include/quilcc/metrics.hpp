#pragma once
// Statistical verification primitives: readout histograms, squared
// statistical overlap between distributions, and the coefficient of
// determination used to compare predicted block weights against observed
// frequencies. The convergence experiment driver that feeds these lives in
// simulate.hpp.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace quilcc {

struct Histogram {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t trials = 0;

  void add(const std::string& key) {
    ++counts[key];
    ++trials;
  }
  void merge(const Histogram& other) {
    for (const auto& [k, c] : other.counts) counts[k] += c;
    trials += other.trials;
  }
  std::map<std::string, double> probabilities() const {
    if (trials == 0)
      throw std::invalid_argument("histogram holds no trials");
    std::map<std::string, double> out;
    for (const auto& [k, c] : counts)
      out[k] = static_cast<double>(c) / static_cast<double>(trials);
    return out;
  }
};

// Squared statistical overlap (sum over outcomes of sqrt(e_j * m_j),
// squared). 1 for identical distributions, 0 for disjoint support.
inline double sso(const std::map<std::string, double>& e,
                  const std::map<std::string, double>& m) {
  double s = 0.0;
  auto it = e.begin();
  auto jt = m.begin();
  while (it != e.end() && jt != m.end()) {
    if (it->first < jt->first) {
      ++it;
    } else if (jt->first < it->first) {
      ++jt;
    } else {
      s += std::sqrt(it->second * jt->second);
      ++it;
      ++jt;
    }
  }
  // Guard the s ~ 1 + epsilon case from rounding.
  return std::min(s * s, 1.0);
}

inline double sso(const Histogram& e, const Histogram& m) {
  return sso(e.probabilities(), m.probabilities());
}

// R^2 of observed against predicted values (1 - SS_res / SS_tot).
inline double r_squared(const std::vector<double>& predicted,
                        const std::vector<double>& observed) {
  if (predicted.size() != observed.size())
    throw std::invalid_argument("predicted/observed length mismatch");
  if (predicted.size() < 2)
    throw std::invalid_argument("need at least two points for R^2");
  double mean = 0.0;
  for (double o : observed) mean += o;
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot == 0.0)
    throw std::invalid_argument("observed values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

}  // namespace quilcc
