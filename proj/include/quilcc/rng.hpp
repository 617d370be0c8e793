#pragma once
// Deterministic randomness helpers. All stochastic components derive their
// streams from a single master seed so reruns are bit-identical.

#include <cstdint>
#include <random>
#include <vector>

namespace quilcc {

// Finalizer from the splitmix64 generator; good avalanche, cheap.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream i of a master seed. Used for simulation trials, annealing restarts
// and repeated experiments so each is independent but reproducible.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) {
  return seed ^ splitmix64(i);
}

// mt19937_64 plus hand-rolled distributions. The standard distributions are
// implementation-defined, which would break cross-toolchain determinism.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection-free modulo is fine here: n is tiny
  // compared to 2^64, so the bias is far below anything observable.
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace quilcc
