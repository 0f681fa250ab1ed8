#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tsforge {

// Stable 64-bit seed for a (global seed, record key) pair. Independent of
// iteration order, so parallel and serial runs draw identical streams.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key);

// mt19937_64 with distribution code kept in-house: std:: distributions are
// implementation-defined and would make outputs differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t global_seed, std::string_view key) : engine_(derive_seed(global_seed, key)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  // Categorical draw from non-negative weights (need not sum to one).
  std::size_t categorical(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
};

}  // namespace tsforge
