#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace forge {

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive combination of seed words; used to derive independent
// per-scene / per-item streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

std::uint64_t fnv1a64(std::string_view bytes);

// Thin wrapper over mt19937_64. The distribution helpers are written out
// instead of using <random> distributions, whose outputs are not specified
// bit-for-bit across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform in [0, n). n must be > 0.
  std::size_t below(std::size_t n);
  // Uniform in [lo, hi] inclusive.
  int range(int lo, int hi);
  bool bernoulli(double p) { return uniform01() < p; }
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace forge
