#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "bouncy/types.hpp"

namespace bouncy {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hashes a base seed with a counter tuple. Streams keyed by distinct
/// tuples are statistically independent and reproducible.
inline std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : engine_(stream_seed(seed, keys)) {}

  double normal() { return normal_(engine_); }
  double exponential() { return exponential_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool coin() { return uniform() < 0.5; }

  Vec normal_vector(Index d) {
    Vec out(d);
    for (Index i = 0; i < d; ++i) out[i] = normal();
    return out;
  }

  std::uint64_t next_u64() { return engine_(); }
  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace bouncy
