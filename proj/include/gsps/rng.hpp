#pragma once

#include <cstdint>
#include <random>

namespace gsps {

// splitmix64 finalizer; used to derive independent seed streams.
std::uint64_t mix64(std::uint64_t z);

// Deterministic stream derivation (seed, a, b, c) -> seed. Independent tasks
// (realizations, replicates, multistart runs) each get their own stream so
// results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// mt19937_64 plus explicit Box-Muller: the engine is fully specified by the
// standard, so sequences are reproducible across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                         // [0, 1)
  double uniform(double lo, double hi);
  double normal();                          // standard normal
  int uniform_int(int n);                   // {0, ..., n-1}, unbiased

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gsps
