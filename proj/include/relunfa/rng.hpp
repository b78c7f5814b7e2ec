#pragma once

#include <cstdint>
#include <random>

namespace relunfa {

// All randomness in the project flows through this wrapper. mt19937_64 has a
// standardized sequence, and the bounded draws below avoid the
// implementation-defined std::uniform_*_distribution, so equal seeds produce
// identical results on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Unbiased draw from [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Inclusive range [lo, hi].
  int uniform_int(int lo, int hi);

  // [0, 1) with 53-bit resolution.
  double uniform_real();

  bool bernoulli(double p) { return uniform_real() < p; }

 private:
  std::mt19937_64 engine_;
};

// Child seed for a named stream, so one user-facing seed can drive several
// independent generators (automaton, strings, dataset, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace relunfa
