#include <stdexcept>

#include "relunfa/nfa.hpp"
#include "relunfa/rng.hpp"

namespace relunfa {

void RandomNfaConfig::validate() const {
  if (n < 1) throw std::invalid_argument("RandomNfaConfig: n must be at least 1");
  if (alphabet.empty()) throw std::invalid_argument("RandomNfaConfig: alphabet must be nonempty");
  if (eps_probability < 0.0 || eps_probability > 1.0) {
    throw std::invalid_argument("RandomNfaConfig: eps_probability must lie in [0,1]");
  }
  if (max_out_degree < 1) {
    throw std::invalid_argument("RandomNfaConfig: max_out_degree must be at least 1");
  }
}

Nfa generate_random_nfa(const RandomNfaConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Nfa nfa;
  nfa.n = config.n;
  nfa.alphabet = config.alphabet;
  for (int q = 0; q < config.n; ++q) {
    for (char symbol : config.alphabet) {
      const int degree = rng.uniform_int(1, config.max_out_degree);
      auto& targets = nfa.transitions[{q, symbol}];
      for (int k = 0; k < degree; ++k) {
        targets.insert(rng.uniform_int(0, config.n - 1));
      }
    }
  }
  // Epsilon edges per ordered pair; self-loops are pointless and skipped.
  for (int i = 0; i < config.n; ++i) {
    for (int j = 0; j < config.n; ++j) {
      if (i == j) continue;
      if (rng.bernoulli(config.eps_probability)) nfa.eps_transitions[i].insert(j);
    }
  }
  nfa.start = 0;
  nfa.accept = {rng.uniform_int(0, config.n - 1)};
  nfa.validate();
  return nfa;
}

}  // namespace relunfa
