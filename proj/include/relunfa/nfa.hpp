#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

namespace relunfa {

// Reserved marker for the empty-word transition in all file formats. It may
// never appear in an alphabet.
inline constexpr const char* kEpsilonMarker = "eps";

// Automaton tuple (Q, Sigma, delta, q0, F) with epsilon transitions. States
// are indices 0..n-1, symbols are single printable characters.
struct Nfa {
  int n = 0;
  std::vector<char> alphabet;
  std::map<std::pair<int, char>, std::set<int>> transitions;
  std::map<int, std::set<int>> eps_transitions;
  int start = 0;
  std::set<int> accept;

  bool operator==(const Nfa&) const = default;

  bool has_symbol(char symbol) const;
  int epsilon_edge_count() const;

  // Throws ParseError naming the offending field when an invariant is broken.
  void validate() const;

  // Drops empty target sets so structurally equal automata compare equal.
  void normalize();
};

// Set-based reference implementations. These are the ground truth the matrix
// runtime is checked against and must stay independent of it.

// Smallest superset of `states` closed under epsilon transitions, computed by
// worklist traversal.
std::set<int> epsilon_closure_oracle(const Nfa& nfa, const std::set<int>& states);

// Union of delta(q, symbol) over the active set. Does not apply the epsilon
// closure. Throws std::invalid_argument for symbols outside the alphabet.
std::set<int> step_oracle(const Nfa& nfa, const std::set<int>& active, char symbol);

// Closure/step/closure simulation; accepts iff the final active set meets F.
// The empty string is accepted iff closure({start}) meets F.
bool accepts_oracle(const Nfa& nfa, std::string_view input);

struct RandomNfaConfig {
  int n = 6;
  std::vector<char> alphabet = {'a', 'b'};
  double eps_probability = 0.3;
  int max_out_degree = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

// Every (state, symbol) pair receives between 1 and max_out_degree targets,
// epsilon edges are inserted per ordered state pair (no self-loops) with the
// configured probability, start is state 0, and exactly one uniformly chosen
// state accepts. Identical seeds yield identical automata.
Nfa generate_random_nfa(const RandomNfaConfig& config);

}  // namespace relunfa
