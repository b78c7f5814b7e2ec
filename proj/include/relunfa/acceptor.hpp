#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "relunfa/nfa.hpp"

namespace relunfa {

// Entries above this threshold count as active after binarization.
inline constexpr double kActivationThreshold = 1e-6;

// Dense n x n nonnegative matrix, row-major, with row = target state and
// column = source state: entry (j, i) weights the edge q_i -> q_j, so that
// (T s)_j sums over sources.
struct TransitionMatrix {
  int n = 0;
  std::vector<double> entries;
  std::string symbol;  // single character, or "eps"

  static TransitionMatrix zero(int n, std::string symbol);

  double& at(int target, int source) { return entries[static_cast<std::size_t>(target) * n + source]; }
  double at(int target, int source) const {
    return entries[static_cast<std::size_t>(target) * n + source];
  }

  bool operator==(const TransitionMatrix&) const = default;
};

// Length-n nonnegative activation vector. The support (entries above the
// activation threshold) is the semantic content; magnitudes are irrelevant.
using StateVector = std::vector<double>;

StateVector one_hot(int n, int index);
std::set<int> support(const StateVector& s, double threshold = kActivationThreshold);
double dot(const std::vector<double>& a, const std::vector<double>& b);

// Plain matrix-vector product (no activation).
StateVector matvec(const TransitionMatrix& matrix, const StateVector& s);

// The compiled 3-stage network: start closure, per-symbol transition stage
// with interleaved closures, acceptance head.
struct ReluAcceptor {
  int n = 0;
  std::vector<char> alphabet;
  std::map<char, TransitionMatrix> per_symbol;
  TransitionMatrix eps_matrix;
  StateVector start_vector;
  std::vector<double> accept_vector;
  int closure_iterations = 0;

  bool operator==(const ReluAcceptor&) const = default;

  const TransitionMatrix& matrix_for(char symbol) const;
  int start_index() const;
};

// Exact binary encoding of the automaton: per_symbol and eps matrices carry
// the 0/1 pattern of delta, start_vector is one-hot at q0, accept_vector
// indicates F, closure_iterations = n.
ReluAcceptor compile(const Nfa& nfa);

// Elementwise max(0, T s).
StateVector relu_step(const TransitionMatrix& matrix, const StateVector& s);

// 1 where the value exceeds the threshold, else 0. threshold must be > 0.
StateVector binarize(const StateVector& s, double threshold = kActivationThreshold);

struct ClosureResult {
  StateVector vec;
  int iterations_used = 0;
};

// Iterates s <- binarize(s + ReLU(T_eps s)) until fixpoint. The accumulation
// keeps the support nondecreasing; a fixpoint is always reached within n
// iterations, so running out of max_iters signals a bug and throws.
// s must be binary.
ClosureResult epsilon_closure_net(const TransitionMatrix& eps_matrix, const StateVector& s,
                                  int max_iters);

// Trace [s_0, ..., s_T] with s_t = binarize(relu_step(T^{x_t}, s_{t-1})).
// Requires an epsilon-free acceptor (eps_matrix all zero).
std::vector<StateVector> run_subset_construction(const ReluAcceptor& acceptor,
                                                 std::string_view input);

// Full 3-stage run: closure of start, per symbol step + closure (binarized
// between stages), accept iff f . s_T > 0.
bool accepts_net(const ReluAcceptor& acceptor, std::string_view input);

// Canonical document with states, alphabet, dense row-major matrices per
// symbol plus "eps", start index, accept indicator, closure_iterations.
// Round-trips bit-exactly.
std::string serialize_acceptor(const ReluAcceptor& acceptor);
ReluAcceptor parse_acceptor(std::string_view text);

}  // namespace relunfa
