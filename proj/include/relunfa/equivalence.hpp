#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "relunfa/acceptor.hpp"
#include "relunfa/nfa.hpp"
#include "relunfa/training.hpp"

namespace relunfa {

struct Mismatch {
  std::string input;
  bool nfa_verdict = false;
  bool net_verdict = false;

  bool operator==(const Mismatch&) const = default;
};

struct EquivalenceReport {
  std::string mode;
  int total = 0;
  std::vector<Mismatch> mismatches;
  double agreement = 1.0;
};

struct ExhaustiveMode {
  int max_len = 8;
};

struct SampledMode {
  int count = 100;
  int min_len = 1;
  int max_len = 10;
};

using EquivalenceMode = std::variant<ExhaustiveMode, SampledMode>;

// Exhaustive mode enumerates every string up to the bound (including the
// empty string); sampled mode draws strings with uniform length then uniform
// symbols. The automaton side always runs accepts_oracle; the network side is
// accepts_net for compiled acceptors and thresholded forward_smooth for
// trained models. Mismatches are data, not errors.
EquivalenceReport check_equivalence(const Nfa& nfa, const ReluAcceptor& acceptor,
                                    const EquivalenceMode& mode, std::uint64_t seed = 0);
EquivalenceReport check_equivalence(const Nfa& nfa, const MaskedModel& model,
                                    const EquivalenceMode& mode, std::uint64_t seed = 0);

// Strict positivity on floats is numerically fragile, so the defaults sit
// well inside the symbolic 0/1 gap and just above trained-weight noise.
inline constexpr double kSymbolicExtractionThreshold = 0.5;
inline constexpr double kTrainedExtractionThreshold = 1e-3;

// Rebuilds an automaton from weights: q_i -x-> q_j iff weight[x](j, i)
// exceeds the threshold, epsilon edges likewise, start from the start vector,
// accepting states where the indicator is 1.
Nfa extract_nfa(const ReluAcceptor& acceptor, double threshold = kSymbolicExtractionThreshold);
Nfa extract_nfa(const MaskedModel& model, double threshold = kTrainedExtractionThreshold);

// compile -> extract -> compare languages exhaustively up to max_len, using
// the set-based oracle on both sides.
bool round_trip_check(const Nfa& nfa, int max_len);

std::string serialize_equivalence_report(const EquivalenceReport& report);

}  // namespace relunfa
