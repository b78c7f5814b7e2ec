#include "relunfa/equivalence.hpp"

#include <functional>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "relunfa/rng.hpp"
#include "relunfa/strings.hpp"

namespace relunfa {

namespace {

using json = nlohmann::ordered_json;

void require_same_alphabet(const Nfa& nfa, const std::vector<char>& other) {
  const std::set<char> a(nfa.alphabet.begin(), nfa.alphabet.end());
  const std::set<char> b(other.begin(), other.end());
  if (a != b) throw std::invalid_argument("check_equivalence: alphabets differ");
}

EquivalenceReport check_impl(const Nfa& nfa,
                             const std::function<bool(std::string_view)>& net_accepts,
                             const EquivalenceMode& mode, std::uint64_t seed) {
  EquivalenceReport report;
  std::vector<std::string> inputs;
  if (const auto* exhaustive = std::get_if<ExhaustiveMode>(&mode)) {
    inputs = enumerate_strings(nfa.alphabet, exhaustive->max_len);
    report.mode = "exhaustive-up-to-" + std::to_string(exhaustive->max_len);
  } else {
    const auto& sampled = std::get<SampledMode>(mode);
    Rng rng(seed);
    inputs.reserve(sampled.count);
    for (int i = 0; i < sampled.count; ++i) {
      inputs.push_back(random_string(rng, nfa.alphabet, sampled.min_len, sampled.max_len));
    }
    report.mode = "sampled-" + std::to_string(sampled.count);
  }
  report.total = static_cast<int>(inputs.size());
  for (const std::string& input : inputs) {
    const bool nfa_verdict = accepts_oracle(nfa, input);
    const bool net_verdict = net_accepts(input);
    if (nfa_verdict != net_verdict) report.mismatches.push_back({input, nfa_verdict, net_verdict});
  }
  report.agreement =
      report.total == 0
          ? 1.0
          : 1.0 - static_cast<double>(report.mismatches.size()) / static_cast<double>(report.total);
  return report;
}

}  // namespace

EquivalenceReport check_equivalence(const Nfa& nfa, const ReluAcceptor& acceptor,
                                    const EquivalenceMode& mode, std::uint64_t seed) {
  require_same_alphabet(nfa, acceptor.alphabet);
  return check_impl(
      nfa, [&](std::string_view input) { return accepts_net(acceptor, input); }, mode, seed);
}

EquivalenceReport check_equivalence(const Nfa& nfa, const MaskedModel& model,
                                    const EquivalenceMode& mode, std::uint64_t seed) {
  require_same_alphabet(nfa, model.alphabet);
  return check_impl(
      nfa, [&](std::string_view input) { return predict_accepts(model, input); }, mode, seed);
}

namespace {

Nfa extract_impl(int n, const std::vector<char>& alphabet,
                 const std::map<char, TransitionMatrix>& matrices, const TransitionMatrix& eps,
                 int start, const std::vector<double>& accept_vector, double threshold) {
  if (threshold <= 0.0) throw std::invalid_argument("extract_nfa: threshold must be positive");
  Nfa nfa;
  nfa.n = n;
  nfa.alphabet = alphabet;
  for (char c : alphabet) {
    const TransitionMatrix& m = matrices.at(c);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (m.at(j, i) > threshold) nfa.transitions[{i, c}].insert(j);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (eps.at(j, i) > threshold) nfa.eps_transitions[i].insert(j);
    }
  }
  nfa.start = start;
  for (int j = 0; j < n; ++j) {
    if (accept_vector[j] > 0.5) nfa.accept.insert(j);
  }
  nfa.validate();
  return nfa;
}

}  // namespace

Nfa extract_nfa(const ReluAcceptor& acceptor, double threshold) {
  return extract_impl(acceptor.n, acceptor.alphabet, acceptor.per_symbol, acceptor.eps_matrix,
                      acceptor.start_index(), acceptor.accept_vector, threshold);
}

Nfa extract_nfa(const MaskedModel& model, double threshold) {
  return extract_impl(model.n, model.alphabet, model.weights, model.eps_weights, model.start,
                      model.accept_vector, threshold);
}

bool round_trip_check(const Nfa& nfa, int max_len) {
  const Nfa extracted = extract_nfa(compile(nfa));
  for (const std::string& input : enumerate_strings(nfa.alphabet, max_len)) {
    if (accepts_oracle(nfa, input) != accepts_oracle(extracted, input)) return false;
  }
  return true;
}

std::string serialize_equivalence_report(const EquivalenceReport& report) {
  json doc;
  doc["mode"] = report.mode;
  doc["total"] = report.total;
  doc["agreement"] = report.agreement;
  json mismatches = json::array();
  for (const Mismatch& m : report.mismatches) {
    mismatches.push_back(json{{"input", m.input},
                              {"nfa", m.nfa_verdict ? "ACCEPT" : "REJECT"},
                              {"net", m.net_verdict ? "ACCEPT" : "REJECT"}});
  }
  doc["mismatches"] = std::move(mismatches);
  return doc.dump(2) + "\n";
}

}  // namespace relunfa
