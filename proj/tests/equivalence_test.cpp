#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "relunfa/equivalence.hpp"
#include "relunfa/nfa_json.hpp"
#include "relunfa/regex.hpp"
#include "relunfa/rng.hpp"
#include "relunfa/training.hpp"
#include "test_util.hpp"

using namespace relunfa;

namespace {

Nfa bench_nfa(std::uint64_t seed) {
  RandomNfaConfig config;
  config.seed = seed;
  return generate_random_nfa(config);
}

}  // namespace

TEST_CASE("exhaustive equivalence of compiled acceptors") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Nfa nfa = bench_nfa(seed);
    const EquivalenceReport report =
        check_equivalence(nfa, compile(nfa), ExhaustiveMode{8});
    CHECK(report.total == 511);
    CHECK(report.agreement == 1.0);
    CHECK(report.mismatches.empty());
    CHECK(report.mode == "exhaustive-up-to-8");
  }
}

TEST_CASE("mismatched pairs are detected with witnesses") {
  const std::vector<char> shared = {'a', 'b'};
  const Nfa a_star = testutil::widen_alphabet(regex_to_nfa("a*"), shared);
  const Nfa b_star = testutil::widen_alphabet(regex_to_nfa("b*"), shared);
  const EquivalenceReport report = check_equivalence(a_star, compile(b_star), ExhaustiveMode{3});
  CHECK(report.agreement < 1.0);
  CHECK_FALSE(report.mismatches.empty());
  bool found_a = false;
  for (const Mismatch& m : report.mismatches) {
    if (m.input == "a") {
      found_a = true;
      CHECK(m.nfa_verdict);
      CHECK_FALSE(m.net_verdict);
    }
  }
  CHECK(found_a);
}

TEST_CASE("sampled equivalence is deterministic under the seed") {
  const Nfa nfa = bench_nfa(1);
  const ReluAcceptor acc = compile(nfa);
  const SampledMode mode{100, 1, 10};
  const EquivalenceReport first = check_equivalence(nfa, acc, mode, 5);
  const EquivalenceReport second = check_equivalence(nfa, acc, mode, 5);
  CHECK(first.total == 100);
  CHECK(first.mode == "sampled-100");
  CHECK(serialize_equivalence_report(first) == serialize_equivalence_report(second));
  CHECK(first.agreement == 1.0);
}

TEST_CASE("check_equivalence requires a shared alphabet") {
  const Nfa nfa = regex_to_nfa("a*");
  const ReluAcceptor acc = compile(regex_to_nfa("b*"));
  CHECK_THROWS_AS(check_equivalence(nfa, acc, ExhaustiveMode{3}), std::invalid_argument);
}

TEST_CASE("extraction inverts compilation exactly for symbolic weights") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Nfa nfa = bench_nfa(seed);
    CHECK(extract_nfa(compile(nfa)) == nfa);
  }
  RandomNfaConfig ten;
  ten.n = 10;
  ten.alphabet = {'a', 'b', 'c', 'd'};
  ten.seed = 3;
  const Nfa nfa = generate_random_nfa(ten);
  CHECK(extract_nfa(compile(nfa)) == nfa);
}

TEST_CASE("extraction from a trained model never adds edges") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Nfa nfa = bench_nfa(seed);
    MaskedModel model = make_masked_model(compile(nfa));
    const LabeledDataset data = generate_dataset(nfa, 120, 1, 10, derive_seed(seed, 91));
    TrainConfig config;
    config.init_jitter = 0.1;
    config.seed = derive_seed(seed, 92);
    train(model, data, config);
    const Nfa extracted = extract_nfa(model);
    for (const auto& [key, targets] : extracted.transitions) {
      const auto it = nfa.transitions.find(key);
      REQUIRE(it != nfa.transitions.end());
      CHECK(std::includes(it->second.begin(), it->second.end(), targets.begin(), targets.end()));
    }
    for (const auto& [from, targets] : extracted.eps_transitions) {
      const auto it = nfa.eps_transitions.find(from);
      REQUIRE(it != nfa.eps_transitions.end());
      CHECK(std::includes(it->second.begin(), it->second.end(), targets.begin(), targets.end()));
    }
  }
}

TEST_CASE("an all-zero weight matrix extracts to no transitions for that symbol") {
  const Nfa nfa = bench_nfa(2);
  ReluAcceptor acc = compile(nfa);
  for (double& v : acc.per_symbol.at('a').entries) v = 0.0;
  const Nfa extracted = extract_nfa(acc);
  for (const auto& [key, targets] : extracted.transitions) CHECK(key.second != 'a');
}

TEST_CASE("extraction is monotone in the threshold") {
  const Nfa nfa = bench_nfa(3);
  MaskedModel model = make_masked_model(compile(nfa));
  apply_init_jitter(model, 0.5, 17);
  std::size_t previous_edges = SIZE_MAX;
  for (double tau : {1e-3, 0.5, 1.0, 1.2}) {
    const Nfa extracted = extract_nfa(model, tau);
    std::size_t edges = 0;
    for (const auto& [key, targets] : extracted.transitions) edges += targets.size();
    for (const auto& [from, targets] : extracted.eps_transitions) edges += targets.size();
    CHECK(edges <= previous_edges);
    previous_edges = edges;
  }
}

TEST_CASE("round_trip_check on random automata and regexes") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(round_trip_check(bench_nfa(seed), 6));
  }
  CHECK(round_trip_check(regex_to_nfa("(a|b)*a"), 8));
}

TEST_CASE("round_trip_check ignores unreachable states") {
  const char* spec = R"({"states": 3, "alphabet": ["a"],
    "transitions": [{"from": 0, "symbol": "a", "to": [1]},
                    {"from": 2, "symbol": "a", "to": [2]}],
    "start": 0, "accept": [1]})";
  CHECK(round_trip_check(parse_nfa_spec(spec), 6));
}

TEST_CASE("equivalence report serialization carries witnesses verbatim") {
  EquivalenceReport report;
  report.mode = "exhaustive-up-to-2";
  report.total = 3;
  report.mismatches = {{"ab", true, false}};
  report.agreement = 1.0 - 1.0 / 3.0;
  const std::string text = serialize_equivalence_report(report);
  CHECK(text.find("\"ab\"") != std::string::npos);
  CHECK(text.find("ACCEPT") != std::string::npos);
  CHECK(text.find("REJECT") != std::string::npos);
}
