#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relunfa/acceptor.hpp"
#include "relunfa/nfa.hpp"
#include "relunfa/stats.hpp"

namespace relunfa::experiments {

inline constexpr const char* kExperimentNames[] = {
    "path_enumeration",    "subset_construction", "epsilon_closure",
    "acceptance_accuracy", "weight_sparsity",     "symbolic_equivalence"};

// One of the two benchmark automaton settings: six states over {a, b} with
// string lengths 1..10, or ten states over {a, b, c, d} with lengths 1..15.
struct Configuration {
  std::string name;
  RandomNfaConfig nfa;
  int min_len = 1;
  int max_len = 10;
};

Configuration six_state_config();
Configuration ten_state_config();
Configuration config_by_name(std::string_view name);  // "six" or "ten"

struct ExperimentConfig {
  std::string experiment;
  Configuration configuration;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int samples_per_seed = 100;

  void validate() const;
};

std::vector<std::uint64_t> default_seeds(int count);

// Published statistics for the same protocol, kept next to our scores so the
// reports are self-describing.
struct PublishedStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

std::optional<PublishedStats> published_stats(std::string_view experiment, std::string_view config_name);

struct ExperimentOutcome {
  ExperimentConfig config;
  StatSummary stats;
  std::vector<std::string> witnesses;  // mismatching inputs, when applicable
  std::vector<std::string> notes;
  int max_closure_iterations = 0;  // epsilon_closure only
};

// Per-string scoring helpers, exposed so fault-injection controls can run
// them against hand-corrupted acceptors.
bool trace_matches_single_layer(const Nfa& nfa, const ReluAcceptor& acceptor,
                                std::string_view input);
bool trace_matches_stacked(const Nfa& nfa, const ReluAcceptor& acceptor, std::string_view input);

ExperimentOutcome run_path_enumeration(const ExperimentConfig& config);
ExperimentOutcome run_subset_construction(const ExperimentConfig& config);
ExperimentOutcome run_epsilon_closure(const ExperimentConfig& config);
ExperimentOutcome run_acceptance_accuracy(const ExperimentConfig& config);
ExperimentOutcome run_weight_sparsity(const ExperimentConfig& config);
ExperimentOutcome run_symbolic_equivalence(const ExperimentConfig& config);

// Dispatch by config.experiment.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

std::string serialize_outcome(const ExperimentOutcome& outcome);
std::string csv_header();
void append_csv(std::string& csv, const ExperimentOutcome& outcome);
std::string format_table(const std::vector<ExperimentOutcome>& outcomes);

}  // namespace relunfa::experiments
