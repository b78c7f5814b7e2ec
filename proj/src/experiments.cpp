#include "relunfa/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "relunfa/equivalence.hpp"
#include "relunfa/rng.hpp"
#include "relunfa/strings.hpp"
#include "relunfa/training.hpp"

namespace relunfa::experiments {

namespace {

using json = nlohmann::ordered_json;

// Independent sub-streams per user-facing seed, so the automaton, test
// strings, dataset, and model jitter are regenerated independently.
constexpr std::uint64_t kNfaStream = 1;
constexpr std::uint64_t kStringStream = 2;
constexpr std::uint64_t kDatasetStream = 3;
constexpr std::uint64_t kModelStream = 4;

constexpr int kTrainSize = 200;
constexpr int kTrainEpochs = 5;

Nfa seeded_nfa(const ExperimentConfig& config, std::uint64_t seed, double eps_probability) {
  RandomNfaConfig nfa_config = config.configuration.nfa;
  nfa_config.eps_probability = eps_probability;
  nfa_config.seed = derive_seed(seed, kNfaStream);
  return generate_random_nfa(nfa_config);
}

}  // namespace

Configuration six_state_config() {
  Configuration c;
  c.name = "six";
  c.nfa.n = 6;
  c.nfa.alphabet = {'a', 'b'};
  c.nfa.eps_probability = 0.3;
  c.nfa.max_out_degree = 2;
  c.min_len = 1;
  c.max_len = 10;
  return c;
}

Configuration ten_state_config() {
  Configuration c;
  c.name = "ten";
  c.nfa.n = 10;
  c.nfa.alphabet = {'a', 'b', 'c', 'd'};
  c.nfa.eps_probability = 0.3;
  c.nfa.max_out_degree = 2;
  c.min_len = 1;
  c.max_len = 15;
  return c;
}

Configuration config_by_name(std::string_view name) {
  if (name == "six") return six_state_config();
  if (name == "ten") return ten_state_config();
  throw std::invalid_argument("unknown configuration \"" + std::string(name) +
                              "\" (expected \"six\" or \"ten\")");
}

void ExperimentConfig::validate() const {
  bool known = false;
  for (const char* name : kExperimentNames) {
    if (experiment == name) known = true;
  }
  if (!known) throw std::invalid_argument("unknown experiment \"" + experiment + "\"");
  if (seeds.empty()) throw std::invalid_argument("experiment: seeds must be nonempty");
  if (samples_per_seed < 1) throw std::invalid_argument("experiment: samples_per_seed must be >= 1");
}

std::vector<std::uint64_t> default_seeds(int count) {
  if (count < 1) throw std::invalid_argument("default_seeds: count must be >= 1");
  std::vector<std::uint64_t> seeds;
  seeds.reserve(count);
  for (int i = 0; i < count; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  return seeds;
}

std::optional<PublishedStats> published_stats(std::string_view experiment, std::string_view config_name) {
  const bool six = config_name == "six";
  const bool ten = config_name == "ten";
  if (!six && !ten) return std::nullopt;
  if (experiment == "acceptance_accuracy") {
    return six ? PublishedStats{0.9960, 0.0089, 0.9849, 1.0071}
               : PublishedStats{0.9540, 0.0451, 0.8981, 1.0099};
  }
  if (experiment == "symbolic_equivalence") {
    return six ? PublishedStats{0.9920, 0.0179, 0.9698, 1.0142}
               : PublishedStats{0.9580, 0.0460, 0.9008, 1.0152};
  }
  for (const char* name : kExperimentNames) {
    if (experiment == name) return PublishedStats{1.0, 0.0, 1.0, 1.0};
  }
  return std::nullopt;
}

bool trace_matches_single_layer(const Nfa& nfa, const ReluAcceptor& acceptor,
                                std::string_view input) {
  StateVector s = acceptor.start_vector;
  std::set<int> active = {nfa.start};
  if (support(s) != active) return false;
  for (char c : input) {
    s = binarize(relu_step(acceptor.matrix_for(c), s));
    active = step_oracle(nfa, active, c);
    if (support(s) != active) return false;
  }
  return true;
}

bool trace_matches_stacked(const Nfa& nfa, const ReluAcceptor& acceptor, std::string_view input) {
  const std::vector<StateVector> trace = run_subset_construction(acceptor, input);
  std::set<int> active = {nfa.start};
  if (support(trace[0]) != active) return false;
  for (std::size_t t = 0; t < input.size(); ++t) {
    active = step_oracle(nfa, active, input[t]);
    if (support(trace[t + 1]) != active) return false;
  }
  return true;
}

ExperimentOutcome run_path_enumeration(const ExperimentConfig& config) {
  config.validate();
  ExperimentOutcome outcome;
  outcome.config = config;
  std::vector<double> scores;
  for (std::uint64_t seed : config.seeds) {
    const Nfa nfa = seeded_nfa(config, seed, 0.0);  // epsilon disabled
    const ReluAcceptor acceptor = compile(nfa);
    Rng rng(derive_seed(seed, kStringStream));
    int matches = 0;
    for (int k = 0; k < config.samples_per_seed; ++k) {
      const std::string input = random_string(rng, nfa.alphabet, config.configuration.min_len,
                                              config.configuration.max_len);
      if (trace_matches_single_layer(nfa, acceptor, input)) {
        ++matches;
      } else {
        outcome.witnesses.push_back(input);
      }
    }
    scores.push_back(static_cast<double>(matches) / config.samples_per_seed);
  }
  outcome.stats = summarize(scores);
  return outcome;
}

ExperimentOutcome run_subset_construction(const ExperimentConfig& config) {
  config.validate();
  ExperimentOutcome outcome;
  outcome.config = config;
  std::vector<double> scores;
  for (std::uint64_t seed : config.seeds) {
    const Nfa nfa = seeded_nfa(config, seed, 0.0);  // epsilon disabled
    const ReluAcceptor acceptor = compile(nfa);
    Rng rng(derive_seed(seed, kStringStream));
    int matches = 0;
    for (int k = 0; k < config.samples_per_seed; ++k) {
      const std::string input = random_string(rng, nfa.alphabet, config.configuration.min_len,
                                              config.configuration.max_len);
      if (trace_matches_stacked(nfa, acceptor, input)) {
        ++matches;
      } else {
        outcome.witnesses.push_back(input);
      }
    }
    scores.push_back(static_cast<double>(matches) / config.samples_per_seed);
  }
  outcome.stats = summarize(scores);
  return outcome;
}

ExperimentOutcome run_epsilon_closure(const ExperimentConfig& config) {
  config.validate();
  ExperimentOutcome outcome;
  outcome.config = config;
  std::vector<double> scores;
  for (std::uint64_t seed : config.seeds) {
    const Nfa nfa = seeded_nfa(config, seed, config.configuration.nfa.eps_probability);
    const ReluAcceptor acceptor = compile(nfa);
    Rng rng(derive_seed(seed, kStringStream));
    int matches = 0;
    for (int k = 0; k < config.samples_per_seed; ++k) {
      const int state = rng.uniform_int(0, nfa.n - 1);
      const ClosureResult result =
          epsilon_closure_net(acceptor.eps_matrix, one_hot(nfa.n, state), acceptor.closure_iterations);
      outcome.max_closure_iterations =
          std::max(outcome.max_closure_iterations, result.iterations_used);
      if (support(result.vec) == epsilon_closure_oracle(nfa, {state})) {
        ++matches;
      } else {
        outcome.witnesses.push_back("start state " + std::to_string(state));
      }
    }
    scores.push_back(static_cast<double>(matches) / config.samples_per_seed);
  }
  outcome.stats = summarize(scores);
  outcome.notes.push_back("max closure iterations " +
                          std::to_string(outcome.max_closure_iterations) + " (bound " +
                          std::to_string(config.configuration.nfa.n) + ")");
  return outcome;
}

ExperimentOutcome run_acceptance_accuracy(const ExperimentConfig& config) {
  config.validate();
  ExperimentOutcome outcome;
  outcome.config = config;
  std::vector<double> scores;
  for (std::uint64_t seed : config.seeds) {
    const Nfa nfa = seeded_nfa(config, seed, config.configuration.nfa.eps_probability);
    const ReluAcceptor acceptor = compile(nfa);
    Rng rng(derive_seed(seed, kStringStream));
    int agree = 0;
    for (int k = 0; k < config.samples_per_seed; ++k) {
      const std::string input = random_string(rng, nfa.alphabet, config.configuration.min_len,
                                              config.configuration.max_len);
      if (accepts_net(acceptor, input) == accepts_oracle(nfa, input)) {
        ++agree;
      } else {
        outcome.witnesses.push_back(input);
      }
    }
    scores.push_back(static_cast<double>(agree) / config.samples_per_seed);
  }
  outcome.stats = summarize(scores);
  return outcome;
}

ExperimentOutcome run_weight_sparsity(const ExperimentConfig& config) {
  config.validate();
  ExperimentOutcome outcome;
  outcome.config = config;
  std::vector<double> scores;
  for (std::uint64_t seed : config.seeds) {
    const Nfa nfa = seeded_nfa(config, seed, config.configuration.nfa.eps_probability);
    const ReluAcceptor acceptor = compile(nfa);
    const LabeledDataset dataset =
        generate_dataset(nfa, kTrainSize, config.configuration.min_len,
                         config.configuration.max_len, derive_seed(seed, kDatasetStream));
    MaskedModel model = make_masked_model(acceptor);
    TrainConfig train_config;
    train_config.epochs = kTrainEpochs;
    train_config.seed = derive_seed(seed, kModelStream);
    const TrainReport report = train(model, dataset, train_config);
    const int violations = audit_sparsity(model, acceptor);
    if (violations != 0) {
      outcome.notes.push_back("seed " + std::to_string(seed) + ": " +
                              std::to_string(violations) + " violations");
    }
    if (report.diverged) outcome.notes.push_back("seed " + std::to_string(seed) + ": diverged");
    scores.push_back(violations == 0 ? 1.0 : 0.0);
  }
  outcome.stats = summarize(scores);
  return outcome;
}

ExperimentOutcome run_symbolic_equivalence(const ExperimentConfig& config) {
  config.validate();
  ExperimentOutcome outcome;
  outcome.config = config;
  std::vector<double> scores;
  for (std::uint64_t seed : config.seeds) {
    const Nfa nfa = seeded_nfa(config, seed, config.configuration.nfa.eps_probability);
    const ReluAcceptor acceptor = compile(nfa);
    const SampledMode mode{config.samples_per_seed, config.configuration.min_len,
                           config.configuration.max_len};
    const EquivalenceReport report =
        check_equivalence(nfa, acceptor, mode, derive_seed(seed, kStringStream));
    for (const Mismatch& m : report.mismatches) outcome.witnesses.push_back(m.input);
    scores.push_back(report.agreement);
  }
  outcome.stats = summarize(scores);
  return outcome;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "path_enumeration") return run_path_enumeration(config);
  if (config.experiment == "subset_construction") return run_subset_construction(config);
  if (config.experiment == "epsilon_closure") return run_epsilon_closure(config);
  if (config.experiment == "acceptance_accuracy") return run_acceptance_accuracy(config);
  if (config.experiment == "weight_sparsity") return run_weight_sparsity(config);
  if (config.experiment == "symbolic_equivalence") return run_symbolic_equivalence(config);
  throw std::invalid_argument("unknown experiment \"" + config.experiment + "\"");
}

std::string serialize_outcome(const ExperimentOutcome& outcome) {
  json doc;
  doc["experiment"] = outcome.config.experiment;
  doc["config"] = outcome.config.configuration.name;
  json nfa;
  nfa["states"] = outcome.config.configuration.nfa.n;
  std::string alphabet;
  for (char c : outcome.config.configuration.nfa.alphabet) alphabet += c;
  nfa["alphabet"] = alphabet;
  nfa["eps_probability"] = outcome.config.configuration.nfa.eps_probability;
  nfa["max_out_degree"] = outcome.config.configuration.nfa.max_out_degree;
  doc["nfa_config"] = std::move(nfa);
  doc["min_len"] = outcome.config.configuration.min_len;
  doc["max_len"] = outcome.config.configuration.max_len;
  doc["samples_per_seed"] = outcome.config.samples_per_seed;
  doc["seeds"] = outcome.config.seeds;
  doc["scores"] = outcome.stats.per_seed;
  doc["mean"] = outcome.stats.mean;
  doc["std"] = outcome.stats.std_dev;
  if (outcome.stats.ci95.has_value()) {
    doc["ci95"] = json::array({outcome.stats.ci95->first, outcome.stats.ci95->second});
  } else {
    doc["ci95"] = nullptr;
  }
  doc["degenerate"] = outcome.stats.degenerate;
  if (const auto published = published_stats(outcome.config.experiment, outcome.config.configuration.name)) {
    doc["published"] = json{{"mean", published->mean},
                        {"std", published->std_dev},
                        {"ci95", json::array({published->ci_low, published->ci_high})}};
  } else {
    doc["published"] = nullptr;
  }
  doc["witnesses"] = outcome.witnesses;
  doc["notes"] = outcome.notes;
  if (outcome.config.experiment == "epsilon_closure") {
    doc["max_closure_iterations"] = outcome.max_closure_iterations;
  }
  return doc.dump(2) + "\n";
}

std::string csv_header() { return "experiment,config,seed,score\n"; }

void append_csv(std::string& csv, const ExperimentOutcome& outcome) {
  for (std::size_t i = 0; i < outcome.config.seeds.size(); ++i) {
    char row[160];
    std::snprintf(row, sizeof(row), "%s,%s,%llu,%.6f\n", outcome.config.experiment.c_str(),
                  outcome.config.configuration.name.c_str(),
                  static_cast<unsigned long long>(outcome.config.seeds[i]),
                  outcome.stats.per_seed[i]);
    csv += row;
  }
}

std::string format_table(const std::vector<ExperimentOutcome>& outcomes) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "experiment" << std::setw(8) << "config" << std::setw(9)
      << "mean" << std::setw(9) << "std" << std::setw(20) << "ci95" << std::setw(12)
      << "published_mean" << '\n';
  out << std::string(80, '-') << '\n';
  out << std::fixed << std::setprecision(4);
  for (const ExperimentOutcome& o : outcomes) {
    out << std::left << std::setw(22) << o.config.experiment << std::setw(8)
        << o.config.configuration.name << std::setw(9) << o.stats.mean << std::setw(9)
        << o.stats.std_dev;
    std::ostringstream ci;
    if (o.stats.ci95.has_value()) {
      ci << std::fixed << std::setprecision(4) << "[" << o.stats.ci95->first << ", "
         << o.stats.ci95->second << "]";
    } else {
      ci << "n/a (1 seed)";
    }
    out << std::setw(20) << ci.str();
    const auto published = published_stats(o.config.experiment, o.config.configuration.name);
    if (published.has_value()) {
      out << std::setw(12) << published->mean;
    } else {
      out << std::setw(12) << "n/a";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace relunfa::experiments
