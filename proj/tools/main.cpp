#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "relunfa/acceptor.hpp"
#include "relunfa/equivalence.hpp"
#include "relunfa/error.hpp"
#include "relunfa/experiments.hpp"
#include "relunfa/nfa_json.hpp"
#include "relunfa/regex.hpp"
#include "relunfa/rng.hpp"
#include "relunfa/training.hpp"

namespace {

using namespace relunfa;

// Exit codes: 0 success, 1 runtime verdict failures, 2 input errors,
// 3 numeric divergence.
constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitInput = 2;
constexpr int kExitDiverged = 3;

constexpr std::uint64_t kDatasetStream = 3;
constexpr std::uint64_t kModelStream = 4;
constexpr std::uint64_t kTestStream = 5;
constexpr std::uint64_t kSampleStream = 6;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write \"" + path + "\"");
  out << content;
}

std::string format_support(const std::set<int>& states) {
  std::string out = "{";
  bool first = true;
  for (int q : states) {
    if (!first) out += ",";
    out += std::to_string(q);
    first = false;
  }
  out += "}";
  return out;
}

struct CompileOptions {
  std::string spec_path;
  std::string regex;
  std::string out_path = "acceptor.json";
};

int cmd_compile(const CompileOptions& opt) {
  Nfa nfa;
  if (!opt.regex.empty() || opt.spec_path.empty()) {
    nfa = regex_to_nfa(opt.regex);
  } else {
    nfa = parse_nfa_spec(read_file(opt.spec_path));
  }
  const ReluAcceptor acceptor = compile(nfa);
  write_file(opt.out_path, serialize_acceptor(acceptor));
  std::cout << "states: " << acceptor.n << "\n"
            << "alphabet size: " << acceptor.alphabet.size() << "\n"
            << "epsilon edges: " << nfa.epsilon_edge_count() << "\n"
            << "wrote " << opt.out_path << "\n";
  return kExitOk;
}

struct RunOptions {
  std::string acceptor_path;
  std::vector<std::string> strings;
  bool trace = false;
};

void print_trace(const ReluAcceptor& acceptor, std::string_view input) {
  StateVector s =
      epsilon_closure_net(acceptor.eps_matrix, acceptor.start_vector, acceptor.closure_iterations)
          .vec;
  std::cout << "  t=0 closure " << format_support(support(s)) << "\n";
  int t = 1;
  for (char c : input) {
    s = binarize(relu_step(acceptor.matrix_for(c), s));
    const std::set<int> after_step = support(s);
    s = epsilon_closure_net(acceptor.eps_matrix, s, acceptor.closure_iterations).vec;
    std::cout << "  t=" << t++ << " '" << c << "' step " << format_support(after_step)
              << " closure " << format_support(support(s)) << "\n";
  }
}

int cmd_run(const RunOptions& opt) {
  const ReluAcceptor acceptor = parse_acceptor(read_file(opt.acceptor_path));
  std::vector<std::string> inputs = opt.strings;
  if (inputs.empty()) {
    std::string line;
    while (std::getline(std::cin, line)) inputs.push_back(line);
  }
  bool any_error = false;
  for (const std::string& input : inputs) {
    try {
      const bool verdict = accepts_net(acceptor, input);
      std::cout << (verdict ? "ACCEPT" : "REJECT") << " " << input << "\n";
      if (opt.trace) print_trace(acceptor, input);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << input << ": " << e.what() << "\n";
      any_error = true;
    }
  }
  return any_error ? kExitVerdict : kExitOk;
}

struct TrainOptions {
  std::string spec_path;
  std::string model_path = "model.json";
  std::string report_path = "train_report.json";
  std::string dataset_path;
  double learning_rate = 0.05;
  int epochs = 5;
  int batch_size = 0;
  int train_size = 200;
  int test_size = 100;
  int min_len = 1;
  int max_len = 10;
  double jitter = 0.0;
  std::uint64_t seed = 0;
  bool unmasked = false;
};

int cmd_train(const TrainOptions& opt) {
  const Nfa nfa = parse_nfa_spec(read_file(opt.spec_path));
  const ReluAcceptor acceptor = compile(nfa);
  LabeledDataset dataset;
  if (!opt.dataset_path.empty()) {
    dataset = parse_dataset(read_file(opt.dataset_path));
  } else {
    dataset = generate_dataset(nfa, opt.train_size, opt.min_len, opt.max_len,
                               derive_seed(opt.seed, kDatasetStream));
  }
  LabeledDataset test;
  if (opt.test_size > 0) {
    test = generate_dataset(nfa, opt.test_size, opt.min_len, opt.max_len,
                            derive_seed(opt.seed, kTestStream));
  }
  MaskedModel model = make_masked_model(acceptor);
  TrainConfig config;
  config.learning_rate = opt.learning_rate;
  config.epochs = opt.epochs;
  config.batch_size = opt.batch_size;
  config.seed = derive_seed(opt.seed, kModelStream);
  config.init_jitter = opt.jitter;
  config.masked_updates = !opt.unmasked;
  const TrainReport report = train(model, dataset, config, opt.test_size > 0 ? &test : nullptr);
  write_file(opt.model_path, serialize_model(model));
  write_file(opt.report_path, serialize_train_report(report));
  std::cout << "epoch losses:";
  for (double loss : report.epoch_losses) std::cout << " " << loss;
  std::cout << "\ntrain accuracy: " << report.train_accuracy << "\n";
  if (report.test_accuracy.has_value()) {
    std::cout << "test accuracy: " << *report.test_accuracy << "\n";
  }
  std::cout << "sparsity violations: " << report.violations << "\n"
            << "wrote " << opt.model_path << " and " << opt.report_path << "\n";
  if (report.diverged) {
    std::cerr << "error: training diverged (non-finite loss)\n";
    return kExitDiverged;
  }
  return kExitOk;
}

struct VerifyOptions {
  std::string spec_path;
  std::string artifact_path;
  int exhaustive = -1;
  int sample = -1;
  int min_len = 1;
  int max_len = 10;
  std::uint64_t seed = 0;
  std::string out_path;
};

int cmd_verify(const VerifyOptions& opt) {
  const Nfa nfa = parse_nfa_spec(read_file(opt.spec_path));
  const std::string artifact_text = read_file(opt.artifact_path);
  EquivalenceMode mode = ExhaustiveMode{opt.exhaustive};
  if (opt.sample >= 0) mode = SampledMode{opt.sample, opt.min_len, opt.max_len};

  const auto artifact_json = nlohmann::json::parse(artifact_text, nullptr, false);
  EquivalenceReport report;
  if (artifact_json.is_object() && artifact_json.contains("masks")) {
    report = check_equivalence(nfa, parse_model(artifact_text), mode,
                               derive_seed(opt.seed, kSampleStream));
  } else {
    report = check_equivalence(nfa, parse_acceptor(artifact_text), mode,
                               derive_seed(opt.seed, kSampleStream));
  }
  std::cout << "mode: " << report.mode << "\n"
            << "agreement: " << report.agreement << " (" << report.total - report.mismatches.size()
            << "/" << report.total << ")\n";
  for (const Mismatch& m : report.mismatches) {
    std::cout << "mismatch: \"" << m.input << "\" nfa=" << (m.nfa_verdict ? "ACCEPT" : "REJECT")
              << " net=" << (m.net_verdict ? "ACCEPT" : "REJECT") << "\n";
  }
  if (!opt.out_path.empty()) write_file(opt.out_path, serialize_equivalence_report(report));
  return report.agreement == 1.0 ? kExitOk : kExitVerdict;
}

struct ExperimentOptions {
  std::string name = "all";
  std::string config = "six";
  int seeds = 5;
  int samples = 100;
  std::string out_dir = "reports";
};

int cmd_experiment(const ExperimentOptions& opt) {
  namespace ex = relunfa::experiments;
  std::vector<std::string> names;
  if (opt.name == "all") {
    for (const char* name : ex::kExperimentNames) names.push_back(name);
  } else {
    names.push_back(opt.name);
  }
  std::vector<std::string> config_names;
  if (opt.config == "both") {
    config_names = {"six", "ten"};
  } else {
    config_names = {opt.config};
  }
  std::vector<ex::ExperimentOutcome> outcomes;
  std::string csv = ex::csv_header();
  for (const std::string& config_name : config_names) {
    for (const std::string& name : names) {
      ex::ExperimentConfig config;
      config.experiment = name;
      config.configuration = ex::config_by_name(config_name);
      config.seeds = ex::default_seeds(opt.seeds);
      config.samples_per_seed = opt.samples;
      ex::ExperimentOutcome outcome = ex::run_experiment(config);
      const std::string path = opt.out_dir + "/" + name + "_" + config_name + ".json";
      write_file(path, ex::serialize_outcome(outcome));
      ex::append_csv(csv, outcome);
      outcomes.push_back(std::move(outcome));
    }
  }
  write_file(opt.out_dir + "/experiments.csv", csv);
  std::cout << ex::format_table(outcomes);
  std::cout << "reports written to " << opt.out_dir << "/\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile nondeterministic finite automata into exact ReLU acceptors,"
               " train them under structure-preserving updates, and verify equivalence"};
  app.require_subcommand(1);

  CompileOptions compile_opt;
  auto* compile_cmd = app.add_subcommand("compile", "Compile an NFA spec or regex to an acceptor");
  auto* compile_spec_opt = compile_cmd->add_option("spec", compile_opt.spec_path,
                                                   "NFA spec document (JSON)");
  compile_cmd->add_option("--regex", compile_opt.regex, "Regular expression instead of a spec")
      ->excludes(compile_spec_opt);
  compile_cmd->add_option("-o,--out", compile_opt.out_path, "Output acceptor path");

  RunOptions run_opt;
  auto* run_cmd = app.add_subcommand("run", "Run strings through a compiled acceptor");
  run_cmd->add_option("acceptor", run_opt.acceptor_path, "Acceptor file")->required();
  run_cmd->add_option("strings", run_opt.strings, "Input strings (stdin lines if omitted)");
  run_cmd->add_flag("--trace", run_opt.trace, "Print per-step state supports");

  TrainOptions train_opt;
  auto* train_cmd = app.add_subcommand("train", "Train a masked model on labeled strings");
  train_cmd->add_option("spec", train_opt.spec_path, "NFA spec document (JSON)")->required();
  train_cmd->add_option("-o,--out", train_opt.model_path, "Output model path");
  train_cmd->add_option("--report", train_opt.report_path, "Output report path");
  train_cmd->add_option("--dataset", train_opt.dataset_path, "Load dataset instead of generating");
  train_cmd->add_option("--lr", train_opt.learning_rate, "Learning rate");
  train_cmd->add_option("--epochs", train_opt.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", train_opt.batch_size, "Minibatch size (0 = full batch)");
  train_cmd->add_option("--train-size", train_opt.train_size, "Generated training samples");
  train_cmd->add_option("--test-size", train_opt.test_size, "Generated test samples");
  train_cmd->add_option("--min-len", train_opt.min_len, "Minimum string length");
  train_cmd->add_option("--max-len", train_opt.max_len, "Maximum string length");
  train_cmd->add_option("--jitter", train_opt.jitter, "Uniform init jitter at masked-in positions");
  train_cmd->add_option("--seed", train_opt.seed, "RNG seed");
  train_cmd->add_flag("--unmasked", train_opt.unmasked,
                      "Disable structure-preserving updates (ablation)");

  VerifyOptions verify_opt;
  auto* verify_cmd = app.add_subcommand("verify", "Check acceptor/model equivalence with an NFA");
  verify_cmd->add_option("spec", verify_opt.spec_path, "NFA spec document (JSON)")->required();
  verify_cmd->add_option("artifact", verify_opt.artifact_path, "Acceptor or model file")->required();
  auto* exhaustive_opt =
      verify_cmd->add_option("--exhaustive", verify_opt.exhaustive, "Enumerate all strings up to L");
  auto* sample_opt =
      verify_cmd->add_option("--sample", verify_opt.sample, "Sample K random strings");
  exhaustive_opt->excludes(sample_opt);
  sample_opt->excludes(exhaustive_opt);
  verify_cmd->add_option("--min-len", verify_opt.min_len, "Minimum sampled length");
  verify_cmd->add_option("--max-len", verify_opt.max_len, "Maximum sampled length");
  verify_cmd->add_option("--seed", verify_opt.seed, "RNG seed for sampling");
  verify_cmd->add_option("--out", verify_opt.out_path, "Write the report to this path");

  ExperimentOptions experiment_opt;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run the validation experiments");
  experiment_cmd->add_option("name", experiment_opt.name,
                             "Experiment name or \"all\" (path_enumeration, subset_construction, "
                             "epsilon_closure, acceptance_accuracy, weight_sparsity, "
                             "symbolic_equivalence)");
  experiment_cmd->add_option("--config", experiment_opt.config, "six, ten, or both");
  experiment_cmd->add_option("--seeds", experiment_opt.seeds, "Number of seeds (0..N-1)");
  experiment_cmd->add_option("--samples", experiment_opt.samples, "Samples per seed");
  experiment_cmd->add_option("-o,--out", experiment_opt.out_dir, "Report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (compile_cmd->parsed()) {
      if (compile_opt.spec_path.empty() && compile_opt.regex.empty()) {
        std::cerr << "error: compile requires a spec path or --regex\n";
        return kExitInput;
      }
      return cmd_compile(compile_opt);
    }
    if (run_cmd->parsed()) return cmd_run(run_opt);
    if (train_cmd->parsed()) return cmd_train(train_opt);
    if (verify_cmd->parsed()) {
      if (verify_opt.exhaustive < 0 && verify_opt.sample < 0) {
        std::cerr << "error: verify requires --exhaustive L or --sample K\n";
        return kExitInput;
      }
      return cmd_verify(verify_opt);
    }
    if (experiment_cmd->parsed()) return cmd_experiment(experiment_opt);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
