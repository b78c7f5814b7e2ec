#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "relunfa/acceptor.hpp"
#include "relunfa/equivalence.hpp"
#include "relunfa/error.hpp"
#include "relunfa/nfa.hpp"
#include "relunfa/regex.hpp"
#include "relunfa/rng.hpp"
#include "relunfa/strings.hpp"
#include "relunfa/training.hpp"

using namespace relunfa;

namespace {

Nfa bench_nfa(std::uint64_t seed, double eps_probability = 0.3) {
  RandomNfaConfig config;
  config.eps_probability = eps_probability;
  config.seed = seed;
  return generate_random_nfa(config);
}

// Addressable weight coordinate: symbol index into the alphabet, or the
// epsilon matrix when symbol_index == alphabet size.
struct Coord {
  int symbol_index;
  int offset;
};

std::vector<Coord> masked_in_coords(const MaskedModel& model) {
  std::vector<Coord> coords;
  for (std::size_t s = 0; s < model.alphabet.size(); ++s) {
    const auto& mask = model.masks.at(model.alphabet[s]).entries;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (mask[k] > 0.0) coords.push_back({static_cast<int>(s), static_cast<int>(k)});
    }
  }
  for (std::size_t k = 0; k < model.eps_mask.entries.size(); ++k) {
    if (model.eps_mask.entries[k] > 0.0) {
      coords.push_back({static_cast<int>(model.alphabet.size()), static_cast<int>(k)});
    }
  }
  return coords;
}

double& weight_at(MaskedModel& model, const Coord& coord) {
  if (coord.symbol_index == static_cast<int>(model.alphabet.size())) {
    return model.eps_weights.entries[coord.offset];
  }
  return model.weights.at(model.alphabet[coord.symbol_index]).entries[coord.offset];
}

double gradient_at(const Gradients& grads, const MaskedModel& model, const Coord& coord) {
  if (coord.symbol_index == static_cast<int>(model.alphabet.size())) {
    return grads.eps_weights[coord.offset];
  }
  return grads.weights.at(model.alphabet[coord.symbol_index])[coord.offset];
}

double loss_with_perturbation(const MaskedModel& model, const Coord& coord, double delta,
                              const std::string& input, int label) {
  MaskedModel perturbed = model;
  weight_at(perturbed, coord) += delta;
  return bce_loss(forward_smooth(perturbed, input).probability, label);
}

}  // namespace

TEST_CASE("forward_smooth is consistent with the hard acceptor on exact weights") {
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const Nfa nfa = bench_nfa(seed);
    const ReluAcceptor acc = compile(nfa);
    const MaskedModel model = make_masked_model(acc);
    Rng rng(derive_seed(seed, 71));
    const double rejected_probability = 1.0 / (1.0 + std::exp(0.5));
    for (int trial = 0; trial < 200; ++trial) {
      const std::string input = random_string(rng, nfa.alphabet, 0, 10);
      const double p = forward_smooth(model, input).probability;
      if (accepts_net(acc, input)) {
        CHECK(p > 0.5);
      } else {
        // f . s_T is exactly zero for rejected strings under exact weights.
        CHECK(p == doctest::Approx(rejected_probability).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("forward_smooth on the empty string with an accepting start state") {
  const char* pattern = "a*";  // start state accepts the empty string
  const Nfa nfa = regex_to_nfa(pattern);
  const MaskedModel model = make_masked_model(compile(nfa));
  const ForwardCache cache = forward_smooth(model, "");
  CHECK(cache.logit >= 0.5);  // f . s >= 1, bias 0.5
  CHECK(cache.probability == doctest::Approx(1.0 / (1.0 + std::exp(-cache.logit))));
  CHECK_THROWS_AS(forward_smooth(model, "z"), std::invalid_argument);
}

TEST_CASE("bce_loss analytic values") {
  CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(1.0, 1) == doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-3));
  CHECK(bce_loss(1.0 - 1e-9, 1) < 1e-6);
  CHECK_THROWS_AS(bce_loss(0.5, 2), std::invalid_argument);
}

TEST_CASE("mean loss over a generated dataset under exact weights stays below log 2") {
  const Nfa nfa = bench_nfa(1);
  const MaskedModel model = make_masked_model(compile(nfa));
  const LabeledDataset data = generate_dataset(nfa, 200, 1, 10, 9);
  double total = 0.0;
  for (const auto& item : data.items) {
    total += bce_loss(forward_smooth(model, item.text).probability, item.label);
  }
  const double mean = total / data.items.size();
  CHECK(std::isfinite(mean));
  CHECK(mean < std::log(2.0));
}

TEST_CASE("backward zeroes gradients at masked-out positions") {
  const Nfa nfa = bench_nfa(2);
  const MaskedModel model = make_masked_model(compile(nfa));
  const ForwardCache cache = forward_smooth(model, "abba");
  const Gradients grads = backward(model, cache, 0);
  for (char c : model.alphabet) {
    const auto& mask = model.masks.at(c).entries;
    const auto& g = grads.weights.at(c);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (mask[k] == 0.0) CHECK(g[k] == 0.0);
    }
  }
  for (std::size_t k = 0; k < grads.eps_weights.size(); ++k) {
    if (model.eps_mask.entries[k] == 0.0) CHECK(grads.eps_weights[k] == 0.0);
  }
}

TEST_CASE("backward on the empty string touches only the epsilon matrix and bias") {
  // Small epsilon chain keeps the head unsaturated so the gradient is live.
  Nfa nfa;
  nfa.n = 3;
  nfa.alphabet = {'a'};
  for (int q = 0; q < 3; ++q) nfa.transitions[{q, 'a'}] = {q};
  nfa.eps_transitions[0] = {1};
  nfa.eps_transitions[1] = {2};
  nfa.start = 0;
  nfa.accept = {2};
  MaskedModel model = make_masked_model(compile(nfa));
  const ForwardCache cache = forward_smooth(model, "");
  const Gradients grads = backward(model, cache, 0);
  for (char c : model.alphabet) {
    for (double g : grads.weights.at(c)) CHECK(g == 0.0);
  }
  CHECK(grads.bias != 0.0);
  double eps_norm = 0.0;
  for (double g : grads.eps_weights) eps_norm += std::abs(g);
  CHECK(eps_norm > 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  // Unsaturated regimes so the gradients are live: an epsilon-free automaton
  // with short strings exercises the symbol matrices (path counts <= 2^3 keep
  // the head off its flat region), and a small epsilon chain exercises the
  // epsilon matrix. Masked-in weights >= 1 keep pre-activations off the ReLU
  // kinks under the 1e-4 step.
  MaskedModel symbol_model = make_masked_model(compile(bench_nfa(4, 0.0)));
  apply_init_jitter(symbol_model, 0.05, 11);

  Nfa chain;
  chain.n = 3;
  chain.alphabet = {'a'};
  for (int q = 0; q < 3; ++q) chain.transitions[{q, 'a'}] = {q};
  chain.eps_transitions[0] = {1};
  chain.eps_transitions[1] = {2};
  chain.start = 0;
  chain.accept = {2};
  MaskedModel eps_model = make_masked_model(compile(chain));
  apply_init_jitter(eps_model, 0.05, 12);

  struct Scenario {
    const MaskedModel* model;
    std::vector<std::string> inputs;
  };
  const std::vector<Scenario> scenarios = {
      {&symbol_model, {"ab", "ba", "aab", "bba", "bb"}},
      {&eps_model, {"", "a"}},
  };

  Rng rng(13);
  const double h = 1e-4;
  int checked = 0;
  int live = 0;
  for (const Scenario& scenario : scenarios) {
    const MaskedModel& model = *scenario.model;
    const std::vector<Coord> coords = masked_in_coords(model);
    for (const std::string& input : scenario.inputs) {
      const ForwardCache cache = forward_smooth(model, input);
      for (int label : {0, 1}) {
        const Gradients grads = backward(model, cache, label);
        std::vector<Coord> live_coords;
        for (const Coord& coord : coords) {
          if (std::abs(gradient_at(grads, model, coord)) > 1e-9) live_coords.push_back(coord);
        }
        for (int k = 0; k < 4; ++k) {
          // Half the draws come from coordinates with nonzero analytic
          // gradient, so the agreement is never zero-on-zero throughout.
          const bool from_live = k % 2 == 1 && !live_coords.empty();
          const Coord coord = from_live ? live_coords[rng.below(live_coords.size())]
                                        : coords[rng.below(coords.size())];
          const double analytic = gradient_at(grads, model, coord);
          const double plus = loss_with_perturbation(model, coord, h, input, label);
          const double minus = loss_with_perturbation(model, coord, -h, input, label);
          const double fd = (plus - minus) / (2.0 * h);
          const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-6});
          CAPTURE(input);
          CAPTURE(label);
          CHECK(std::abs(analytic - fd) / scale < 1e-3);
          if (std::max(std::abs(analytic), std::abs(fd)) > 1e-6) ++live;
          ++checked;
        }
      }
    }
  }
  CHECK(checked >= 20);
  CHECK(live >= 10);  // the agreement must not be vacuously zero-on-zero
}

TEST_CASE("train with zero learning rate is a no-op") {
  const Nfa nfa = bench_nfa(5);
  const ReluAcceptor acc = compile(nfa);
  MaskedModel model = make_masked_model(acc);
  const MaskedModel before = model;
  const LabeledDataset data = generate_dataset(nfa, 50, 1, 10, 3);
  TrainConfig config;
  config.learning_rate = 0.0;
  config.epochs = 3;
  const TrainReport report = train(model, data, config);
  CHECK(model == before);
  CHECK(report.epoch_losses.size() == 3);
  CHECK(report.epoch_losses[0] == report.epoch_losses[2]);
  CHECK(report.violations == 0);
}

TEST_CASE("masked training on the benchmark protocol keeps high test accuracy") {
  const Nfa nfa = bench_nfa(0);
  const ReluAcceptor acc = compile(nfa);
  MaskedModel model = make_masked_model(acc);
  const LabeledDataset data = generate_dataset(nfa, 200, 1, 10, 100);
  const LabeledDataset test = generate_dataset(nfa, 100, 1, 10, 200);
  TrainConfig config;
  const TrainReport report = train(model, data, config, &test);
  REQUIRE(report.test_accuracy.has_value());
  CHECK(*report.test_accuracy >= 0.95);
  CHECK(report.epoch_losses.size() == 5);
  CHECK(report.violations == 0);
  CHECK(audit_sparsity(model, acc) == 0);
}

TEST_CASE("jittered training decreases the loss monotonically on most seeds") {
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Nfa nfa = bench_nfa(seed);
    MaskedModel model = make_masked_model(compile(nfa));
    const LabeledDataset data = generate_dataset(nfa, 200, 1, 10, derive_seed(seed, 81));
    TrainConfig config;
    config.init_jitter = 0.1;
    config.seed = derive_seed(seed, 82);
    const TrainReport report = train(model, data, config);
    bool decreasing = true;
    for (std::size_t e = 1; e < report.epoch_losses.size(); ++e) {
      if (report.epoch_losses[e] > report.epoch_losses[e - 1]) decreasing = false;
    }
    if (decreasing) ++monotone;
  }
  CHECK(monotone >= 4);
}

TEST_CASE("training preserves automaton semantics on held-out strings") {
  int preserved = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Nfa nfa = bench_nfa(seed);
    MaskedModel model = make_masked_model(compile(nfa));
    const LabeledDataset data = generate_dataset(nfa, 200, 1, 10, derive_seed(seed, 83));
    TrainConfig config;
    train(model, data, config);
    bool agree = true;
    for (const std::string& input : enumerate_strings(nfa.alphabet, 6)) {
      if (predict_accepts(model, input) != accepts_oracle(nfa, input)) {
        agree = false;
        break;
      }
    }
    if (agree) ++preserved;
  }
  CHECK(preserved >= 4);
}

TEST_CASE("training is deterministic: identical seeds give identical reports") {
  auto run = [] {
    const Nfa nfa = bench_nfa(6);
    MaskedModel model = make_masked_model(compile(nfa));
    const LabeledDataset data = generate_dataset(nfa, 100, 1, 10, 55);
    const LabeledDataset test = generate_dataset(nfa, 50, 1, 10, 56);
    TrainConfig config;
    config.init_jitter = 0.1;
    config.seed = 77;
    const TrainReport report = train(model, data, config, &test);
    return std::make_pair(serialize_train_report(report), serialize_model(model));
  };
  const auto first = run();
  const auto second = run();
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
}

TEST_CASE("audit_sparsity") {
  const Nfa nfa = bench_nfa(7);
  const ReluAcceptor acc = compile(nfa);
  MaskedModel model = make_masked_model(acc);
  CHECK(audit_sparsity(model, acc) == 0);

  const LabeledDataset data = generate_dataset(nfa, 100, 1, 10, 5);
  TrainConfig config;
  train(model, data, config);
  CHECK(audit_sparsity(model, acc) == 0);

  // Poke one masked-out weight: the detector must fire.
  bool poked = false;
  for (char c : model.alphabet) {
    auto& weights = model.weights.at(c).entries;
    const auto& mask = model.masks.at(c).entries;
    for (std::size_t k = 0; k < weights.size() && !poked; ++k) {
      if (mask[k] == 0.0) {
        weights[k] = 0.5;
        poked = true;
      }
    }
  }
  REQUIRE(poked);
  CHECK(audit_sparsity(model, acc) == 1);
}

TEST_CASE("unmasked ablation produces structure violations") {
  // Control regime with live gradients: epsilon-free automaton and short
  // strings keep the acceptance head unsaturated. Under the full benchmark
  // protocol the accumulation closure drives every accepted string deep into
  // sigmoid saturation, where the loss is flat and nothing moves.
  int seeds_with_violations = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Nfa nfa = bench_nfa(seed, 0.0);
    const ReluAcceptor acc = compile(nfa);
    const LabeledDataset data = generate_dataset(nfa, 200, 1, 4, derive_seed(seed, 84));

    MaskedModel unmasked = make_masked_model(acc);
    TrainConfig config;
    config.masked_updates = false;
    train(unmasked, data, config);
    if (audit_sparsity(unmasked, acc) > 0) ++seeds_with_violations;

    // Same data with masking: structure intact.
    MaskedModel masked = make_masked_model(acc);
    TrainConfig masked_config;
    train(masked, data, masked_config);
    CHECK(audit_sparsity(masked, acc) == 0);
  }
  CHECK(seeds_with_violations > 0);
}

TEST_CASE("generate_dataset follows the benchmark protocols") {
  const Nfa six = bench_nfa(8);
  const LabeledDataset data = generate_dataset(six, 200, 1, 10, 42);
  CHECK(data.items.size() == 200);
  for (const auto& item : data.items) {
    CHECK(item.text.size() >= 1);
    CHECK(item.text.size() <= 10);
    CHECK(item.label == (accepts_oracle(six, item.text) ? 1 : 0));
  }

  RandomNfaConfig ten_config;
  ten_config.n = 10;
  ten_config.alphabet = {'a', 'b', 'c', 'd'};
  ten_config.seed = 9;
  const Nfa ten = generate_random_nfa(ten_config);
  const LabeledDataset ten_data = generate_dataset(ten, 200, 1, 15, 43);
  CHECK(ten_data.items.size() == 200);
  for (const auto& item : ten_data.items) CHECK(item.text.size() <= 15);

  CHECK(generate_dataset(six, 50, 1, 10, 7) == generate_dataset(six, 50, 1, 10, 7));
  CHECK_THROWS_AS(generate_dataset(six, 10, 5, 2, 0), std::invalid_argument);
}

TEST_CASE("dataset files round-trip, including empty strings") {
  LabeledDataset dataset;
  dataset.items = {{"abba", 1}, {"", 0}, {"b", 1}};
  const std::string text = serialize_dataset(dataset);
  const LabeledDataset reparsed = parse_dataset(text);
  CHECK(reparsed.items == dataset.items);
  CHECK_THROWS_AS(parse_dataset("abba;1\n"), ParseError);
  CHECK_THROWS_AS(parse_dataset("abba\t2\n"), ParseError);
}

TEST_CASE("model serialization round-trips bit-exactly, including trained weights") {
  const Nfa nfa = bench_nfa(10);
  MaskedModel model = make_masked_model(compile(nfa));
  const LabeledDataset data = generate_dataset(nfa, 80, 1, 10, 3);
  TrainConfig config;
  config.init_jitter = 0.1;
  train(model, data, config);
  const std::string text = serialize_model(model);
  const MaskedModel reparsed = parse_model(text);
  CHECK(reparsed == model);
  CHECK(serialize_model(reparsed) == text);
}

TEST_CASE("train validates its configuration") {
  const Nfa nfa = bench_nfa(11);
  MaskedModel model = make_masked_model(compile(nfa));
  const LabeledDataset data = generate_dataset(nfa, 10, 1, 5, 1);
  TrainConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(train(model, data, config), std::invalid_argument);
  config.epochs = 1;
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(train(model, data, config), std::invalid_argument);
  LabeledDataset empty;
  CHECK_THROWS_AS(train(model, empty, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("minibatch training stays deterministic and masked") {
  const Nfa nfa = bench_nfa(12);
  const ReluAcceptor acc = compile(nfa);
  MaskedModel model = make_masked_model(acc);
  const LabeledDataset data = generate_dataset(nfa, 64, 1, 10, 8);
  TrainConfig config;
  config.batch_size = 16;
  config.init_jitter = 0.05;
  const TrainReport report = train(model, data, config);
  CHECK(report.violations == 0);
  CHECK(audit_sparsity(model, acc) == 0);
  CHECK_FALSE(report.diverged);
}
