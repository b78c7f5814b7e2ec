#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relunfa/acceptor.hpp"
#include "relunfa/nfa.hpp"

namespace relunfa {

// Forward activations are clipped here to stop multiplicative blow-up over
// long inputs in the unbinarized training pass.
inline constexpr double kActivationClip = 1e6;
inline constexpr double kProbabilityClamp = 1e-7;
// A masked-out weight whose magnitude exceeds this is a structure violation.
inline constexpr double kSparsityTolerance = 1e-9;

// Trainable acceptor: weights paired with binary masks that pin the sparsity
// pattern to the compiled symbolic matrices. Masked-out weights are exactly
// zero at all times, before, during and after training.
struct MaskedModel {
  int n = 0;
  std::vector<char> alphabet;
  std::map<char, TransitionMatrix> weights;
  TransitionMatrix eps_weights;
  std::map<char, TransitionMatrix> masks;
  TransitionMatrix eps_mask;
  int start = 0;
  std::vector<double> accept_vector;
  double acceptance_bias = 0.5;
  int closure_iterations = 0;

  bool operator==(const MaskedModel&) const = default;

  const TransitionMatrix& weight_for(char symbol) const;
  const TransitionMatrix& mask_for(char symbol) const;
};

// Exact symbolic weights; masks are the 0/1 pattern of the acceptor matrices.
MaskedModel make_masked_model(const ReluAcceptor& acceptor);

// Adds uniform [0, jitter) noise at masked-in positions. Deterministic under
// the seed; no-op when jitter is zero.
void apply_init_jitter(MaskedModel& model, double jitter, std::uint64_t seed);

struct LabeledItem {
  std::string text;
  int label = 0;

  bool operator==(const LabeledItem&) const = default;
};

struct LabeledDataset {
  std::vector<LabeledItem> items;
  // Provenance of generated datasets; not serialized to dataset files.
  std::uint64_t sample_seed = 0;
  int min_len = 0;
  int max_len = 0;

  bool operator==(const LabeledDataset&) const = default;
};

// Strings sampled via random_string, labels from accepts_oracle.
LabeledDataset generate_dataset(const Nfa& nfa, int count, int min_len, int max_len,
                                std::uint64_t seed);

// One record per line: string, a tab, then the 0/1 label.
std::string serialize_dataset(const LabeledDataset& dataset);
LabeledDataset parse_dataset(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 5;
  int batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 0;
  double init_jitter = 0.0;
  bool masked_updates = true;  // false runs the structure-preservation ablation

  bool operator==(const TrainConfig&) const = default;

  void validate() const;
};

struct ClosureTrace {
  std::vector<StateVector> inputs;   // c_{k-1} per iteration
  std::vector<StateVector> preacts;  // u_k = W_eps c_{k-1}
  StateVector output;
};

struct StepTrace {
  char symbol = 0;
  StateVector input;
  StateVector preact;  // v = W_x input
  StateVector output;  // clip(relu(v))
};

struct ForwardCache {
  ClosureTrace start_closure;
  std::vector<StepTrace> steps;
  std::vector<ClosureTrace> step_closures;
  StateVector final_state;
  double logit = 0.0;
  double probability = 0.0;  // clamped sigmoid(logit)
};

// Closure/step/closure with ReLU but without hard binarization, so the pass
// stays differentiable. Closures unroll for exactly closure_iterations
// iterations. Returns sigmoid(f . s_T - bias) clamped away from {0,1},
// with every intermediate vector cached for backprop.
ForwardCache forward_smooth(const MaskedModel& model, std::string_view input);

// -[y log p + (1-y) log(1-p)] with p clamped to [1e-7, 1-1e-7].
double bce_loss(double prediction, int label);

struct Gradients {
  std::map<char, std::vector<double>> weights;  // row-major n*n per symbol
  std::vector<double> eps_weights;
  double bias = 0.0;
};

// Reverse-mode differentiation of the unrolled forward pass. The ReLU
// subgradient at exactly zero is zero. With apply_mask (the default),
// gradients at masked-out positions are zeroed before return.
Gradients backward(const MaskedModel& model, const ForwardCache& cache, int label,
                   bool apply_mask = true);

struct TrainReport {
  std::vector<double> epoch_losses;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  int violations = 0;
  bool diverged = false;
  TrainConfig config;

  bool operator==(const TrainReport&) const = default;
};

std::string serialize_train_report(const TrainReport& report);

// Minibatch gradient descent with mask-projected updates (projection applied
// to gradients and to weights post-update) and a nonnegativity clamp on the
// weights. Applies init_jitter before the first epoch. A NaN epoch loss is
// reported as divergence, never swallowed.
TrainReport train(MaskedModel& model, const LabeledDataset& data, const TrainConfig& config,
                  const LabeledDataset* test_data = nullptr);

// Positions where |weight| exceeds the sparsity tolerance but the reference
// acceptor entry is zero.
int audit_sparsity(const MaskedModel& model, const ReluAcceptor& reference);

double predict_probability(const MaskedModel& model, std::string_view input);
bool predict_accepts(const MaskedModel& model, std::string_view input);  // threshold 0.5

std::string serialize_model(const MaskedModel& model);
MaskedModel parse_model(std::string_view text);

}  // namespace relunfa
