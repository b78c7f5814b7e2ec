#include "relunfa/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "relunfa/error.hpp"
#include "relunfa/rng.hpp"
#include "relunfa/strings.hpp"

namespace relunfa {

namespace {

using json = nlohmann::ordered_json;

TransitionMatrix binary_pattern(const TransitionMatrix& m) {
  TransitionMatrix pattern = m;
  for (double& v : pattern.entries) v = v > 0.0 ? 1.0 : 0.0;
  return pattern;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ClosureTrace smooth_closure(const TransitionMatrix& eps, StateVector s, int iterations) {
  ClosureTrace trace;
  trace.inputs.reserve(iterations);
  trace.preacts.reserve(iterations);
  for (int k = 0; k < iterations; ++k) {
    StateVector u = matvec(eps, s);
    trace.inputs.push_back(s);
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] = std::min(s[j] + std::max(0.0, u[j]), kActivationClip);
    }
    trace.preacts.push_back(std::move(u));
  }
  trace.output = std::move(s);
  return trace;
}

// Backward through one closure block: c_k = clip(c_{k-1} + relu(u_k)).
// The accumulation term gives a skip path, so gradient reaches c_{k-1} both
// directly and through the transposed weights.
void closure_backward(const TransitionMatrix& eps, const ClosureTrace& trace, StateVector& grad,
                      std::vector<double>& grad_eps) {
  const int n = eps.n;
  for (int k = static_cast<int>(trace.inputs.size()) - 1; k >= 0; --k) {
    const StateVector& c_in = trace.inputs[k];
    const StateVector& u = trace.preacts[k];
    StateVector g_u(n, 0.0);
    for (int j = 0; j < n; ++j) {
      const double pre = c_in[j] + std::max(0.0, u[j]);
      const double g_pre = pre < kActivationClip ? grad[j] : 0.0;
      grad[j] = g_pre;  // skip path
      g_u[j] = u[j] > 0.0 ? g_pre : 0.0;
    }
    for (int j = 0; j < n; ++j) {
      if (g_u[j] == 0.0) continue;
      double* row = &grad_eps[static_cast<std::size_t>(j) * n];
      const double* w = &eps.entries[static_cast<std::size_t>(j) * n];
      for (int i = 0; i < n; ++i) {
        row[i] += g_u[j] * c_in[i];
        grad[i] += w[i] * g_u[j];
      }
    }
  }
}

void step_backward(const TransitionMatrix& weight, const StepTrace& step, StateVector& grad,
                   std::vector<double>& grad_weight) {
  const int n = weight.n;
  StateVector g_v(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double pre = std::max(0.0, step.preact[j]);
    const double g_pre = pre < kActivationClip ? grad[j] : 0.0;
    g_v[j] = step.preact[j] > 0.0 ? g_pre : 0.0;
  }
  StateVector back(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (g_v[j] == 0.0) continue;
    double* row = &grad_weight[static_cast<std::size_t>(j) * n];
    const double* w = &weight.entries[static_cast<std::size_t>(j) * n];
    for (int i = 0; i < n; ++i) {
      row[i] += g_v[j] * step.input[i];
      back[i] += w[i] * g_v[j];
    }
  }
  grad = std::move(back);
}

Gradients zero_gradients(const MaskedModel& model) {
  Gradients g;
  const std::size_t size = static_cast<std::size_t>(model.n) * model.n;
  for (char c : model.alphabet) g.weights[c].assign(size, 0.0);
  g.eps_weights.assign(size, 0.0);
  return g;
}

void accumulate(Gradients& acc, const Gradients& g, double scale) {
  for (auto& [symbol, values] : acc.weights) {
    const auto& src = g.weights.at(symbol);
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += scale * src[k];
  }
  for (std::size_t k = 0; k < acc.eps_weights.size(); ++k) {
    acc.eps_weights[k] += scale * g.eps_weights[k];
  }
  acc.bias += scale * g.bias;
}

void update_matrix(TransitionMatrix& weight, const TransitionMatrix& mask,
                   const std::vector<double>& grad, double lr, bool masked) {
  for (std::size_t k = 0; k < weight.entries.size(); ++k) {
    double w = std::max(0.0, weight.entries[k] - lr * grad[k]);
    if (masked && mask.entries[k] == 0.0) w = 0.0;
    weight.entries[k] = w;
  }
}

void apply_update(MaskedModel& model, const Gradients& grads, const TrainConfig& config) {
  for (char c : model.alphabet) {
    update_matrix(model.weights.at(c), model.masks.at(c), grads.weights.at(c),
                  config.learning_rate, config.masked_updates);
  }
  update_matrix(model.eps_weights, model.eps_mask, grads.eps_weights, config.learning_rate,
                config.masked_updates);
  model.acceptance_bias -= config.learning_rate * grads.bias;
}

int count_mask_violations(const MaskedModel& model) {
  int violations = 0;
  auto scan = [&](const TransitionMatrix& weight, const TransitionMatrix& mask) {
    for (std::size_t k = 0; k < weight.entries.size(); ++k) {
      if (mask.entries[k] == 0.0 && std::abs(weight.entries[k]) > kSparsityTolerance) ++violations;
    }
  };
  for (char c : model.alphabet) scan(model.weights.at(c), model.masks.at(c));
  scan(model.eps_weights, model.eps_mask);
  return violations;
}

void enforce_mask_invariance(const MaskedModel& model) {
  auto check = [](const TransitionMatrix& weight, const TransitionMatrix& mask) {
    for (std::size_t k = 0; k < weight.entries.size(); ++k) {
      if (mask.entries[k] == 0.0 && weight.entries[k] != 0.0) {
        throw std::logic_error("train: masked-out weight drifted from zero");
      }
    }
  };
  for (char c : model.alphabet) check(model.weights.at(c), model.masks.at(c));
  check(model.eps_weights, model.eps_mask);
}

double dataset_accuracy(const MaskedModel& model, const LabeledDataset& data) {
  if (data.items.empty()) return 0.0;
  int correct = 0;
  for (const auto& item : data.items) {
    const bool predicted = predict_accepts(model, item.text);
    if (predicted == (item.label == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.items.size());
}

}  // namespace

const TransitionMatrix& MaskedModel::weight_for(char symbol) const {
  const auto it = weights.find(symbol);
  if (it == weights.end()) {
    throw std::invalid_argument(std::string("model: unknown symbol '") + symbol + "'");
  }
  return it->second;
}

const TransitionMatrix& MaskedModel::mask_for(char symbol) const {
  const auto it = masks.find(symbol);
  if (it == masks.end()) {
    throw std::invalid_argument(std::string("model: unknown symbol '") + symbol + "'");
  }
  return it->second;
}

MaskedModel make_masked_model(const ReluAcceptor& acceptor) {
  MaskedModel model;
  model.n = acceptor.n;
  model.alphabet = acceptor.alphabet;
  for (char c : acceptor.alphabet) {
    const TransitionMatrix& m = acceptor.per_symbol.at(c);
    model.weights.emplace(c, m);
    model.masks.emplace(c, binary_pattern(m));
  }
  model.eps_weights = acceptor.eps_matrix;
  model.eps_mask = binary_pattern(acceptor.eps_matrix);
  model.start = acceptor.start_index();
  model.accept_vector = acceptor.accept_vector;
  model.acceptance_bias = 0.5;
  model.closure_iterations = acceptor.closure_iterations;
  return model;
}

void apply_init_jitter(MaskedModel& model, double jitter, std::uint64_t seed) {
  if (jitter < 0.0) throw std::invalid_argument("apply_init_jitter: jitter must be nonnegative");
  if (jitter == 0.0) return;
  Rng rng(seed);
  auto perturb = [&](TransitionMatrix& weight, const TransitionMatrix& mask) {
    for (std::size_t k = 0; k < weight.entries.size(); ++k) {
      if (mask.entries[k] > 0.0) weight.entries[k] += rng.uniform_real() * jitter;
    }
  };
  for (char c : model.alphabet) perturb(model.weights.at(c), model.masks.at(c));
  perturb(model.eps_weights, model.eps_mask);
}

LabeledDataset generate_dataset(const Nfa& nfa, int count, int min_len, int max_len,
                                std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("generate_dataset: negative count");
  if (min_len < 0 || min_len > max_len) {
    throw std::invalid_argument("generate_dataset: invalid length bounds");
  }
  Rng rng(seed);
  LabeledDataset dataset;
  dataset.sample_seed = seed;
  dataset.min_len = min_len;
  dataset.max_len = max_len;
  dataset.items.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::string text = random_string(rng, nfa.alphabet, min_len, max_len);
    const int label = accepts_oracle(nfa, text) ? 1 : 0;
    dataset.items.push_back({std::move(text), label});
  }
  return dataset;
}

std::string serialize_dataset(const LabeledDataset& dataset) {
  std::string out;
  for (const auto& item : dataset.items) {
    out += item.text;
    out += '\t';
    out += item.label == 1 ? '1' : '0';
    out += '\n';
  }
  return out;
}

LabeledDataset parse_dataset(std::string_view text) {
  LabeledDataset dataset;
  std::size_t line_start = 0;
  int line_number = 0;
  while (line_start < text.size()) {
    ++line_number;
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    const std::string_view line = text.substr(line_start, line_end - line_start);
    line_start = line_end + 1;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("dataset line " + std::to_string(line_number) + ": missing tab separator");
    }
    const std::string_view label = line.substr(tab + 1);
    if (label != "0" && label != "1") {
      throw ParseError("dataset line " + std::to_string(line_number) + ": label must be 0 or 1");
    }
    dataset.items.push_back({std::string(line.substr(0, tab)), label == "1" ? 1 : 0});
  }
  return dataset;
}

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 0");
  if (init_jitter < 0.0) throw std::invalid_argument("TrainConfig: init_jitter must be >= 0");
}

ForwardCache forward_smooth(const MaskedModel& model, std::string_view input) {
  ForwardCache cache;
  cache.start_closure =
      smooth_closure(model.eps_weights, one_hot(model.n, model.start), model.closure_iterations);
  StateVector s = cache.start_closure.output;
  cache.steps.reserve(input.size());
  cache.step_closures.reserve(input.size());
  for (char c : input) {
    const TransitionMatrix& weight = model.weight_for(c);
    StepTrace step;
    step.symbol = c;
    step.input = s;
    step.preact = matvec(weight, s);
    step.output.assign(model.n, 0.0);
    for (int j = 0; j < model.n; ++j) {
      step.output[j] = std::min(std::max(0.0, step.preact[j]), kActivationClip);
    }
    ClosureTrace closure =
        smooth_closure(model.eps_weights, step.output, model.closure_iterations);
    s = closure.output;
    cache.steps.push_back(std::move(step));
    cache.step_closures.push_back(std::move(closure));
  }
  cache.final_state = s;
  cache.logit = dot(model.accept_vector, s) - model.acceptance_bias;
  cache.probability = std::clamp(sigmoid(cache.logit), kProbabilityClamp, 1.0 - kProbabilityClamp);
  return cache;
}

double bce_loss(double prediction, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("bce_loss: label must be 0 or 1");
  const double p = std::clamp(prediction, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

Gradients backward(const MaskedModel& model, const ForwardCache& cache, int label,
                   bool apply_mask) {
  if (label != 0 && label != 1) throw std::invalid_argument("backward: label must be 0 or 1");
  Gradients grads = zero_gradients(model);
  const double p = cache.probability;
  const double dLdp = label == 1 ? -1.0 / p : 1.0 / (1.0 - p);
  const double raw = sigmoid(cache.logit);
  // The clamp is part of the forward composition: a saturated prediction has
  // zero gradient.
  const bool clamped = raw < kProbabilityClamp || raw > 1.0 - kProbabilityClamp;
  const double dz = clamped ? 0.0 : dLdp * raw * (1.0 - raw);
  grads.bias = -dz;
  StateVector grad(model.n, 0.0);
  for (int j = 0; j < model.n; ++j) grad[j] = dz * model.accept_vector[j];
  for (int t = static_cast<int>(cache.steps.size()) - 1; t >= 0; --t) {
    closure_backward(model.eps_weights, cache.step_closures[t], grad, grads.eps_weights);
    const char symbol = cache.steps[t].symbol;
    step_backward(model.weight_for(symbol), cache.steps[t], grad, grads.weights.at(symbol));
  }
  closure_backward(model.eps_weights, cache.start_closure, grad, grads.eps_weights);
  if (apply_mask) {
    for (char c : model.alphabet) {
      const auto& mask = model.masks.at(c).entries;
      auto& g = grads.weights.at(c);
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (mask[k] == 0.0) g[k] = 0.0;
      }
    }
    for (std::size_t k = 0; k < grads.eps_weights.size(); ++k) {
      if (model.eps_mask.entries[k] == 0.0) grads.eps_weights[k] = 0.0;
    }
  }
  return grads;
}

TrainReport train(MaskedModel& model, const LabeledDataset& data, const TrainConfig& config,
                  const LabeledDataset* test_data) {
  config.validate();
  if (data.items.empty()) throw std::invalid_argument("train: empty dataset");
  if (config.init_jitter > 0.0) apply_init_jitter(model, config.init_jitter, config.seed);
  TrainReport report;
  report.config = config;
  const int m = static_cast<int>(data.items.size());
  const int batch = config.batch_size <= 0 ? m : std::min(config.batch_size, m);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int begin = 0; begin < m; begin += batch) {
      const int end = std::min(begin + batch, m);
      Gradients acc = zero_gradients(model);
      for (int idx = begin; idx < end; ++idx) {
        const LabeledItem& item = data.items[idx];
        const ForwardCache fwd = forward_smooth(model, item.text);
        loss_sum += bce_loss(fwd.probability, item.label);
        accumulate(acc, backward(model, fwd, item.label, config.masked_updates),
                   1.0 / (end - begin));
      }
      apply_update(model, acc, config);
    }
    const double epoch_loss = loss_sum / m;
    report.epoch_losses.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss)) {
      report.diverged = true;
      break;
    }
    if (config.masked_updates) enforce_mask_invariance(model);
  }
  report.train_accuracy = dataset_accuracy(model, data);
  if (test_data != nullptr) report.test_accuracy = dataset_accuracy(model, *test_data);
  report.violations = count_mask_violations(model);
  return report;
}

std::string serialize_train_report(const TrainReport& report) {
  json doc;
  doc["epoch_losses"] = report.epoch_losses;
  doc["train_accuracy"] = report.train_accuracy;
  if (report.test_accuracy.has_value()) {
    doc["test_accuracy"] = *report.test_accuracy;
  } else {
    doc["test_accuracy"] = nullptr;
  }
  doc["violations"] = report.violations;
  doc["diverged"] = report.diverged;
  json config;
  config["learning_rate"] = report.config.learning_rate;
  config["epochs"] = report.config.epochs;
  config["batch_size"] = report.config.batch_size;
  config["seed"] = report.config.seed;
  config["init_jitter"] = report.config.init_jitter;
  config["masked_updates"] = report.config.masked_updates;
  doc["config"] = std::move(config);
  return doc.dump(2) + "\n";
}

int audit_sparsity(const MaskedModel& model, const ReluAcceptor& reference) {
  if (model.n != reference.n) throw std::invalid_argument("audit_sparsity: dimension mismatch");
  int violations = 0;
  auto scan = [&](const TransitionMatrix& weight, const TransitionMatrix& pattern) {
    for (std::size_t k = 0; k < weight.entries.size(); ++k) {
      if (pattern.entries[k] == 0.0 && std::abs(weight.entries[k]) > kSparsityTolerance) {
        ++violations;
      }
    }
  };
  for (char c : model.alphabet) scan(model.weights.at(c), reference.per_symbol.at(c));
  scan(model.eps_weights, reference.eps_matrix);
  return violations;
}

double predict_probability(const MaskedModel& model, std::string_view input) {
  return forward_smooth(model, input).probability;
}

bool predict_accepts(const MaskedModel& model, std::string_view input) {
  return predict_probability(model, input) > 0.5;
}

namespace {

json matrix_rows(const TransitionMatrix& m) {
  json rows = json::array();
  for (int j = 0; j < m.n; ++j) {
    json row = json::array();
    for (int i = 0; i < m.n; ++i) row.push_back(m.at(j, i));
    rows.push_back(std::move(row));
  }
  return rows;
}

TransitionMatrix matrix_from_rows(const json& rows, int n, const std::string& symbol,
                                  const std::string& context) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
    throw ParseError(context + ": expected " + std::to_string(n) + " rows");
  }
  TransitionMatrix m = TransitionMatrix::zero(n, symbol);
  for (int j = 0; j < n; ++j) {
    const json& row = rows[j];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw ParseError(context + ": malformed row " + std::to_string(j));
    }
    for (int i = 0; i < n; ++i) {
      if (!row[i].is_number()) throw ParseError(context + ": entries must be numbers");
      m.at(j, i) = row[i].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string serialize_model(const MaskedModel& model) {
  json doc;
  doc["states"] = model.n;
  json alphabet = json::array();
  for (char c : model.alphabet) alphabet.push_back(std::string(1, c));
  doc["alphabet"] = std::move(alphabet);
  json weights = json::object();
  json masks = json::object();
  for (char c : model.alphabet) {
    weights[std::string(1, c)] = matrix_rows(model.weights.at(c));
    masks[std::string(1, c)] = matrix_rows(model.masks.at(c));
  }
  weights[kEpsilonMarker] = matrix_rows(model.eps_weights);
  masks[kEpsilonMarker] = matrix_rows(model.eps_mask);
  doc["weights"] = std::move(weights);
  doc["masks"] = std::move(masks);
  doc["start"] = model.start;
  std::vector<int> accept;
  for (double v : model.accept_vector) accept.push_back(v > 0.5 ? 1 : 0);
  doc["accept"] = std::move(accept);
  doc["acceptance_bias"] = model.acceptance_bias;
  doc["closure_iterations"] = model.closure_iterations;
  return doc.dump(2) + "\n";
}

MaskedModel parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("model: top-level value must be an object");
  MaskedModel model;
  if (!doc.contains("states") || !doc["states"].is_number_integer()) {
    throw ParseError("model: missing integer field \"states\"");
  }
  model.n = doc["states"].get<int>();
  if (model.n < 1) throw ParseError("model: states must be at least 1");
  if (!doc.contains("alphabet") || !doc["alphabet"].is_array()) {
    throw ParseError("model: missing array field \"alphabet\"");
  }
  for (const auto& entry : doc["alphabet"]) {
    if (!entry.is_string() || entry.get<std::string>().size() != 1) {
      throw ParseError("model: alphabet symbols must be single-character strings");
    }
    model.alphabet.push_back(entry.get<std::string>()[0]);
  }
  if (!doc.contains("weights") || !doc.contains("masks")) {
    throw ParseError("model: requires \"weights\" and \"masks\"");
  }
  for (char c : model.alphabet) {
    const std::string key(1, c);
    model.weights.emplace(
        c, matrix_from_rows(doc["weights"].at(key), model.n, key, "model.weights." + key));
    model.masks.emplace(c,
                        matrix_from_rows(doc["masks"].at(key), model.n, key, "model.masks." + key));
  }
  model.eps_weights =
      matrix_from_rows(doc["weights"].at(kEpsilonMarker), model.n, kEpsilonMarker, "model.weights.eps");
  model.eps_mask =
      matrix_from_rows(doc["masks"].at(kEpsilonMarker), model.n, kEpsilonMarker, "model.masks.eps");
  if (!doc.contains("start") || !doc["start"].is_number_integer()) {
    throw ParseError("model: missing integer field \"start\"");
  }
  model.start = doc["start"].get<int>();
  if (model.start < 0 || model.start >= model.n) throw ParseError("model: start out of range");
  if (!doc.contains("accept") || !doc["accept"].is_array() ||
      static_cast<int>(doc["accept"].size()) != model.n) {
    throw ParseError("model: \"accept\" must be an array of length states");
  }
  model.accept_vector.assign(model.n, 0.0);
  for (int i = 0; i < model.n; ++i) model.accept_vector[i] = doc["accept"][i].get<int>();
  if (!doc.contains("acceptance_bias") || !doc["acceptance_bias"].is_number()) {
    throw ParseError("model: missing numeric field \"acceptance_bias\"");
  }
  model.acceptance_bias = doc["acceptance_bias"].get<double>();
  if (!doc.contains("closure_iterations") || !doc["closure_iterations"].is_number_integer()) {
    throw ParseError("model: missing integer field \"closure_iterations\"");
  }
  model.closure_iterations = doc["closure_iterations"].get<int>();
  if (model.closure_iterations < 1) throw ParseError("model: closure_iterations must be >= 1");
  return model;
}

}  // namespace relunfa
