#include "relunfa/acceptor.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "relunfa/error.hpp"

namespace relunfa {

namespace {

using json = nlohmann::ordered_json;

bool is_binary(const StateVector& s) {
  for (double v : s) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

}  // namespace

TransitionMatrix TransitionMatrix::zero(int n, std::string symbol) {
  TransitionMatrix m;
  m.n = n;
  m.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  m.symbol = std::move(symbol);
  return m;
}

StateVector one_hot(int n, int index) {
  if (index < 0 || index >= n) throw std::invalid_argument("one_hot: index out of range");
  StateVector s(n, 0.0);
  s[index] = 1.0;
  return s;
}

std::set<int> support(const StateVector& s, double threshold) {
  std::set<int> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] > threshold) out.insert(static_cast<int>(i));
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

StateVector matvec(const TransitionMatrix& matrix, const StateVector& s) {
  if (static_cast<int>(s.size()) != matrix.n) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
  StateVector v(matrix.n, 0.0);
  for (int j = 0; j < matrix.n; ++j) {
    const double* row = &matrix.entries[static_cast<std::size_t>(j) * matrix.n];
    double sum = 0.0;
    for (int i = 0; i < matrix.n; ++i) sum += row[i] * s[i];
    v[j] = sum;
  }
  return v;
}

const TransitionMatrix& ReluAcceptor::matrix_for(char symbol) const {
  const auto it = per_symbol.find(symbol);
  if (it == per_symbol.end()) {
    throw std::invalid_argument(std::string("acceptor: unknown symbol '") + symbol + "'");
  }
  return it->second;
}

int ReluAcceptor::start_index() const {
  for (std::size_t i = 0; i < start_vector.size(); ++i) {
    if (start_vector[i] > 0.5) return static_cast<int>(i);
  }
  throw std::logic_error("acceptor: start vector is not one-hot");
}

ReluAcceptor compile(const Nfa& nfa) {
  nfa.validate();
  ReluAcceptor acc;
  acc.n = nfa.n;
  acc.alphabet = nfa.alphabet;
  for (char c : nfa.alphabet) {
    TransitionMatrix m = TransitionMatrix::zero(nfa.n, std::string(1, c));
    for (int q = 0; q < nfa.n; ++q) {
      const auto it = nfa.transitions.find({q, c});
      if (it == nfa.transitions.end()) continue;
      for (int t : it->second) m.at(t, q) = 1.0;
    }
    acc.per_symbol.emplace(c, std::move(m));
  }
  acc.eps_matrix = TransitionMatrix::zero(nfa.n, kEpsilonMarker);
  for (const auto& [q, targets] : nfa.eps_transitions) {
    for (int t : targets) acc.eps_matrix.at(t, q) = 1.0;
  }
  acc.start_vector = one_hot(nfa.n, nfa.start);
  acc.accept_vector.assign(nfa.n, 0.0);
  for (int q : nfa.accept) acc.accept_vector[q] = 1.0;
  acc.closure_iterations = nfa.n;
  return acc;
}

StateVector relu_step(const TransitionMatrix& matrix, const StateVector& s) {
  StateVector v = matvec(matrix, s);
  for (double& x : v) x = std::max(0.0, x);
  return v;
}

StateVector binarize(const StateVector& s, double threshold) {
  if (threshold <= 0.0) throw std::invalid_argument("binarize: threshold must be positive");
  StateVector out(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > threshold ? 1.0 : 0.0;
  return out;
}

ClosureResult epsilon_closure_net(const TransitionMatrix& eps_matrix, const StateVector& s,
                                  int max_iters) {
  if (max_iters < 1) throw std::invalid_argument("epsilon_closure_net: max_iters must be >= 1");
  if (!is_binary(s)) throw std::invalid_argument("epsilon_closure_net: input must be binary");
  StateVector current = s;
  for (int k = 1; k <= max_iters; ++k) {
    StateVector grown = relu_step(eps_matrix, current);
    for (std::size_t i = 0; i < grown.size(); ++i) grown[i] += current[i];
    StateVector next = binarize(grown);
    if (next == current) return {std::move(next), k};
    current = std::move(next);
  }
  throw std::logic_error("epsilon_closure_net: no fixpoint within " + std::to_string(max_iters) +
                         " iterations");
}

std::vector<StateVector> run_subset_construction(const ReluAcceptor& acceptor,
                                                 std::string_view input) {
  for (double v : acceptor.eps_matrix.entries) {
    if (v != 0.0) {
      throw std::invalid_argument("run_subset_construction: epsilon transitions must be disabled");
    }
  }
  std::vector<StateVector> trace;
  trace.reserve(input.size() + 1);
  trace.push_back(acceptor.start_vector);
  StateVector s = acceptor.start_vector;
  for (char c : input) {
    s = binarize(relu_step(acceptor.matrix_for(c), s));
    trace.push_back(s);
  }
  return trace;
}

bool accepts_net(const ReluAcceptor& acceptor, std::string_view input) {
  StateVector s =
      epsilon_closure_net(acceptor.eps_matrix, acceptor.start_vector, acceptor.closure_iterations)
          .vec;
  for (char c : input) {
    s = binarize(relu_step(acceptor.matrix_for(c), s));
    s = epsilon_closure_net(acceptor.eps_matrix, s, acceptor.closure_iterations).vec;
  }
  return dot(acceptor.accept_vector, s) > 0.0;
}

namespace {

json matrix_to_json(const TransitionMatrix& m) {
  json rows = json::array();
  for (int j = 0; j < m.n; ++j) {
    json row = json::array();
    for (int i = 0; i < m.n; ++i) row.push_back(m.at(j, i));
    rows.push_back(std::move(row));
  }
  return rows;
}

TransitionMatrix matrix_from_json(const json& rows, int n, const std::string& symbol,
                                  const std::string& context) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
    throw ParseError(context + ": expected " + std::to_string(n) + " rows");
  }
  TransitionMatrix m = TransitionMatrix::zero(n, symbol);
  for (int j = 0; j < n; ++j) {
    const json& row = rows[j];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw ParseError(context + ": row " + std::to_string(j) + " must have " + std::to_string(n) +
                       " entries");
    }
    for (int i = 0; i < n; ++i) {
      if (!row[i].is_number()) throw ParseError(context + ": entries must be numbers");
      const double v = row[i].get<double>();
      if (v < 0.0) throw ParseError(context + ": entries must be nonnegative");
      m.at(j, i) = v;
    }
  }
  return m;
}

std::vector<char> alphabet_from_json(const json& value, const std::string& context) {
  if (!value.is_array()) throw ParseError(context + ": alphabet must be an array");
  std::vector<char> alphabet;
  std::set<char> seen;
  for (const auto& entry : value) {
    if (!entry.is_string()) throw ParseError(context + ": alphabet symbols must be strings");
    const std::string s = entry.get<std::string>();
    if (s == kEpsilonMarker) throw ParseError(context + ": \"eps\" is reserved");
    if (s.size() != 1 || !seen.insert(s[0]).second) {
      throw ParseError(context + ": alphabet symbols must be distinct single characters");
    }
    alphabet.push_back(s[0]);
  }
  return alphabet;
}

}  // namespace

std::string serialize_acceptor(const ReluAcceptor& acceptor) {
  json doc;
  doc["states"] = acceptor.n;
  json alphabet = json::array();
  for (char c : acceptor.alphabet) alphabet.push_back(std::string(1, c));
  doc["alphabet"] = std::move(alphabet);
  json matrices = json::object();
  for (char c : acceptor.alphabet) {
    matrices[std::string(1, c)] = matrix_to_json(acceptor.per_symbol.at(c));
  }
  matrices[kEpsilonMarker] = matrix_to_json(acceptor.eps_matrix);
  doc["matrices"] = std::move(matrices);
  doc["start"] = acceptor.start_index();
  std::vector<int> accept;
  accept.reserve(acceptor.accept_vector.size());
  for (double v : acceptor.accept_vector) accept.push_back(v > 0.5 ? 1 : 0);
  doc["accept"] = std::move(accept);
  doc["closure_iterations"] = acceptor.closure_iterations;
  return doc.dump(2) + "\n";
}

ReluAcceptor parse_acceptor(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("acceptor: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("acceptor: top-level value must be an object");
  ReluAcceptor acc;
  if (!doc.contains("states") || !doc["states"].is_number_integer()) {
    throw ParseError("acceptor: missing integer field \"states\"");
  }
  acc.n = doc["states"].get<int>();
  if (acc.n < 1) throw ParseError("acceptor: states must be at least 1");
  if (!doc.contains("alphabet")) throw ParseError("acceptor: missing field \"alphabet\"");
  acc.alphabet = alphabet_from_json(doc["alphabet"], "acceptor");
  if (!doc.contains("matrices") || !doc["matrices"].is_object()) {
    throw ParseError("acceptor: missing object field \"matrices\"");
  }
  const json& matrices = doc["matrices"];
  for (char c : acc.alphabet) {
    const std::string key(1, c);
    if (!matrices.contains(key)) throw ParseError("acceptor: missing matrix for symbol \"" + key + "\"");
    acc.per_symbol.emplace(c, matrix_from_json(matrices[key], acc.n, key, "acceptor.matrices." + key));
  }
  if (!matrices.contains(kEpsilonMarker)) throw ParseError("acceptor: missing matrix \"eps\"");
  acc.eps_matrix = matrix_from_json(matrices[kEpsilonMarker], acc.n, kEpsilonMarker,
                                    "acceptor.matrices.eps");
  if (!doc.contains("start") || !doc["start"].is_number_integer()) {
    throw ParseError("acceptor: missing integer field \"start\"");
  }
  const int start = doc["start"].get<int>();
  if (start < 0 || start >= acc.n) throw ParseError("acceptor: start out of range");
  acc.start_vector = one_hot(acc.n, start);
  if (!doc.contains("accept") || !doc["accept"].is_array() ||
      static_cast<int>(doc["accept"].size()) != acc.n) {
    throw ParseError("acceptor: \"accept\" must be an array of length states");
  }
  acc.accept_vector.assign(acc.n, 0.0);
  for (int i = 0; i < acc.n; ++i) {
    const json& v = doc["accept"][i];
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
      throw ParseError("acceptor: accept entries must be 0 or 1");
    }
    acc.accept_vector[i] = v.get<int>();
  }
  if (!doc.contains("closure_iterations") || !doc["closure_iterations"].is_number_integer()) {
    throw ParseError("acceptor: missing integer field \"closure_iterations\"");
  }
  acc.closure_iterations = doc["closure_iterations"].get<int>();
  if (acc.closure_iterations < 1) throw ParseError("acceptor: closure_iterations must be >= 1");
  return acc;
}

}  // namespace relunfa
