#include "relunfa/nfa.hpp"

#include <cctype>
#include <stdexcept>
#include <string>

#include "relunfa/error.hpp"

namespace relunfa {

namespace {

void check_state(int q, int n, const std::string& field) {
  if (q < 0 || q >= n) {
    throw ParseError(field + ": dangling state reference " + std::to_string(q) +
                     " (states=" + std::to_string(n) + ")");
  }
}

}  // namespace

bool Nfa::has_symbol(char symbol) const {
  for (char c : alphabet) {
    if (c == symbol) return true;
  }
  return false;
}

int Nfa::epsilon_edge_count() const {
  int count = 0;
  for (const auto& [from, targets] : eps_transitions) count += static_cast<int>(targets.size());
  return count;
}

void Nfa::validate() const {
  if (n < 1) throw ParseError("states: must be at least 1");
  std::set<char> seen;
  for (char c : alphabet) {
    if (!std::isgraph(static_cast<unsigned char>(c))) {
      throw ParseError("alphabet: symbols must be printable non-space characters");
    }
    if (!seen.insert(c).second) {
      throw ParseError(std::string("alphabet: duplicate symbol '") + c + "'");
    }
  }
  check_state(start, n, "start");
  for (int q : accept) check_state(q, n, "accept");
  for (const auto& [key, targets] : transitions) {
    const auto& [from, symbol] = key;
    check_state(from, n, "transitions.from");
    if (!seen.count(symbol)) {
      throw ParseError(std::string("transitions: unknown symbol '") + symbol + "'");
    }
    for (int t : targets) check_state(t, n, "transitions.to");
  }
  for (const auto& [from, targets] : eps_transitions) {
    check_state(from, n, "transitions.from");
    for (int t : targets) check_state(t, n, "transitions.to");
  }
}

void Nfa::normalize() {
  for (auto it = transitions.begin(); it != transitions.end();) {
    if (it->second.empty()) {
      it = transitions.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = eps_transitions.begin(); it != eps_transitions.end();) {
    if (it->second.empty()) {
      it = eps_transitions.erase(it);
    } else {
      ++it;
    }
  }
}

std::set<int> epsilon_closure_oracle(const Nfa& nfa, const std::set<int>& states) {
  std::set<int> closed = states;
  std::vector<int> work(states.begin(), states.end());
  while (!work.empty()) {
    const int q = work.back();
    work.pop_back();
    const auto it = nfa.eps_transitions.find(q);
    if (it == nfa.eps_transitions.end()) continue;
    for (int t : it->second) {
      if (closed.insert(t).second) work.push_back(t);
    }
  }
  return closed;
}

std::set<int> step_oracle(const Nfa& nfa, const std::set<int>& active, char symbol) {
  if (!nfa.has_symbol(symbol)) {
    throw std::invalid_argument(std::string("step_oracle: unknown symbol '") + symbol + "'");
  }
  std::set<int> next;
  for (int q : active) {
    const auto it = nfa.transitions.find({q, symbol});
    if (it != nfa.transitions.end()) next.insert(it->second.begin(), it->second.end());
  }
  return next;
}

bool accepts_oracle(const Nfa& nfa, std::string_view input) {
  std::set<int> active = epsilon_closure_oracle(nfa, {nfa.start});
  for (char c : input) {
    active = epsilon_closure_oracle(nfa, step_oracle(nfa, active, c));
  }
  for (int q : nfa.accept) {
    if (active.count(q)) return true;
  }
  return false;
}

}  // namespace relunfa
