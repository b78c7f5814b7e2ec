#include "relunfa/nfa_json.hpp"

#include <string>

#include "json.hpp"
#include "relunfa/error.hpp"

namespace relunfa {

namespace {

using json = nlohmann::ordered_json;

const json& require_field(const json& doc, const char* name) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(std::string("nfa spec: missing field \"") + name + "\"");
  return *it;
}

int require_int(const json& doc, const char* name) {
  const json& value = require_field(doc, name);
  if (!value.is_number_integer()) {
    throw ParseError(std::string("nfa spec: field \"") + name + "\" must be an integer");
  }
  return value.get<int>();
}

int state_ref(const json& value, int n, const std::string& context) {
  if (!value.is_number_integer()) throw ParseError(context + ": state reference must be an integer");
  const int q = value.get<int>();
  if (q < 0 || q >= n) {
    throw ParseError(context + ": dangling state reference " + std::to_string(q) +
                     " (states=" + std::to_string(n) + ")");
  }
  return q;
}

}  // namespace

Nfa parse_nfa_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("nfa spec: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("nfa spec: top-level value must be an object");

  Nfa nfa;
  nfa.n = require_int(doc, "states");
  if (nfa.n < 1) throw ParseError("states: must be at least 1");

  const json& alphabet = require_field(doc, "alphabet");
  if (!alphabet.is_array()) throw ParseError("alphabet: must be an array of symbols");
  for (const auto& entry : alphabet) {
    if (!entry.is_string()) throw ParseError("alphabet: symbols must be strings");
    const std::string s = entry.get<std::string>();
    if (s == kEpsilonMarker) throw ParseError("alphabet: \"eps\" is the reserved epsilon marker");
    if (s.size() != 1) {
      throw ParseError("alphabet: symbol \"" + s + "\" must be a single character");
    }
    nfa.alphabet.push_back(s[0]);
  }

  const json& transitions = require_field(doc, "transitions");
  if (!transitions.is_array()) throw ParseError("transitions: must be an array");
  int index = 0;
  for (const auto& entry : transitions) {
    const std::string context = "transitions[" + std::to_string(index++) + "]";
    if (!entry.is_object()) throw ParseError(context + ": must be an object");
    const auto from_it = entry.find("from");
    const auto symbol_it = entry.find("symbol");
    const auto to_it = entry.find("to");
    if (from_it == entry.end() || symbol_it == entry.end() || to_it == entry.end()) {
      throw ParseError(context + ": requires fields \"from\", \"symbol\", \"to\"");
    }
    const int from = state_ref(*from_it, nfa.n, context + ".from");
    if (!symbol_it->is_string()) throw ParseError(context + ".symbol: must be a string");
    const std::string symbol = symbol_it->get<std::string>();
    if (!to_it->is_array()) throw ParseError(context + ".to: must be an array of states");
    std::set<int> targets;
    for (const auto& t : *to_it) targets.insert(state_ref(t, nfa.n, context + ".to"));
    if (symbol == kEpsilonMarker) {
      nfa.eps_transitions[from].insert(targets.begin(), targets.end());
    } else {
      if (symbol.size() != 1 || !nfa.has_symbol(symbol[0])) {
        throw ParseError(context + ".symbol: unknown symbol \"" + symbol + "\"");
      }
      nfa.transitions[{from, symbol[0]}].insert(targets.begin(), targets.end());
    }
  }

  nfa.start = state_ref(require_field(doc, "start"), nfa.n, "start");
  const json& accept = require_field(doc, "accept");
  if (!accept.is_array()) throw ParseError("accept: must be an array of states");
  for (const auto& q : accept) nfa.accept.insert(state_ref(q, nfa.n, "accept"));

  nfa.normalize();
  nfa.validate();
  return nfa;
}

std::string serialize_nfa_spec(const Nfa& nfa) {
  json doc;
  doc["states"] = nfa.n;
  json alphabet = json::array();
  for (char c : nfa.alphabet) alphabet.push_back(std::string(1, c));
  doc["alphabet"] = std::move(alphabet);
  json transitions = json::array();
  for (int q = 0; q < nfa.n; ++q) {
    for (char c : nfa.alphabet) {
      const auto it = nfa.transitions.find({q, c});
      if (it == nfa.transitions.end() || it->second.empty()) continue;
      transitions.push_back(json{{"from", q},
                                 {"symbol", std::string(1, c)},
                                 {"to", std::vector<int>(it->second.begin(), it->second.end())}});
    }
    const auto eit = nfa.eps_transitions.find(q);
    if (eit != nfa.eps_transitions.end() && !eit->second.empty()) {
      transitions.push_back(json{{"from", q},
                                 {"symbol", kEpsilonMarker},
                                 {"to", std::vector<int>(eit->second.begin(), eit->second.end())}});
    }
  }
  doc["transitions"] = std::move(transitions);
  doc["start"] = nfa.start;
  doc["accept"] = std::vector<int>(nfa.accept.begin(), nfa.accept.end());
  return doc.dump(2) + "\n";
}

}  // namespace relunfa
