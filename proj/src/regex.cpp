#include "relunfa/regex.hpp"

#include <string>
#include <vector>

#include "relunfa/error.hpp"

namespace relunfa {

namespace {

class RegexCompiler {
 public:
  explicit RegexCompiler(std::string_view pattern) : pattern_(pattern) {}

  Nfa compile() {
    const Fragment frag = parse_alternation();
    if (pos_ != pattern_.size()) fail("unexpected ')'");
    Nfa nfa;
    nfa.n = state_count_;
    nfa.alphabet.assign(literals_.begin(), literals_.end());
    nfa.transitions = std::move(transitions_);
    nfa.eps_transitions = std::move(eps_);
    nfa.start = frag.start;
    nfa.accept = {frag.accept};
    nfa.validate();
    return nfa;
  }

 private:
  struct Fragment {
    int start;
    int accept;
  };

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("regex: " + what + " at position " + std::to_string(pos_));
  }

  bool at_end() const { return pos_ >= pattern_.size(); }
  char peek() const { return pattern_[pos_]; }

  int new_state() { return state_count_++; }
  void add_eps(int from, int to) { eps_[from].insert(to); }

  Fragment parse_alternation() {
    Fragment first = parse_concat();
    if (at_end() || peek() != '|') return first;
    std::vector<Fragment> branches{first};
    while (!at_end() && peek() == '|') {
      ++pos_;
      branches.push_back(parse_concat());
    }
    const int start = new_state();
    const int accept = new_state();
    for (const Fragment& b : branches) {
      add_eps(start, b.start);
      add_eps(b.accept, accept);
    }
    return {start, accept};
  }

  Fragment parse_concat() {
    std::vector<Fragment> parts;
    while (!at_end() && peek() != '|' && peek() != ')') parts.push_back(parse_factor());
    if (parts.empty()) {
      // Empty branch: accepts exactly the empty string.
      const int start = new_state();
      const int accept = new_state();
      add_eps(start, accept);
      return {start, accept};
    }
    for (std::size_t i = 1; i < parts.size(); ++i) add_eps(parts[i - 1].accept, parts[i].start);
    return {parts.front().start, parts.back().accept};
  }

  Fragment parse_factor() {
    Fragment atom = parse_atom();
    while (!at_end() && peek() == '*') {
      ++pos_;
      const int start = new_state();
      const int accept = new_state();
      add_eps(start, atom.start);
      add_eps(start, accept);
      add_eps(atom.accept, atom.start);
      add_eps(atom.accept, accept);
      atom = {start, accept};
    }
    return atom;
  }

  Fragment parse_atom() {
    if (at_end()) fail("expected literal or group");
    const char c = peek();
    if (c == '(') {
      ++pos_;
      const Fragment inner = parse_alternation();
      if (at_end() || peek() != ')') fail("unbalanced '('");
      ++pos_;
      return inner;
    }
    if (c == '*') fail("nothing to repeat");
    if (c == ')' || c == '|') fail("expected literal or group");
    ++pos_;
    literals_.insert(c);
    const int start = new_state();
    const int accept = new_state();
    transitions_[{start, c}].insert(accept);
    return {start, accept};
  }

  std::string_view pattern_;
  std::size_t pos_ = 0;
  int state_count_ = 0;
  std::set<char> literals_;
  std::map<std::pair<int, char>, std::set<int>> transitions_;
  std::map<int, std::set<int>> eps_;
};

}  // namespace

Nfa regex_to_nfa(std::string_view pattern) { return RegexCompiler(pattern).compile(); }

}  // namespace relunfa
