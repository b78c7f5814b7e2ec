#pragma once

#include <string_view>

#include "relunfa/nfa.hpp"

namespace relunfa {

// Thompson construction over literals, concatenation, alternation '|',
// Kleene star '*', and grouping '()'. Every alternation and star introduces
// epsilon transitions. The empty pattern yields an automaton accepting only
// the empty string. Throws ParseError with the offending position on
// malformed patterns.
Nfa regex_to_nfa(std::string_view pattern);

}  // namespace relunfa
