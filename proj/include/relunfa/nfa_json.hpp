#pragma once

#include <string>
#include <string_view>

#include "relunfa/nfa.hpp"

namespace relunfa {

// Document format (field names exact):
//   {"states": 2, "alphabet": ["a"], "transitions":
//    [{"from": 0, "symbol": "a", "to": [0, 1]}],
//    "start": 0, "accept": [1]}
// The symbol "eps" is the reserved epsilon marker. Serialization is canonical
// and round-trips bit-exactly.
Nfa parse_nfa_spec(std::string_view text);
std::string serialize_nfa_spec(const Nfa& nfa);

}  // namespace relunfa
