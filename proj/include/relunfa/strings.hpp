#pragma once

#include <string>
#include <vector>

#include "relunfa/rng.hpp"

namespace relunfa {

// Uniform length in [min_len, max_len], then uniform symbols.
std::string random_string(Rng& rng, const std::vector<char>& alphabet, int min_len, int max_len);

// All strings of length 0..max_len, lengths ascending, lexicographic within a
// length by alphabet order. The empty string is always first.
std::vector<std::string> enumerate_strings(const std::vector<char>& alphabet, int max_len);

}  // namespace relunfa
