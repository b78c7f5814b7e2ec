#pragma once

#include <stdexcept>

namespace relunfa {

// Malformed input documents (automaton specs, regexes, serialized
// artifacts). The message carries position or field context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace relunfa
