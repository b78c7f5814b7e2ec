#include "relunfa/strings.hpp"

#include <stdexcept>

namespace relunfa {

std::string random_string(Rng& rng, const std::vector<char>& alphabet, int min_len, int max_len) {
  if (min_len < 0 || min_len > max_len) {
    throw std::invalid_argument("random_string: invalid length bounds");
  }
  if (alphabet.empty() && max_len > 0) {
    throw std::invalid_argument("random_string: empty alphabet");
  }
  const int length = rng.uniform_int(min_len, max_len);
  std::string s;
  s.reserve(length);
  for (int i = 0; i < length; ++i) {
    s.push_back(alphabet[rng.uniform_int(0, static_cast<int>(alphabet.size()) - 1)]);
  }
  return s;
}

std::vector<std::string> enumerate_strings(const std::vector<char>& alphabet, int max_len) {
  if (max_len < 0) throw std::invalid_argument("enumerate_strings: negative length bound");
  std::vector<std::string> all{std::string()};
  std::vector<std::string> level{std::string()};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    next.reserve(level.size() * alphabet.size());
    for (const std::string& prefix : level) {
      for (char c : alphabet) next.push_back(prefix + c);
    }
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
    if (level.empty()) break;  // empty alphabet: only the empty string exists
  }
  return all;
}

}  // namespace relunfa
