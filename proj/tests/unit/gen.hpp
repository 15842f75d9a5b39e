#pragma once

// Hand-rolled generators for property tests.

#include <random>
#include <vector>

#include "hypbrw/group.hpp"

namespace testgen {

inline hypbrw::Word random_reduced(const hypbrw::GroupModel& g, std::mt19937_64& rng, int len) {
  std::vector<hypbrw::Letter> w;
  std::uniform_int_distribution<int> pick(0, g.alphabet_size() - 1);
  while (static_cast<int>(w.size()) < len) {
    const auto s = static_cast<hypbrw::Letter>(pick(rng));
    if (!w.empty() && s == g.inverse(w.back())) continue;
    w.push_back(s);
  }
  return hypbrw::Word(w);
}

inline hypbrw::Word random_word_up_to(const hypbrw::GroupModel& g, std::mt19937_64& rng, int max_len) {
  return random_reduced(g, rng, std::uniform_int_distribution<int>(0, max_len)(rng));
}

/// Arbitrary generator sequence, usually not reduced.
inline std::vector<int> random_sequence(const hypbrw::GroupModel& g, std::mt19937_64& rng, int len) {
  std::vector<int> s(static_cast<std::size_t>(len));
  std::uniform_int_distribution<int> pick(0, g.alphabet_size() - 1);
  for (auto& x : s) x = pick(rng);
  return s;
}

inline std::vector<int> as_ints(const hypbrw::Word& w) { return {w.begin(), w.end()}; }

}  // namespace testgen
