#include "hypbrw/word_table.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"

namespace hypbrw {

WordTable::WordTable(const GroupModel& g)
    : group_(g), alpha_(static_cast<std::size_t>(g.alphabet_size())) {
  parent_.push_back(no_word);
  last_.push_back(0);
  depth_.push_back(0);
  children_.assign(alpha_, no_word);
}

WordId WordTable::step(WordId id, Letter s) {
  if (depth(id) > 0 && last_letter(id) == group_.inverse(s)) return parent(id);
  WordId c = child(id, s);
  if (c != no_word) return c;
  c = static_cast<WordId>(depth_.size());
  parent_.push_back(id);
  last_.push_back(s);
  depth_.push_back(depth(id) + 1);
  children_.resize(children_.size() + alpha_, no_word);
  child_slot(id, s) = c;
  return c;
}

WordId WordTable::step(WordId id, const Word& w) {
  for (Letter s : w) id = step(id, s);
  return id;
}

WordId WordTable::find_step(WordId id, Letter s) const {
  if (depth(id) > 0 && last_letter(id) == group_.inverse(s)) return parent(id);
  return child(id, s);
}

WordId WordTable::find(const Word& w) const {
  WordId id = identity();
  for (Letter s : w) {
    id = find_step(id, s);
    if (id == no_word) return no_word;
  }
  return id;
}

Word WordTable::word(WordId id) const {
  std::vector<Letter> out(static_cast<std::size_t>(depth(id)));
  for (auto i = out.size(); i > 0; --i) {
    out[i - 1] = last_letter(id);
    id = parent(id);
  }
  return Word(std::move(out));
}

void WordTable::fill_ball(int radius) {
  if (size() != 1) throw InvalidArgument("fill_ball needs an empty table");
  // Breadth-first in letter order reproduces the lexicographic sphere order.
  std::size_t begin = 0;
  for (int k = 0; k < radius; ++k) {
    std::size_t end = size();
    for (std::size_t i = begin; i < end; ++i) {
      auto id = static_cast<WordId>(i);
      for (std::size_t s = 0; s < alpha_; ++s) {
        auto letter = static_cast<Letter>(s);
        if (depth(id) > 0 && last_letter(id) == group_.inverse(letter)) continue;
        step(id, letter);
      }
    }
    begin = end;
  }
}

void WordTable::truncate(std::size_t keep) {
  keep = std::max<std::size_t>(keep, 1);
  if (keep >= size()) return;
  parent_.resize(keep);
  last_.resize(keep);
  depth_.resize(keep);
  children_.resize(keep * alpha_);
  const auto limit = static_cast<WordId>(keep);
  for (auto& c : children_)
    if (c >= limit) c = no_word;
}

}  // namespace hypbrw
