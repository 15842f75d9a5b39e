#pragma once

// Dense integer ids for reduced words, stored as a trie rooted at the
// identity.  Multiplying an id by a generator is O(1): it either walks to the
// parent (cancellation) or to a child, creating it on first use.

#include <cstdint>
#include <mutex>
#include <vector>

#include "hypbrw/group.hpp"

namespace hypbrw {

using WordId = std::int32_t;
inline constexpr WordId no_word = -1;

class WordTable {
 public:
  explicit WordTable(const GroupModel& g);

  const GroupModel& group() const { return group_; }
  std::size_t size() const { return depth_.size(); }
  static constexpr WordId identity() { return 0; }

  int depth(WordId id) const { return depth_[static_cast<std::size_t>(id)]; }
  WordId parent(WordId id) const { return parent_[static_cast<std::size_t>(id)]; }
  Letter last_letter(WordId id) const { return last_[static_cast<std::size_t>(id)]; }

  /// id * s, interning the result if new.
  WordId step(WordId id, Letter s);
  /// id * w for a reduced word w.
  WordId step(WordId id, const Word& w);
  /// Like step, but never allocates; returns no_word if the target is absent.
  WordId find_step(WordId id, Letter s) const;
  WordId find(const Word& w) const;
  WordId intern(const Word& w) { return step(identity(), w); }
  Word word(WordId id) const;

  /// Interns all of B(e, radius) in sphere-by-sphere lexicographic order, so
  /// that ids 0..ball_size-1 coincide with the enumeration order of ball_words.
  void fill_ball(int radius);
  /// Drops every id >= keep.  Ids below keep must form a prefix-closed set.
  void truncate(std::size_t keep);
  void clear() { truncate(1); }

 private:
  WordId& child_slot(WordId id, Letter s) {
    return children_[static_cast<std::size_t>(id) * alpha_ + s];
  }
  WordId child(WordId id, Letter s) const { return children_[static_cast<std::size_t>(id) * alpha_ + s]; }

  GroupModel group_;
  std::size_t alpha_;
  std::vector<WordId> parent_;
  std::vector<Letter> last_;
  std::vector<std::int32_t> depth_;
  std::vector<WordId> children_;
};

/// WordTable guarded for concurrent insert-or-get.  Ids are assigned in the
/// order lookups acquire the lock, so callers that need reproducible ids must
/// issue lookups in a fixed order.
class SharedWordTable {
 public:
  explicit SharedWordTable(const GroupModel& g) : table_(g) {}

  WordId step(WordId id, Letter s) {
    std::lock_guard lock(mu_);
    return table_.step(id, s);
  }
  WordId intern(const Word& w) {
    std::lock_guard lock(mu_);
    return table_.intern(w);
  }
  Word word(WordId id) const {
    std::lock_guard lock(mu_);
    return table_.word(id);
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return table_.size();
  }

 private:
  mutable std::mutex mu_;
  WordTable table_;
};

}  // namespace hypbrw
