#pragma once

// Word algebra and boundary geometry for groups whose Cayley graph is a tree:
// the free group F_q on q generators and the free product of d copies of Z/2.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypbrw {

using Letter = std::uint8_t;

enum class GroupKind { free_group, free_product_z2 };

class GroupModel {
 public:
  /// F_q, generators a1..aq with inverses A1..Aq.  Requires q >= 2.
  static GroupModel free_group(int q);
  /// (Z/2)^{*d}, involutive generators a1..ad.  Requires d >= 3.
  static GroupModel free_product_z2(int d);
  /// Parses "free:q" or "z2:d".
  static GroupModel parse(std::string_view spec);

  GroupKind kind() const { return kind_; }
  int rank() const { return rank_; }
  int alphabet_size() const { return kind_ == GroupKind::free_group ? 2 * rank_ : rank_; }
  Letter inverse(Letter s) const {
    return kind_ == GroupKind::free_group ? static_cast<Letter>(s ^ 1U) : s;
  }
  /// Number of ways to extend a nonempty reduced word by one letter.
  int growth_base() const { return alphabet_size() - 1; }
  /// Volume entropy v = log(growth_base).
  double entropy() const;
  /// Hyperbolicity constant; the Cayley graph is a tree.
  int delta() const { return 0; }

  /// |S_n|; throws BudgetExceeded if it does not fit in 64 bits.
  std::uint64_t sphere_size(int n) const;
  double log_sphere_size(int n) const;
  /// |B(e, n)|, saturating at UINT64_MAX.
  std::uint64_t ball_size(int n) const;

  std::string token(Letter s) const;
  Letter parse_token(std::string_view tok) const;
  std::string describe() const;

  bool operator==(const GroupModel&) const = default;

 private:
  GroupModel(GroupKind kind, int rank) : kind_(kind), rank_(rank) {}
  GroupKind kind_;
  int rank_;
};

/// A reduced word; doubles as the geodesic normal form of a group element.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Letter> letters) : letters_(std::move(letters)) {}
  Word(std::initializer_list<Letter> letters) : letters_(letters) {}

  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }
  Letter back() const { return letters_.back(); }
  auto begin() const { return letters_.begin(); }
  auto end() const { return letters_.end(); }
  std::span<const Letter> letters() const { return letters_; }

  auto operator<=>(const Word&) const = default;
  bool operator==(const Word&) const = default;

 private:
  std::vector<Letter> letters_;
};

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    auto bytes = w.letters();
    return std::hash<std::string_view>{}(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
};

/// Exact half-integer, stored doubled.
struct HalfInteger {
  std::int64_t twice = 0;
  double value() const { return 0.5 * static_cast<double>(twice); }
  auto operator<=>(const HalfInteger&) const = default;
};

/// A cylinder of boundary points: all infinite reduced words extending `prefix`.
struct BoundaryPrefix {
  Word prefix;
  int depth_tag = 0;
};

struct Shadow {
  Word base;
  double kappa = 0.0;
};

bool is_reduced(const GroupModel& g, const Word& w);

/// Free reduction of an arbitrary generator sequence.  Throws InvalidArgument
/// on ids outside the alphabet.
Word reduce(const GroupModel& g, std::span<const int> seq);

Word inverse(const GroupModel& g, const Word& w);
Word mul(const GroupModel& g, const Word& x, const Word& y);
std::size_t common_prefix_length(const Word& x, const Word& y);
/// d(x, y) = |x^{-1} y|.
int distance(const GroupModel& g, const Word& x, const Word& y);

/// <x, y>_e.
HalfInteger gromov_product(const GroupModel& g, const Word& x, const Word& y);
/// <x, y>_base = (d(base,x) + d(base,y) - d(x,y)) / 2.
HalfInteger gromov_product(const GroupModel& g, const Word& x, const Word& y, const Word& base);

/// First k letters of x (geodesic projection onto S_k).
Word prefix(const Word& x, std::size_t k);

/// Calls `emit` once per element of S_n in lexicographic letter order.
/// Throws BudgetExceeded when |S_n| > budget.
void for_each_sphere_word(const GroupModel& g, int n, std::uint64_t budget,
                          const std::function<void(const Word&)>& emit);
std::vector<Word> sphere_words(const GroupModel& g, int n, std::uint64_t budget = 1U << 22);
std::vector<Word> ball_words(const GroupModel& g, int n, std::uint64_t budget = 1U << 22);

/// a^{-N} with N the common prefix length.  Throws InvalidArgument when the
/// prefixes do not witness their divergence (one extends the other).
double visual_distance(const BoundaryPrefix& xi, const BoundaryPrefix& eta, double a);

/// xi lies in the shadow iff <base, xi>_e >= |base| - kappa.
bool shadow_contains(const Shadow& s, const BoundaryPrefix& xi);

/// "a1 A2 a1" style serialization; the identity is written "e".
std::string to_tokens(const GroupModel& g, const Word& w);
Word parse_tokens(const GroupModel& g, std::string_view text);

}  // namespace hypbrw
