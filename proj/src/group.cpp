#include "hypbrw/group.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hypbrw/errors.hpp"

namespace hypbrw {

GroupModel GroupModel::free_group(int q) {
  if (q < 2 || q > 127) throw InvalidArgument(fmt::format("free group rank must be in [2, 127], got {}", q));
  return GroupModel(GroupKind::free_group, q);
}

GroupModel GroupModel::free_product_z2(int d) {
  if (d < 3 || d > 255) throw InvalidArgument(fmt::format("number of Z/2 factors must be in [3, 255], got {}", d));
  return GroupModel(GroupKind::free_product_z2, d);
}

GroupModel GroupModel::parse(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw InvalidArgument(fmt::format("group spec '{}' is not kind:n", spec));
  auto kind = spec.substr(0, colon);
  auto num = spec.substr(colon + 1);
  int n = 0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
  if (ec != std::errc{} || ptr != num.data() + num.size())
    throw InvalidArgument(fmt::format("group spec '{}' has a bad rank", spec));
  if (kind == "free") return free_group(n);
  if (kind == "z2") return free_product_z2(n);
  throw InvalidArgument(fmt::format("unknown group kind '{}' (expected free or z2)", kind));
}

double GroupModel::entropy() const { return std::log(static_cast<double>(growth_base())); }

std::uint64_t GroupModel::sphere_size(int n) const {
  if (n < 0) throw InvalidArgument("sphere radius must be nonnegative");
  if (n == 0) return 1;
  std::uint64_t size = static_cast<std::uint64_t>(alphabet_size());
  const auto base = static_cast<std::uint64_t>(growth_base());
  for (int k = 1; k < n; ++k) {
    if (size > std::numeric_limits<std::uint64_t>::max() / base)
      throw BudgetExceeded(fmt::format("|S_{}| does not fit in 64 bits", n));
    size *= base;
  }
  return size;
}

double GroupModel::log_sphere_size(int n) const {
  if (n == 0) return 0.0;
  return std::log(static_cast<double>(alphabet_size())) + (n - 1) * entropy();
}

std::uint64_t GroupModel::ball_size(int n) const {
  std::uint64_t total = 0;
  for (int k = 0; k <= n; ++k) {
    std::uint64_t s = 0;
    try {
      s = sphere_size(k);
    } catch (const BudgetExceeded&) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    if (total > std::numeric_limits<std::uint64_t>::max() - s) return std::numeric_limits<std::uint64_t>::max();
    total += s;
  }
  return total;
}

std::string GroupModel::token(Letter s) const {
  if (kind_ == GroupKind::free_group) return fmt::format("{}{}", (s & 1U) ? 'A' : 'a', s / 2 + 1);
  return fmt::format("a{}", s + 1);
}

Letter GroupModel::parse_token(std::string_view tok) const {
  if (tok.size() < 2 || (tok[0] != 'a' && tok[0] != 'A'))
    throw InvalidArgument(fmt::format("bad generator token '{}'", tok));
  int idx = 0;
  auto [ptr, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), idx);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || idx < 1 || idx > rank_)
    throw InvalidArgument(fmt::format("generator token '{}' is not in the alphabet of {}", tok, describe()));
  if (kind_ == GroupKind::free_group) return static_cast<Letter>(2 * (idx - 1) + (tok[0] == 'A' ? 1 : 0));
  if (tok[0] == 'A') throw InvalidArgument(fmt::format("'{}': Z/2 generators are their own inverses", tok));
  return static_cast<Letter>(idx - 1);
}

std::string GroupModel::describe() const {
  return fmt::format("{}:{}", kind_ == GroupKind::free_group ? "free" : "z2", rank_);
}

bool is_reduced(const GroupModel& g, const Word& w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] >= g.alphabet_size()) return false;
    if (i > 0 && w[i] == g.inverse(w[i - 1])) return false;
  }
  return true;
}

Word reduce(const GroupModel& g, std::span<const int> seq) {
  std::vector<Letter> stack;
  stack.reserve(seq.size());
  for (int id : seq) {
    if (id < 0 || id >= g.alphabet_size())
      throw InvalidArgument(fmt::format("generator id {} outside alphabet of size {}", id, g.alphabet_size()));
    auto s = static_cast<Letter>(id);
    if (!stack.empty() && stack.back() == g.inverse(s))
      stack.pop_back();
    else
      stack.push_back(s);
  }
  return Word(std::move(stack));
}

Word inverse(const GroupModel& g, const Word& w) {
  std::vector<Letter> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[w.size() - 1 - i] = g.inverse(w[i]);
  return Word(std::move(out));
}

Word mul(const GroupModel& g, const Word& x, const Word& y) {
  // Cancel the longest suffix of x that is inverse to a prefix of y.
  std::size_t cancel = 0;
  while (cancel < x.size() && cancel < y.size() && x[x.size() - 1 - cancel] == g.inverse(y[cancel])) ++cancel;
  std::vector<Letter> out;
  out.reserve(x.size() + y.size() - 2 * cancel);
  out.insert(out.end(), x.begin(), x.end() - static_cast<std::ptrdiff_t>(cancel));
  out.insert(out.end(), y.begin() + static_cast<std::ptrdiff_t>(cancel), y.end());
  return Word(std::move(out));
}

std::size_t common_prefix_length(const Word& x, const Word& y) {
  auto [ix, iy] = std::mismatch(x.begin(), x.end(), y.begin(), y.end());
  return static_cast<std::size_t>(ix - x.begin());
}

int distance(const GroupModel&, const Word& x, const Word& y) {
  return static_cast<int>(x.size() + y.size() - 2 * common_prefix_length(x, y));
}

HalfInteger gromov_product(const GroupModel&, const Word& x, const Word& y) {
  // On a tree the Gromov product at e is the length of the common geodesic.
  return HalfInteger{2 * static_cast<std::int64_t>(common_prefix_length(x, y))};
}

HalfInteger gromov_product(const GroupModel& g, const Word& x, const Word& y, const Word& base) {
  const std::int64_t dx = distance(g, base, x);
  const std::int64_t dy = distance(g, base, y);
  const std::int64_t dxy = distance(g, x, y);
  return HalfInteger{dx + dy - dxy};
}

Word prefix(const Word& x, std::size_t k) {
  if (k > x.size()) throw InvalidArgument(fmt::format("prefix length {} exceeds word length {}", k, x.size()));
  return Word(std::vector<Letter>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k)));
}

void for_each_sphere_word(const GroupModel& g, int n, std::uint64_t budget,
                          const std::function<void(const Word&)>& emit) {
  const auto size = g.sphere_size(n);
  if (size > budget) throw BudgetExceeded(fmt::format("|S_{}| = {} exceeds enumeration budget {}", n, size, budget));
  if (n == 0) {
    emit(Word{});
    return;
  }
  const int alpha = g.alphabet_size();
  std::vector<Letter> letters(static_cast<std::size_t>(n), 0);
  std::vector<int> next(static_cast<std::size_t>(n), 0);
  // Iterative DFS over reduced words in lexicographic order.
  int depth = 0;
  while (depth >= 0) {
    auto d = static_cast<std::size_t>(depth);
    if (next[d] >= alpha) {
      next[d] = 0;
      --depth;
      continue;
    }
    auto s = static_cast<Letter>(next[d]++);
    if (d > 0 && s == g.inverse(letters[d - 1])) continue;
    letters[d] = s;
    if (depth + 1 == n) {
      emit(Word(letters));
    } else {
      ++depth;
    }
  }
}

std::vector<Word> sphere_words(const GroupModel& g, int n, std::uint64_t budget) {
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(g.sphere_size(n), budget)));
  for_each_sphere_word(g, n, budget, [&](const Word& w) { out.push_back(w); });
  return out;
}

std::vector<Word> ball_words(const GroupModel& g, int n, std::uint64_t budget) {
  if (g.ball_size(n) > budget) throw BudgetExceeded(fmt::format("|B(e,{})| exceeds enumeration budget {}", n, budget));
  std::vector<Word> out;
  for (int k = 0; k <= n; ++k) for_each_sphere_word(g, k, budget, [&](const Word& w) { out.push_back(w); });
  return out;
}

double visual_distance(const BoundaryPrefix& xi, const BoundaryPrefix& eta, double a) {
  if (!(a > 1.0)) throw InvalidArgument(fmt::format("visual parameter a must exceed 1, got {}", a));
  const auto n = common_prefix_length(xi.prefix, eta.prefix);
  if (n >= xi.prefix.size() || n >= eta.prefix.size())
    throw InvalidArgument("divergence not witnessed: one prefix extends the other");
  return std::pow(a, -static_cast<double>(n));
}

bool shadow_contains(const Shadow& s, const BoundaryPrefix& xi) {
  if (xi.prefix.size() < s.base.size())
    throw InvalidArgument(fmt::format("boundary prefix of length {} is shorter than shadow base {}",
                                      xi.prefix.size(), s.base.size()));
  if (s.kappa < 0) throw InvalidArgument("shadow parameter kappa must be nonnegative");
  const auto n = static_cast<double>(common_prefix_length(s.base, xi.prefix));
  return n >= static_cast<double>(s.base.size()) - s.kappa;
}

std::string to_tokens(const GroupModel& g, const Word& w) {
  if (w.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += g.token(w[i]);
  }
  return out;
}

Word parse_tokens(const GroupModel& g, std::string_view text) {
  std::vector<int> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    auto end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    auto tok = text.substr(pos, end - pos);
    if (tok != "e") ids.push_back(g.parse_token(tok));
    pos = end;
  }
  return reduce(g, ids);
}

}  // namespace hypbrw
