#include <doctest.h>

#include <cmath>
#include <set>

#include "gen.hpp"
#include "hypbrw/errors.hpp"
#include "hypbrw/group.hpp"
#include "hypbrw/word_table.hpp"

using namespace hypbrw;

namespace {

// |reduce(x^-1 y)| computed from raw sequences, without inverse() or mul().
int naive_distance(const GroupModel& g, const Word& x, const Word& y) {
  std::vector<int> s;
  for (auto it = x.end(); it != x.begin();) s.push_back(g.inverse(*--it));
  for (auto l : y) s.push_back(l);
  return static_cast<int>(reduce(g, s).size());
}

}  // namespace

TEST_CASE("mul and reduce on small words") {
  const auto f3 = GroupModel::free_group(3);
  const Word ab{0, 2}, Bc{3, 4};
  CHECK(mul(f3, ab, Bc) == Word{0, 4});
  CHECK(mul(f3, ab, Word{}) == ab);
  CHECK(mul(f3, ab, inverse(f3, ab)).empty());
  const auto z = GroupModel::free_product_z2(3);
  CHECK(mul(z, Word{0, 1}, Word{1, 2}) == Word{0, 2});
  CHECK_THROWS_AS(reduce(f3, std::vector<int>{0, 9}), InvalidArgument);
}

TEST_CASE("mul agrees with reduce of the concatenation") {
  std::mt19937_64 rng(1);
  for (const auto& g : {GroupModel::free_group(2), GroupModel::free_group(3), GroupModel::free_product_z2(4)}) {
    for (int t = 0; t < 500; ++t) {
      const auto x = testgen::random_word_up_to(g, rng, 12), y = testgen::random_word_up_to(g, rng, 12);
      auto s = testgen::as_ints(x);
      const auto sy = testgen::as_ints(y);
      s.insert(s.end(), sy.begin(), sy.end());
      const auto m = mul(g, x, y);
      CHECK(m == reduce(g, s));
      CHECK(is_reduced(g, m));
      const auto cancel = (x.size() + y.size() - m.size()) / 2;
      CHECK(m.size() == x.size() + y.size() - 2 * cancel);
    }
  }
}

TEST_CASE("reduce is idempotent and respects inverses") {
  std::mt19937_64 rng(2);
  const auto g = GroupModel::free_group(2);
  for (int t = 0; t < 300; ++t) {
    const auto s = testgen::random_sequence(g, rng, 30);
    const auto w = reduce(g, s);
    CHECK(reduce(g, testgen::as_ints(w)) == w);
    CHECK(mul(g, w, inverse(g, w)).empty());
  }
}

TEST_CASE("gromov product equals the distance formula") {
  std::mt19937_64 rng(3);
  const auto g = GroupModel::free_group(2);
  const auto f3 = GroupModel::free_group(3);
  CHECK(gromov_product(f3, Word{0, 2}, Word{0, 4}).value() == 1.0);
  for (int t = 0; t < 500; ++t) {
    const auto x = testgen::random_word_up_to(g, rng, 10), y = testgen::random_word_up_to(g, rng, 10);
    const auto b = testgen::random_word_up_to(g, rng, 6);
    CHECK(gromov_product(g, x, x).value() == static_cast<double>(x.size()));
    const int d = naive_distance(g, x, y);
    CHECK(distance(g, x, y) == d);
    CHECK(gromov_product(g, x, y).twice == static_cast<std::int64_t>(x.size() + y.size()) - d);
    CHECK(gromov_product(g, x, y).twice == 2 * static_cast<std::int64_t>(common_prefix_length(x, y)));
    const auto gb = gromov_product(g, x, y, b);
    CHECK(gb.twice == naive_distance(g, b, x) + naive_distance(g, b, y) - d);
  }
}

TEST_CASE("tree gromov products are ultrametric") {
  std::mt19937_64 rng(4);
  const auto g = GroupModel::free_product_z2(3);
  for (int t = 0; t < 500; ++t) {
    const auto x = testgen::random_word_up_to(g, rng, 9), y = testgen::random_word_up_to(g, rng, 9),
               z = testgen::random_word_up_to(g, rng, 9);
    CHECK(gromov_product(g, x, z) >= std::min(gromov_product(g, x, y), gromov_product(g, y, z)));
  }
}

TEST_CASE("sphere sizes by formula and by enumeration") {
  for (int q : {2, 3}) {
    const auto g = GroupModel::free_group(q);
    CHECK(g.sphere_size(0) == 1);
    for (int n = 1; n <= 6; ++n) {
      const double closed = 2.0 * q * std::pow(2.0 * q - 1, n - 1);
      CHECK(static_cast<double>(g.sphere_size(n)) == closed);
      std::uint64_t count = 0;
      std::set<Word> seen;
      for_each_sphere_word(g, n, 1U << 22, [&](const Word& w) {
        ++count;
        seen.insert(w);
        CHECK(is_reduced(g, w));
        CHECK(w.size() == static_cast<std::size_t>(n));
      });
      CHECK(count == g.sphere_size(n));
      CHECK(seen.size() == count);
    }
    CHECK(g.entropy() == doctest::Approx(std::log(2.0 * q - 1)));
  }
  const auto z = GroupModel::free_product_z2(4);
  for (int n = 1; n <= 6; ++n) CHECK(static_cast<double>(z.sphere_size(n)) == 4.0 * std::pow(3.0, n - 1));
  CHECK_THROWS_AS(GroupModel::free_group(2).sphere_size(60), BudgetExceeded);
  CHECK_THROWS_AS(sphere_words(GroupModel::free_group(2), 20, 1000), BudgetExceeded);
  CHECK(ball_words(z, 3).size() == z.ball_size(3));
}

TEST_CASE("sphere enumeration is lexicographic") {
  const auto g = GroupModel::free_group(2);
  const auto s = sphere_words(g, 4);
  CHECK(std::is_sorted(s.begin(), s.end()));
}

TEST_CASE("visual distance and shadows") {
  const auto g = GroupModel::free_group(2);
  const BoundaryPrefix xi{Word{0, 2, 2}}, eta{Word{0, 3, 0}};
  CHECK(visual_distance(xi, eta, 2.0) == 0.5);
  CHECK(visual_distance(xi, BoundaryPrefix{Word{1, 2}}, 3.0) == 1.0);
  CHECK_THROWS_AS(visual_distance(xi, BoundaryPrefix{Word{0, 2}}, 2.0), InvalidArgument);

  const auto f3 = GroupModel::free_group(3);
  const Shadow s{Word{0, 2}, 0.0};
  CHECK_FALSE(shadow_contains(s, BoundaryPrefix{Word{0, 4, 4}}));
  CHECK(shadow_contains(s, BoundaryPrefix{Word{0, 2, 4}}));
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto base = testgen::random_reduced(f3, rng, 5);
    const auto p = BoundaryPrefix{testgen::random_reduced(f3, rng, 8)};
    CHECK(shadow_contains(Shadow{base, 5.0}, p));
    CHECK(shadow_contains(Shadow{base, 0.0}, p) == (prefix(p.prefix, 5) == base));
  }
  (void)g;
}

TEST_CASE("prefix projects onto the sphere") {
  std::mt19937_64 rng(6);
  const auto g = GroupModel::free_group(2);
  for (int t = 0; t < 200; ++t) {
    const auto x = testgen::random_reduced(g, rng, 10);
    for (std::size_t k = 0; k <= 10; ++k) {
      const auto p = prefix(x, k);
      CHECK(p.size() == k);
      CHECK(distance(g, p, x) == static_cast<int>(10 - k));
    }
  }
}

TEST_CASE("token round trip") {
  std::mt19937_64 rng(7);
  for (const auto& g : {GroupModel::free_group(3), GroupModel::free_product_z2(5)}) {
    CHECK(to_tokens(g, Word{}) == "e");
    CHECK(parse_tokens(g, "e").empty());
    for (int t = 0; t < 100; ++t) {
      const auto w = testgen::random_word_up_to(g, rng, 8);
      CHECK(parse_tokens(g, to_tokens(g, w)) == w);
    }
  }
  CHECK(GroupModel::parse("free:2") == GroupModel::free_group(2));
  CHECK(GroupModel::parse("z2:4") == GroupModel::free_product_z2(4));
  CHECK_THROWS_AS(GroupModel::parse("free:1"), InvalidArgument);
  CHECK_THROWS_AS(GroupModel::parse("z2:2"), InvalidArgument);
  CHECK_THROWS_AS(GroupModel::parse("surface:2"), InvalidArgument);
}

TEST_CASE("word table ids follow ball enumeration and multiplication") {
  std::mt19937_64 rng(8);
  const auto g = GroupModel::free_group(2);
  WordTable t(g);
  t.fill_ball(4);
  const auto ball = ball_words(g, 4);
  REQUIRE(t.size() == ball.size());
  for (std::size_t i = 0; i < ball.size(); ++i) CHECK(t.word(static_cast<WordId>(i)) == ball[i]);
  for (int k = 0; k < 300; ++k) {
    const auto x = testgen::random_word_up_to(g, rng, 8), y = testgen::random_word_up_to(g, rng, 5);
    const WordId id = t.step(t.intern(x), y);
    CHECK(t.word(id) == mul(g, x, y));
    CHECK(t.depth(id) == static_cast<int>(mul(g, x, y).size()));
  }
  t.truncate(ball.size());
  CHECK(t.find(Word{0, 0, 0, 0, 0}) == no_word);
}
