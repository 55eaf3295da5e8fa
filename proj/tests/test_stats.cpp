#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "openleaf/errors.hpp"
#include "openleaf/stats.hpp"

using namespace openleaf;

namespace {

// Brute-force references, written independently of the library code.
long long brute_s(const std::vector<double>& x, const std::vector<double>& y) {
  long long s = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double p = (x[i] - x[j]) * (y[i] - y[j]);
      s += p > 0 ? 1 : p < 0 ? -1 : 0;
    }
  return s;
}

long long brute_d2(const std::vector<double>& x, const std::vector<double>& y) {
  long long d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto d = static_cast<long long>(x[i] - y[i]);
    d2 += d * d;
  }
  return d2;
}

std::vector<double> iota_vec(int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

struct BrutePs {
  double kendall;
  double spearman;
};

// Two-sided permutation p-values for x = 1..n against y, by enumeration.
BrutePs brute_p(const std::vector<double>& y) {
  const auto x = iota_vec(static_cast<int>(y.size()));
  const long long s_obs = std::llabs(brute_s(x, y));
  const long long n = static_cast<long long>(y.size());
  const long long denom = n * (n * n - 1);
  const long long r_obs = std::llabs(denom - 6 * brute_d2(x, y));
  auto perm = x;
  long long k = 0, r = 0, total = 0;
  do {
    ++total;
    k += std::llabs(brute_s(x, perm)) >= s_obs;
    r += std::llabs(denom - 6 * brute_d2(x, perm)) >= r_obs;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {static_cast<double>(k) / total, static_cast<double>(r) / total};
}

}  // namespace

TEST(Correlation, AllPermutationsUpToFive) {
  int cases = 0;
  for (int n = 3; n <= 5; ++n) {
    const auto x = iota_vec(n);
    auto y = x;
    do {
      SCOPED_TRACE(testing::PrintToString(y));
      const auto kt = kendall_tau(x, y);
      const auto sp = spearman(x, y);
      const double pairs = n * (n - 1) / 2.0;
      EXPECT_DOUBLE_EQ(kt.statistic, static_cast<double>(brute_s(x, y)) / pairs);
      EXPECT_DOUBLE_EQ(sp.statistic,
                       1.0 - 6.0 * static_cast<double>(brute_d2(x, y)) / (n * (n * n - 1.0)));
      const auto p = brute_p(y);
      EXPECT_DOUBLE_EQ(kt.p_value, p.kendall);
      EXPECT_DOUBLE_EQ(sp.p_value, p.spearman);
      EXPECT_EQ(kt.p_method, PValueMethod::Exact);
      EXPECT_EQ(sp.p_method, PValueMethod::Exact);
      ++cases;
    } while (std::next_permutation(y.begin(), y.end()));
  }
  EXPECT_EQ(cases, 150);
}

TEST(Correlation, IdentityAndReversal) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const std::vector<double> r{6, 5, 4, 3, 2, 1};
  EXPECT_EQ(kendall_tau(x, x).statistic, 1.0);
  EXPECT_EQ(spearman(x, x).statistic, 1.0);
  EXPECT_EQ(kendall_tau(x, r).statistic, -1.0);
  EXPECT_EQ(spearman(x, r).statistic, -1.0);
}

TEST(Correlation, HandValues) {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  EXPECT_NEAR(kendall_tau(a, b).statistic, 2.0 / 3.0, 1e-15);
  const std::vector<double> c{1, 2, 3, 4, 5}, d{2, 1, 3, 5, 4};
  EXPECT_NEAR(spearman(c, d).statistic, 0.8, 1e-12);
  const auto kt = kendall_tau(c, d);
  EXPECT_NEAR(kt.statistic, 0.6, 1e-15);
  EXPECT_NEAR(kt.p_value, 0.23333333333333334, 1e-12);
}

TEST(Correlation, ExactKendallTable) {
  EXPECT_DOUBLE_EQ(kendall_exact_p(5, 10), 2.0 / 120.0);
  EXPECT_EQ(kendall_exact_p(5, 0), 1.0);
  // p is non-increasing in |S|.
  for (int n = 3; n <= 10; ++n) {
    const long long max_s = n * (n - 1) / 2;
    double prev = 1.0;
    for (long long s = 0; s <= max_s; ++s) {
      const double p = kendall_exact_p(n, s);
      EXPECT_LE(p, prev + 1e-15);
      EXPECT_EQ(p, kendall_exact_p(n, -s));
      prev = p;
    }
  }
  std::vector<double> x(10), y{2, 1, 4, 3, 6, 5, 8, 7, 10, 9};
  std::iota(x.begin(), x.end(), 1.0);
  const auto r = kendall_tau(x, y);
  EXPECT_NEAR(r.statistic, 0.7777777777777777, 1e-12);
  EXPECT_NEAR(r.p_value, 0.0009463183421516755, 1e-12);
}

// Reference values computed with scipy.stats (kendalltau default method and
// spearmanr) for inputs that take the approximate path.
TEST(Correlation, ApproximateMatchesReference) {
  const std::vector<double> x{1, 2, 2, 3, 4, 5, 5, 6, 7, 8}, y{2, 1, 3, 3, 5, 4, 6, 8, 7, 8};
  auto kt = kendall_tau(x, y);
  EXPECT_EQ(kt.p_method, PValueMethod::Approximate);
  EXPECT_NEAR(kt.statistic, 0.8139534883720931, 1e-12);
  EXPECT_NEAR(kt.p_value, 0.001469449864818364, 1e-9);
  auto sp = spearman(x, y);
  EXPECT_NEAR(sp.statistic, 0.9294478527607363, 1e-12);
  EXPECT_NEAR(sp.p_value, 9.948728857305954e-05, 1e-9);

  std::vector<double> u(11), v{2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 11};
  std::iota(u.begin(), u.end(), 1.0);
  kt = kendall_tau(u, v);
  EXPECT_EQ(kt.p_method, PValueMethod::Approximate);
  EXPECT_NEAR(kt.statistic, 0.8181818181818182, 1e-12);
  EXPECT_NEAR(kt.p_value, 0.00045962606940060243, 1e-9);
  sp = spearman(u, v);
  EXPECT_EQ(sp.p_method, PValueMethod::Approximate);
  EXPECT_NEAR(sp.statistic, 0.9545454545454546, 1e-12);
  EXPECT_NEAR(sp.p_value, 4.988898739949763e-06, 1e-12);
}

TEST(Correlation, Preconditions) {
  const std::vector<double> two{1, 2};
  EXPECT_THROW(kendall_tau(two, two), PreconditionError);
  const std::vector<double> flat{3, 3, 3}, ok{1, 2, 3};
  EXPECT_THROW(kendall_tau(flat, ok), DegenerateRanking);
  EXPECT_THROW(spearman(ok, flat), DegenerateRanking);
  EXPECT_THROW(spearman(ok, two), PreconditionError);
  const PairedRatings dup{{"a", 1, 1}, {"a", 2, 2}, {"b", 3, 3}};
  EXPECT_THROW(kendall_tau(dup), PreconditionError);
}

TEST(Correlation, PairedRatingsJson) {
  const auto pairs = paired_ratings_from_json(json::parse(
      R"([{"id": "a", "human": 1, "model": 2}, {"id": 2, "human": 2, "model": 1},
          {"id": "c", "human": 3, "model": 3}])"));
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[1].id, "2");
  EXPECT_NEAR(kendall_tau(pairs).statistic, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(paired_ratings_from_json(json::object()), DataError);
}

TEST(Ranks, AverageTies) {
  const std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Preferences, Percentages) {
  auto p = preference_percentages({Aspect::Entity, 59, 108});
  EXPECT_EQ(p.first, 35.33);
  EXPECT_EQ(p.second, 64.67);
  p = preference_percentages({Aspect::Style, 88, 115});
  EXPECT_EQ(p.first, 43.35);
  EXPECT_EQ(p.second, 56.65);
  EXPECT_THROW(preference_percentages({Aspect::Style, 0, 0}), PreconditionError);
  const auto tallies = tallies_from_json(json::parse(R"({"aspect": "style", "votes_a": 1, "votes_b": 2})"));
  EXPECT_EQ(tallies[0].aspect, Aspect::Style);
}

TEST(Pairwise, WinRates) {
  const auto s = pairwise_scores({{"a", "b"}, {"a", "c"}, {"b", "c"}, {"c", "a"}});
  EXPECT_DOUBLE_EQ(s.at("a"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.at("b"), 0.5);
  EXPECT_DOUBLE_EQ(s.at("c"), 1.0 / 3.0);
  EXPECT_THROW(pairwise_scores({{"a", "a"}}), PreconditionError);
  EXPECT_THROW(pairwise_scores({}), PreconditionError);
  EXPECT_THROW(pairwise_scores({{"a", "b"}}, {"a", "b", "d"}), PreconditionError);
}
