#include "openleaf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "openleaf/errors.hpp"

namespace openleaf {

std::string_view method_name(CorrelationMethod method) {
  return method == CorrelationMethod::KendallTauB ? "kendall_tau_b" : "spearman";
}

std::string_view p_method_name(PValueMethod method) {
  return method == PValueMethod::Exact ? "exact" : "approximate";
}

json to_json(const CorrelationResult& r) {
  return {{"statistic", r.statistic},
          {"p_value", r.p_value},
          {"method", method_name(r.method)},
          {"p_method", p_method_name(r.p_method)}};
}

namespace {

constexpr int kKendallExactMaxN = 10;
constexpr int kSpearmanExactMaxN = 8;

int sign(double v) { return (v > 0) - (v < 0); }

void require_pairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw PreconditionError(fmt::format("rating axes differ in length ({} vs {})", x.size(), y.size()));
  if (x.size() < 3) throw PreconditionError("correlation needs at least 3 items");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw PreconditionError("ratings must be finite");
  auto all_equal = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (all_equal(x)) throw DegenerateRanking("human");
  if (all_equal(y)) throw DegenerateRanking("model");
}

// Sizes of the groups of equal values (only groups > 1).
std::vector<double> tie_groups(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> groups;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    if (j - i > 1) groups.push_back(static_cast<double>(j - i));
    i = j;
  }
  return groups;
}

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double kendall_exact_p(int n, long long s) {
  if (n < 2) throw PreconditionError("exact Kendall p-value needs n >= 2");
  // counts[k] = permutations of n elements with k inversions.
  std::vector<double> counts{1.0};
  for (int m = 2; m <= n; ++m) {
    std::vector<double> next(counts.size() + static_cast<std::size_t>(m - 1), 0.0);
    for (std::size_t k = 0; k < counts.size(); ++k)
      for (int j = 0; j < m; ++j) next[k + static_cast<std::size_t>(j)] += counts[k];
    counts = std::move(next);
  }
  const long long pairs = static_cast<long long>(n) * (n - 1) / 2;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double extreme = 0.0;
  for (std::size_t d = 0; d < counts.size(); ++d) {
    const long long stat = pairs - 2 * static_cast<long long>(d);
    if (std::llabs(stat) >= std::llabs(s)) extreme += counts[d];
  }
  return clamp_p(extreme / total);
}

CorrelationResult kendall_tau(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const std::size_t n = x.size();
  long long s = 0, untied_x = 0, untied_y = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      s += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }

  CorrelationResult r;
  r.method = CorrelationMethod::KendallTauB;
  r.statistic = std::clamp(static_cast<double>(s) /
                               std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y)),
                           -1.0, 1.0);

  const auto tx = tie_groups(x);
  const auto ty = tie_groups(y);
  if (n <= kKendallExactMaxN && tx.empty() && ty.empty()) {
    r.p_method = PValueMethod::Exact;
    r.p_value = kendall_exact_p(static_cast<int>(n), s);
    return r;
  }
  const double nn = static_cast<double>(n);
  auto sum = [](const std::vector<double>& groups, auto f) {
    double acc = 0.0;
    for (double t : groups) acc += f(t);
    return acc;
  };
  const double v0 = nn * (nn - 1) * (2 * nn + 5);
  const double vt = sum(tx, [](double t) { return t * (t - 1) * (2 * t + 5); });
  const double vu = sum(ty, [](double t) { return t * (t - 1) * (2 * t + 5); });
  const double v1 = sum(tx, [](double t) { return t * (t - 1); }) *
                    sum(ty, [](double t) { return t * (t - 1); }) / (2 * nn * (nn - 1));
  const double v2 = sum(tx, [](double t) { return t * (t - 1) * (t - 2); }) *
                    sum(ty, [](double t) { return t * (t - 1) * (t - 2); }) /
                    (9 * nn * (nn - 1) * (nn - 2));
  const double var = (v0 - vt - vu) / 18.0 + v1 + v2;
  r.p_method = PValueMethod::Approximate;
  r.p_value = clamp_p(std::erfc(std::abs(static_cast<double>(s)) / std::sqrt(var) / std::sqrt(2.0)));
  return r;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

long long squared_rank_diff(const std::vector<int>& rx, const std::vector<int>& ry) {
  long long d2 = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const long long d = rx[i] - ry[i];
    d2 += d * d;
  }
  return d2;
}

}  // namespace

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const bool ties = !tie_groups(x).empty() || !tie_groups(y).empty();
  const long long n = static_cast<long long>(x.size());

  CorrelationResult r;
  r.method = CorrelationMethod::Spearman;
  if (ties) {
    r.statistic = std::clamp(pearson(rx, ry), -1.0, 1.0);
  } else {
    // Integer ranks: the textbook formula is exact and matches hand calculations.
    std::vector<int> ix(rx.begin(), rx.end()), iy(ry.begin(), ry.end());
    const long long denom = n * (n * n - 1);
    const long long d2 = squared_rank_diff(ix, iy);
    r.statistic = 1.0 - 6.0 * static_cast<double>(d2) / static_cast<double>(denom);
    if (n <= kSpearmanExactMaxN) {
      // |rho| >= |rho_obs|  <=>  |denom - 6 d2| >= |denom - 6 d2_obs|, in integers.
      const long long observed = std::llabs(denom - 6 * d2);
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 1);
      long long extreme = 0, total = 0;
      do {
        ++total;
        if (std::llabs(denom - 6 * squared_rank_diff(ix, perm)) >= observed) ++extreme;
      } while (std::next_permutation(perm.begin(), perm.end()));
      r.p_method = PValueMethod::Exact;
      r.p_value = clamp_p(static_cast<double>(extreme) / static_cast<double>(total));
      return r;
    }
  }
  r.p_method = PValueMethod::Approximate;
  const double rho = r.statistic;
  if (std::abs(rho) >= 1.0) {
    r.p_value = 0.0;
    return r;
  }
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
  boost::math::students_t dist(dof);
  r.p_value = clamp_p(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return r;
}

void require_valid(const PairedRatings& pairs) {
  if (pairs.size() < 3) throw PreconditionError("paired ratings need at least 3 items");
  std::set<std::string> ids;
  for (const auto& item : pairs)
    if (!ids.insert(item.id).second)
      throw PreconditionError(fmt::format("duplicate rating id '{}'", item.id));
}

namespace {

std::pair<std::vector<double>, std::vector<double>> axes(const PairedRatings& pairs) {
  require_valid(pairs);
  std::vector<double> h, m;
  for (const auto& item : pairs) {
    h.push_back(item.human);
    m.push_back(item.model);
  }
  return {h, m};
}

}  // namespace

CorrelationResult kendall_tau(const PairedRatings& pairs) {
  const auto [h, m] = axes(pairs);
  return kendall_tau(h, m);
}

CorrelationResult spearman(const PairedRatings& pairs) {
  const auto [h, m] = axes(pairs);
  return spearman(h, m);
}

PairedRatings paired_ratings_from_json(const json& j) {
  if (!j.is_array()) throw DataError("paired ratings must be a JSON array");
  PairedRatings out;
  try {
    for (const auto& item : j) {
      RatedItem r;
      r.id = item.at("id").is_string() ? item.at("id").get<std::string>() : item.at("id").dump();
      r.human = item.at("human").get<double>();
      r.model = item.at("model").get<double>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("bad paired ratings: {}", e.what()));
  }
  return out;
}

std::string_view aspect_name(Aspect aspect) {
  return aspect == Aspect::Entity ? "entity" : "style";
}

Aspect parse_aspect(std::string_view name) {
  if (name == "entity") return Aspect::Entity;
  if (name == "style") return Aspect::Style;
  throw DataError(fmt::format("unknown aspect '{}'", name));
}

std::pair<double, double> preference_percentages(const PreferenceTally& tally) {
  if (tally.votes_a < 0 || tally.votes_b < 0 || tally.votes_a + tally.votes_b < 1)
    throw PreconditionError("a tally needs non-negative votes and at least one vote");
  const double total = static_cast<double>(tally.votes_a + tally.votes_b);
  auto pct = [&](long long votes) {
    return std::round(10000.0 * static_cast<double>(votes) / total) / 100.0;
  };
  return {pct(tally.votes_a), pct(tally.votes_b)};
}

std::vector<PreferenceTally> tallies_from_json(const json& j) {
  const json& list = j.is_array() ? j : json::array({j});
  std::vector<PreferenceTally> out;
  try {
    for (const auto& t : list)
      out.push_back({parse_aspect(t.at("aspect").get<std::string>()),
                     t.at("votes_a").get<long long>(), t.at("votes_b").get<long long>()});
  } catch (const json::exception& e) {
    throw DataError(fmt::format("bad preference tally: {}", e.what()));
  }
  return out;
}

std::map<std::string, double> pairwise_scores(
    const std::vector<std::pair<std::string, std::string>>& winner_loser) {
  return pairwise_scores(winner_loser, {});
}

std::map<std::string, double> pairwise_scores(
    const std::vector<std::pair<std::string, std::string>>& winner_loser,
    const std::vector<std::string>& items) {
  if (winner_loser.empty()) throw PreconditionError("no pairwise comparisons given");
  std::map<std::string, std::pair<long long, long long>> tally;  // wins, comparisons
  for (const auto& id : items) tally[id];
  for (const auto& [winner, loser] : winner_loser) {
    if (winner == loser)
      throw PreconditionError(fmt::format("item '{}' compared with itself", winner));
    ++tally[winner].first;
    ++tally[winner].second;
    ++tally[loser].second;
  }
  std::map<std::string, double> scores;
  for (const auto& [id, wc] : tally) {
    if (wc.second == 0) throw PreconditionError(fmt::format("item '{}' has no comparisons", id));
    scores[id] = static_cast<double>(wc.first) / static_cast<double>(wc.second);
  }
  return scores;
}

}  // namespace openleaf
