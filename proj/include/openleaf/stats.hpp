#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "openleaf/document.hpp"

namespace openleaf {

struct RatedItem {
  std::string id;
  double human = 0.0;
  double model = 0.0;
};

// At least 3 items with unique ids.
using PairedRatings = std::vector<RatedItem>;

enum class CorrelationMethod { KendallTauB, Spearman };
enum class PValueMethod { Exact, Approximate };

std::string_view method_name(CorrelationMethod method);  // kendall_tau_b | spearman
std::string_view p_method_name(PValueMethod method);     // exact | approximate

struct CorrelationResult {
  double statistic = 0.0;  // [-1, 1]
  double p_value = 1.0;    // two-sided, [0, 1]
  CorrelationMethod method = CorrelationMethod::KendallTauB;
  PValueMethod p_method = PValueMethod::Exact;
};

json to_json(const CorrelationResult& result);

// Kendall tau-b. Exact p-value from the permutation distribution of
// concordant-minus-discordant pairs when n <= 10 and neither axis has ties;
// otherwise normal approximation with the tie-corrected variance.
// Throws PreconditionError (n < 3, size mismatch), DegenerateRanking.
CorrelationResult kendall_tau(std::span<const double> x, std::span<const double> y);

// Spearman rho on average ranks. Exact permutation p-value when n <= 8 and
// neither axis has ties; otherwise the t approximation with n - 2 dof.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

CorrelationResult kendall_tau(const PairedRatings& pairs);
CorrelationResult spearman(const PairedRatings& pairs);

void require_valid(const PairedRatings& pairs);
PairedRatings paired_ratings_from_json(const json& j);  // [{id, human, model}, ...]

// Ties share the mean of the ranks they span; ranks start at 1.
std::vector<double> average_ranks(std::span<const double> values);

// P(|S| >= |s|) for S = concordant - discordant over n distinct ranks under
// independence. Counts come from the inversion-number (Mahonian) recurrence.
double kendall_exact_p(int n, long long s);

enum class Aspect { Entity, Style };

std::string_view aspect_name(Aspect aspect);
Aspect parse_aspect(std::string_view name);

struct PreferenceTally {
  Aspect aspect = Aspect::Entity;
  long long votes_a = 0;
  long long votes_b = 0;
};

// 100 * votes / total for each side, rounded to 2 decimals.
std::pair<double, double> preference_percentages(const PreferenceTally& tally);

std::vector<PreferenceTally> tallies_from_json(const json& j);  // [{aspect, votes_a, votes_b}]

// Win rate per item: wins / comparisons it took part in.
std::map<std::string, double> pairwise_scores(
    const std::vector<std::pair<std::string, std::string>>& winner_loser);

// As above; every listed item must have at least one comparison.
std::map<std::string, double> pairwise_scores(
    const std::vector<std::pair<std::string, std::string>>& winner_loser,
    const std::vector<std::string>& items);

}  // namespace openleaf
