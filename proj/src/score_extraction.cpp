#include <cstdlib>
#include <map>
#include <optional>
#include <regex>

#include <fmt/format.h>

#include "openleaf/errors.hpp"
#include "openleaf/interleave_parser.hpp"
#include "text_util.hpp"

namespace openleaf {

namespace {

// Labels compare equal modulo case and the separators ' ', '_', '-'.
std::string normalize_label(std::string_view label) {
  std::string out;
  for (char c : detail::trim(label)) {
    if (c == ' ' || c == '_' || c == '-') {
      if (!out.empty() && out.back() != '_') out += '_';
    } else {
      out += detail::lower(c);
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

double parse_decimal(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

// A sentence ends at a newline or at '.', '!', '?' not inside a decimal number.
std::size_t sentence_end(std::string_view text, std::size_t from) {
  for (std::size_t i = from; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') return i;
    if (c == '!' || c == '?') return i;
    if (c == '.') {
      const bool decimal = i > 0 && std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
                           i + 1 < text.size() &&
                           std::isdigit(static_cast<unsigned char>(text[i + 1]));
      if (!decimal) return i;
    }
  }
  return text.size();
}

// First number in [0, 10] within the span. `n/10` yields n; `n/d` with any
// other denominator does not qualify. Digits glued to identifiers
// (image_3, 4K) are not numbers.
std::optional<double> first_qualifying_number(std::string_view span) {
  std::size_t i = 0;
  while (i < span.size()) {
    const char c = span[i];
    if (!std::isdigit(static_cast<unsigned char>(c)) ||
        (i > 0 && (detail::is_word_char(span[i - 1]) || span[i - 1] == '.'))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < span.size() && std::isdigit(static_cast<unsigned char>(span[j]))) ++j;
    if (j + 1 < span.size() && span[j] == '.' && std::isdigit(static_cast<unsigned char>(span[j + 1]))) {
      ++j;
      while (j < span.size() && std::isdigit(static_cast<unsigned char>(span[j]))) ++j;
    }
    if (j < span.size() && detail::is_word_char(span[j])) {
      i = j;
      continue;
    }
    const double value = parse_decimal(std::string(span.substr(i, j - i)));

    std::size_t k = j;
    while (k < span.size() && span[k] == ' ') ++k;
    if (k < span.size() && span[k] == '/') {
      ++k;
      while (k < span.size() && span[k] == ' ') ++k;
      std::size_t d = k;
      while (d < span.size() && std::isdigit(static_cast<unsigned char>(span[d]))) ++d;
      const bool is_ten = span.substr(k, d - k) == "10";
      if (is_ten && value >= kMinScore && value <= kMaxScore) return value;
      i = d;
      continue;
    }
    if (value >= kMinScore && value <= kMaxScore) return value;
    i = j;
  }
  return std::nullopt;
}

std::regex label_mention_regex(std::string_view label) {
  std::string pattern = "(^|[^A-Za-z0-9_])";
  std::string spaced(label);
  for (char& c : spaced)
    if (c == '_' || c == '-') c = ' ';
  bool first = true;
  for (auto word : detail::split_words(spaced)) {
    if (!first) pattern += "[\\s_-]+";
    first = false;
    for (char c : word) {
      if (std::isalnum(static_cast<unsigned char>(c)))
        pattern += c;
      else
        pattern += std::string("\\") + c;
    }
  }
  pattern += "(?![A-Za-z0-9_])";
  return std::regex(pattern, std::regex::icase);
}

std::optional<double> fallback_score(std::string_view text, std::string_view label) {
  const auto mention = label_mention_regex(label);
  using It = std::string_view::const_iterator;
  for (std::regex_iterator<It> it(text.begin(), text.end(), mention), end; it != end; ++it) {
    const auto after = static_cast<std::size_t>(it->position() + it->length());
    const auto stop = sentence_end(text, after);
    if (auto value = first_qualifying_number(text.substr(after, stop - after))) return value;
  }
  return std::nullopt;
}

}  // namespace

std::vector<ScoreLine> extract_scores(std::string_view text,
                                      const std::vector<std::string>& expected_labels) {
  if (expected_labels.empty()) throw PreconditionError("expected_labels is empty");

  static const std::regex score_re(
      R"(SCORE\s*\(\s*([^)\n]+?)\s*\)\s*[:=]\s*([-+]?[0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?)(\s*/\s*10\b)?)",
      std::regex::icase);

  std::map<std::string, double> primary;
  using It = std::string_view::const_iterator;
  for (std::regex_iterator<It> it(text.begin(), text.end(), score_re), end; it != end; ++it) {
    primary.try_emplace(normalize_label((*it)[1].str()), parse_decimal((*it)[2].str()));
  }

  std::vector<ScoreLine> out;
  std::vector<std::string> missing;
  for (const auto& label : expected_labels) {
    if (auto hit = primary.find(normalize_label(label)); hit != primary.end()) {
      if (hit->second < kMinScore || hit->second > kMaxScore) throw ScoreOutOfRange(label, hit->second);
      out.push_back({label, hit->second});
    } else if (auto value = fallback_score(text, label)) {
      out.push_back({label, *value});
    } else {
      missing.push_back(label);
    }
  }
  if (!missing.empty()) throw ScoreNotFound(std::move(missing));
  return out;
}

std::string format_score_line(const ScoreLine& line) {
  return fmt::format("SCORE({}): {}", line.label, line.value);
}

}  // namespace openleaf
