#include "openleaf/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace openleaf {

std::string_view category_token(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Usage: return "USAGE";
    case ErrorCategory::Precondition: return "PRECONDITION";
    case ErrorCategory::Composition: return "COMPOSITION";
    case ErrorCategory::Io: return "IO";
    case ErrorCategory::Data: return "DATA";
    case ErrorCategory::Auth: return "AUTH";
    case ErrorCategory::RateLimited: return "RATE_LIMITED";
    case ErrorCategory::Transport: return "TRANSPORT";
    case ErrorCategory::BadResponse: return "BAD_RESPONSE";
    case ErrorCategory::CassetteMiss: return "CASSETTE_MISS";
    case ErrorCategory::DuplicateSlotIndex: return "DUPLICATE_SLOT_INDEX";
    case ErrorCategory::DuplicateIndex: return "DUPLICATE_INDEX";
    case ErrorCategory::CountMismatch: return "COUNT_MISMATCH";
    case ErrorCategory::PlaceholderCountMismatch: return "PLACEHOLDER_COUNT_MISMATCH";
    case ErrorCategory::EmptyVisualPrompt: return "EMPTY_VISUAL_PROMPT";
    case ErrorCategory::NoHtmlFound: return "NO_HTML_FOUND";
    case ErrorCategory::MissingStyle: return "MISSING_STYLE";
    case ErrorCategory::ScoreNotFound: return "SCORE_NOT_FOUND";
    case ErrorCategory::ScoreOutOfRange: return "SCORE_OUT_OF_RANGE";
    case ErrorCategory::SubjectCount: return "SUBJECT_COUNT";
    case ErrorCategory::DegenerateRanking: return "DEGENERATE_RANKING";
  }
  return "UNKNOWN";
}

CountMismatch::CountMismatch(int expected, int found, std::vector<int> missing,
                             std::vector<int> extra)
    : Error(ErrorCategory::CountMismatch,
            fmt::format("expected {} list items, found {} (missing [{}], extra [{}])", expected,
                        found, fmt::join(missing, ", "), fmt::join(extra, ", "))),
      expected_(expected),
      found_(found),
      missing_(std::move(missing)),
      extra_(std::move(extra)) {}

ScoreNotFound::ScoreNotFound(std::vector<std::string> labels)
    : Error(ErrorCategory::ScoreNotFound,
            fmt::format("no score found for: {}", fmt::join(labels, ", "))),
      labels_(std::move(labels)) {}

ScoreOutOfRange::ScoreOutOfRange(std::string label, double value)
    : Error(ErrorCategory::ScoreOutOfRange,
            fmt::format("score for {} is {} which is outside [0, 10]", label, value)),
      label_(std::move(label)),
      value_(value) {}

}  // namespace openleaf
