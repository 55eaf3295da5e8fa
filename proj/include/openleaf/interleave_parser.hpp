#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "openleaf/document.hpp"

namespace openleaf {

// ---- `<img{i}>` placeholders ---------------------------------------------

struct PlaceholderMatch {
  std::size_t offset = 0;  // position of '<'
  std::size_t length = 0;
  int index = 0;
};

// Next placeholder at or after `from`. Grammar: '<' + "img" (any case) +
// decimal index without leading zeros, >= 1 + '>'. Anything else is text.
std::optional<PlaceholderMatch> find_placeholder(std::string_view text, std::size_t from = 0);

struct InterleavedParse {
  std::vector<Segment> segments;
  std::vector<std::string> warnings;

  std::vector<int> slot_indices() const;
};

// Throws DuplicateSlotIndex.
InterleavedParse parse_interleaved(std::string_view text);

// ---- numbered lists ------------------------------------------------------

struct ListItem {
  int index = 0;
  std::string text;

  friend bool operator==(const ListItem&, const ListItem&) = default;
};

struct ParsedList {
  std::vector<ListItem> items;  // ascending index
};

// Accepts `<n>.` / `<n>)` item lines; non-blank lines that follow an item are
// merged into it with a single space. A blank line ends the current item.
// Throws CountMismatch (items must be exactly 1..expected_count) or DuplicateIndex.
ParsedList parse_numbered_list(std::string_view text, int expected_count);

// Same, but the item indices must equal `expected_indices` as a set.
ParsedList parse_numbered_list(std::string_view text, const std::vector<int>& expected_indices);

// ---- webpage output ------------------------------------------------------

struct HtmlParse {
  std::string html;
  std::string css;
  std::vector<int> slots;  // document order
};

// Throws NoHtmlFound, DuplicateSlotIndex.
HtmlParse parse_html_output(std::string_view text);

struct HtmlPlaceholder {
  std::size_t offset = 0;
  int index = 0;
};

// All `<img ... src="img{i}.png" ...>` occurrences, duplicates included.
std::vector<HtmlPlaceholder> scan_html_placeholders(std::string_view html);

// Visible section text and image placeholders of a generated page, in order.
std::vector<Segment> segments_from_html(std::string_view html);

// ---- global context ------------------------------------------------------

struct ContextParse {
  GlobalContext context;
  std::vector<std::string> warnings;
};

// `SUBJECT: <name> - <appearance>` lines and one `STYLE: <description>` line.
// Over-long descriptions are truncated to the word caps with a warning.
// Throws MissingStyle.
ContextParse parse_global_context(std::string_view text);
// Entities from one response, style from another (the pipeline asks separately).
ContextParse parse_global_context(std::string_view entity_text, std::string_view style_text);

std::vector<SubjectAppearance> parse_entity_lines(std::string_view text,
                                                  std::vector<std::string>& warnings);
// Throws MissingStyle.
std::string parse_style_line(std::string_view text, std::vector<std::string>& warnings);

// `SUBJECT: <name>` lines (appearance part optional and ignored), in order.
std::vector<std::string> parse_subject_names(std::string_view text);

// ---- scores --------------------------------------------------------------

struct ScoreLine {
  std::string label;
  double value = 0.0;

  friend bool operator==(const ScoreLine&, const ScoreLine&) = default;
};

// Primary grammar `SCORE(<label>): <number>` with optional "/10"; fallback
// scans the sentence after a free-form mention of the label for the first
// number in [0, 10] or `n/10`. One ScoreLine per label, in label order.
// Throws ScoreNotFound, ScoreOutOfRange.
std::vector<ScoreLine> extract_scores(std::string_view text,
                                      const std::vector<std::string>& expected_labels);

std::string format_score_line(const ScoreLine& line);

// Appearance summaries written as `SUMMARY(image_<i>, <subject>): <text>`.
std::map<int, std::vector<SubjectObservation>> parse_appearance_summaries(std::string_view text);

}  // namespace openleaf
