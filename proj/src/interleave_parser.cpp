#include "openleaf/interleave_parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "openleaf/errors.hpp"
#include "text_util.hpp"

namespace openleaf {

using detail::iequals_prefix;
using detail::split_lines;
using detail::trim;

// ---- placeholders --------------------------------------------------------

std::optional<PlaceholderMatch> find_placeholder(std::string_view text, std::size_t from) {
  for (std::size_t pos = text.find('<', from); pos != std::string_view::npos;
       pos = text.find('<', pos + 1)) {
    std::size_t i = pos + 1;
    if (!iequals_prefix(text.substr(i), "img")) continue;
    i += 3;
    if (i >= text.size() || text[i] < '1' || text[i] > '9') continue;
    const std::size_t digits_begin = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size() || text[i] != '>') continue;
    // Indices beyond int range are not placeholders.
    if (i - digits_begin > 9) continue;
    const int index = std::stoi(std::string(text.substr(digits_begin, i - digits_begin)));
    return PlaceholderMatch{pos, i + 1 - pos, index};
  }
  return std::nullopt;
}

std::vector<int> InterleavedParse::slot_indices() const {
  std::vector<int> out;
  for (const auto& s : segments)
    if (s.is_slot()) out.push_back(s.slot_index);
  return out;
}

InterleavedParse parse_interleaved(std::string_view text) {
  InterleavedParse result;
  std::set<int> seen;
  std::size_t cursor = 0;
  while (auto match = find_placeholder(text, cursor)) {
    if (match->offset > cursor)
      result.segments.push_back(
          Segment::text_of(std::string(text.substr(cursor, match->offset - cursor))));
    if (!seen.insert(match->index).second) throw DuplicateSlotIndex(match->index);
    result.segments.push_back(Segment::slot(match->index));
    cursor = match->offset + match->length;
  }
  if (cursor < text.size()) result.segments.push_back(Segment::text_of(std::string(text.substr(cursor))));

  const auto indices = result.slot_indices();
  if (!std::is_sorted(indices.begin(), indices.end()))
    result.warnings.push_back("non-ascending indices");
  if (!indices.empty() && *seen.rbegin() != static_cast<int>(seen.size()))
    result.warnings.push_back("non-contiguous indices");
  return result;
}

// ---- numbered lists ------------------------------------------------------

namespace {

// `<n>.` or `<n>)` followed by whitespace or end of line.
std::optional<std::pair<int, std::string_view>> match_list_item(std::string_view line) {
  line = trim(line);
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i > 9 || i >= line.size()) return std::nullopt;
  if (line[i] != '.' && line[i] != ')') return std::nullopt;
  const std::size_t rest = i + 1;
  if (rest < line.size() && !std::isspace(static_cast<unsigned char>(line[rest])))
    return std::nullopt;
  return std::pair{std::stoi(std::string(line.substr(0, i))), trim(line.substr(rest))};
}

void append_words(std::string& target, std::string_view piece) {
  piece = trim(piece);
  if (piece.empty()) return;
  if (!target.empty()) target += ' ';
  target += piece;
}

}  // namespace

ParsedList parse_numbered_list(std::string_view text, const std::vector<int>& expected_indices) {
  if (expected_indices.empty()) throw PreconditionError("expected_count must be >= 1");

  std::vector<ListItem> items;
  std::set<int> seen;
  bool continuing = false;
  for (auto line : split_lines(text)) {
    if (auto item = match_list_item(line)) {
      if (!seen.insert(item->first).second) throw DuplicateIndex(item->first);
      items.push_back({item->first, std::string(item->second)});
      continuing = true;
    } else if (trim(line).empty()) {
      continuing = false;
    } else if (continuing) {
      append_words(items.back().text, line);
    }
  }
  std::sort(items.begin(), items.end(),
            [](const ListItem& a, const ListItem& b) { return a.index < b.index; });

  const std::set<int> expected(expected_indices.begin(), expected_indices.end());
  std::vector<int> missing;
  std::vector<int> extra;
  std::set_difference(expected.begin(), expected.end(), seen.begin(), seen.end(),
                      std::back_inserter(missing));
  std::set_difference(seen.begin(), seen.end(), expected.begin(), expected.end(),
                      std::back_inserter(extra));
  if (!missing.empty() || !extra.empty())
    throw CountMismatch(static_cast<int>(expected.size()), static_cast<int>(items.size()),
                        std::move(missing), std::move(extra));
  return ParsedList{std::move(items)};
}

ParsedList parse_numbered_list(std::string_view text, int expected_count) {
  if (expected_count < 1) throw PreconditionError("expected_count must be >= 1");
  std::vector<int> indices(static_cast<std::size_t>(expected_count));
  for (int i = 0; i < expected_count; ++i) indices[static_cast<std::size_t>(i)] = i + 1;
  return parse_numbered_list(text, indices);
}

// ---- webpage output ------------------------------------------------------

namespace {

struct Block {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Content of the first ```<lang> fence, excluding the fence lines.
std::optional<Block> find_fence(std::string_view text, std::string_view lang) {
  std::size_t pos = 0;
  while ((pos = text.find("```", pos)) != std::string_view::npos) {
    const std::size_t line_end = text.find('\n', pos);
    if (line_end == std::string_view::npos) return std::nullopt;
    const auto tag = trim(text.substr(pos + 3, line_end - pos - 3));
    if (detail::iequals(tag, lang)) {
      const std::size_t begin = line_end + 1;
      std::size_t close = text.find("```", begin);
      if (close == std::string_view::npos) close = text.size();
      return Block{begin, close};
    }
    // Skip past the whole fenced block so its closing fence is not taken as an opener.
    const std::size_t close = text.find("```", line_end + 1);
    if (close == std::string_view::npos) return std::nullopt;
    pos = close + 3;
  }
  return std::nullopt;
}

std::optional<Block> find_html_element(std::string_view text) {
  const auto lower = detail::to_lower(text);
  std::size_t begin = lower.find("<!doctype html");
  if (begin == std::string::npos) begin = lower.find("<html");
  if (begin == std::string::npos) return std::nullopt;
  const std::size_t close = lower.find("</html>", begin);
  const std::size_t end = close == std::string::npos ? text.size() : close + 7;
  return Block{begin, end};
}

std::optional<std::string> style_element_content(std::string_view html) {
  static const std::regex style_re(R"(<style[^>]*>([\s\S]*?)</style\s*>)", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(html.begin(), html.end(), m, style_re)) return m[1].str();
  return std::nullopt;
}

}  // namespace

std::vector<HtmlPlaceholder> scan_html_placeholders(std::string_view html) {
  static const std::regex img_tag(R"(<img\b[^>]*>)", std::regex::icase);
  static const std::regex src_attr(R"(\bsrc\s*=\s*(["'])img([1-9][0-9]{0,8})\.png\1)",
                                   std::regex::icase);
  std::vector<HtmlPlaceholder> out;
  using It = std::string_view::const_iterator;
  for (std::regex_iterator<It> it(html.begin(), html.end(), img_tag), end; it != end; ++it) {
    const std::string tag = it->str();
    std::smatch m;
    if (std::regex_search(tag, m, src_attr))
      out.push_back({static_cast<std::size_t>(it->position()), std::stoi(m[2].str())});
  }
  return out;
}

HtmlParse parse_html_output(std::string_view text) {
  HtmlParse result;
  if (auto fence = find_fence(text, "html")) {
    result.html = std::string(text.substr(fence->begin, fence->end - fence->begin));
  } else if (auto element = find_html_element(text)) {
    result.html = std::string(text.substr(element->begin, element->end - element->begin));
  } else {
    throw NoHtmlFound();
  }
  if (trim(result.html).empty()) throw NoHtmlFound();

  if (auto fence = find_fence(text, "css"))
    result.css = std::string(text.substr(fence->begin, fence->end - fence->begin));
  else if (auto style = style_element_content(result.html))
    result.css = *style;

  std::set<int> seen;
  for (const auto& p : scan_html_placeholders(result.html)) {
    if (!seen.insert(p.index).second) throw DuplicateSlotIndex(p.index);
    result.slots.push_back(p.index);
  }
  return result;
}

namespace {

std::string decode_entities(std::string text) {
  static const std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&nbsp;", " "}, {"&quot;", "\""}, {"&#39;", "'"}, {"&apos;", "'"}, {"&amp;", "&"}};
  for (const auto& [entity, replacement] : kEntities) {
    std::size_t pos = 0;
    while ((pos = text.find(entity, pos)) != std::string::npos) {
      text.replace(pos, entity.size(), replacement);
      pos += replacement.size();
    }
  }
  return text;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<Segment> segments_from_html(std::string_view html) {
  static const std::regex skipped(R"(<(style|script)\b[^>]*>[\s\S]*?</\1\s*>|<!--[\s\S]*?-->)",
                                  std::regex::icase);
  const std::string cleaned = std::regex_replace(std::string(html), skipped, " ");

  std::map<std::size_t, int> placeholders;
  for (const auto& p : scan_html_placeholders(cleaned)) placeholders[p.offset] = p.index;

  std::vector<Segment> out;
  std::string pending;
  auto flush_piece = [&](std::string_view raw) {
    auto piece = collapse_whitespace(decode_entities(std::string(raw)));
    if (piece.empty()) return;
    if (!pending.empty()) pending += '\n';
    pending += piece;
  };
  auto flush_text = [&] {
    if (!pending.empty()) out.push_back(Segment::text_of(std::move(pending)));
    pending.clear();
  };

  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    const std::size_t open = cleaned.find('<', pos);
    if (open == std::string::npos) {
      flush_piece(std::string_view(cleaned).substr(pos));
      break;
    }
    flush_piece(std::string_view(cleaned).substr(pos, open - pos));
    std::size_t close = cleaned.find('>', open);
    if (close == std::string::npos) close = cleaned.size() - 1;
    if (auto it = placeholders.find(open); it != placeholders.end()) {
      flush_text();
      out.push_back(Segment::slot(it->second));
    }
    pos = close + 1;
  }
  flush_text();
  return out;
}

// ---- global context ------------------------------------------------------

namespace {

std::string_view strip_decoration(std::string_view line) {
  line = trim(line);
  while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '#'))
    line = trim(line.substr(1));
  if (line.starts_with("•")) line = trim(line.substr(3));
  return line;
}

// Returns the text after `LABEL:` (case-insensitive, optional ** around label).
std::optional<std::string_view> labeled_value(std::string_view line, std::string_view label) {
  line = strip_decoration(line);
  if (!iequals_prefix(line, label)) return std::nullopt;
  auto rest = line.substr(label.size());
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  if (rest.empty() || rest.front() != ':') return std::nullopt;
  rest.remove_prefix(1);
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  return trim(rest);
}

std::pair<std::string_view, std::string_view> split_subject(std::string_view value) {
  // Em dash, en dash, spaced hyphen, colon.
  static constexpr std::string_view kSeparators[] = {"\u2014", "\u2013", " - ", ":"};
  std::size_t best = std::string_view::npos;
  std::size_t best_len = 0;
  for (auto sep : kSeparators) {
    const auto pos = value.find(sep);
    if (pos < best) {
      best = pos;
      best_len = sep.size();
    }
  }
  if (best == std::string_view::npos) return {trim(value), {}};
  return {trim(value.substr(0, best)), trim(value.substr(best + best_len))};
}

std::string truncate_words(std::string_view text, std::size_t cap, bool& truncated) {
  truncated = word_count(text) > cap;
  if (!truncated) return std::string(text);
  std::string out;
  std::size_t words = 0;
  for (auto word : detail::split_words(text)) {
    if (words++ == cap) break;
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

}  // namespace

std::vector<SubjectAppearance> parse_entity_lines(std::string_view text,
                                                  std::vector<std::string>& warnings) {
  std::vector<SubjectAppearance> entities;
  std::set<std::string> seen;
  for (auto line : split_lines(text)) {
    auto value = labeled_value(line, "SUBJECT");
    if (!value) continue;
    auto [name, appearance] = split_subject(*value);
    if (name.empty()) continue;
    if (appearance.empty()) {
      warnings.push_back(fmt::format("subject '{}' has no appearance; skipped", name));
      continue;
    }
    if (!seen.insert(detail::to_lower(name)).second) {
      warnings.push_back(fmt::format("duplicate subject '{}' ignored", name));
      continue;
    }
    bool truncated = false;
    auto capped = truncate_words(appearance, kMaxAppearanceWords, truncated);
    if (truncated)
      warnings.push_back(
          fmt::format("appearance of '{}' truncated to {} words", name, kMaxAppearanceWords));
    entities.push_back({std::string(name), std::move(capped)});
  }
  return entities;
}

std::string parse_style_line(std::string_view text, std::vector<std::string>& warnings) {
  std::optional<std::string> style;
  for (auto line : split_lines(text)) {
    auto value = labeled_value(line, "STYLE");
    if (!value || value->empty()) continue;
    if (style) {
      warnings.push_back("additional STYLE line ignored");
      continue;
    }
    bool truncated = false;
    style = truncate_words(*value, kMaxStyleWords, truncated);
    if (truncated)
      warnings.push_back(fmt::format("style description truncated to {} words", kMaxStyleWords));
  }
  if (!style) throw MissingStyle();
  return std::move(*style);
}

ContextParse parse_global_context(std::string_view text) {
  return parse_global_context(text, text);
}

ContextParse parse_global_context(std::string_view entity_text, std::string_view style_text) {
  ContextParse result;
  result.context.entities = parse_entity_lines(entity_text, result.warnings);
  result.context.style = parse_style_line(style_text, result.warnings);
  return result;
}

std::vector<std::string> parse_subject_names(std::string_view text) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (auto line : split_lines(text)) {
    if (auto value = labeled_value(line, "SUBJECT")) {
      auto name = split_subject(*value).first;
      if (!name.empty() && seen.insert(detail::to_lower(name)).second)
        names.emplace_back(name);
    }
  }
  return names;
}

std::map<int, std::vector<SubjectObservation>> parse_appearance_summaries(std::string_view text) {
  static const std::regex summary_re(
      R"(SUMMARY\s*\(\s*image_([1-9][0-9]{0,8})\s*,\s*([^)]+?)\s*\)\s*:\s*(.*\S))",
      std::regex::icase);
  std::map<int, std::vector<SubjectObservation>> out;
  for (auto line : split_lines(text)) {
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(line.begin(), line.end(), m, summary_re))
      out[std::stoi(m[1].str())].push_back({m[2].str(), m[3].str()});
  }
  return out;
}

}  // namespace openleaf
