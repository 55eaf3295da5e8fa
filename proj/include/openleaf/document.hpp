#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace openleaf {

using json = nlohmann::json;

enum class TaskKind { Story, HowTo, StoryRewrite, Webpage };

// CLI/file spelling: story, howto, rewrite, webpage.
std::string_view task_name(TaskKind task);
TaskKind parse_task(std::string_view name);

inline constexpr std::size_t kMaxAppearanceWords = 40;
inline constexpr std::size_t kMaxStyleWords = 30;

struct Query {
  std::string id;
  TaskKind task = TaskKind::Story;
  std::string user_input;
  int image_count = 1;
  std::optional<int> unit_count;
  std::string example_set = "default";
};

// Throws PreconditionError when the query is unusable.
void require_valid(const Query& query);

struct Segment {
  enum class Kind { Text, ImageSlot };

  Kind kind = Kind::Text;
  std::string text;
  int slot_index = 0;

  static Segment text_of(std::string text) { return {Kind::Text, std::move(text), 0}; }
  static Segment slot(int index) { return {Kind::ImageSlot, {}, index}; }

  bool is_text() const noexcept { return kind == Kind::Text; }
  bool is_slot() const noexcept { return kind == Kind::ImageSlot; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ImageSlotDetail {
  int slot_index = 0;
  std::string visual_prompt;
  std::optional<std::string> augmented_prompt;
  std::optional<std::string> image_ref;

  friend bool operator==(const ImageSlotDetail&, const ImageSlotDetail&) = default;
};

struct SubjectAppearance {
  std::string subject_name;
  std::string appearance;

  friend bool operator==(const SubjectAppearance&, const SubjectAppearance&) = default;
};

struct GlobalContext {
  std::vector<SubjectAppearance> entities;
  std::string style;

  friend bool operator==(const GlobalContext&, const GlobalContext&) = default;
};

struct InterleavedDocument {
  std::string query_id;
  TaskKind task = TaskKind::Story;
  std::vector<Segment> segments;
  std::vector<ImageSlotDetail> slots;
  std::optional<std::string> html;
  std::optional<std::string> css;
  std::optional<GlobalContext> global_context;

  const ImageSlotDetail* find_slot(int index) const;
  ImageSlotDetail* find_slot(int index);

  // Slot indices in the order their placeholders appear in the document.
  std::vector<int> slot_order() const;
  std::size_t text_segment_count() const;

  friend bool operator==(const InterleavedDocument&, const InterleavedDocument&) = default;
};

struct Violation {
  std::string invariant;
  std::string message;
};

// Total over structurally well-formed input; an empty result means valid.
std::vector<Violation> validate_document(const InterleavedDocument& doc);
std::vector<Violation> validate_global_context(const GlobalContext& ctx);

std::size_t word_count(std::string_view text);

// Emits Text verbatim and `<img{i}>` per slot.
std::string render_segments(std::span<const Segment> segments);

// ---- evaluation records --------------------------------------------------

enum class StyleFactor {
  MediaType,
  ColorPalette,
  Tint,
  Ambiance,
  Saturation,
  Contrast,
  OverallFeel,
};

inline constexpr std::size_t kStyleFactorCount = 7;
inline constexpr std::array<StyleFactor, kStyleFactorCount> kStyleFactors = {
    StyleFactor::MediaType,  StyleFactor::ColorPalette, StyleFactor::Tint,
    StyleFactor::Ambiance,   StyleFactor::Saturation,   StyleFactor::Contrast,
    StyleFactor::OverallFeel,
};

std::string_view factor_label(StyleFactor factor);        // media_type
std::string_view factor_display_name(StyleFactor factor);  // media type

inline constexpr double kMinScore = 0.0;
inline constexpr double kMaxScore = 10.0;

struct SubjectObservation {
  std::string subject;
  std::string appearance;

  friend bool operator==(const SubjectObservation&, const SubjectObservation&) = default;
};

struct EntityEval {
  std::vector<std::string> subjects;
  std::map<int, std::vector<SubjectObservation>> per_image_summaries;
  std::string rationale;
  double score = 0.0;
};

struct StyleEval {
  std::array<double, kStyleFactorCount> factor_scores{};
  std::string rationale;
  double final_score = 0.0;

  double factor(StyleFactor f) const { return factor_scores[static_cast<std::size_t>(f)]; }
};

double mean_score(std::span<const double> scores);
StyleEval make_style_eval(const std::array<double, kStyleFactorCount>& factor_scores,
                          std::string rationale);

struct EvalResult {
  std::string query_id;
  EntityEval entity;
  StyleEval style;
};

std::vector<Violation> validate_eval(const EvalResult& result);

// ---- serialization -------------------------------------------------------

json to_json(const GlobalContext& ctx);
GlobalContext global_context_from_json(const json& j);
json to_json(const InterleavedDocument& doc);
InterleavedDocument document_from_json(const json& j);
json to_json(const Query& query);
Query query_from_json(const json& j);
json to_json(const EntityEval& eval);
json to_json(const StyleEval& eval);
EntityEval entity_eval_from_json(const json& j);
StyleEval style_eval_from_json(const json& j);

// Canonical document.json text (sorted keys, two-space indent, trailing newline).
std::string serialize(const InterleavedDocument& doc);
InterleavedDocument deserialize_document(std::string_view text);

}  // namespace openleaf
