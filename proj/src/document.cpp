#include "openleaf/document.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "openleaf/errors.hpp"
#include "openleaf/interleave_parser.hpp"

namespace openleaf {

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::Story: return "story";
    case TaskKind::HowTo: return "howto";
    case TaskKind::StoryRewrite: return "rewrite";
    case TaskKind::Webpage: return "webpage";
  }
  return "story";
}

TaskKind parse_task(std::string_view name) {
  if (name == "story") return TaskKind::Story;
  if (name == "howto") return TaskKind::HowTo;
  if (name == "rewrite") return TaskKind::StoryRewrite;
  if (name == "webpage") return TaskKind::Webpage;
  throw DataError(fmt::format("unknown task '{}'", name));
}

void require_valid(const Query& query) {
  if (query.user_input.empty()) throw PreconditionError("query user_input is empty");
  if (query.image_count < 1) throw PreconditionError("query image_count must be >= 1");
  if (query.unit_count && *query.unit_count < 1)
    throw PreconditionError("query unit_count must be >= 1 when present");
}

const ImageSlotDetail* InterleavedDocument::find_slot(int index) const {
  auto it = std::find_if(slots.begin(), slots.end(),
                         [index](const ImageSlotDetail& s) { return s.slot_index == index; });
  return it == slots.end() ? nullptr : &*it;
}

ImageSlotDetail* InterleavedDocument::find_slot(int index) {
  return const_cast<ImageSlotDetail*>(std::as_const(*this).find_slot(index));
}

std::vector<int> InterleavedDocument::slot_order() const {
  std::vector<int> order;
  for (const auto& seg : segments)
    if (seg.is_slot()) order.push_back(seg.slot_index);
  return order;
}

std::size_t InterleavedDocument::text_segment_count() const {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(), [](const Segment& s) { return s.is_text(); }));
}

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

std::string render_segments(std::span<const Segment> segments) {
  std::string out;
  for (const auto& seg : segments) {
    if (seg.is_text())
      out += seg.text;
    else
      out += fmt::format("<img{}>", seg.slot_index);
  }
  return out;
}

std::vector<Violation> validate_global_context(const GlobalContext& ctx) {
  std::vector<Violation> out;
  if (ctx.style.empty()) out.push_back({"context.style", "style description is empty"});
  if (word_count(ctx.style) > kMaxStyleWords)
    out.push_back({"context.style", fmt::format("style description exceeds {} words",
                                                kMaxStyleWords)});
  std::set<std::string> seen;
  for (const auto& e : ctx.entities) {
    if (!seen.insert(e.subject_name).second)
      out.push_back({"context.subjects", fmt::format("duplicate subject '{}'", e.subject_name)});
    if (e.subject_name.empty())
      out.push_back({"context.subjects", "subject with empty name"});
    if (e.appearance.empty())
      out.push_back({"context.appearance",
                     fmt::format("subject '{}' has an empty appearance", e.subject_name)});
    if (word_count(e.appearance) > kMaxAppearanceWords)
      out.push_back({"context.appearance",
                     fmt::format("appearance of '{}' exceeds {} words", e.subject_name,
                                 kMaxAppearanceWords)});
  }
  return out;
}

std::vector<Violation> validate_document(const InterleavedDocument& doc) {
  std::vector<Violation> out;

  std::map<int, int> segment_slots;
  for (std::size_t i = 0; i < doc.segments.size(); ++i) {
    const auto& seg = doc.segments[i];
    if (seg.is_text()) {
      if (seg.text.empty())
        out.push_back({"segment.text", fmt::format("empty text segment at position {}", i)});
      else if (find_placeholder(seg.text))
        out.push_back(
            {"segment.text", fmt::format("text segment at position {} contains an image tag", i)});
    } else {
      if (seg.slot_index < 1)
        out.push_back({"segment.slot_index",
                       fmt::format("invalid slot index {} at position {}", seg.slot_index, i)});
      if (++segment_slots[seg.slot_index] == 2)
        out.push_back({"segment.slot_index",
                       fmt::format("duplicate image slot {}", seg.slot_index)});
    }
  }

  std::map<int, int> details;
  for (const auto& slot : doc.slots) {
    if (++details[slot.slot_index] == 2)
      out.push_back({"slots.unique", fmt::format("duplicate slot detail {}", slot.slot_index)});
    if (!segment_slots.contains(slot.slot_index))
      out.push_back({"slots.matching", fmt::format("orphan slot detail {}", slot.slot_index)});
    if (slot.augmented_prompt) {
      if (!doc.global_context)
        out.push_back({"slots.augmented_prompt",
                       fmt::format("slot {} has an augmented prompt but no global context",
                                   slot.slot_index)});
      else if (!slot.augmented_prompt->starts_with(doc.global_context->style))
        out.push_back({"slots.augmented_prompt",
                       fmt::format("augmented prompt of slot {} does not begin with the style",
                                   slot.slot_index)});
    }
  }
  for (const auto& [index, count] : segment_slots) {
    (void)count;
    if (!details.contains(index))
      out.push_back({"slots.matching", fmt::format("missing slot detail {}", index)});
  }

  if (doc.task == TaskKind::Webpage) {
    if (!doc.html) {
      out.push_back({"webpage.html", "webpage requires html"});
    } else {
      std::map<int, int> in_html;
      for (const auto& p : scan_html_placeholders(*doc.html)) ++in_html[p.index];
      for (const auto& [index, count] : segment_slots) {
        (void)count;
        const int n = in_html.contains(index) ? in_html[index] : 0;
        if (n != 1)
          out.push_back({"webpage.html",
                         fmt::format("slot {} appears {} times in html", index, n)});
      }
      for (const auto& [index, count] : in_html) {
        (void)count;
        if (!segment_slots.contains(index))
          out.push_back({"webpage.html", fmt::format("html placeholder {} has no slot", index)});
      }
    }
  } else {
    if (doc.html) out.push_back({"html.absent", "html present on a non-webpage document"});
    if (doc.css) out.push_back({"html.absent", "css present on a non-webpage document"});
  }

  if (doc.global_context) {
    for (auto& v : validate_global_context(*doc.global_context)) out.push_back(std::move(v));
  }
  return out;
}

std::string_view factor_label(StyleFactor factor) {
  switch (factor) {
    case StyleFactor::MediaType: return "media_type";
    case StyleFactor::ColorPalette: return "color_palette";
    case StyleFactor::Tint: return "tint";
    case StyleFactor::Ambiance: return "ambiance";
    case StyleFactor::Saturation: return "saturation";
    case StyleFactor::Contrast: return "contrast";
    case StyleFactor::OverallFeel: return "overall_feel";
  }
  return "";
}

std::string_view factor_display_name(StyleFactor factor) {
  switch (factor) {
    case StyleFactor::MediaType: return "media type";
    case StyleFactor::ColorPalette: return "color palette";
    case StyleFactor::Tint: return "tint";
    case StyleFactor::Ambiance: return "ambiance";
    case StyleFactor::Saturation: return "saturation";
    case StyleFactor::Contrast: return "contrast";
    case StyleFactor::OverallFeel: return "overall feel";
  }
  return "";
}

double mean_score(std::span<const double> scores) {
  if (scores.empty()) throw PreconditionError("mean of an empty score list");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

StyleEval make_style_eval(const std::array<double, kStyleFactorCount>& factor_scores,
                          std::string rationale) {
  StyleEval eval;
  eval.factor_scores = factor_scores;
  eval.rationale = std::move(rationale);
  eval.final_score = mean_score(factor_scores);
  return eval;
}

namespace {

bool in_score_range(double v) { return v >= kMinScore && v <= kMaxScore; }

}  // namespace

std::vector<Violation> validate_eval(const EvalResult& result) {
  std::vector<Violation> out;
  if (result.entity.subjects.size() != 2)
    out.push_back({"entity.subjects", fmt::format("expected 2 subjects, found {}",
                                                  result.entity.subjects.size())});
  if (!in_score_range(result.entity.score))
    out.push_back({"entity.score", fmt::format("score {} outside [0, 10]", result.entity.score)});
  for (auto f : kStyleFactors) {
    if (!in_score_range(result.style.factor(f)))
      out.push_back({"style.factor_scores",
                     fmt::format("{} score {} outside [0, 10]", factor_label(f),
                                 result.style.factor(f))});
  }
  if (std::abs(result.style.final_score - mean_score(result.style.factor_scores)) > 1e-9)
    out.push_back({"style.final_score", "final score is not the mean of the factor scores"});
  return out;
}

// ---- serialization -------------------------------------------------------

json to_json(const GlobalContext& ctx) {
  json entities = json::array();
  for (const auto& e : ctx.entities)
    entities.push_back({{"subject_name", e.subject_name}, {"appearance", e.appearance}});
  return {{"entities", std::move(entities)}, {"style", ctx.style}};
}

GlobalContext global_context_from_json(const json& j) {
  GlobalContext ctx;
  for (const auto& e : j.at("entities"))
    ctx.entities.push_back({e.at("subject_name").get<std::string>(),
                            e.at("appearance").get<std::string>()});
  ctx.style = j.at("style").get<std::string>();
  return ctx;
}

json to_json(const InterleavedDocument& doc) {
  json segments = json::array();
  for (const auto& seg : doc.segments) {
    if (seg.is_text())
      segments.push_back({{"kind", "text"}, {"text", seg.text}});
    else
      segments.push_back({{"kind", "image_slot"}, {"slot_index", seg.slot_index}});
  }
  json slots = json::array();
  for (const auto& slot : doc.slots) {
    json s = {{"slot_index", slot.slot_index}, {"visual_prompt", slot.visual_prompt}};
    if (slot.augmented_prompt) s["augmented_prompt"] = *slot.augmented_prompt;
    if (slot.image_ref) s["image_ref"] = *slot.image_ref;
    slots.push_back(std::move(s));
  }
  json j = {{"query_id", doc.query_id},
            {"task", task_name(doc.task)},
            {"segments", std::move(segments)},
            {"slots", std::move(slots)}};
  if (doc.html) j["html"] = *doc.html;
  if (doc.css) j["css"] = *doc.css;
  if (doc.global_context) j["global_context"] = to_json(*doc.global_context);
  return j;
}

InterleavedDocument document_from_json(const json& j) {
  try {
    InterleavedDocument doc;
    doc.query_id = j.at("query_id").get<std::string>();
    doc.task = parse_task(j.at("task").get<std::string>());
    for (const auto& s : j.at("segments")) {
      const auto kind = s.at("kind").get<std::string>();
      if (kind == "text")
        doc.segments.push_back(Segment::text_of(s.at("text").get<std::string>()));
      else if (kind == "image_slot")
        doc.segments.push_back(Segment::slot(s.at("slot_index").get<int>()));
      else
        throw DataError(fmt::format("unknown segment kind '{}'", kind));
    }
    for (const auto& s : j.at("slots")) {
      ImageSlotDetail slot;
      slot.slot_index = s.at("slot_index").get<int>();
      slot.visual_prompt = s.at("visual_prompt").get<std::string>();
      if (s.contains("augmented_prompt"))
        slot.augmented_prompt = s["augmented_prompt"].get<std::string>();
      if (s.contains("image_ref")) slot.image_ref = s["image_ref"].get<std::string>();
      doc.slots.push_back(std::move(slot));
    }
    if (j.contains("html")) doc.html = j["html"].get<std::string>();
    if (j.contains("css")) doc.css = j["css"].get<std::string>();
    if (j.contains("global_context"))
      doc.global_context = global_context_from_json(j["global_context"]);
    return doc;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed document: {}", e.what()));
  }
}

json to_json(const Query& query) {
  json j = {{"id", query.id},
            {"task", task_name(query.task)},
            {"user_input", query.user_input},
            {"image_count", query.image_count},
            {"example_set", query.example_set}};
  if (query.unit_count) j["unit_count"] = *query.unit_count;
  return j;
}

Query query_from_json(const json& j) {
  try {
    Query q;
    q.id = j.at("id").get<std::string>();
    q.task = parse_task(j.at("task").get<std::string>());
    q.user_input = j.at("user_input").get<std::string>();
    q.image_count = j.at("image_count").get<int>();
    if (j.contains("unit_count")) q.unit_count = j["unit_count"].get<int>();
    q.example_set = j.value("example_set", std::string{"default"});
    return q;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed query: {}", e.what()));
  }
}

json to_json(const EntityEval& eval) {
  json summaries = json::object();
  for (const auto& [index, observations] : eval.per_image_summaries) {
    json list = json::array();
    for (const auto& o : observations)
      list.push_back({{"subject", o.subject}, {"appearance", o.appearance}});
    summaries[fmt::format("image_{}", index)] = std::move(list);
  }
  return {{"subjects", eval.subjects},
          {"per_image_summaries", std::move(summaries)},
          {"rationale", eval.rationale},
          {"score", eval.score}};
}

json to_json(const StyleEval& eval) {
  json factors = json::object();
  for (auto f : kStyleFactors) factors[std::string(factor_label(f))] = eval.factor(f);
  return {{"factor_scores", std::move(factors)},
          {"rationale", eval.rationale},
          {"final_score", eval.final_score}};
}

EntityEval entity_eval_from_json(const json& j) {
  EntityEval eval;
  eval.subjects = j.at("subjects").get<std::vector<std::string>>();
  eval.rationale = j.value("rationale", std::string{});
  eval.score = j.at("score").get<double>();
  if (j.contains("per_image_summaries")) {
    for (const auto& [key, list] : j["per_image_summaries"].items()) {
      if (!key.starts_with("image_")) continue;
      const int index = std::stoi(key.substr(6));
      for (const auto& o : list)
        eval.per_image_summaries[index].push_back(
            {o.at("subject").get<std::string>(), o.at("appearance").get<std::string>()});
    }
  }
  return eval;
}

StyleEval style_eval_from_json(const json& j) {
  StyleEval eval;
  const auto& factors = j.at("factor_scores");
  for (auto f : kStyleFactors)
    eval.factor_scores[static_cast<std::size_t>(f)] =
        factors.at(std::string(factor_label(f))).get<double>();
  eval.rationale = j.value("rationale", std::string{});
  eval.final_score = j.at("final_score").get<double>();
  return eval;
}

std::string serialize(const InterleavedDocument& doc) { return to_json(doc).dump(2) + "\n"; }

InterleavedDocument deserialize_document(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("document is not valid JSON: {}", e.what()));
  }
  return document_from_json(j);
}

}  // namespace openleaf
