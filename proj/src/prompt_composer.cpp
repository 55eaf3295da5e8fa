#include "openleaf/prompt_composer.hpp"

#include <algorithm>
#include <regex>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace openleaf {

// ---- templating ----------------------------------------------------------

namespace {

bool is_name_char(char c) { return detail::is_word_char(c); }

// Calls on_text for literal runs and on_name for each `{{name}}`.
template <typename OnText, typename OnName>
void scan_placeholders(std::string_view text, OnText on_text, OnName on_name) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const auto name = text.substr(open + 2, close - open - 2);
    if (name.empty() || !std::all_of(name.begin(), name.end(), is_name_char)) {
      on_text(text.substr(pos, open + 2 - pos));
      pos = open + 2;
      continue;
    }
    on_text(text.substr(pos, open - pos));
    on_name(name);
    pos = close + 2;
  }
  on_text(text.substr(pos));
}

PartKind part_kind(std::string_view name) {
  if (name == "examples") return PartKind::InContextExamples;
  if (name == "instruction") return PartKind::Instruction;
  if (name == "user_input") return PartKind::UserInput;
  if (name == "controls") return PartKind::ControlSentences;
  throw DataError(fmt::format("unknown template section '{}'", name));
}

bool part_included(const TemplatePart& part, const Bindings& bindings) {
  if (!part.condition) return true;
  return bindings.contains(*part.condition) != part.negated;
}

std::string join_indices(const std::vector<int>& indices, std::string_view prefix) {
  std::vector<std::string> names;
  for (int i : indices) names.push_back(fmt::format("{}{}", prefix, i));
  return fmt::format("{}", fmt::join(names, ", "));
}

}  // namespace

std::string substitute(std::string_view text, const Bindings& bindings) {
  std::string out;
  scan_placeholders(
      text, [&](std::string_view literal) { out += literal; },
      [&](std::string_view name) {
        auto it = bindings.find(std::string(name));
        if (it == bindings.end())
          throw CompositionError(fmt::format("template placeholder '{{{{{}}}}}' is unbound", name));
        out += it->second;
      });
  return out;
}

std::vector<std::string> placeholder_names(std::string_view text) {
  std::vector<std::string> names;
  scan_placeholders(
      text, [](std::string_view) {}, [&](std::string_view name) { names.emplace_back(name); });
  return names;
}

PromptTemplate parse_template(std::string template_id, std::string_view text) {
  static const std::regex header(R"(^\[\[([a-z_]+)(?:\s+(if|unless)\s+([A-Za-z0-9_]+))?\]\]\s*$)");
  PromptTemplate tmpl{std::move(template_id), {}};
  std::vector<std::string> bodies;
  for (auto line : detail::split_lines(text)) {
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_match(line.begin(), line.end(), m, header)) {
      TemplatePart part;
      part.kind = part_kind(m[1].str());
      if (m[2].matched) {
        part.condition = m[3].str();
        part.negated = m[2].str() == "unless";
      }
      if (!tmpl.parts.empty() && part.kind < tmpl.parts.back().kind)
        throw DataError(fmt::format("template {}: section '{}' is out of order", tmpl.template_id,
                                    m[1].str()));
      tmpl.parts.push_back(std::move(part));
      bodies.emplace_back();
    } else if (tmpl.parts.empty()) {
      if (!detail::trim(line).empty())
        throw DataError(fmt::format("template {}: text before the first section header",
                                    tmpl.template_id));
    } else {
      bodies.back() += line;
      bodies.back() += '\n';
    }
  }
  if (tmpl.parts.empty()) throw DataError(fmt::format("template {} has no sections", tmpl.template_id));
  for (std::size_t i = 0; i < tmpl.parts.size(); ++i)
    tmpl.parts[i].text = std::string(detail::trim(bodies[i]));
  return tmpl;
}

std::string compose(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::vector<std::string> pieces;
  for (const auto& part : tmpl.parts) {
    if (!part_included(part, bindings)) continue;
    try {
      pieces.push_back(substitute(part.text, bindings));
    } catch (const CompositionError& e) {
      throw CompositionError(fmt::format("{}: {}", tmpl.template_id, e.what()));
    }
  }
  return fmt::format("{}\n", fmt::join(pieces, "\n\n"));
}

// ---- library -------------------------------------------------------------

std::shared_ptr<const PromptLibrary> PromptLibrary::load(const fs::path& root) {
  auto library = std::make_shared<PromptLibrary>();
  const auto templates = root / "templates";
  if (!fs::is_directory(templates))
    throw IoError(fmt::format("template directory {} not found", templates.string()));
  for (const auto& group : fs::directory_iterator(templates)) {
    if (!group.is_directory()) continue;
    for (const auto& file : fs::directory_iterator(group.path())) {
      if (file.path().extension() != ".txt") continue;
      const auto id = fmt::format("{}/{}", group.path().filename().string(),
                                  file.path().stem().string());
      library->add_template(parse_template(id, read_text_file(file.path())));
    }
  }

  const auto incontext = root / "incontext";
  if (fs::is_directory(incontext)) {
    for (const auto& group : fs::directory_iterator(incontext)) {
      if (!group.is_directory()) continue;
      const auto dir_task = parse_task(group.path().filename().string());
      for (const auto& file : fs::directory_iterator(group.path())) {
        if (file.path().extension() != ".json") continue;
        try {
          const auto j = json::parse(read_text_file(file.path()));
          InContextExample ex;
          ex.example_id = file.path().stem().string();
          ex.task = j.contains("task") ? parse_task(j["task"].get<std::string>()) : dir_task;
          ex.input_text = j.at("input_text").get<std::string>();
          ex.output_text = j.at("output_text").get<std::string>();
          ex.set = j.value("set", std::string{"default"});
          if (ex.input_text.empty() || ex.output_text.empty())
            throw DataError(fmt::format("in-context example {} has empty text", ex.example_id));
          library->add_example(std::move(ex));
        } catch (const json::exception& e) {
          throw DataError(fmt::format("malformed example {}: {}", file.path().string(), e.what()));
        }
      }
    }
  }
  return library;
}

const PromptTemplate& PromptLibrary::get(std::string_view group, std::string_view stage) const {
  const auto id = fmt::format("{}/{}", group, stage);
  auto it = templates_.find(id);
  if (it == templates_.end()) throw DataError(fmt::format("template {} not found", id));
  return it->second;
}

std::vector<InContextExample> PromptLibrary::examples_for(TaskKind task, std::string_view set) const {
  std::vector<InContextExample> out;
  for (const auto& ex : examples_)
    if (ex.task == task && ex.set == set) out.push_back(ex);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
  return out;
}

void PromptLibrary::add_template(PromptTemplate tmpl) {
  auto id = tmpl.template_id;
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

void PromptLibrary::add_example(InContextExample example) { examples_.push_back(std::move(example)); }

// ---- composer ------------------------------------------------------------

std::string document_text(const InterleavedDocument& doc) {
  return std::string(detail::trim(render_segments(doc.segments)));
}

PromptComposer::PromptComposer(std::shared_ptr<const PromptLibrary> library)
    : library_(std::move(library)) {
  if (!library_) throw PreconditionError("prompt composer needs a template library");
}

std::string PromptComposer::generation_prompt(const Query& query,
                                              std::span<const InContextExample> examples) const {
  require_valid(query);
  const auto& example_tmpl = library_->get("common", "example");
  std::vector<std::string> blocks;
  for (const auto& ex : examples) {
    if (ex.task != query.task)
      throw CompositionError(fmt::format("in-context example '{}' is for task {}, query is {}",
                                         ex.example_id, task_name(ex.task), task_name(query.task)));
    blocks.push_back(compose(example_tmpl, {{"input_text", ex.input_text},
                                            {"output_text", ex.output_text}}));
  }

  Bindings bindings = {{"user_input", query.user_input},
                       {"image_count", std::to_string(query.image_count)}};
  if (!blocks.empty()) bindings["examples"] = fmt::format("{}", fmt::join(blocks, "\n"));
  if (query.unit_count) bindings["unit_count"] = std::to_string(*query.unit_count);
  return compose(library_->get(task_name(query.task), "generate"), bindings);
}

std::string PromptComposer::generation_prompt(const Query& query) const {
  const auto examples = library_->examples_for(query.task, query.example_set);
  return generation_prompt(query, examples);
}

std::string PromptComposer::placeholder_repair_prompt(const Query& query,
                                                      std::string_view original_prompt,
                                                      int placeholders_found) const {
  const auto repair = compose(library_->get("common", "placeholder_repair"),
                              {{"expected", std::to_string(query.image_count)},
                               {"found", std::to_string(placeholders_found)}});
  return fmt::format("{}\n{}", original_prompt, repair);
}

namespace {

void require_text_and_slots(const InterleavedDocument& doc, bool need_slots) {
  if (doc.text_segment_count() == 0) throw PreconditionError("document has no text segments");
  if (need_slots && doc.slot_order().empty()) throw PreconditionError("document has no image slots");
}

}  // namespace

std::string PromptComposer::visual_prompt_request(const InterleavedDocument& doc) const {
  require_text_and_slots(doc, true);
  auto order = doc.slot_order();
  std::sort(order.begin(), order.end());
  return compose(library_->get(task_name(doc.task), "visual_prompts"),
                 {{"document_text", document_text(doc)},
                  {"prompt_count", std::to_string(order.size())},
                  {"slot_list", join_indices(order, "")}});
}

std::string PromptComposer::entity_context_request(const InterleavedDocument& doc) const {
  require_text_and_slots(doc, false);
  return compose(library_->get(task_name(doc.task), "entity_context"),
                 {{"document_text", document_text(doc)},
                  {"max_appearance_words", std::to_string(kMaxAppearanceWords)}});
}

std::string PromptComposer::style_context_request(const InterleavedDocument& doc) const {
  require_text_and_slots(doc, false);
  return compose(library_->get(task_name(doc.task), "style_context"),
                 {{"document_text", document_text(doc)},
                  {"max_style_words", std::to_string(kMaxStyleWords)}});
}

std::string PromptComposer::subject_detection_prompt(const InterleavedDocument& doc) const {
  require_text_and_slots(doc, false);
  return compose(library_->get("eval", "subject_detection"), {{"document_text", document_text(doc)}});
}

std::string PromptComposer::subject_repair_prompt(std::string_view original_prompt,
                                                  int subjects_found) const {
  const auto repair = compose(library_->get("eval", "subject_repair"),
                              {{"found", std::to_string(subjects_found)}});
  return fmt::format("{}\n{}", original_prompt, repair);
}

std::string PromptComposer::entity_eval_prompt(const InterleavedDocument& doc,
                                               const std::vector<int>& image_indices,
                                               const std::vector<std::string>& subjects) const {
  if (image_indices.size() < 2)
    throw PreconditionError("entity consistency needs at least 2 images");
  require_text_and_slots(doc, false);
  if (!subjects.empty() && subjects.size() != 2)
    throw PreconditionError("entity evaluation takes exactly 2 subjects");
  Bindings bindings = {{"document_text", document_text(doc)},
                       {"image_count", std::to_string(image_indices.size())},
                       {"image_list", join_indices(image_indices, "image_")},
                       {"first_image", fmt::format("image_{}", image_indices.front())}};
  if (!subjects.empty()) {
    bindings["subject_1"] = subjects[0];
    bindings["subject_2"] = subjects[1];
  }
  return compose(library_->get("eval", "entity"), bindings);
}

std::string PromptComposer::style_eval_prompt(const std::vector<int>& image_indices) const {
  if (image_indices.size() < 2) throw PreconditionError("style consistency needs at least 2 images");
  std::vector<std::string> factors;
  std::vector<std::string> score_lines;
  for (auto f : kStyleFactors) {
    factors.push_back(fmt::format("- {} ({})", factor_display_name(f), factor_label(f)));
    score_lines.push_back(fmt::format("SCORE({}): <number from 0 to 10>", factor_label(f)));
  }
  return compose(library_->get("eval", "style"),
                 {{"image_count", std::to_string(image_indices.size())},
                  {"image_list", join_indices(image_indices, "image_")},
                  {"factor_count", std::to_string(kStyleFactorCount)},
                  {"factor_list", fmt::format("{}", fmt::join(factors, "\n"))},
                  {"score_lines", fmt::format("{}", fmt::join(score_lines, "\n"))}});
}

}  // namespace openleaf
