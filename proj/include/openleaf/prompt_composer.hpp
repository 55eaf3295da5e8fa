#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "openleaf/document.hpp"

namespace openleaf {

enum class PartKind { InContextExamples, Instruction, UserInput, ControlSentences };

struct TemplatePart {
  PartKind kind = PartKind::Instruction;
  std::string text;
  // Part is emitted only when `condition` is bound (or unbound, if negated).
  std::optional<std::string> condition;
  bool negated = false;
};

struct PromptTemplate {
  std::string template_id;
  std::vector<TemplatePart> parts;  // kinds in non-decreasing PartKind order
};

struct InContextExample {
  std::string example_id;
  TaskKind task = TaskKind::Story;
  std::string input_text;
  std::string output_text;
  std::string set = "default";
};

using Bindings = std::map<std::string, std::string>;

// `{{name}}` substitution in one pass; substituted values are not rescanned.
// Throws CompositionError naming the first unbound placeholder.
std::string substitute(std::string_view text, const Bindings& bindings);

std::vector<std::string> placeholder_names(std::string_view text);

// Template files are split into parts by header lines `[[examples]]`,
// `[[instruction]]`, `[[user_input]]`, `[[controls]]`, each optionally
// suffixed `if <name>` / `unless <name>`. Throws DataError on bad structure.
PromptTemplate parse_template(std::string template_id, std::string_view text);

// Included parts, substituted and joined by blank lines.
std::string compose(const PromptTemplate& tmpl, const Bindings& bindings);

// Templates (`templates/<group>/<stage>.txt`) and in-context examples
// (`incontext/<task>/<id>.json`) loaded from a resource root.
class PromptLibrary {
 public:
  static std::shared_ptr<const PromptLibrary> load(const std::filesystem::path& root);

  const PromptTemplate& get(std::string_view group, std::string_view stage) const;
  std::vector<InContextExample> examples_for(TaskKind task, std::string_view set) const;

  void add_template(PromptTemplate tmpl);
  void add_example(InContextExample example);

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
  std::vector<InContextExample> examples_;
};

class PromptComposer {
 public:
  explicit PromptComposer(std::shared_ptr<const PromptLibrary> library);

  // Examples, instruction, user input, control sentences, in that order.
  std::string generation_prompt(const Query& query, std::span<const InContextExample> examples) const;
  std::string generation_prompt(const Query& query) const;
  std::string placeholder_repair_prompt(const Query& query, std::string_view original_prompt,
                                        int placeholders_found) const;

  std::string visual_prompt_request(const InterleavedDocument& doc) const;
  std::string entity_context_request(const InterleavedDocument& doc) const;
  std::string style_context_request(const InterleavedDocument& doc) const;

  std::string subject_detection_prompt(const InterleavedDocument& doc) const;
  std::string subject_repair_prompt(std::string_view original_prompt, int subjects_found) const;
  // Without `subjects` the prompt asks the judge to detect them itself.
  std::string entity_eval_prompt(const InterleavedDocument& doc, const std::vector<int>& image_indices,
                                 const std::vector<std::string>& subjects = {}) const;
  std::string style_eval_prompt(const std::vector<int>& image_indices) const;

  const PromptLibrary& library() const { return *library_; }

 private:
  std::shared_ptr<const PromptLibrary> library_;
};

// Generated text with `<img{i}>` tags inline, as shown to the text model.
std::string document_text(const InterleavedDocument& doc);

}  // namespace openleaf
