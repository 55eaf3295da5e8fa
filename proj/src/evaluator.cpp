#include "openleaf/evaluator.hpp"

#include <future>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"
#include "openleaf/interleave_parser.hpp"

namespace fs = std::filesystem;

namespace openleaf {

namespace {

std::vector<int> positions(std::size_t n) {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i) + 1;
  return out;
}

std::string ask(const std::string& prompt, const std::vector<Bytes>& images, std::string stage,
                const Backends& backends, bool text_only, StageLog& log, VisionMode mode) {
  if (text_only) {
    if (!backends.text) throw PreconditionError("text backend not configured");
    const TextRequest req{prompt, kDefaultMaxOutputTokens, kExtractionTemperature};
    return logged_text_call(*backends.text, req, std::move(stage), log).text;
  }
  if (!backends.vision) throw PreconditionError("vision backend not configured");
  return logged_vision_call(*backends.vision, VisionRequest{prompt, images, mode}, std::move(stage),
                            log)
      .text;
}

std::vector<std::string> detect_subjects(const InterleavedDocument& doc,
                                         const std::vector<Bytes>& images, const Backends& backends,
                                         const PromptComposer& composer, StageLog& log,
                                         const EvalOptions& options) {
  const auto prompt = composer.subject_detection_prompt(doc);
  auto subjects = parse_subject_names(ask(prompt, images, "subject_detection", backends,
                                          options.detect_with_text_backend, log, options.mode));
  if (subjects.size() == 2) return subjects;
  spdlog::warn("document {}: judge named {} subjects; retrying once", doc.query_id, subjects.size());
  const auto repair = composer.subject_repair_prompt(prompt, static_cast<int>(subjects.size()));
  subjects = parse_subject_names(ask(repair, images, "subject_detection.retry", backends,
                                     options.detect_with_text_backend, log, options.mode));
  if (subjects.size() != 2) throw SubjectCountError(static_cast<int>(subjects.size()));
  return subjects;
}

}  // namespace

EntityEval evaluate_entity(const InterleavedDocument& doc, const std::vector<Bytes>& images,
                           const Backends& backends, const PromptComposer& composer, StageLog& log,
                           const EvalOptions& options) {
  if (images.size() < 2) throw PreconditionError("entity consistency needs at least 2 images");
  EntityEval eval;
  eval.subjects = detect_subjects(doc, images, backends, composer, log, options);
  const auto prompt = composer.entity_eval_prompt(doc, positions(images.size()), eval.subjects);
  const auto text = ask(prompt, images, "entity_eval", backends, false, log, options.mode);
  eval.score = extract_scores(text, {"entity"}).front().value;
  eval.per_image_summaries = parse_appearance_summaries(text);
  eval.rationale = text;
  return eval;
}

StyleEval evaluate_style(const std::vector<Bytes>& images, VisionBackend& vision,
                         const PromptComposer& composer, StageLog& log, const EvalOptions& options) {
  if (images.size() < 2) throw PreconditionError("style consistency needs at least 2 images");
  const VisionRequest req{composer.style_eval_prompt(positions(images.size())), images, options.mode};
  const auto text = logged_vision_call(vision, req, "style_eval", log).text;
  std::vector<std::string> labels;
  for (auto f : kStyleFactors) labels.emplace_back(factor_label(f));
  const auto lines = extract_scores(text, labels);
  std::array<double, kStyleFactorCount> scores{};
  for (std::size_t i = 0; i < kStyleFactorCount; ++i) scores[i] = lines[i].value;
  return make_style_eval(scores, text);
}

std::vector<Bytes> load_run_images(const InterleavedDocument& doc, const fs::path& run_dir) {
  std::vector<Bytes> images;
  for (int index : doc.slot_order()) {
    const auto* slot = doc.find_slot(index);
    if (!slot || !slot->image_ref)
      throw PreconditionError(fmt::format("slot {} has not been rendered", index));
    images.push_back(read_binary_file(run_dir / *slot->image_ref));
  }
  return images;
}

EvaluatedRun evaluate_run(const fs::path& run_dir, const Backends& backends,
                          const PromptComposer& composer, const EvalOptions& options) {
  const auto doc = deserialize_document(read_text_file(run_dir / "document.json"));
  const auto images = load_run_images(doc, run_dir);
  if (!backends.vision) throw PreconditionError("vision backend not configured");

  EvaluatedRun run;
  run.result.query_id = doc.query_id;
  StageLog entity_log, style_log;
  if (options.concurrent) {
    auto style = std::async(std::launch::async, [&] {
      return evaluate_style(images, *backends.vision, composer, style_log, options);
    });
    run.result.entity = evaluate_entity(doc, images, backends, composer, entity_log, options);
    run.result.style = style.get();
  } else {
    run.result.entity = evaluate_entity(doc, images, backends, composer, entity_log, options);
    run.result.style = evaluate_style(images, *backends.vision, composer, style_log, options);
  }
  // Entity calls first, then style, regardless of completion order.
  run.calls = entity_log.entries();
  for (auto& e : style_log.entries()) run.calls.push_back(std::move(e));

  if (auto violations = validate_eval(run.result); !violations.empty())
    throw DataError(fmt::format("evaluation result is invalid: {}", violations.front().message));
  write_file_atomic(run_dir / "eval.json", eval_json(run).dump(2) + "\n");
  return run;
}

json eval_json(const EvaluatedRun& run) {
  json digests = json::array();
  for (const auto& call : run.calls)
    digests.push_back({{"stage", call.stage}, {"request_digest", call.request_digest}});
  return {{"query_id", run.result.query_id},
          {"entity", to_json(run.result.entity)},
          {"style", to_json(run.result.style)},
          {"backend_digests", std::move(digests)}};
}

}  // namespace openleaf
