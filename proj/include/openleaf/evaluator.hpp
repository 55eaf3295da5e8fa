#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "openleaf/backends.hpp"
#include "openleaf/document.hpp"
#include "openleaf/generation_pipeline.hpp"
#include "openleaf/prompt_composer.hpp"

namespace openleaf {

struct EvalOptions {
  VisionMode mode = VisionMode::Precise;
  // Subject detection reads only the text; by default it still goes to the
  // vision backend (images attached) so one service serves all judging.
  bool detect_with_text_backend = false;
  // Entity and style calls are independent; results merge identically either way.
  bool concurrent = false;
};

// Subjects are detected from the text, with one retry when the judge does not
// name exactly two. Throws SubjectCountError, ScoreNotFound, ScoreOutOfRange.
EntityEval evaluate_entity(const InterleavedDocument& doc, const std::vector<Bytes>& images,
                           const Backends& backends, const PromptComposer& composer,
                           StageLog& log, const EvalOptions& options = {});

// Seven factor scores; final score is their mean.
StyleEval evaluate_style(const std::vector<Bytes>& images, VisionBackend& vision,
                         const PromptComposer& composer, StageLog& log,
                         const EvalOptions& options = {});

// Images in slot order, read from `run_dir` via each slot's image_ref.
std::vector<Bytes> load_run_images(const InterleavedDocument& doc,
                                   const std::filesystem::path& run_dir);

struct EvaluatedRun {
  EvalResult result;
  std::vector<StageLogEntry> calls;
};

// Reads document.json and the images of a run, evaluates both aspects and
// writes eval.json next to them.
EvaluatedRun evaluate_run(const std::filesystem::path& run_dir, const Backends& backends,
                          const PromptComposer& composer, const EvalOptions& options = {});

json eval_json(const EvaluatedRun& run);

}  // namespace openleaf
