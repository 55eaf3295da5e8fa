#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "openleaf/backends.hpp"
#include "openleaf/document.hpp"
#include "openleaf/prompt_composer.hpp"

namespace openleaf {

struct StageLogEntry {
  std::string stage;  // generate_text, generate_text.retry, visual_prompts, ...
  std::string kind;   // text | image | vision
  std::string request_digest;
  std::int64_t duration_ms = 0;
  std::optional<int> slot_index;
  bool ok = true;
  std::string error;  // category token and message when !ok
};

json to_json(const StageLogEntry& entry);

// Shared by concurrent calls within one run (parallel image rendering).
class StageLog {
 public:
  void add(StageLogEntry entry);
  std::vector<StageLogEntry> entries() const;
  std::size_t count(std::string_view kind) const;

 private:
  mutable std::mutex mutex_;
  std::vector<StageLogEntry> entries_;
};

// Backend calls that record themselves in the stage log, successful or not.
TextResponse logged_text_call(TextBackend& backend, const TextRequest& req, std::string stage,
                              StageLog& log);
ImageResponse logged_image_call(ImageBackend& backend, const ImageRequest& req, std::string stage,
                                int slot_index, StageLog& log);
VisionResponse logged_vision_call(VisionBackend& backend, const VisionRequest& req,
                                  std::string stage, StageLog& log);

// ---- stages --------------------------------------------------------------

// Text with empty slot details. One corrective retry when the placeholder
// count differs from query.image_count; throws PlaceholderCountMismatch after it.
InterleavedDocument generate_text(const Query& query, TextBackend& backend,
                                  const PromptComposer& composer, StageLog& log,
                                  std::vector<std::string>* warnings = nullptr);

// Fills visual_prompt for every slot. Throws CountMismatch, EmptyVisualPrompt.
void generate_visual_prompts(InterleavedDocument& doc, TextBackend& backend,
                             const PromptComposer& composer, StageLog& log);

// Entity and style requests, one call each. Throws MissingStyle.
GlobalContext extract_global_context(const InterleavedDocument& doc, TextBackend& backend,
                                     const PromptComposer& composer, StageLog& log,
                                     std::vector<std::string>* warnings = nullptr);

// `style + ", " + prompt`, with " (appearance)" after the first whole-word,
// case-insensitive mention of each subject. Longer names claim text first,
// so "white cat" wins over "cat" at the same spot.
std::string augment_prompt(std::string_view visual_prompt, const GlobalContext& ctx);

// Optional replacement for the rule-based rewrite (e.g. a model call).
using PromptRewriter = std::function<std::string(const ImageSlotDetail&, const GlobalContext&)>;

InterleavedDocument augment_prompts(InterleavedDocument doc, const GlobalContext& ctx,
                                    const PromptRewriter& rewriter = {});

struct RenderOptions {
  int width = kDefaultImageSize;
  int height = kDefaultImageSize;
  std::optional<std::int64_t> seed;
  bool parallel = false;
};

// Writes `<run_dir>/images/img_{i}.png` per slot, ascending index, and sets
// image_ref to the relative path. Images finished before a failure stay on disk.
void render_images(InterleavedDocument& doc, ImageBackend& backend,
                   const std::filesystem::path& run_dir, StageLog& log,
                   const RenderOptions& options = {});

// ---- whole runs ----------------------------------------------------------

struct PipelineOptions {
  bool use_global_context = true;
  std::filesystem::path runs_root = "runs";
  std::optional<std::string> run_id;  // generated when absent
  RenderOptions render;
  PromptRewriter rewriter;
};

struct RunArtifact {
  std::string run_id;
  std::filesystem::path run_dir;
  Query query;
  InterleavedDocument document;
  std::vector<StageLogEntry> stage_log;
  std::string created_at;  // ISO 8601 UTC
  std::vector<std::string> warnings;
};

// UTC timestamp plus a short random suffix, e.g. 20261019T093000Z-3fa2c1.
std::string make_run_id();

// Persists the run directory whether or not a stage fails; on failure the
// manifest records the error and the original exception is rethrown.
RunArtifact run_pipeline(const Query& query, const Backends& backends,
                         const PromptComposer& composer, const PipelineOptions& options = {});

json prompts_json(const InterleavedDocument& doc);

}  // namespace openleaf
