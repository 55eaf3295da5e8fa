#include "openleaf/generation_pipeline.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"
#include "openleaf/interleave_parser.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace openleaf {

json to_json(const StageLogEntry& e) {
  json j{{"stage", e.stage},
         {"kind", e.kind},
         {"request_digest", e.request_digest},
         {"duration_ms", e.duration_ms},
         {"status", e.ok ? "ok" : "error"}};
  if (e.slot_index) j["slot_index"] = *e.slot_index;
  if (!e.ok) j["error"] = e.error;
  return j;
}

void StageLog::add(StageLogEntry entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::vector<StageLogEntry> StageLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::size_t StageLog::count(std::string_view kind) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.kind == kind; }));
}

namespace {

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e))
    return fmt::format("{}: {}", category_token(err->category()), err->what());
  return e.what();
}

StageLogEntry make_entry(std::string stage, std::string kind, std::string digest) {
  StageLogEntry e;
  e.stage = std::move(stage);
  e.kind = std::move(kind);
  e.request_digest = std::move(digest);
  return e;
}

template <typename Call>
auto timed_call(StageLogEntry entry, StageLog& log, Call&& call) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&](bool ok, std::string error) {
    entry.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    entry.ok = ok;
    entry.error = std::move(error);
    log.add(entry);
  };
  try {
    auto result = call();
    finish(true, {});
    return result;
  } catch (const std::exception& e) {
    finish(false, describe(e));
    throw;
  }
}

}  // namespace

TextResponse logged_text_call(TextBackend& backend, const TextRequest& req, std::string stage,
                              StageLog& log) {
  auto entry = make_entry(std::move(stage), "text", request_digest(req));
  return timed_call(std::move(entry), log, [&] {
    auto resp = backend.text_complete(req);
    check_response(resp);
    return resp;
  });
}

ImageResponse logged_image_call(ImageBackend& backend, const ImageRequest& req, std::string stage,
                                int slot_index, StageLog& log) {
  auto entry = make_entry(std::move(stage), "image", request_digest(req));
  entry.slot_index = slot_index;
  return timed_call(std::move(entry), log, [&] {
    auto resp = backend.image_generate(req);
    check_response(req, resp);
    return resp;
  });
}

VisionResponse logged_vision_call(VisionBackend& backend, const VisionRequest& req,
                                  std::string stage, StageLog& log) {
  auto entry = make_entry(std::move(stage), "vision", request_digest(req));
  return timed_call(std::move(entry), log, [&] { return backend.vision_query(req); });
}

// ---- stages --------------------------------------------------------------

namespace {

struct ParsedOutput {
  InterleavedDocument doc;
  std::vector<std::string> warnings;
  int slot_count = 0;
};

ParsedOutput parse_generation(const Query& query, std::string_view text) {
  ParsedOutput out;
  out.doc.query_id = query.id;
  out.doc.task = query.task;
  std::vector<int> indices;
  if (query.task == TaskKind::Webpage) {
    auto page = parse_html_output(text);
    out.doc.segments = segments_from_html(page.html);
    out.doc.html = std::move(page.html);
    out.doc.css = std::move(page.css);
    indices = std::move(page.slots);
  } else {
    auto parsed = parse_interleaved(text);
    indices = parsed.slot_indices();
    out.doc.segments = std::move(parsed.segments);
    out.warnings = std::move(parsed.warnings);
  }
  std::sort(indices.begin(), indices.end());
  for (int i : indices) out.doc.slots.push_back({i, {}, std::nullopt, std::nullopt});
  out.slot_count = static_cast<int>(indices.size());
  return out;
}

}  // namespace

InterleavedDocument generate_text(const Query& query, TextBackend& backend,
                                  const PromptComposer& composer, StageLog& log,
                                  std::vector<std::string>* warnings) {
  require_valid(query);
  const TextRequest first{composer.generation_prompt(query), kDefaultMaxOutputTokens,
                          kCreativeTemperature};
  auto parsed = parse_generation(query, logged_text_call(backend, first, "generate_text", log).text);
  if (parsed.slot_count != query.image_count) {
    spdlog::warn("query {}: expected {} image placeholders, got {}; retrying once", query.id,
                 query.image_count, parsed.slot_count);
    const TextRequest retry{
        composer.placeholder_repair_prompt(query, first.prompt, parsed.slot_count),
        kDefaultMaxOutputTokens, kCreativeTemperature};
    parsed = parse_generation(query, logged_text_call(backend, retry, "generate_text.retry", log).text);
    if (parsed.slot_count != query.image_count)
      throw PlaceholderCountMismatch(query.image_count, parsed.slot_count);
  }
  if (warnings)
    warnings->insert(warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
  return std::move(parsed.doc);
}

void generate_visual_prompts(InterleavedDocument& doc, TextBackend& backend,
                             const PromptComposer& composer, StageLog& log) {
  for (const auto& slot : doc.slots)
    if (!slot.visual_prompt.empty())
      throw PreconditionError(fmt::format("slot {} already has a visual prompt", slot.slot_index));
  std::vector<int> indices;
  for (const auto& slot : doc.slots) indices.push_back(slot.slot_index);

  const TextRequest req{composer.visual_prompt_request(doc), kDefaultMaxOutputTokens,
                        kCreativeTemperature};
  const auto list = parse_numbered_list(logged_text_call(backend, req, "visual_prompts", log).text,
                                        indices);
  for (const auto& item : list.items) {
    auto text = std::string(detail::trim(item.text));
    if (text.empty()) throw EmptyVisualPrompt(item.index);
    doc.find_slot(item.index)->visual_prompt = std::move(text);
  }
}

GlobalContext extract_global_context(const InterleavedDocument& doc, TextBackend& backend,
                                     const PromptComposer& composer, StageLog& log,
                                     std::vector<std::string>* warnings) {
  const TextRequest entity_req{composer.entity_context_request(doc), kDefaultMaxOutputTokens,
                               kExtractionTemperature};
  const auto entity_text = logged_text_call(backend, entity_req, "entity_context", log).text;
  const TextRequest style_req{composer.style_context_request(doc), kDefaultMaxOutputTokens,
                              kExtractionTemperature};
  const auto style_text = logged_text_call(backend, style_req, "style_context", log).text;
  auto parsed = parse_global_context(entity_text, style_text);
  if (warnings)
    warnings->insert(warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
  return std::move(parsed.context);
}

std::string augment_prompt(std::string_view visual_prompt, const GlobalContext& ctx) {
  const std::string haystack = detail::to_lower(visual_prompt);

  std::vector<std::size_t> order(ctx.entities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ctx.entities[a].subject_name.size() > ctx.entities[b].subject_name.size();
  });

  struct Insertion {
    std::size_t begin, end, entity;
  };
  std::vector<Insertion> claimed;
  for (std::size_t e : order) {
    const std::string needle = detail::to_lower(detail::trim(ctx.entities[e].subject_name));
    if (needle.empty()) continue;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1)) {
      const std::size_t end = pos + needle.size();
      const bool starts_word = pos == 0 || !detail::is_word_char(haystack[pos - 1]);
      const bool ends_word = end == haystack.size() || !detail::is_word_char(haystack[end]);
      const bool overlaps = std::any_of(claimed.begin(), claimed.end(), [&](const Insertion& c) {
        return pos < c.end && c.begin < end;
      });
      if (starts_word && ends_word && !overlaps) {
        claimed.push_back({pos, end, e});
        break;
      }
    }
  }
  // Insert back to front so earlier offsets stay valid.
  std::sort(claimed.begin(), claimed.end(),
            [](const Insertion& a, const Insertion& b) { return a.end > b.end; });
  std::string rewritten(visual_prompt);
  for (const auto& c : claimed)
    rewritten.insert(c.end, fmt::format(" ({})", ctx.entities[c.entity].appearance));
  return ctx.style + ", " + rewritten;
}

InterleavedDocument augment_prompts(InterleavedDocument doc, const GlobalContext& ctx,
                                    const PromptRewriter& rewriter) {
  for (auto& slot : doc.slots) {
    if (slot.visual_prompt.empty())
      throw PreconditionError(fmt::format("slot {} has no visual prompt", slot.slot_index));
    slot.augmented_prompt = rewriter ? rewriter(slot, ctx) : augment_prompt(slot.visual_prompt, ctx);
  }
  doc.global_context = ctx;
  return doc;
}

void render_images(InterleavedDocument& doc, ImageBackend& backend, const fs::path& run_dir,
                   StageLog& log, const RenderOptions& options) {
  std::sort(doc.slots.begin(), doc.slots.end(),
            [](const auto& a, const auto& b) { return a.slot_index < b.slot_index; });
  for (const auto& slot : doc.slots)
    if (slot.visual_prompt.empty())
      throw PreconditionError(fmt::format("slot {} has no visual prompt", slot.slot_index));

  auto render_one = [&](ImageSlotDetail& slot) {
    ImageRequest req{slot.augmented_prompt.value_or(slot.visual_prompt), options.width,
                     options.height, options.seed};
    auto resp = logged_image_call(backend, req, "render_image", slot.slot_index, log);
    const auto rel = fmt::format("images/img_{}.png", slot.slot_index);
    write_file_atomic(run_dir / rel, resp.image_bytes);
    slot.image_ref = rel;
  };

  if (!options.parallel) {
    for (auto& slot : doc.slots) render_one(slot);
    return;
  }
  std::vector<std::exception_ptr> errors(doc.slots.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < doc.slots.size(); ++i)
      workers.emplace_back([&, i] {
        try {
          render_one(doc.slots[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---- whole runs ----------------------------------------------------------

namespace {

std::string utc_now(const char* format) {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format(fmt::runtime(format), now);
}

}  // namespace

std::string make_run_id() {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  return fmt::format("{}-{:06x}", utc_now("{:%Y%m%dT%H%M%SZ}"), rng() & 0xffffff);
}

json prompts_json(const InterleavedDocument& doc) {
  json slots = json::array();
  for (const auto& slot : doc.slots) {
    json s{{"slot_index", slot.slot_index}, {"visual_prompt", slot.visual_prompt}};
    if (slot.augmented_prompt) s["augmented_prompt"] = *slot.augmented_prompt;
    slots.push_back(std::move(s));
  }
  json j{{"query_id", doc.query_id}, {"slots", std::move(slots)}};
  if (doc.global_context) j["global_context"] = to_json(*doc.global_context);
  return j;
}

RunArtifact run_pipeline(const Query& query, const Backends& backends,
                         const PromptComposer& composer, const PipelineOptions& options) {
  require_valid(query);
  if (!backends.text || !backends.image)
    throw PreconditionError("text and image backends must be configured");

  RunArtifact run;
  run.run_id = options.run_id.value_or(make_run_id());
  run.run_dir = options.runs_root / run.run_id;
  run.query = query;
  run.created_at = utc_now("{:%Y-%m-%dT%H:%M:%SZ}");
  StageLog log;
  std::string stage = "generate_text";
  bool have_document = false;

  auto persist = [&](const std::optional<std::string>& error) {
    run.stage_log = log.entries();
    json stage_log = json::array();
    for (const auto& e : run.stage_log) stage_log.push_back(to_json(e));
    json manifest{{"run_id", run.run_id},
                  {"created_at", run.created_at},
                  {"query", to_json(query)},
                  {"use_global_context", options.use_global_context},
                  {"status", error ? "failed" : "complete"},
                  {"warnings", run.warnings}};
    if (error) {
      manifest["failed_stage"] = stage;
      manifest["error"] = *error;
    }
    write_file_atomic(run.run_dir / "manifest.json", manifest.dump(2) + "\n");
    write_file_atomic(run.run_dir / "stage_log.json", stage_log.dump(2) + "\n");
    if (have_document) {
      write_file_atomic(run.run_dir / "document.json", serialize(run.document));
      write_file_atomic(run.run_dir / "prompts.json", prompts_json(run.document).dump(2) + "\n");
    }
  };

  try {
    fs::create_directories(run.run_dir);
    run.document = generate_text(query, *backends.text, composer, log, &run.warnings);
    have_document = true;
    stage = "visual_prompts";
    generate_visual_prompts(run.document, *backends.text, composer, log);
    if (options.use_global_context) {
      stage = "global_context";
      auto ctx = extract_global_context(run.document, *backends.text, composer, log, &run.warnings);
      run.document = augment_prompts(std::move(run.document), ctx, options.rewriter);
    }
    stage = "render_images";
    render_images(run.document, *backends.image, run.run_dir, log, options.render);

    if (auto violations = validate_document(run.document); !violations.empty())
      throw DataError(fmt::format("generated document is invalid: {}", violations.front().message));
  } catch (const std::exception& e) {
    spdlog::error("run {} failed at {}: {}", run.run_id, stage, e.what());
    try {
      persist(describe(e));
    } catch (const std::exception& persist_error) {
      spdlog::error("could not persist failed run {}: {}", run.run_id, persist_error.what());
    }
    throw;
  }
  persist(std::nullopt);
  return run;
}

}  // namespace openleaf
