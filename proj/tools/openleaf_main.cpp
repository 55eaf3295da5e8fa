// openleaf: generate, evaluate and benchmark interleaved image-text documents.
//
// Exit codes: 0 success, 1 pipeline/backend failure, 2 usage or missing input.
// A failing invocation always ends its output with `error: <CATEGORY>`.

#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "openleaf/benchmark.hpp"
#include "openleaf/config.hpp"
#include "openleaf/errors.hpp"
#include "openleaf/evaluator.hpp"
#include "openleaf/fs_util.hpp"
#include "openleaf/generation_pipeline.hpp"
#include "openleaf/report.hpp"
#include "openleaf/stats.hpp"

namespace fs = std::filesystem;
using namespace openleaf;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Thrown for bad or missing inputs detected after flag parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServiceFlags {
  std::string mode = "live";
  std::optional<fs::path> cassette;
  std::optional<fs::path> config = fs::path("openleaf.toml");
  std::map<std::string, std::string> overrides;
  std::string text_url, image_url, vision_url;

  void attach(CLI::App& cmd) {
    cmd.add_option("--mode", mode, "Backend mode")->check(CLI::IsMember({"live", "record", "replay"}));
    cmd.add_option("--cassette", cassette, "Cassette manifest for record/replay");
    cmd.add_option("--config", config, "Settings file (default openleaf.toml)");
    cmd.add_option("--text-api-url", text_url, "Overrides OPENLEAF_TEXT_API_URL");
    cmd.add_option("--image-api-url", image_url, "Overrides OPENLEAF_IMAGE_API_URL");
    cmd.add_option("--vision-api-url", vision_url, "Overrides OPENLEAF_VISION_API_URL");
  }

  BackendMode backend_mode() const { return parse_backend_mode(mode); }

  Settings settings() const {
    auto flags = overrides;
    if (!text_url.empty()) flags["text_api_url"] = text_url;
    if (!image_url.empty()) flags["image_api_url"] = image_url;
    if (!vision_url.empty()) flags["vision_api_url"] = vision_url;
    return load_settings(config, flags);
  }

  Backends backends() const {
    if (backend_mode() != BackendMode::Live && !cassette)
      throw UsageError("--cassette is required with --mode record or replay");
    return make_backends(backend_mode(), cassette, settings());
  }
};

PromptComposer make_composer(const std::optional<fs::path>& resources) {
  return PromptComposer(PromptLibrary::load(resources.value_or(default_resource_root())));
}

json read_json_file(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError(fmt::format("no such file: {}", path.string()));
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---- generate ------------------------------------------------------------

struct GenerateFlags {
  std::string task;
  std::optional<std::string> query;
  std::optional<fs::path> query_file;
  std::optional<std::string> query_id;
  int images = 4;
  std::optional<int> units;
  bool no_global_context = false;
  fs::path out = "runs";
  std::optional<std::string> run_id;
  std::string example_set = "default";
  std::optional<fs::path> resources;
  bool parallel_images = false;
  ServiceFlags service;
};

int run_generate(const GenerateFlags& f) {
  if (!f.query && !f.query_file) throw UsageError("one of --query or --query-file is required");
  Query query;
  query.task = parse_task(f.task);
  query.user_input = f.query ? *f.query : read_text_file(*f.query_file);
  query.image_count = f.images;
  query.unit_count = f.units;
  query.example_set = f.example_set;
  // Stable default id so replayed runs produce identical documents.
  query.id = f.query_id.value_or(
      fmt::format("{}-{}", f.task, sha256_hex(query.user_input).substr(0, 12)));

  const auto composer = make_composer(f.resources);
  PipelineOptions options;
  options.use_global_context = !f.no_global_context;
  options.runs_root = f.out;
  options.run_id = f.run_id;
  options.render.parallel = f.parallel_images;
  const auto run = run_pipeline(query, f.service.backends(), composer, options);
  write_report(run.run_dir);
  std::cout << run.run_dir.string() << "\n";
  return 0;
}

// ---- evaluate / report ---------------------------------------------------

struct EvaluateFlags {
  fs::path run;
  bool detect_with_text = false;
  std::string vision_mode = "precise";
  std::optional<fs::path> resources;
  ServiceFlags service;
};

int run_evaluate(const EvaluateFlags& f) {
  if (!fs::is_directory(f.run)) throw UsageError(fmt::format("no such run directory: {}", f.run.string()));
  EvalOptions options;
  options.detect_with_text_backend = f.detect_with_text;
  options.mode = parse_vision_mode(f.vision_mode);
  const auto evaluated = evaluate_run(f.run, f.service.backends(), make_composer(f.resources), options);
  write_report(f.run);
  std::cout << fmt::format("entity {:.2f}\nstyle {:.2f}\n", evaluated.result.entity.score,
                           evaluated.result.style.final_score);
  return 0;
}

int run_report(const fs::path& run) {
  if (!fs::is_directory(run)) throw UsageError(fmt::format("no such run directory: {}", run.string()));
  std::cout << write_report(run).string() << "\n";
  return 0;
}

// ---- benchmark -----------------------------------------------------------

struct BenchmarkFlags {
  std::string suite = "all";
  std::optional<fs::path> data;
  std::optional<fs::path> cassette_dir;
  fs::path out = "benchmarks";
  std::optional<std::string> suite_run_id;
  int images = 4;
  std::optional<int> units;
  int parallelism = 2;
  int repeats = 1;
  bool ablation = false;
  std::optional<fs::path> resources;
  ServiceFlags service;
};

int run_benchmark(const BenchmarkFlags& f) {
  const auto mode = f.service.backend_mode();
  if (mode != BackendMode::Live && !f.cassette_dir)
    throw UsageError("--cassette-dir is required with --mode record or replay");
  const auto problems = select_suite(f.data ? load_benchmark(*f.data) : load_benchmark(), f.suite);

  // One cassette per problem, `<cassette-dir>/<problem id>.json`, shared by
  // both ablation variants.
  std::mutex mutex;
  std::map<std::string, Backends> cache;
  std::optional<Backends> live;
  const auto settings = mode == BackendMode::Replay ? Settings{} : f.service.settings();
  BackendProvider provider = [&](const BenchmarkProblem& p, Variant) {
    std::lock_guard lock(mutex);
    if (mode == BackendMode::Live) {
      if (!live) live = make_http_backends(settings);
      return *live;
    }
    if (auto it = cache.find(p.id); it != cache.end()) return it->second;
    auto backends = make_backends(mode, *f.cassette_dir / (p.id + ".json"), settings);
    cache.emplace(p.id, backends);
    return backends;
  };

  SuiteOptions options;
  options.out_root = f.out;
  options.suite_run_id = f.suite_run_id;
  options.images = f.images;
  options.units = f.units;
  options.parallelism = f.parallelism;
  options.repeats = f.repeats;
  options.ablation = f.ablation;
  const auto run = run_suite(problems, provider, make_composer(f.resources), options);

  std::size_t failed = 0;
  for (const auto& r : run.results) failed += !r.eval;
  std::cout << (run.dir / "summary.json").string() << "\n";
  for (const auto& [variant, v] : run.summary.items()) {
    if (!v.is_object() || !v.contains("entity")) continue;
    std::cout << fmt::format("{}: entity mean {:.2f} var {:.2f}; style mean {:.2f} var {:.2f}\n",
                             variant, v["entity"]["mean"].get<double>(),
                             v["entity"]["variance"].get<double>(), v["style"]["mean"].get<double>(),
                             v["style"]["variance"].get<double>());
  }
  if (failed) std::cout << fmt::format("{} of {} problem runs failed\n", failed, run.results.size());
  return 0;
}

// ---- stats ---------------------------------------------------------------

int run_correlate(const fs::path& file) {
  const json j = read_json_file(file);
  // Either one array of {id, human, model} or an object of such arrays keyed by aspect.
  std::vector<std::pair<std::string, PairedRatings>> sets;
  if (j.is_array()) {
    sets.emplace_back("ratings", paired_ratings_from_json(j));
  } else if (j.is_object()) {
    for (const auto& [aspect, list] : j.items()) sets.emplace_back(aspect, paired_ratings_from_json(list));
  } else {
    throw DataError("paired ratings must be an array or an object of arrays");
  }
  for (const auto& [name, pairs] : sets) {
    for (const auto& r : {kendall_tau(pairs), spearman(pairs)})
      std::cout << fmt::format("{} {} statistic={:.4f} p={:.4g} p_method={}\n", name,
                               method_name(r.method), r.statistic, r.p_value,
                               p_method_name(r.p_method));
  }
  return 0;
}

int run_prefs(const fs::path& file) {
  for (const auto& tally : tallies_from_json(read_json_file(file))) {
    const auto [a, b] = preference_percentages(tally);
    std::cout << fmt::format("{} votes {}/{} -> {:.2f}% / {:.2f}%\n", aspect_name(tally.aspect),
                             tally.votes_a, tally.votes_b, a, b);
  }
  return 0;
}

int run_pairwise(const fs::path& file) {
  const json j = read_json_file(file);
  std::vector<std::pair<std::string, std::string>> prefs;
  try {
    for (const auto& p : j) prefs.emplace_back(p.at("winner").get<std::string>(), p.at("loser").get<std::string>());
  } catch (const json::exception& e) {
    throw DataError(fmt::format("bad comparisons: {}", e.what()));
  }
  for (const auto& [id, score] : pairwise_scores(prefs)) std::cout << fmt::format("{} {:.4f}\n", id, score);
  return 0;
}

int fail(std::string_view token, std::string_view message, int code) {
  std::cerr << "openleaf: " << message << "\n";
  std::cout << std::flush;
  std::cerr << "error: " << token << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_st("openleaf");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Interleaved image-text generation and LMM-based evaluation"};
  app.set_version_flag("--version", std::string("openleaf ") + OPENLEAF_VERSION);
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  auto version_on = [](CLI::App* cmd) {
    cmd->set_version_flag("--version", std::string("openleaf ") + OPENLEAF_VERSION);
  };

  GenerateFlags gen;
  auto* generate = app.add_subcommand("generate", "Generate one interleaved document");
  version_on(generate);
  generate->add_option("--task", gen.task, "story | howto | rewrite | webpage")
      ->required()
      ->check(CLI::IsMember({"story", "howto", "rewrite", "webpage"}));
  auto* q = generate->add_option("--query", gen.query, "Query or source text");
  auto* qf = generate->add_option("--query-file", gen.query_file, "Read the query from a file")
                 ->check(CLI::ExistingFile);
  q->excludes(qf);
  generate->add_option("--query-id", gen.query_id, "Identifier stored in document.json");
  generate->add_option("--images", gen.images, "Number of image placeholders")->check(CLI::PositiveNumber);
  generate->add_option("--units", gen.units, "Story sentences / steps / <div> sections")
      ->check(CLI::PositiveNumber);
  generate->add_flag("--no-global-context", gen.no_global_context, "Render from raw visual prompts");
  generate->add_option("--out", gen.out, "Directory that receives run directories");
  generate->add_option("--run-id", gen.run_id, "Run directory name (default: timestamp + suffix)");
  generate->add_option("--example-set", gen.example_set, "In-context example set");
  generate->add_option("--resources", gen.resources, "Templates/examples root");
  generate->add_flag("--parallel-images", gen.parallel_images, "Render slots concurrently");
  gen.service.attach(*generate);

  EvaluateFlags ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score entity and style consistency of a run");
  version_on(evaluate);
  evaluate->add_option("--run", ev.run, "Run directory")->required();
  evaluate->add_flag("--detect-with-text", ev.detect_with_text, "Detect subjects with the text backend");
  evaluate->add_option("--vision-mode", ev.vision_mode, "precise | balanced | creative")
      ->check(CLI::IsMember({"precise", "balanced", "creative"}));
  evaluate->add_option("--resources", ev.resources, "Templates/examples root");
  ev.service.attach(*evaluate);

  BenchmarkFlags bf;
  auto* benchmark = app.add_subcommand("benchmark", "Generate and evaluate the benchmark problems");
  version_on(benchmark);
  benchmark->add_option("--suite", bf.suite, "all | story | howto | rewrite | webpage")
      ->check(CLI::IsMember({"all", "story", "howto", "rewrite", "webpage"}));
  benchmark->add_option("--data", bf.data, "Benchmark problem file");
  benchmark->add_option("--cassette-dir", bf.cassette_dir, "Per-problem cassettes <id>.json");
  benchmark->add_option("--out", bf.out, "Output root");
  benchmark->add_option("--suite-run-id", bf.suite_run_id, "Output directory name");
  benchmark->add_option("--images", bf.images, "Images per document")->check(CLI::PositiveNumber);
  benchmark->add_option("--units", bf.units, "Text units per document")->check(CLI::PositiveNumber);
  benchmark->add_option("--parallelism", bf.parallelism, "Problems in flight")->check(CLI::PositiveNumber);
  benchmark->add_option("--repeats", bf.repeats, "Evaluation passes per problem")->check(CLI::PositiveNumber);
  benchmark->add_flag("--ablation", bf.ablation, "Also run without global context");
  benchmark->add_option("--resources", bf.resources, "Templates/examples root");
  bf.service.attach(*benchmark);
  benchmark->get_option("--cassette")->description("Unused; see --cassette-dir");

  auto* stats = app.add_subcommand("stats", "Correlation and preference statistics");
  version_on(stats);
  stats->require_subcommand(1);
  fs::path paired, tally, comparisons;
  auto* correlate = stats->add_subcommand("correlate", "Kendall tau-b and Spearman rho");
  version_on(correlate);
  correlate->add_option("--paired", paired, "JSON [{id, human, model}]")->required();
  auto* prefs = stats->add_subcommand("prefs", "Preference vote percentages");
  version_on(prefs);
  prefs->add_option("--tally", tally, "JSON [{aspect, votes_a, votes_b}]")->required();
  auto* pairwise = stats->add_subcommand("pairwise", "Win-rate scores from pairwise preferences");
  version_on(pairwise);
  pairwise->add_option("--comparisons", comparisons, "JSON [{winner, loser}]")->required();

  fs::path report_run;
  auto* report = app.add_subcommand("report", "Render report.html for a run");
  version_on(report);
  report->add_option("--run", report_run, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;  // --help / --version
    return fail("USAGE", e.what(), kExitUsage);
  }
  if (verbose) spdlog::set_level(spdlog::level::info);
  if (*generate && !gen.query && !gen.query_file) {
    std::cerr << generate->help();
    return fail("USAGE", "one of --query or --query-file is required", kExitUsage);
  }

  try {
    if (*generate) return run_generate(gen);
    if (*evaluate) return run_evaluate(ev);
    if (*benchmark) return run_benchmark(bf);
    if (*correlate) return run_correlate(paired);
    if (*prefs) return run_prefs(tally);
    if (*pairwise) return run_pairwise(comparisons);
    if (*report) return run_report(report_run);
  } catch (const UsageError& e) {
    return fail("USAGE", e.what(), kExitUsage);
  } catch (const Error& e) {
    return fail(category_token(e.category()), e.what(), kExitFailure);
  } catch (const std::exception& e) {
    return fail("INTERNAL", e.what(), kExitFailure);
  }
  return fail("USAGE", "no command given", kExitUsage);
}
