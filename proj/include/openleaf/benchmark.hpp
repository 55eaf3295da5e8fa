#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "openleaf/evaluator.hpp"
#include "openleaf/generation_pipeline.hpp"

namespace openleaf {

struct BenchmarkProblem {
  std::string id;
  TaskKind task = TaskKind::Story;
  std::string text;
};

inline constexpr std::size_t kBenchmarkSize = 30;

// Throws IoError / DataError; checks the 10/10/5/5 task split.
std::vector<BenchmarkProblem> load_benchmark(const std::filesystem::path& file);
// `data/benchmark.json` under the resource root.
std::vector<BenchmarkProblem> load_benchmark();

// "all" or a task name.
std::vector<BenchmarkProblem> select_suite(const std::vector<BenchmarkProblem>& problems,
                                           std::string_view suite);

struct AggregateStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Quartiles are medians of the lower and upper halves; for odd n the overall
// median belongs to neither half. Throws PreconditionError on empty input or
// scores outside [0, 10].
AggregateStats aggregate(std::span<const double> scores);
json to_json(const AggregateStats& stats);

enum class Variant { WithContext, WithoutContext };
std::string_view variant_name(Variant variant);  // with_context | without_context

// Supplies the backends for one problem/variant; throwing marks only that
// problem as failed (e.g. its cassette is missing).
using BackendProvider = std::function<Backends(const BenchmarkProblem&, Variant)>;

struct SuiteOptions {
  std::filesystem::path out_root = "benchmarks";
  std::optional<std::string> suite_run_id;
  int images = 4;
  std::optional<int> units;
  int parallelism = 2;
  bool ablation = false;  // run both variants per problem
  int repeats = 1;
  RenderOptions render;
  EvalOptions eval;
};

struct ProblemResult {
  std::string problem_id;
  TaskKind task = TaskKind::Story;
  Variant variant = Variant::WithContext;
  int repeat = 0;
  std::filesystem::path run_dir;
  std::optional<EvalResult> eval;  // empty when the problem failed
  std::string error_category;
  std::string error;
};

struct SuiteRun {
  std::string suite_run_id;
  std::filesystem::path dir;
  std::vector<ProblemResult> results;  // problem order, then variant, then repeat
  json summary;
};

// Generates and evaluates every problem, isolating failures per problem, and
// writes results.json and summary.json under `<out_root>/<suite_run_id>/`.
SuiteRun run_suite(const std::vector<BenchmarkProblem>& problems, const BackendProvider& backends,
                   const PromptComposer& composer, const SuiteOptions& options = {});

json results_json(const SuiteRun& run);
json summarize(const std::vector<ProblemResult>& results);

}  // namespace openleaf
