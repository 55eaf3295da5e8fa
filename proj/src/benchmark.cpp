#include "openleaf/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "openleaf/config.hpp"
#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"

namespace fs = std::filesystem;

namespace openleaf {

std::vector<BenchmarkProblem> load_benchmark(const fs::path& file) {
  json j;
  try {
    j = json::parse(read_text_file(file));
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: {}", file.string(), e.what()));
  }
  if (!j.is_array()) throw DataError(fmt::format("{}: expected an array of problems", file.string()));

  std::vector<BenchmarkProblem> problems;
  std::set<std::string> ids;
  std::map<TaskKind, int> per_task;
  try {
    for (const auto& p : j) {
      BenchmarkProblem problem{p.at("id").get<std::string>(),
                               parse_task(p.at("task").get<std::string>()),
                               p.at("text").get<std::string>()};
      if (problem.text.empty()) throw DataError(fmt::format("problem {} has no text", problem.id));
      if (!ids.insert(problem.id).second)
        throw DataError(fmt::format("duplicate problem id {}", problem.id));
      ++per_task[problem.task];
      problems.push_back(std::move(problem));
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", file.string(), e.what()));
  }

  const std::map<TaskKind, int> expected = {
      {TaskKind::HowTo, 10}, {TaskKind::Story, 10}, {TaskKind::StoryRewrite, 5}, {TaskKind::Webpage, 5}};
  if (problems.size() != kBenchmarkSize || per_task != expected)
    throw DataError(fmt::format("{}: expected 30 problems split 10/10/5/5, found {}",
                                file.string(), problems.size()));
  return problems;
}

std::vector<BenchmarkProblem> load_benchmark() {
  return load_benchmark(default_resource_root() / "data" / "benchmark.json");
}

std::vector<BenchmarkProblem> select_suite(const std::vector<BenchmarkProblem>& problems,
                                           std::string_view suite) {
  if (suite == "all") return problems;
  const TaskKind task = parse_task(suite);
  std::vector<BenchmarkProblem> out;
  std::copy_if(problems.begin(), problems.end(), std::back_inserter(out),
               [&](const auto& p) { return p.task == task; });
  return out;
}

namespace {

double median_of_sorted(std::span<const double> v) {
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

AggregateStats aggregate(std::span<const double> scores) {
  if (scores.empty()) throw PreconditionError("cannot aggregate an empty score list");
  for (double s : scores)
    if (!(s >= kMinScore && s <= kMaxScore))
      throw PreconditionError(fmt::format("score {} outside [0, 10]", s));

  std::vector<double> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();

  AggregateStats st;
  st.count = n;
  st.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double s : v) ss += (s - st.mean) * (s - st.mean);
  st.variance = ss / static_cast<double>(n);
  st.min = v.front();
  st.max = v.back();
  st.median = median_of_sorted(v);
  if (n == 1) {
    st.q1 = st.q3 = st.median;
  } else {
    const std::span<const double> all(v);
    st.q1 = median_of_sorted(all.first(n / 2));
    st.q3 = median_of_sorted(all.last(n / 2));
  }
  return st;
}

json to_json(const AggregateStats& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"variance", s.variance}, {"min", s.min},
          {"q1", s.q1},       {"median", s.median}, {"q3", s.q3},         {"max", s.max}};
}

std::string_view variant_name(Variant variant) {
  return variant == Variant::WithContext ? "with_context" : "without_context";
}

namespace {

struct Job {
  const BenchmarkProblem* problem;
  Variant variant;
  int repeat;
};

std::string job_run_id(const Job& job, const SuiteOptions& options) {
  std::string id = fmt::format("{}-{}", job.problem->id, variant_name(job.variant));
  if (options.repeats > 1) id += fmt::format("-r{}", job.repeat + 1);
  return id;
}

ProblemResult run_job(const Job& job, const BackendProvider& provider,
                      const PromptComposer& composer, const SuiteOptions& options,
                      const fs::path& runs_root) {
  ProblemResult result;
  result.problem_id = job.problem->id;
  result.task = job.problem->task;
  result.variant = job.variant;
  result.repeat = job.repeat;
  const auto run_id = job_run_id(job, options);
  result.run_dir = runs_root / run_id;
  try {
    const auto backends = provider(*job.problem, job.variant);
    Query query{job.problem->id, job.problem->task, job.problem->text, options.images, options.units};
    PipelineOptions pipeline;
    pipeline.use_global_context = job.variant == Variant::WithContext;
    pipeline.runs_root = runs_root;
    pipeline.run_id = run_id;
    pipeline.render = options.render;
    run_pipeline(query, backends, composer, pipeline);
    result.eval = evaluate_run(result.run_dir, backends, composer, options.eval).result;
  } catch (const Error& e) {
    result.error_category = std::string(category_token(e.category()));
    result.error = e.what();
  } catch (const std::exception& e) {
    result.error_category = "INTERNAL";
    result.error = e.what();
  }
  if (!result.eval)
    spdlog::warn("benchmark problem {} ({}) failed: {} {}", result.problem_id,
                 variant_name(result.variant), result.error_category, result.error);
  return result;
}

json problem_json(const ProblemResult& r) {
  json j{{"problem_id", r.problem_id},
         {"task", task_name(r.task)},
         {"variant", variant_name(r.variant)},
         {"repeat", r.repeat},
         {"run_dir", r.run_dir.filename().string()},
         {"status", r.eval ? "ok" : "failed"}};
  if (r.eval) {
    j["entity_score"] = r.eval->entity.score;
    j["style_score"] = r.eval->style.final_score;
    j["subjects"] = r.eval->entity.subjects;
  } else {
    j["error_category"] = r.error_category;
    j["error"] = r.error;
  }
  return j;
}

}  // namespace

json summarize(const std::vector<ProblemResult>& results) {
  json summary = json::object();
  for (Variant variant : {Variant::WithContext, Variant::WithoutContext}) {
    std::vector<double> entity, style;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_task;
    int seen = 0, failed = 0;
    for (const auto& r : results) {
      if (r.variant != variant) continue;
      ++seen;
      if (!r.eval) {
        ++failed;
        continue;
      }
      entity.push_back(r.eval->entity.score);
      style.push_back(r.eval->style.final_score);
      auto& task = by_task[std::string(task_name(r.task))];
      task.first.push_back(r.eval->entity.score);
      task.second.push_back(r.eval->style.final_score);
    }
    if (seen == 0) continue;
    json v{{"problems", seen}, {"succeeded", seen - failed}, {"failed", failed}};
    if (!entity.empty()) {
      v["entity"] = to_json(aggregate(entity));
      v["style"] = to_json(aggregate(style));
      json tasks = json::object();
      for (const auto& [name, scores] : by_task)
        tasks[name] = {{"entity", to_json(aggregate(scores.first))},
                       {"style", to_json(aggregate(scores.second))}};
      v["by_task"] = std::move(tasks);
    }
    summary[std::string(variant_name(variant))] = std::move(v);
  }
  return summary;
}

json results_json(const SuiteRun& run) {
  json list = json::array();
  for (const auto& r : run.results) list.push_back(problem_json(r));
  return {{"suite_run_id", run.suite_run_id}, {"results", std::move(list)}};
}

SuiteRun run_suite(const std::vector<BenchmarkProblem>& problems, const BackendProvider& provider,
                   const PromptComposer& composer, const SuiteOptions& options) {
  if (options.parallelism < 1) throw PreconditionError("parallelism must be at least 1");
  if (options.repeats < 1) throw PreconditionError("repeats must be at least 1");

  SuiteRun run;
  run.suite_run_id = options.suite_run_id.value_or(make_run_id());
  run.dir = options.out_root / run.suite_run_id;
  const fs::path runs_root = run.dir / "runs";

  std::vector<Job> jobs;
  for (const auto& problem : problems) {
    std::vector<Variant> variants{Variant::WithContext};
    if (options.ablation) variants.push_back(Variant::WithoutContext);
    for (Variant v : variants)
      for (int k = 0; k < options.repeats; ++k) jobs.push_back({&problem, v, k});
  }

  run.results.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      run.results[i] = run_job(jobs[i], provider, composer, options, runs_root);
  };
  {
    std::vector<std::jthread> pool;
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(options.parallelism), jobs.size());
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  run.summary = summarize(run.results);
  run.summary["suite_run_id"] = run.suite_run_id;
  fs::create_directories(run.dir);
  write_file_atomic(run.dir / "results.json", results_json(run).dump(2) + "\n");
  write_file_atomic(run.dir / "summary.json", run.summary.dump(2) + "\n");
  return run;
}

}  // namespace openleaf
