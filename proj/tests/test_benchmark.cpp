#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "openleaf/benchmark.hpp"
#include "openleaf/cassette.hpp"
#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"
#include "test_support.hpp"

using namespace openleaf;

TEST(Benchmark, ShippedDataSplit) {
  const auto problems = load_benchmark();
  ASSERT_EQ(problems.size(), kBenchmarkSize);
  EXPECT_EQ(select_suite(problems, "howto").size(), 10u);
  EXPECT_EQ(select_suite(problems, "story").size(), 10u);
  EXPECT_EQ(select_suite(problems, "rewrite").size(), 5u);
  EXPECT_EQ(select_suite(problems, "webpage").size(), 5u);
  EXPECT_EQ(select_suite(problems, "all").size(), 30u);
  auto has = [&](const std::string& text) {
    return std::any_of(problems.begin(), problems.end(),
                       [&](const auto& p) { return p.text.find(text) != std::string::npos; });
  };
  EXPECT_TRUE(has("How to do surfing?"));
  // Webpage problems carry a title and source content.
  EXPECT_TRUE(has("Title: Who is Tesla, Inc.?"));
  EXPECT_THROW(select_suite(problems, "poems"), Error);
}

TEST(Benchmark, RejectsWrongSplit) {
  support::TempDir dir("bench-bad");
  write_file_atomic(dir / "b.json",
                    std::string_view(R"([{"id": "a", "task": "story", "text": "x"}])"));
  EXPECT_THROW(load_benchmark(dir / "b.json"), DataError);
  write_file_atomic(dir / "c.json", std::string_view("{"));
  EXPECT_THROW(load_benchmark(dir / "c.json"), DataError);
}

TEST(Aggregate, Oracles) {
  const std::vector<double> two{7, 9};
  const auto a = aggregate(two);
  EXPECT_EQ(a.mean, 8.0);
  EXPECT_EQ(a.variance, 1.0);
  const std::vector<double> five{1, 2, 3, 4, 5};
  const auto b = aggregate(five);
  EXPECT_EQ(b.q1, 1.5);
  EXPECT_EQ(b.median, 3.0);
  EXPECT_EQ(b.q3, 4.5);
  EXPECT_EQ(b.min, 1.0);
  EXPECT_EQ(b.max, 5.0);
  const std::vector<double> four{1, 2, 3, 4};
  const auto c = aggregate(four);
  EXPECT_EQ(c.q1, 1.5);
  EXPECT_EQ(c.median, 2.5);
  EXPECT_EQ(c.q3, 3.5);
  const std::vector<double> one{6};
  EXPECT_EQ(aggregate(one).q1, 6.0);
  EXPECT_THROW(aggregate(std::vector<double>{}), PreconditionError);
  EXPECT_THROW(aggregate(std::vector<double>{5, 10.5}), PreconditionError);
}

TEST(Aggregate, PermutationAndScaling) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> score(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + rng() % 40);
    for (auto& v : x) v = score(rng);
    auto shuffled = x;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<double> doubled;
    for (double v : x) doubled.push_back(2 * v);
    const auto a = aggregate(x), p = aggregate(shuffled), s = aggregate(doubled);
    EXPECT_NEAR(a.mean, p.mean, 1e-12);
    EXPECT_NEAR(a.variance, p.variance, 1e-12);
    EXPECT_EQ(a.q1, p.q1);
    EXPECT_EQ(a.median, p.median);
    EXPECT_EQ(a.q3, p.q3);
    EXPECT_NEAR(s.mean, 2 * a.mean, 1e-12);
    EXPECT_NEAR(s.variance, 4 * a.variance, 1e-10);
    EXPECT_NEAR(s.median, 2 * a.median, 1e-12);
    EXPECT_NEAR(s.q1, 2 * a.q1, 1e-12);
    EXPECT_NEAR(s.q3, 2 * a.q3, 1e-12);
  }
}

TEST(Suite, FailuresStayIsolated) {
  support::TempDir dir("suite");
  const auto all = select_suite(load_benchmark(), "story");
  const std::vector<BenchmarkProblem> problems(all.begin(), all.begin() + 3);
  const auto cassettes = support::source_dir() / "fixtures/benchmark";
  BackendProvider provider = [&](const BenchmarkProblem& p, Variant) {
    if (p.id == "story-02") throw IoError("no cassette for story-02");
    return make_cassette_backends(Cassette::open(cassettes / (p.id + ".json"), CassetteMode::Replay));
  };
  SuiteOptions opts;
  opts.out_root = dir.path();
  opts.suite_run_id = "mini";
  opts.ablation = true;
  const auto run = run_suite(problems, provider, support::composer(), opts);
  ASSERT_EQ(run.results.size(), 6u);
  EXPECT_TRUE(run.results[0].eval);
  EXPECT_FALSE(run.results[2].eval);
  EXPECT_EQ(run.results[2].error_category, "IO");
  EXPECT_TRUE(run.results[4].eval);
  EXPECT_EQ(run.results[1].variant, Variant::WithoutContext);
  EXPECT_EQ(run.summary["with_context"]["succeeded"], 2);
  EXPECT_EQ(run.summary["with_context"]["failed"], 1);
  EXPECT_TRUE(std::filesystem::exists(dir / "mini/summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "mini/runs/story-01-with_context/eval.json"));
  const auto results = json::parse(read_text_file(dir / "mini/results.json"));
  EXPECT_EQ(results["results"][2]["status"], "failed");
  // With-context runs are judged more consistent in the shipped fixtures.
  EXPECT_GT(run.summary["with_context"]["entity"]["mean"].get<double>(),
            run.summary["without_context"]["entity"]["mean"].get<double>());
  EXPECT_TRUE(run.summary["with_context"]["by_task"].contains("story"));
}

TEST(Suite, ParallelismDoesNotChangeResults) {
  support::TempDir dir("suite-par");
  const auto all = select_suite(load_benchmark(), "story");
  const auto cassettes = support::source_dir() / "fixtures/benchmark";
  BackendProvider provider = [&](const BenchmarkProblem& p, Variant) {
    return make_cassette_backends(Cassette::open(cassettes / (p.id + ".json"), CassetteMode::Replay));
  };
  std::vector<json> summaries;
  for (int par : {1, 4}) {
    SuiteOptions opts;
    opts.out_root = dir.path();
    opts.suite_run_id = "p" + std::to_string(par);
    opts.parallelism = par;
    auto s = run_suite(all, provider, support::composer(), opts).summary;
    s.erase("suite_run_id");
    summaries.push_back(s);
  }
  EXPECT_EQ(summaries[0], summaries[1]);
  EXPECT_EQ(summaries[0]["with_context"]["succeeded"], 10);
}
