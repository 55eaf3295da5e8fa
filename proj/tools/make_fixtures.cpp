// Authors the shipped replay cassettes from scripted model responses.
//
//   openleaf-fixtures <out-dir>
//
// Writes <out-dir>/cassettes/*.json and <out-dir>/benchmark/<problem>.json,
// each with its image directory. Output is deterministic: rerunning against
// unchanged templates reproduces the shipped files byte for byte, which the
// test suite checks.

#include <algorithm>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "openleaf/benchmark.hpp"
#include "openleaf/cassette.hpp"
#include "openleaf/config.hpp"
#include "openleaf/errors.hpp"
#include "openleaf/evaluator.hpp"
#include "openleaf/generation_pipeline.hpp"
#include "openleaf/interleave_parser.hpp"
#include "openleaf/scripted_backend.hpp"

namespace fs = std::filesystem;
using namespace openleaf;

namespace {

struct Script {
  std::string subject;     // "penguin"
  std::string appearance;  // entity context
  std::string place;       // second common subject
  std::string style = "warm watercolor illustration";
  double entity_score = 8.0;
  std::array<double, kStyleFactorCount> style_scores{8, 8, 8, 8, 8, 8, 8};
};

std::string story_text(const Script& s, int tags) {
  const std::vector<std::string> sentences = {
      fmt::format("On a bright morning, the {} left home near the {}.", s.subject, s.place),
      fmt::format("The {} met an old friend who needed help.", s.subject),
      fmt::format("Together they crossed the {} as the wind picked up.", s.place),
      fmt::format("By sunset the {} was back home, tired and happy.", s.subject),
  };
  std::string out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out += sentences[i];
    if (static_cast<int>(i) < tags) out += fmt::format(" <img{}>", i + 1);
    out += "\n";
  }
  return out;
}

std::string visual_prompts(const Script& s) {
  return fmt::format(
      "1. A {0} stepping out of its home at sunrise, the {1} in the distance\n"
      "2. The {0} greeting an old friend on a quiet path\n"
      "3. The {0} and its friend crossing the {1} in strong wind\n"
      "4. A tired but happy {0} back home at sunset\n",
      s.subject, s.place);
}

std::string webpage_text() {
  return "```html\n"
         "<!DOCTYPE html>\n<html>\n<head><title>Tesla, Inc.</title></head>\n<body>\n"
         "<div class=\"section\"><h2>Who is Tesla?</h2><p>Tesla designs and builds electric "
         "vehicles and clean energy products.</p><img src=\"img1.png\"></div>\n"
         "<div class=\"section\"><h2>Vehicles</h2><p>The lineup ranges from sedans to the "
         "Cybertruck.</p><img src=\"img2.png\"></div>\n"
         "<div class=\"section\"><h2>Energy</h2><p>Solar panels and Powerwall batteries store "
         "clean energy.</p><img src=\"img3.png\"></div>\n"
         "<div class=\"section\"><h2>Factories</h2><p>Gigafactories build cars and batteries at "
         "scale.</p><img src=\"img4.png\"></div>\n"
         "</body>\n</html>\n```\n"
         "```css\nbody { font-family: sans-serif; }\n.section img { width: 40%; float: right; }\n```\n";
}

std::string webpage_prompts() {
  return "1. A red Tesla sedan parked in front of a modern glass building\n"
         "2. A row of Tesla vehicles, from sedan to Cybertruck, in a bright showroom\n"
         "3. Solar panels on a house roof with a Powerwall battery on the wall\n"
         "4. A Tesla Gigafactory seen from above in the desert\n";
}

std::string detection(const Script& s) {
  return fmt::format("SUBJECT: {}\nSUBJECT: {}\n", s.subject, s.place);
}

std::string entity_eval(const Script& s, int images) {
  std::string out;
  for (int i = 1; i <= images; ++i) {
    out += fmt::format("SUMMARY(image_{}, {}): {}\n", i, s.subject, s.appearance);
    out += fmt::format("SUMMARY(image_{}, {}): the same {} in the background\n", i, s.place, s.place);
  }
  out += fmt::format("The {} keeps its look across the images.\nSCORE(entity): {}\n", s.subject,
                     s.entity_score);
  return out;
}

std::string style_eval(const Script& s) {
  std::string out = "All images share a similar medium and palette.\n";
  for (std::size_t i = 0; i < kStyleFactorCount; ++i)
    out += format_score_line({std::string(factor_label(kStyleFactors[i])), s.style_scores[i]}) + "\n";
  return out;
}

class Recorder {
 public:
  Recorder(const fs::path& cassette, const fs::path& scratch) : scratch_(scratch) {
    fs::remove(cassette);
    fs::remove_all(fs::path(cassette).replace_extension());
    scripted_ = std::make_shared<ScriptedBackend>();
    backends_ = make_cassette_backends(Cassette::open(cassette, CassetteMode::Record),
                                       scripted_->as_backends(scripted_));
  }

  ScriptedBackend& script() { return *scripted_; }

  fs::path generate(const Query& query, bool with_context, const std::string& run_id) {
    PipelineOptions options;
    options.use_global_context = with_context;
    options.runs_root = scratch_;
    options.run_id = run_id;
    return run_pipeline(query, backends_, composer(), options).run_dir;
  }

  fs::path try_generate(const Query& query, const std::string& run_id) {
    try {
      return generate(query, true, run_id);
    } catch (const PlaceholderCountMismatch&) {
      return {};
    }
  }

  void evaluate(const fs::path& run_dir) { evaluate_run(run_dir, backends_, composer()); }

  void finish(const std::string& name) const {
    if (scripted_->pending_text() || scripted_->pending_vision())
      throw DataError(fmt::format("{}: {} text and {} vision responses were never requested", name,
                                  scripted_->pending_text(), scripted_->pending_vision()));
  }

  static const PromptComposer& composer() {
    static const PromptComposer c(PromptLibrary::load(default_resource_root()));
    return c;
  }

 private:
  fs::path scratch_;
  std::shared_ptr<ScriptedBackend> scripted_;
  Backends backends_;
};

void push_context(ScriptedBackend& b, const Script& s) {
  b.push_text(fmt::format("SUBJECT: {} - {}\n", s.subject, s.appearance));
  b.push_text(fmt::format("STYLE: {}\n", s.style));
}

void push_eval(ScriptedBackend& b, const Script& s, int images) {
  b.push_vision(detection(s));
  b.push_vision(entity_eval(s, images));
  b.push_vision(style_eval(s));
}

Query story_query(std::string id, std::string text) {
  return Query{std::move(id), TaskKind::Story, std::move(text), 4, std::nullopt, "default"};
}

const Script kPenguin{"penguin", "small emperor penguin with a yellow neck patch and a red scarf",
                      "ice shelf"};

// Full run with and without global context, both evaluated.
void record_story(const fs::path& cassette, const fs::path& scratch, const Query& query,
                  const Script& with, const Script& without) {
  Recorder r(cassette, scratch);
  auto& b = r.script();
  b.push_text(story_text(with, 4));
  b.push_text(visual_prompts(with));
  push_context(b, with);
  push_eval(b, with, 4);
  r.evaluate(r.generate(query, true, query.id + "-with"));
  // Text and visual prompts replay from the cassette; images and judging are new.
  push_eval(b, without, 4);
  r.evaluate(r.generate(query, false, query.id + "-without"));
  r.finish(cassette.filename().string());
}

void record_placeholder_cases(const fs::path& dir, const fs::path& scratch) {
  const auto query = story_query("placeholder", "Can you write a story about a giraffe?");
  const Script giraffe{"giraffe", "tall giraffe with a long neck and dark brown patches", "savanna"};
  {
    Recorder r(dir / "placeholder_correct.json", scratch);
    r.script().push_text(story_text(giraffe, 4));
    r.script().push_text(visual_prompts(giraffe));
    push_context(r.script(), giraffe);
    r.generate(query, true, "correct");
    r.finish("placeholder_correct");
  }
  {
    Recorder r(dir / "placeholder_retry.json", scratch);
    r.script().push_text(story_text(giraffe, 3));
    r.script().push_text(story_text(giraffe, 4));
    r.script().push_text(visual_prompts(giraffe));
    push_context(r.script(), giraffe);
    r.generate(query, true, "retry");
    r.finish("placeholder_retry");
  }
  {
    Recorder r(dir / "placeholder_twice_wrong.json", scratch);
    r.script().push_text(story_text(giraffe, 3));
    r.script().push_text(story_text(giraffe, 3));
    if (!r.try_generate(query, "twice_wrong").empty())
      throw DataError("twice-wrong script unexpectedly succeeded");
    r.finish("placeholder_twice_wrong");
  }
}

void record_webpage(const fs::path& dir, const fs::path& scratch, const BenchmarkProblem& tesla) {
  const Query query{tesla.id, TaskKind::Webpage, tesla.text, 4, std::nullopt, "default"};
  const Script s{"Tesla car", "sleek red electric sedan with a glass roof", "clean energy campus",
                 "clean corporate photography with bright daylight"};
  Recorder r(dir / "webpage_tesla.json", scratch);
  r.script().push_text(webpage_text());
  r.script().push_text(webpage_prompts());
  push_context(r.script(), s);
  push_eval(r.script(), s, 4);
  r.evaluate(r.generate(query, true, "webpage"));
  r.finish("webpage_tesla");
}

// Story problems of the benchmark, with the ablation variant; scores vary by
// problem and the with-context variant is always judged more consistent.
void record_benchmark(const fs::path& dir, const fs::path& scratch,
                      const std::vector<BenchmarkProblem>& problems) {
  int k = 0;
  for (const auto& p : problems) {
    if (p.task != TaskKind::Story) continue;
    ++k;
    const auto about = p.text.find("about ");
    std::string subject = p.text.substr(about + 6);
    subject.pop_back();  // '?'
    for (const std::string article : {"the ", "a "})
      if (subject.starts_with(article)) subject = subject.substr(article.size());
    Script with{subject, fmt::format("{} with a consistent look and outfit", subject), "city park"};
    with.entity_score = 7.0 + 0.5 * (k % 5);
    with.style_scores = {9, 8, 8, 9, 8, 9, 7.0 + 0.5 * (k % 4)};
    Script without = with;
    without.entity_score = with.entity_score - 1.5;
    for (auto& v : without.style_scores) v -= 1.0;
    const Query query{p.id, p.task, p.text, 4, std::nullopt, "default"};
    record_story(dir / (p.id + ".json"), scratch, query, with, without);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: openleaf-fixtures <out-dir>\n";
    return 2;
  }
  spdlog::set_level(spdlog::level::off);
  const fs::path out = argv[1];
  const fs::path scratch = out / ".scratch";
  try {
    fs::create_directories(out / "cassettes");
    fs::create_directories(out / "benchmark");
    const auto problems = load_benchmark();
    record_story(out / "cassettes" / "story_penguin.json", scratch,
                 story_query("penguin", "Can you write a story about a penguin?"), kPenguin,
                 [] {
                   auto s = kPenguin;
                   s.entity_score = 6.5;
                   s.style_scores = {7, 7, 6, 7, 7, 6, 7};
                   return s;
                 }());
    record_placeholder_cases(out / "cassettes", scratch);
    const auto tesla = std::find_if(problems.begin(), problems.end(),
                                    [](const auto& p) { return p.id == "webpage-05"; });
    record_webpage(out / "cassettes", scratch, *tesla);
    record_benchmark(out / "benchmark", scratch, problems);
    fs::remove_all(scratch);
  } catch (const std::exception& e) {
    std::cerr << "openleaf-fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
