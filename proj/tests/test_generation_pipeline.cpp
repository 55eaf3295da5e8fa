#include <gtest/gtest.h>

#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"
#include "openleaf/generation_pipeline.hpp"
#include "test_support.hpp"

using namespace openleaf;
namespace fs = std::filesystem;

namespace {

const GlobalContext kCat{{{"white cat", "small white cat with blue eyes"}},
                         "soft pastel illustration"};

void push_full_run(ScriptedBackend& b, int first_tags = 4) {
  b.push_text(support::story_with_tags(first_tags));
  if (first_tags != 4) b.push_text(support::story_with_tags(4));
  b.push_text(support::kFourPrompts);
  b.push_text("SUBJECT: white cat - small white cat with blue eyes\n");
  b.push_text("STYLE: soft pastel illustration\n");
}

PipelineOptions options_in(const support::TempDir& dir, const std::string& run_id,
                           bool with_context = true) {
  PipelineOptions o;
  o.runs_root = dir.path();
  o.run_id = run_id;
  o.use_global_context = with_context;
  o.render.width = o.render.height = 512;
  return o;
}

}  // namespace

TEST(GenerateText, CorrectCountNoRetry) {
  auto b = support::scripted();
  b->push_text(support::story_with_tags(4));
  StageLog log;
  const auto doc = generate_text(support::story_query(), *b, support::composer(), log);
  EXPECT_EQ(doc.slot_order(), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(log.count("text"), 1u);
  EXPECT_EQ(log.entries()[0].stage, "generate_text");
}

TEST(GenerateText, OneCorrectiveRetry) {
  auto b = support::scripted();
  b->push_text(support::story_with_tags(3));
  b->push_text(support::story_with_tags(4));
  StageLog log;
  const auto doc = generate_text(support::story_query(), *b, support::composer(), log);
  EXPECT_EQ(doc.slots.size(), 4u);
  ASSERT_EQ(log.count("text"), 2u);
  EXPECT_EQ(log.entries()[1].stage, "generate_text.retry");
}

TEST(GenerateText, TwiceWrongRaises) {
  auto b = support::scripted();
  b->push_text(support::story_with_tags(3));
  b->push_text(support::story_with_tags(2));
  StageLog log;
  try {
    generate_text(support::story_query(), *b, support::composer(), log);
    FAIL();
  } catch (const PlaceholderCountMismatch& e) {
    EXPECT_EQ(e.expected(), 4);
    EXPECT_EQ(e.got(), 2);
  }
  EXPECT_EQ(b->text_calls(), 2);
}

TEST(GenerateText, WebpageOutput) {
  auto b = support::scripted();
  b->push_text("```html\n<html><body><h1>T</h1><img src=\"img2.png\"><p>x</p><img src=\"img1.png\">"
               "</body></html>\n```\n```css\nh1{}\n```\n");
  StageLog log;
  Query q{"w", TaskKind::Webpage, "Who is Tesla, Inc.?", 2, std::nullopt, "default"};
  const auto doc = generate_text(q, *b, support::composer(), log);
  EXPECT_EQ(doc.slots[0].slot_index, 1);
  EXPECT_EQ(doc.slot_order(), (std::vector<int>{2, 1}));
  EXPECT_EQ(doc.css, "h1{}\n");
  EXPECT_TRUE(doc.html->starts_with("<html>"));
}

TEST(VisualPrompts, FillAndErrors) {
  auto b = support::scripted();
  b->push_text(support::story_with_tags(4));
  b->push_text(support::kFourPrompts);
  StageLog log;
  auto doc = generate_text(support::story_query(), *b, support::composer(), log);
  generate_visual_prompts(doc, *b, support::composer(), log);
  EXPECT_EQ(doc.find_slot(3)->visual_prompt, "rain over the roofs");
  EXPECT_THROW(generate_visual_prompts(doc, *b, support::composer(), log), PreconditionError);

  for (auto& s : doc.slots) s.visual_prompt.clear();
  b->push_text("1. a\n2. b\n3. c\n");
  EXPECT_THROW(generate_visual_prompts(doc, *b, support::composer(), log), CountMismatch);
  for (auto& s : doc.slots) s.visual_prompt.clear();
  b->push_text("1. a\n2. b\n3.\n4. d\n");
  EXPECT_THROW(generate_visual_prompts(doc, *b, support::composer(), log), EmptyVisualPrompt);
}

TEST(Augment, WorkedExamples) {
  EXPECT_EQ(augment_prompt("a white cat on a roof", kCat),
            "soft pastel illustration, a white cat (small white cat with blue eyes) on a roof");
  // Case-insensitive, first mention only, original casing kept.
  EXPECT_EQ(augment_prompt("The White Cat and the white cat", kCat),
            "soft pastel illustration, The White Cat (small white cat with blue eyes) and the white cat");
  // Whole words only.
  EXPECT_EQ(augment_prompt("white cats everywhere", kCat), "soft pastel illustration, white cats everywhere");
  // No subjects: style prefix only.
  EXPECT_EQ(augment_prompt("rain", GlobalContext{{}, "ink"}), "ink, rain");
}

TEST(Augment, LongerNameWins) {
  const GlobalContext ctx{{{"cat", "C"}, {"white cat", "W"}, {"roof", "R"}}, "s"};
  EXPECT_EQ(augment_prompt("a white cat on the roof near a cat", ctx),
            "s, a white cat (W) on the roof (R) near a cat (C)");
}

TEST(Augment, RewriterHookAndContextStored) {
  InterleavedDocument doc;
  doc.segments = {Segment::text_of("x"), Segment::slot(1)};
  doc.slots = {{1, "a white cat", {}, {}}};
  auto out = augment_prompts(doc, kCat, [](const ImageSlotDetail& s, const GlobalContext&) {
    return "custom " + s.visual_prompt;
  });
  EXPECT_EQ(out.slots[0].augmented_prompt, "custom a white cat");
  EXPECT_EQ(out.global_context, kCat);
  doc.slots[0].visual_prompt.clear();
  EXPECT_THROW(augment_prompts(doc, kCat), PreconditionError);
}

TEST(Pipeline, FullRunCallCountsAndArtifacts) {
  support::TempDir dir("pipe");
  auto b = support::scripted();
  push_full_run(*b);
  const auto run = run_pipeline(support::story_query(), b->as_backends(b), support::composer(),
                                options_in(dir, "r1"));
  EXPECT_EQ(b->text_calls(), 4);  // generate, visual prompts, entity, style
  EXPECT_EQ(b->image_calls(), 4);
  EXPECT_EQ(b->vision_calls(), 0);
  for (const auto* f : {"manifest.json", "document.json", "prompts.json", "stage_log.json",
                        "images/img_1.png", "images/img_4.png"})
    EXPECT_TRUE(fs::exists(run.run_dir / f)) << f;
  const auto manifest = json::parse(read_text_file(run.run_dir / "manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  const auto doc = deserialize_document(read_text_file(run.run_dir / "document.json"));
  EXPECT_EQ(doc, run.document);
  EXPECT_EQ(doc.find_slot(1)->augmented_prompt,
            "soft pastel illustration, a white cat (small white cat with blue eyes) on a roof");
  EXPECT_EQ(doc.find_slot(2)->image_ref, "images/img_2.png");
  const auto prompts = json::parse(read_text_file(run.run_dir / "prompts.json"));
  EXPECT_EQ(prompts["slots"].size(), 4u);
  EXPECT_EQ(prompts["global_context"]["style"], "soft pastel illustration");
}

TEST(Pipeline, AblationSharesTextAndPrompts) {
  support::TempDir dir("pipe-ablate");
  auto with = support::scripted();
  push_full_run(*with);
  auto without = support::scripted();
  without->push_text(support::story_with_tags(4));
  without->push_text(support::kFourPrompts);
  const auto a = run_pipeline(support::story_query(), with->as_backends(with), support::composer(),
                              options_in(dir, "with"));
  const auto b = run_pipeline(support::story_query(), without->as_backends(without),
                              support::composer(), options_in(dir, "without", false));
  EXPECT_EQ(a.document.segments, b.document.segments);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.document.slots[i].visual_prompt, b.document.slots[i].visual_prompt);
    EXPECT_FALSE(b.document.slots[i].augmented_prompt);
  }
  EXPECT_FALSE(b.document.global_context);
  EXPECT_EQ(without->text_calls(), 2);
}

TEST(Pipeline, PartialRenderFailureKeepsEarlierImages) {
  support::TempDir dir("pipe-partial");
  auto b = support::scripted();
  push_full_run(*b);
  b->fail_image_call(3);
  EXPECT_THROW(run_pipeline(support::story_query(), b->as_backends(b), support::composer(),
                            options_in(dir, "p")),
               BadResponse);
  const auto run_dir = dir / "p";
  EXPECT_TRUE(fs::exists(run_dir / "images/img_1.png"));
  EXPECT_TRUE(fs::exists(run_dir / "images/img_2.png"));
  EXPECT_FALSE(fs::exists(run_dir / "images/img_3.png"));
  const auto manifest = json::parse(read_text_file(run_dir / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_EQ(manifest["failed_stage"], "render_images");
  const auto log = json::parse(read_text_file(run_dir / "stage_log.json"));
  EXPECT_EQ(log.back()["status"], "error");
  EXPECT_EQ(log.back()["slot_index"], 3);
}

TEST(Pipeline, RetryLoggedAndMismatchPersisted) {
  support::TempDir dir("pipe-retry");
  auto ok = support::scripted();
  push_full_run(*ok, 3);
  const auto run = run_pipeline(support::story_query(), ok->as_backends(ok), support::composer(),
                                options_in(dir, "retry"));
  EXPECT_EQ(ok->text_calls(), 5);
  EXPECT_EQ(run.stage_log[1].stage, "generate_text.retry");

  auto bad = support::scripted();
  bad->push_text(support::story_with_tags(3));
  bad->push_text(support::story_with_tags(3));
  EXPECT_THROW(run_pipeline(support::story_query(), bad->as_backends(bad), support::composer(),
                            options_in(dir, "bad")),
               PlaceholderCountMismatch);
  const auto manifest = json::parse(read_text_file(dir / "bad/manifest.json"));
  EXPECT_EQ(manifest["failed_stage"], "generate_text");
  EXPECT_FALSE(fs::exists(dir / "bad/document.json"));
}

TEST(Pipeline, ParallelRenderMatchesSequential) {
  support::TempDir dir("pipe-par");
  auto seq = support::scripted();
  push_full_run(*seq);
  auto par = support::scripted();
  push_full_run(*par);
  auto popts = options_in(dir, "par");
  popts.render.parallel = true;
  run_pipeline(support::story_query(), seq->as_backends(seq), support::composer(),
               options_in(dir, "seq"));
  run_pipeline(support::story_query(), par->as_backends(par), support::composer(), popts);
  for (int i = 1; i <= 4; ++i) {
    const auto rel = "images/img_" + std::to_string(i) + ".png";
    EXPECT_EQ(read_binary_file(dir / ("seq/" + rel)), read_binary_file(dir / ("par/" + rel)));
  }
  EXPECT_EQ(read_text_file(dir / "seq/document.json"), read_text_file(dir / "par/document.json"));
}

TEST(RunId, Shape) {
  const auto id = make_run_id();
  EXPECT_EQ(id.size(), 23u);
  EXPECT_EQ(id[8], 'T');
  EXPECT_EQ(id[15], 'Z');
  EXPECT_NE(make_run_id(), make_run_id());
}
