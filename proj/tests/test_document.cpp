#include <gtest/gtest.h>

#include "openleaf/document.hpp"
#include "openleaf/errors.hpp"

using namespace openleaf;

namespace {

InterleavedDocument two_slot_story() {
  InterleavedDocument doc;
  doc.query_id = "q";
  doc.task = TaskKind::Story;
  doc.segments = {Segment::text_of("A cat. "), Segment::slot(1), Segment::text_of(" It sleeps. "),
                  Segment::slot(2)};
  doc.slots = {{1, "a cat", std::nullopt, std::nullopt}, {2, "a sleeping cat", std::nullopt, std::nullopt}};
  return doc;
}

bool has_invariant(const std::vector<Violation>& vs, std::string_view name) {
  for (const auto& v : vs)
    if (v.invariant == name) return true;
  return false;
}

}  // namespace

TEST(TaskKind, NamesRoundTrip) {
  for (auto t : {TaskKind::Story, TaskKind::HowTo, TaskKind::StoryRewrite, TaskKind::Webpage})
    EXPECT_EQ(parse_task(task_name(t)), t);
  EXPECT_EQ(task_name(TaskKind::StoryRewrite), "rewrite");
  EXPECT_THROW(parse_task("poem"), Error);
}

TEST(Query, Preconditions) {
  Query q{"id", TaskKind::Story, "text", 1, std::nullopt, "default"};
  EXPECT_NO_THROW(require_valid(q));
  q.unit_count = 7;  // independent of image_count
  EXPECT_NO_THROW(require_valid(q));
  q.image_count = 0;
  EXPECT_THROW(require_valid(q), PreconditionError);
  q.image_count = 1;
  q.user_input.clear();
  EXPECT_THROW(require_valid(q), PreconditionError);
}

TEST(ValidateDocument, AcceptsWellFormedStory) {
  EXPECT_TRUE(validate_document(two_slot_story()).empty());
}

TEST(ValidateDocument, FlagsSlotMismatches) {
  auto doc = two_slot_story();
  doc.slots.pop_back();
  EXPECT_TRUE(has_invariant(validate_document(doc), "slots.matching"));

  doc = two_slot_story();
  doc.slots.push_back({3, "orphan", std::nullopt, std::nullopt});
  EXPECT_TRUE(has_invariant(validate_document(doc), "slots.matching"));

  doc = two_slot_story();
  doc.segments.push_back(Segment::slot(1));
  EXPECT_TRUE(has_invariant(validate_document(doc), "segment.slot_index"));
}

TEST(ValidateDocument, TextMustNotHideTags) {
  auto doc = two_slot_story();
  doc.segments[0].text = "A cat <img3> here";
  EXPECT_TRUE(has_invariant(validate_document(doc), "segment.text"));
}

TEST(ValidateDocument, AugmentedPromptStartsWithStyle) {
  auto doc = two_slot_story();
  doc.global_context = GlobalContext{{}, "pencil sketch"};
  doc.slots[0].augmented_prompt = "pencil sketch, a cat";
  doc.slots[1].augmented_prompt = "oil painting, a sleeping cat";
  const auto vs = validate_document(doc);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].invariant, "slots.augmented_prompt");
}

TEST(ValidateDocument, WebpageNeedsMatchingHtml) {
  auto doc = two_slot_story();
  doc.task = TaskKind::Webpage;
  EXPECT_TRUE(has_invariant(validate_document(doc), "webpage.html"));
  doc.html = R"(<html><img src="img1.png"><img src="img2.png"></html>)";
  EXPECT_TRUE(validate_document(doc).empty());
  doc.html = R"(<html><img src="img1.png"><img src="img1.png"></html>)";
  EXPECT_TRUE(has_invariant(validate_document(doc), "webpage.html"));

  auto story = two_slot_story();
  story.css = "body {}";
  EXPECT_TRUE(has_invariant(validate_document(story), "html.absent"));
}

TEST(GlobalContextValidation, WordCaps) {
  GlobalContext ctx{{{"cat", "white"}}, "watercolor"};
  EXPECT_TRUE(validate_global_context(ctx).empty());
  std::string long_style;
  for (std::size_t i = 0; i <= kMaxStyleWords; ++i) long_style += "word ";
  ctx.style = long_style;
  EXPECT_FALSE(validate_global_context(ctx).empty());
  EXPECT_EQ(word_count("  two   words "), 2u);
}

TEST(StyleEval, FinalScoreIsMean) {
  const auto eval = make_style_eval({9, 9, 8, 8, 8, 9, 9}, "");
  EXPECT_NEAR(eval.final_score, 60.0 / 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(eval.factor(StyleFactor::Tint), 8.0);
}

TEST(EvalValidation, ScoreRangeAndSubjects) {
  EvalResult r;
  r.entity.subjects = {"cat", "roof"};
  r.entity.score = 8;
  r.style = make_style_eval({8, 8, 8, 8, 8, 8, 8}, "");
  EXPECT_TRUE(validate_eval(r).empty());
  r.entity.score = 11;
  EXPECT_TRUE(has_invariant(validate_eval(r), "entity.score"));
  r.entity.score = 8;
  r.entity.subjects.pop_back();
  EXPECT_TRUE(has_invariant(validate_eval(r), "entity.subjects"));
}

TEST(Serialization, DocumentRoundTrip) {
  auto doc = two_slot_story();
  doc.global_context = GlobalContext{{{"cat", "small white cat"}}, "pencil sketch"};
  doc.slots[0].augmented_prompt = "pencil sketch, a cat (small white cat)";
  doc.slots[0].image_ref = "images/img_1.png";
  const auto text = serialize(doc);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(deserialize_document(text), doc);
  // Canonical: serializing the parsed copy yields the same bytes.
  EXPECT_EQ(serialize(deserialize_document(text)), text);
}

TEST(Serialization, WebpageRoundTrip) {
  auto doc = two_slot_story();
  doc.task = TaskKind::Webpage;
  doc.html = R"(<html><img src="img1.png"><img src="img2.png"></html>)";
  doc.css = "img { width: 50%; }";
  EXPECT_EQ(deserialize_document(serialize(doc)), doc);
}

TEST(Serialization, RejectsMalformedInput) {
  EXPECT_THROW(deserialize_document("{not json"), DataError);
  EXPECT_THROW(deserialize_document(R"({"query_id": "q"})"), DataError);
}

TEST(Serialization, EvalRecords) {
  EntityEval e;
  e.subjects = {"cat", "roof"};
  e.score = 7.5;
  e.per_image_summaries[2] = {{"cat", "white"}};
  const auto back = entity_eval_from_json(to_json(e));
  EXPECT_EQ(back.subjects, e.subjects);
  EXPECT_EQ(back.per_image_summaries, e.per_image_summaries);
  EXPECT_DOUBLE_EQ(back.score, 7.5);

  const auto s = make_style_eval({1, 2, 3, 4, 5, 6, 7}, "why");
  const auto sback = style_eval_from_json(to_json(s));
  EXPECT_EQ(sback.factor_scores, s.factor_scores);
  EXPECT_DOUBLE_EQ(sback.final_score, 4.0);
}
