#include <gtest/gtest.h>

#include "openleaf/errors.hpp"
#include "openleaf/prompt_composer.hpp"
#include "test_support.hpp"

using namespace openleaf;

namespace {

PromptTemplate toy() {
  return parse_template("toy/generate",
                        "[[examples if examples]]\nEX {{examples}}\n"
                        "[[instruction]]\nDo it.\n"
                        "[[user_input]]\nIn: {{user_input}}\n"
                        "[[controls if unit_count]]\n{{unit_count}} units.\n"
                        "[[controls unless unit_count]]\nAny length.\n");
}

InterleavedDocument cat_doc() {
  InterleavedDocument doc;
  doc.query_id = "q1";
  doc.segments = {Segment::text_of("A cat. "), Segment::slot(1), Segment::text_of(" More. "),
                  Segment::slot(2)};
  doc.slots = {{1, "", {}, {}}, {2, "", {}, {}}};
  return doc;
}

}  // namespace

TEST(Substitute, SinglePassNoRescan) {
  EXPECT_EQ(substitute("a {{x}} b", {{"x", "{{y}}"}, {"y", "no"}}), "a {{y}} b");
  EXPECT_EQ(substitute("{{ x }} {{}}", {}), "{{ x }} {{}}");
  try {
    substitute("{{missing}}", {});
    FAIL();
  } catch (const CompositionError& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
  EXPECT_EQ(placeholder_names("{{a}} and {{b_2}}"), (std::vector<std::string>{"a", "b_2"}));
}

TEST(Template, ConditionalParts) {
  const auto t = toy();
  ASSERT_EQ(t.parts.size(), 5u);
  EXPECT_EQ(compose(t, {{"user_input", "hi"}}), "Do it.\n\nIn: hi\n\nAny length.\n");
  EXPECT_EQ(compose(t, {{"user_input", "hi"}, {"unit_count", "3"}, {"examples", "E"}}),
            "EX E\n\nDo it.\n\nIn: hi\n\n3 units.\n");
}

TEST(Template, StructureErrors) {
  EXPECT_THROW(parse_template("t", "[[user_input]]\nx\n[[instruction]]\ny\n"), DataError);
  EXPECT_THROW(parse_template("t", "stray\n[[instruction]]\n"), DataError);
  EXPECT_THROW(parse_template("t", "[[bogus]]\n"), DataError);
  EXPECT_THROW(parse_template("t", ""), DataError);
}

TEST(Composer, GenerationPromptOrderAndControls) {
  auto q = support::story_query(4);
  q.unit_count = 6;
  const auto p = support::composer().generation_prompt(q);
  const auto ex = p.find("Input:");  // first occurrence is inside an example
  const auto instr = p.find("You write illustrated stories");
  const auto user = p.find(q.user_input);
  const auto ctrl = p.find("exactly 4 image placeholders");
  ASSERT_NE(instr, std::string::npos);
  ASSERT_NE(user, std::string::npos);
  ASSERT_NE(ctrl, std::string::npos);
  EXPECT_LT(ex, instr);
  EXPECT_LT(instr, user);
  EXPECT_LT(user, ctrl);
  EXPECT_NE(p.find("exactly 6 story sentences"), std::string::npos);
}

TEST(Composer, ExamplesMustMatchTask) {
  const InContextExample wrong{"w", TaskKind::Webpage, "in", "out", "default"};
  EXPECT_THROW(support::composer().generation_prompt(support::story_query(), {&wrong, 1}),
               CompositionError);
  const auto none = support::composer().generation_prompt(support::story_query(), {});
  EXPECT_EQ(none.find("following examples"), std::string::npos);
}

TEST(Composer, EveryTaskHasItsTemplates) {
  for (auto task : {TaskKind::Story, TaskKind::HowTo, TaskKind::StoryRewrite, TaskKind::Webpage}) {
    Query q{"q", task, "input text", 3, std::nullopt, "default"};
    EXPECT_NO_THROW(support::composer().generation_prompt(q)) << task_name(task);
    EXPECT_FALSE(support::composer().library().examples_for(task, "default").empty());
  }
}

TEST(Composer, RepairAppendsCounts) {
  const auto p = support::composer().placeholder_repair_prompt(support::story_query(), "ORIG", 3);
  EXPECT_TRUE(p.starts_with("ORIG\n"));
  EXPECT_NE(p.find('4'), std::string::npos);
  EXPECT_NE(p.find('3'), std::string::npos);
}

TEST(Composer, DerivedRequests) {
  const auto doc = cat_doc();
  const auto& c = support::composer();
  const auto vp = c.visual_prompt_request(doc);
  EXPECT_NE(vp.find("A cat. <img1> More. <img2>"), std::string::npos);
  EXPECT_NE(c.entity_context_request(doc).find("40"), std::string::npos);
  EXPECT_NE(c.style_context_request(doc).find("30"), std::string::npos);
  const auto ent = c.entity_eval_prompt(doc, {1, 2}, {"cat", "roof"});
  EXPECT_NE(ent.find("image_1, image_2"), std::string::npos);
  EXPECT_NE(ent.find("roof"), std::string::npos);
  const auto style = c.style_eval_prompt({1, 2, 3});
  EXPECT_NE(style.find("SCORE(overall_feel)"), std::string::npos);
  EXPECT_THROW(c.style_eval_prompt({1}), PreconditionError);
  EXPECT_THROW(c.entity_eval_prompt(doc, {1, 2}, {"only one"}), PreconditionError);

  InterleavedDocument empty;
  empty.segments = {Segment::slot(1)};
  EXPECT_THROW(c.visual_prompt_request(empty), PreconditionError);
}
