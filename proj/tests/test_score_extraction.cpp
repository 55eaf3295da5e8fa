#include <fstream>

#include <gtest/gtest.h>

#include "openleaf/errors.hpp"
#include "openleaf/interleave_parser.hpp"
#include "test_support.hpp"

using namespace openleaf;

TEST(ScoreExtraction, SyntheticCorpusFullyExtracted) {
  std::ifstream in(support::test_data() / "score_responses.json");
  const auto corpus = json::parse(in);
  ASSERT_EQ(corpus.size(), 20u);
  int extracted = 0;
  for (const auto& c : corpus) {
    SCOPED_TRACE(c["name"].get<std::string>());
    const auto labels = c["labels"].get<std::vector<std::string>>();
    const auto expected = c["expected"].get<std::vector<double>>();
    const auto got = extract_scores(c["text"].get<std::string>(), labels);
    ASSERT_EQ(got.size(), expected.size());
    bool all = true;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].label, labels[i]);
      EXPECT_DOUBLE_EQ(got[i].value, expected[i]);
      all = all && got[i].value == expected[i];
    }
    extracted += all;
  }
  EXPECT_EQ(extracted, 20);
}

TEST(ScoreExtraction, OutOfRangeLabeledScore) {
  try {
    extract_scores("SCORE(entity): 11", {"entity"});
    FAIL();
  } catch (const ScoreOutOfRange& e) {
    EXPECT_EQ(e.label(), "entity");
    EXPECT_EQ(e.value(), 11.0);
  }
  EXPECT_THROW(extract_scores("SCORE(tint): -1", {"tint"}), ScoreOutOfRange);
}

TEST(ScoreExtraction, MissingLabelsAreNamed) {
  try {
    extract_scores("SCORE(tint): 7\nNothing else to say.", {"tint", "contrast", "ambiance"});
    FAIL();
  } catch (const ScoreNotFound& e) {
    EXPECT_EQ(e.labels(), (std::vector<std::string>{"contrast", "ambiance"}));
  }
  // A mention with no qualifying number in its sentence does not count.
  EXPECT_THROW(extract_scores("Entity consistency is high. 9", {"entity"}), ScoreNotFound);
  EXPECT_THROW(extract_scores("anything", {}), PreconditionError);
}

TEST(ScoreExtraction, FormatRoundTrips) {
  const ScoreLine line{"overall_feel", 8.5};
  EXPECT_EQ(format_score_line(line), "SCORE(overall_feel): 8.5");
  EXPECT_EQ(extract_scores(format_score_line(line), {"overall_feel"})[0], line);
  EXPECT_EQ(format_score_line({"entity", 8}), "SCORE(entity): 8");
}
