#include <gtest/gtest.h>

#include "openleaf/cassette.hpp"
#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"
#include "test_support.hpp"

using namespace openleaf;
namespace fs = std::filesystem;

TEST(Cassette, RecordThenReplay) {
  support::TempDir dir("cassette");
  const auto path = dir / "c.json";
  auto inner = support::scripted();
  inner->push_text("recorded text");
  inner->push_vision("recorded judgement");
  const TextRequest treq{"tell me", 50, 0.0};
  const ImageRequest ireq{"a fox", 512, 512, 7};
  Bytes image_bytes;
  {
    auto backends = make_cassette_backends(Cassette::open(path, CassetteMode::Record),
                                           inner->as_backends(inner));
    EXPECT_EQ(backends.text->text_complete(treq).text, "recorded text");
    image_bytes = backends.image->image_generate(ireq).image_bytes;
    const VisionRequest vreq{"judge", {image_bytes}, VisionMode::Precise};
    EXPECT_EQ(backends.vision->vision_query(vreq).text, "recorded judgement");
    // A repeated request is served from the cassette, not the inner backend.
    EXPECT_EQ(backends.text->text_complete(treq).text, "recorded text");
    EXPECT_EQ(inner->text_calls(), 1);
  }
  EXPECT_TRUE(fs::exists(dir / ("c/" + request_digest(ireq) + ".png")));

  auto replay = make_cassette_backends(Cassette::open(path, CassetteMode::Replay));
  EXPECT_EQ(replay.text->text_complete(treq).text, "recorded text");
  EXPECT_EQ(replay.image->image_generate(ireq).image_bytes, image_bytes);
  EXPECT_EQ(replay.vision->vision_query({"judge", {image_bytes}, VisionMode::Precise}).text,
            "recorded judgement");

  const auto entries = Cassette::open(path, CassetteMode::Replay)->entries();
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].kind, "text");
  EXPECT_EQ(entries[0].request_digest, request_digest(treq));
  EXPECT_EQ(entries[0].request_summary, "text: tell me");
}

TEST(Cassette, ReplayMissNamesDigest) {
  support::TempDir dir("cassette-miss");
  const auto path = dir / "c.json";
  write_file_atomic(path, std::string_view("{\"entries\": []}\n"));
  auto replay = make_cassette_backends(Cassette::open(path, CassetteMode::Replay));
  const TextRequest req{"unseen", 10, 0.0};
  try {
    replay.text->text_complete(req);
    FAIL();
  } catch (const CassetteMiss& e) {
    EXPECT_EQ(e.digest(), request_digest(req));
  }
  EXPECT_THROW(Cassette::open(dir / "absent.json", CassetteMode::Replay), IoError);
}

TEST(Cassette, RecordRejectsInvalidInnerResponse) {
  support::TempDir dir("cassette-bad");
  auto inner = support::scripted();
  inner->fail_image_call(1);
  auto backends = make_cassette_backends(Cassette::open(dir / "c.json", CassetteMode::Record),
                                         inner->as_backends(inner));
  EXPECT_THROW(backends.image->image_generate({"p", 512, 512, {}}), BadResponse);
  EXPECT_EQ(Cassette::open(dir / "c.json", CassetteMode::Record)->size(), 0u);
}

TEST(Cassette, ShippedCassettesLoad) {
  for (const auto* name : {"story_penguin", "placeholder_correct", "placeholder_retry",
                           "placeholder_twice_wrong", "webpage_tesla"}) {
    const auto c = Cassette::open(support::source_dir() / "fixtures/cassettes" /
                                      (std::string(name) + ".json"),
                                  CassetteMode::Replay);
    EXPECT_GT(c->size(), 0u) << name;
  }
}
