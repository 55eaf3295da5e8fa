#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "openleaf/cassette.hpp"
#include "openleaf/errors.hpp"
#include "openleaf/http_backend.hpp"
#include "openleaf/png_image.hpp"
#include "test_support.hpp"

using namespace openleaf;
using namespace std::chrono_literals;

namespace {

// Local stub service; handlers are installed per test.
class StubServer {
 public:
  StubServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpEndpoint endpoint(const std::string& url) {
  HttpEndpoint e;
  e.url = url;
  e.api_key = "k";
  e.timeout = 5s;
  e.retry.base = 1ms;
  e.retry.max_delay = 5ms;
  e.retry.max_attempts = 4;
  return e;
}

}  // namespace

TEST(HttpBackend, RetriesRateLimitThenSucceeds) {
  StubServer stub;
  std::atomic<int> hits{0};
  std::string auth;
  stub.server().Post("/text", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    if (++hits < 3) {
      res.status = 429;
      return;
    }
    const auto body = json::parse(req.body);
    res.set_content(json{{"text", "echo: " + body["prompt"].get<std::string>()}}.dump(),
                    "application/json");
  });
  HttpTextBackend backend(endpoint(stub.url("/text")));
  EXPECT_EQ(backend.text_complete({"hi", 10, 0.0}).text, "echo: hi");
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(auth, "Bearer k");
}

TEST(HttpBackend, PersistentRateLimitRaises) {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server().Post("/text", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });
  HttpTextBackend backend(endpoint(stub.url("/text")));
  EXPECT_THROW(backend.text_complete({"hi", 10, 0.0}), RateLimited);
  EXPECT_EQ(hits.load(), 4);
}

TEST(HttpBackend, UnauthorizedFailsWithoutRetry) {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server().Post("/text", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  HttpTextBackend backend(endpoint(stub.url("/text")));
  EXPECT_THROW(backend.text_complete({"hi", 10, 0.0}), AuthError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpBackend, MalformedBodiesAreBadResponses) {
  StubServer stub;
  stub.server().Post("/text", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  stub.server().Post("/image", [](const httplib::Request&, httplib::Response& res) {
    const auto png = encode_gradient_png(600, 600, 0, 0);
    res.set_content(json{{"image_base64", base64_encode(png)}}.dump(), "application/json");
  });
  EXPECT_THROW(HttpTextBackend(endpoint(stub.url("/text"))).text_complete({"hi", 10, 0.0}),
               BadResponse);
  // Wrong dimensions relative to the request.
  EXPECT_THROW(HttpImageBackend(endpoint(stub.url("/image"))).image_generate({"p", 512, 512, {}}),
               BadResponse);
}

TEST(HttpBackend, UnreachableIsTransportError) {
  auto e = endpoint("http://127.0.0.1:1/none");
  e.retry.max_attempts = 2;
  EXPECT_THROW(HttpTextBackend(e).text_complete({"hi", 10, 0.0}), TransportError);
  EXPECT_THROW(HttpTextBackend(endpoint("ftp://x")), PreconditionError);
}

TEST(HttpBackend, RecordingTwiceCallsUpstreamOnce) {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server().Post("/vision", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    const auto body = json::parse(req.body);
    EXPECT_EQ(body["images"].size(), 1u);
    EXPECT_EQ(body["mode"], "precise");
    res.set_content(json{{"text", "SCORE(entity): 7"}}.dump(), "application/json");
  });
  support::TempDir dir("http-record");
  Backends live{nullptr, nullptr, std::make_shared<HttpVisionBackend>(endpoint(stub.url("/vision")))};
  auto rec = make_cassette_backends(Cassette::open(dir / "c.json", CassetteMode::Record), live);
  const VisionRequest req{"judge", {Bytes{1, 2, 3}}, VisionMode::Precise};
  EXPECT_EQ(rec.vision->vision_query(req).text, "SCORE(entity): 7");
  EXPECT_EQ(rec.vision->vision_query(req).text, "SCORE(entity): 7");
  auto again = make_cassette_backends(Cassette::open(dir / "c.json", CassetteMode::Record), live);
  EXPECT_EQ(again.vision->vision_query(req).text, "SCORE(entity): 7");
  EXPECT_EQ(hits.load(), 1);
}
