#include "openleaf/http_backend.hpp"

#include <regex>
#include <thread>

#include <httplib.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "openleaf/errors.hpp"

namespace openleaf {

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, url_re))
    throw PreconditionError(fmt::format("malformed backend URL '{}'", url));
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpTransport::HttpTransport(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)),
      limiter_(endpoint_.max_in_flight),
      rng_(std::random_device{}()) {
  if (endpoint_.url.empty()) throw PreconditionError("backend URL is not configured");
  std::tie(origin_, path_) = split_url(endpoint_.url);
}

json HttpTransport::post_json(const json& body) {
  auto slot = limiter_.acquire();
  const std::string payload = body.dump();
  const int max_attempts = std::max(1, endpoint_.retry.max_attempts);

  std::string last_failure;
  bool last_was_rate_limit = false;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0) {
      std::chrono::milliseconds delay;
      {
        std::lock_guard lock(rng_mutex_);
        delay = backoff_delay(endpoint_.retry, attempt - 1, rng_);
      }
      spdlog::warn("{} failed ({}); retrying in {} ms", endpoint_.url, last_failure, delay.count());
      std::this_thread::sleep_for(delay);
    }
    ++attempts_;

    httplib::Client client(origin_);
    client.set_connection_timeout(endpoint_.timeout);
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_failure = httplib::to_string(res.error());
      last_was_rate_limit = false;
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthError(fmt::format("{} rejected credentials (HTTP {})", endpoint_.url, res->status));
    if (retryable_status(res->status)) {
      last_failure = fmt::format("HTTP {}", res->status);
      last_was_rate_limit = res->status == 429;
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw BadResponse(fmt::format("{} returned HTTP {}", endpoint_.url, res->status));
    try {
      return json::parse(res->body);
    } catch (const json::parse_error&) {
      throw BadResponse(fmt::format("{} returned a non-JSON body", endpoint_.url));
    }
  }
  if (last_was_rate_limit)
    throw RateLimited(fmt::format("{} still rate limited after {} attempts", endpoint_.url,
                                  max_attempts));
  throw TransportError(fmt::format("{} failed after {} attempts: {}", endpoint_.url, max_attempts,
                                   last_failure));
}

namespace {

template <typename T>
T field(const json& j, const char* name, std::string_view endpoint) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw BadResponse(fmt::format("{} response lacks a valid '{}' field", endpoint, name));
  }
}

}  // namespace

TextResponse HttpTextBackend::text_complete(const TextRequest& req) {
  require_valid(req);
  const json body = {{"prompt", req.prompt},
                     {"max_output_tokens", req.max_output_tokens},
                     {"temperature", req.temperature}};
  const json out = transport_.post_json(body);
  TextResponse resp;
  resp.text = field<std::string>(out, "text", transport_.endpoint().url);
  const auto reason = out.value("finish_reason", std::string{"complete"});
  if (reason != "complete" && reason != "truncated")
    throw BadResponse(fmt::format("unknown finish_reason '{}'", reason));
  resp.finish_reason = reason == "truncated" ? FinishReason::Truncated : FinishReason::Complete;
  check_response(resp);
  return resp;
}

ImageResponse HttpImageBackend::image_generate(const ImageRequest& req) {
  require_valid(req);
  json body = {{"prompt", req.prompt}, {"width", req.width}, {"height", req.height}};
  if (req.seed) body["seed"] = *req.seed;
  const json out = transport_.post_json(body);
  ImageResponse resp{base64_decode(field<std::string>(out, "image_base64", transport_.endpoint().url))};
  check_response(req, resp);
  return resp;
}

VisionResponse HttpVisionBackend::vision_query(const VisionRequest& req) {
  require_valid(req);
  json images = json::array();
  for (const auto& img : req.images) images.push_back(base64_encode(img));
  const json body = {{"prompt", req.prompt}, {"images", std::move(images)},
                     {"mode", vision_mode_name(req.mode)}};
  const json out = transport_.post_json(body);
  return VisionResponse{field<std::string>(out, "text", transport_.endpoint().url)};
}

}  // namespace openleaf
