#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "openleaf/backends.hpp"

namespace openleaf {

struct HttpEndpoint {
  std::string url;  // scheme://host[:port]/path
  std::string api_key;
  std::chrono::seconds timeout{120};
  RetryPolicy retry;
  int max_in_flight = 2;
};

// POSTs JSON to one endpoint. 429, 5xx and transport failures are retried per
// the endpoint's RetryPolicy; 401/403 fail immediately with AuthError.
class HttpTransport {
 public:
  explicit HttpTransport(HttpEndpoint endpoint);

  json post_json(const json& body);

  const HttpEndpoint& endpoint() const noexcept { return endpoint_; }
  std::uint64_t attempts() const noexcept { return attempts_.load(); }

 private:
  HttpEndpoint endpoint_;
  std::string origin_;
  std::string path_;
  InFlightLimiter limiter_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
  std::atomic<std::uint64_t> attempts_{0};
};

// Wire shapes:
//   text:   {prompt, max_output_tokens, temperature} -> {text, finish_reason}
//   image:  {prompt, width, height, seed?}           -> {image_base64}
//   vision: {prompt, images: [base64 PNG], mode}     -> {text}
class HttpTextBackend final : public TextBackend {
 public:
  explicit HttpTextBackend(HttpEndpoint endpoint) : transport_(std::move(endpoint)) {}
  TextResponse text_complete(const TextRequest& req) override;

 private:
  HttpTransport transport_;
};

class HttpImageBackend final : public ImageBackend {
 public:
  explicit HttpImageBackend(HttpEndpoint endpoint) : transport_(std::move(endpoint)) {}
  ImageResponse image_generate(const ImageRequest& req) override;

 private:
  HttpTransport transport_;
};

class HttpVisionBackend final : public VisionBackend {
 public:
  explicit HttpVisionBackend(HttpEndpoint endpoint) : transport_(std::move(endpoint)) {}
  VisionResponse vision_query(const VisionRequest& req) override;

 private:
  HttpTransport transport_;
};

}  // namespace openleaf
