#include "openleaf/backends.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "openleaf/errors.hpp"
#include "openleaf/png_image.hpp"

namespace openleaf {

std::string_view vision_mode_name(VisionMode mode) {
  switch (mode) {
    case VisionMode::Precise: return "precise";
    case VisionMode::Balanced: return "balanced";
    case VisionMode::Creative: return "creative";
  }
  return "precise";
}

VisionMode parse_vision_mode(std::string_view name) {
  if (name == "precise") return VisionMode::Precise;
  if (name == "balanced") return VisionMode::Balanced;
  if (name == "creative") return VisionMode::Creative;
  throw DataError(fmt::format("unknown vision mode '{}'", name));
}

void require_valid(const TextRequest& req) {
  if (req.prompt.empty()) throw PreconditionError("text request prompt is empty");
  if (req.max_output_tokens < 1) throw PreconditionError("max_output_tokens must be >= 1");
  if (!(req.temperature >= 0.0)) throw PreconditionError("temperature must be >= 0");
}

void require_valid(const ImageRequest& req) {
  if (req.prompt.empty()) throw PreconditionError("image request prompt is empty");
  auto in_range = [](int v) { return v >= kMinImageSize && v <= kMaxImageSize; };
  if (!in_range(req.width) || !in_range(req.height))
    throw PreconditionError(fmt::format("image size {}x{} outside [{}, {}]", req.width,
                                        req.height, kMinImageSize, kMaxImageSize));
}

void require_valid(const VisionRequest& req) {
  if (req.prompt.empty()) throw PreconditionError("vision request prompt is empty");
  if (req.images.empty()) throw PreconditionError("vision request carries no images");
}

void check_response(const TextResponse& resp) {
  if (resp.text.empty() && resp.finish_reason != FinishReason::Truncated)
    throw BadResponse("empty text response with finish_reason=complete");
}

void check_response(const ImageRequest& req, const ImageResponse& resp) {
  const auto info = decode_png_info(resp.image_bytes);
  if (info.width != req.width || info.height != req.height)
    throw BadResponse(fmt::format("image is {}x{}, requested {}x{}", info.width, info.height,
                                  req.width, req.height));
}

json canonical_request(const TextRequest& req) {
  return {{"kind", "text"},
          {"prompt", req.prompt},
          {"max_output_tokens", req.max_output_tokens},
          {"temperature", req.temperature}};
}

json canonical_request(const ImageRequest& req) {
  json j = {{"kind", "image"}, {"prompt", req.prompt}, {"width", req.width}, {"height", req.height}};
  j["seed"] = req.seed ? json(*req.seed) : json(nullptr);
  return j;
}

json canonical_request(const VisionRequest& req) {
  json images = json::array();
  for (const auto& img : req.images) images.push_back(sha256_hex(img));
  return {{"kind", "vision"},
          {"prompt", req.prompt},
          {"images", std::move(images)},
          {"mode", vision_mode_name(req.mode)}};
}

std::string request_digest(const TextRequest& req) { return sha256_hex(canonical_request(req).dump()); }
std::string request_digest(const ImageRequest& req) { return sha256_hex(canonical_request(req).dump()); }
std::string request_digest(const VisionRequest& req) { return sha256_hex(canonical_request(req).dump()); }

std::string request_summary(std::string_view kind, std::string_view prompt) {
  constexpr std::size_t kMax = 80;
  std::string head(prompt.substr(0, std::min(prompt.size(), kMax)));
  std::replace(head.begin(), head.end(), '\n', ' ');
  // Avoid cutting a UTF-8 sequence in half.
  while (!head.empty() && (static_cast<unsigned char>(head.back()) & 0xC0) == 0x80) head.pop_back();
  if (!head.empty() && (static_cast<unsigned char>(head.back()) & 0x80)) head.pop_back();
  return fmt::format("{}: {}{}", kind, head, prompt.size() > kMax ? "..." : "");
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, std::mt19937_64& rng) {
  const double nominal = static_cast<double>(policy.base.count()) * std::ldexp(1.0, std::min(retry, 62));
  std::uniform_real_distribution<double> unit(-policy.jitter, policy.jitter);
  const double jittered = nominal * (1.0 + unit(rng));
  const double capped = std::min(jittered, static_cast<double>(policy.max_delay.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(std::max(0.0, capped))));
}

InFlightLimiter::InFlightLimiter(int limit)
    : limit_(std::clamp(limit, 1, static_cast<int>(kMaxLimit))), sem_(limit_) {}

}  // namespace openleaf
