#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <vector>

#include "openleaf/digest.hpp"
#include "openleaf/document.hpp"

namespace openleaf {

// Story text and visual prompts are creative; context extraction and judging are not.
inline constexpr double kCreativeTemperature = 0.7;
inline constexpr double kExtractionTemperature = 0.0;
inline constexpr int kDefaultMaxOutputTokens = 2048;
inline constexpr int kDefaultImageSize = 1024;
inline constexpr int kMinImageSize = 512;
inline constexpr int kMaxImageSize = 2048;

enum class FinishReason { Complete, Truncated };

struct TextRequest {
  std::string prompt;
  int max_output_tokens = kDefaultMaxOutputTokens;
  double temperature = kCreativeTemperature;
};

struct TextResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::Complete;
};

struct ImageRequest {
  std::string prompt;
  int width = kDefaultImageSize;
  int height = kDefaultImageSize;
  std::optional<std::int64_t> seed;
};

struct ImageResponse {
  Bytes image_bytes;
};

enum class VisionMode { Precise, Balanced, Creative };

std::string_view vision_mode_name(VisionMode mode);
VisionMode parse_vision_mode(std::string_view name);

struct VisionRequest {
  std::string prompt;
  std::vector<Bytes> images;  // order defines image_{i}
  VisionMode mode = VisionMode::Precise;
};

struct VisionResponse {
  std::string text;
};

// Request invariants; throw PreconditionError.
void require_valid(const TextRequest& req);
void require_valid(const ImageRequest& req);
void require_valid(const VisionRequest& req);

// Response invariants; throw BadResponse.
void check_response(const TextResponse& resp);
void check_response(const ImageRequest& req, const ImageResponse& resp);

// Canonical, key-sorted serialization; images enter only through their digests.
json canonical_request(const TextRequest& req);
json canonical_request(const ImageRequest& req);
json canonical_request(const VisionRequest& req);

std::string request_digest(const TextRequest& req);
std::string request_digest(const ImageRequest& req);
std::string request_digest(const VisionRequest& req);

std::string request_summary(std::string_view kind, std::string_view prompt);

class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual TextResponse text_complete(const TextRequest& req) = 0;
};

class ImageBackend {
 public:
  virtual ~ImageBackend() = default;
  virtual ImageResponse image_generate(const ImageRequest& req) = 0;
};

class VisionBackend {
 public:
  virtual ~VisionBackend() = default;
  virtual VisionResponse vision_query(const VisionRequest& req) = 0;
};

struct Backends {
  std::shared_ptr<TextBackend> text;
  std::shared_ptr<ImageBackend> image;
  std::shared_ptr<VisionBackend> vision;
};

struct RetryPolicy {
  std::chrono::milliseconds base{500};
  std::chrono::milliseconds max_delay{30'000};
  int max_attempts = 5;  // total attempts, first one included
  double jitter = 0.1;   // fraction of the nominal delay
};

// Delay before retry number `retry` (0-based): base * 2^retry, jittered by at
// most +/- jitter, then capped at max_delay.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry, std::mt19937_64& rng);

// Bounds the number of concurrent requests a backend has in flight.
class InFlightLimiter {
 public:
  static constexpr std::ptrdiff_t kMaxLimit = 256;

  explicit InFlightLimiter(int limit);

  class Slot {
   public:
    explicit Slot(InFlightLimiter& owner) : owner_(&owner) { owner_->sem_.acquire(); }
    ~Slot() {
      if (owner_) owner_->sem_.release();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    InFlightLimiter* owner_;
  };

  Slot acquire() { return Slot(*this); }
  int limit() const noexcept { return limit_; }

 private:
  int limit_;
  std::counting_semaphore<kMaxLimit> sem_;
};

}  // namespace openleaf
