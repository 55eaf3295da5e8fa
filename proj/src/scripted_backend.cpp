#include "openleaf/scripted_backend.hpp"

#include <fmt/format.h>

#include "openleaf/errors.hpp"
#include "openleaf/png_image.hpp"

namespace openleaf {

void ScriptedBackend::push_text(std::string text) {
  std::lock_guard lock(mutex_);
  text_queue_.push_back(std::move(text));
}

void ScriptedBackend::push_vision(std::string text) {
  std::lock_guard lock(mutex_);
  vision_queue_.push_back(std::move(text));
}

void ScriptedBackend::fail_image_call(int call_number) {
  std::lock_guard lock(mutex_);
  failing_images_.insert(call_number);
}

TextResponse ScriptedBackend::text_complete(const TextRequest& req) {
  require_valid(req);
  std::lock_guard lock(mutex_);
  ++text_calls_;
  if (text_queue_.empty()) throw BadResponse("scripted text queue exhausted");
  TextResponse resp{std::move(text_queue_.front()), FinishReason::Complete};
  text_queue_.pop_front();
  return resp;
}

Bytes scripted_image(const ImageRequest& req) {
  const auto digest = sha256_hex(req.prompt);
  const auto top = static_cast<std::uint32_t>(std::stoul(digest.substr(0, 6), nullptr, 16));
  const auto bottom = static_cast<std::uint32_t>(std::stoul(digest.substr(6, 6), nullptr, 16));
  return encode_gradient_png(req.width, req.height, top, bottom);
}

ImageResponse ScriptedBackend::image_generate(const ImageRequest& req) {
  require_valid(req);
  int call = 0;
  {
    std::lock_guard lock(mutex_);
    call = ++image_calls_;
    if (failing_images_.contains(call))
      throw BadResponse(fmt::format("scripted image failure on call {}", call));
  }
  return ImageResponse{scripted_image(req)};
}

VisionResponse ScriptedBackend::vision_query(const VisionRequest& req) {
  require_valid(req);
  std::lock_guard lock(mutex_);
  ++vision_calls_;
  if (vision_queue_.empty()) throw BadResponse("scripted vision queue exhausted");
  VisionResponse resp{std::move(vision_queue_.front())};
  vision_queue_.pop_front();
  return resp;
}

int ScriptedBackend::text_calls() const {
  std::lock_guard lock(mutex_);
  return text_calls_;
}

int ScriptedBackend::image_calls() const {
  std::lock_guard lock(mutex_);
  return image_calls_;
}

int ScriptedBackend::vision_calls() const {
  std::lock_guard lock(mutex_);
  return vision_calls_;
}

std::size_t ScriptedBackend::pending_text() const {
  std::lock_guard lock(mutex_);
  return text_queue_.size();
}

std::size_t ScriptedBackend::pending_vision() const {
  std::lock_guard lock(mutex_);
  return vision_queue_.size();
}

}  // namespace openleaf
