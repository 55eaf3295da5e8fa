#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <set>
#include <string>

#include "openleaf/backends.hpp"

namespace openleaf {

// Offline stand-in for the model services, used to author cassettes and in
// tests. Text and vision calls pop queued responses in call order; images are
// gradients whose colours derive from the prompt digest, so identical
// prompts always yield identical bytes.
class ScriptedBackend final : public TextBackend, public ImageBackend, public VisionBackend {
 public:
  void push_text(std::string text);
  void push_vision(std::string text);

  // The n-th image call (1-based) throws BadResponse.
  void fail_image_call(int call_number);

  TextResponse text_complete(const TextRequest& req) override;
  ImageResponse image_generate(const ImageRequest& req) override;
  VisionResponse vision_query(const VisionRequest& req) override;

  int text_calls() const;
  int image_calls() const;
  int vision_calls() const;
  std::size_t pending_text() const;
  std::size_t pending_vision() const;

  Backends as_backends(std::shared_ptr<ScriptedBackend> self) const { return {self, self, self}; }

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> text_queue_;
  std::deque<std::string> vision_queue_;
  std::set<int> failing_images_;
  int text_calls_ = 0;
  int image_calls_ = 0;
  int vision_calls_ = 0;
};

Bytes scripted_image(const ImageRequest& req);

}  // namespace openleaf
