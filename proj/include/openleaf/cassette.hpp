#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "openleaf/backends.hpp"

namespace openleaf {

enum class CassetteMode { Record, Replay };

struct CassetteEntry {
  std::string request_digest;
  std::string request_summary;
  std::string kind;  // text | image | vision
  json response;     // image responses hold {"image_file": "<digest>.png"}
};

// Request/response recordings backed by `<name>.json` plus a sibling
// directory `<name>/` holding image bytes as `<digest>.png`.
//
// Replay cassettes are immutable once loaded, so lookups take no lock.
// Record cassettes serialize writers and persist on every new entry.
class Cassette {
 public:
  // Replay requires the manifest to exist; record starts empty or appends.
  static std::shared_ptr<Cassette> open(const std::filesystem::path& manifest, CassetteMode mode);

  CassetteMode mode() const noexcept { return mode_; }
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path image_dir() const;

  std::optional<TextResponse> find_text(const std::string& digest) const;
  std::optional<ImageResponse> find_image(const std::string& digest) const;
  std::optional<VisionResponse> find_vision(const std::string& digest) const;

  void record(const std::string& digest, const TextRequest& req, const TextResponse& resp);
  void record(const std::string& digest, const ImageRequest& req, const ImageResponse& resp);
  void record(const std::string& digest, const VisionRequest& req, const VisionResponse& resp);

  std::vector<CassetteEntry> entries() const;
  std::size_t size() const;

 private:
  Cassette(std::filesystem::path path, CassetteMode mode);

  void load();
  void save_locked() const;
  const CassetteEntry* find_locked(const std::string& digest, std::string_view kind) const;
  void append(CassetteEntry entry, const Bytes* image);

  std::filesystem::path path_;
  CassetteMode mode_;
  mutable std::shared_mutex mutex_;
  std::vector<CassetteEntry> entries_;
  std::map<std::string, std::size_t> by_digest_;
  std::map<std::string, Bytes> images_;
};

// Serves every backend call from the cassette. In record mode a miss is
// forwarded to `inner`, validated, persisted, and then returned; in replay
// mode a miss raises CassetteMiss.
class CassetteBackend final : public TextBackend, public ImageBackend, public VisionBackend {
 public:
  CassetteBackend(std::shared_ptr<Cassette> cassette, Backends inner);

  TextResponse text_complete(const TextRequest& req) override;
  ImageResponse image_generate(const ImageRequest& req) override;
  VisionResponse vision_query(const VisionRequest& req) override;

  const Cassette& cassette() const { return *cassette_; }

 private:
  std::shared_ptr<Cassette> cassette_;
  Backends inner_;
};

Backends make_cassette_backends(std::shared_ptr<Cassette> cassette, Backends inner = {});

}  // namespace openleaf
