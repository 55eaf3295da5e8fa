#include "openleaf/cassette.hpp"

#include <fstream>
#include <mutex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "openleaf/fs_util.hpp"
#include "openleaf/errors.hpp"

namespace fs = std::filesystem;

namespace openleaf {

namespace {

constexpr int kCassetteVersion = 1;

std::string finish_reason_name(FinishReason r) {
  return r == FinishReason::Truncated ? "truncated" : "complete";
}

}  // namespace

Cassette::Cassette(fs::path path, CassetteMode mode) : path_(std::move(path)), mode_(mode) {}

std::shared_ptr<Cassette> Cassette::open(const fs::path& manifest, CassetteMode mode) {
  std::shared_ptr<Cassette> cassette(new Cassette(manifest, mode));
  if (fs::exists(manifest))
    cassette->load();
  else if (mode == CassetteMode::Replay)
    throw IoError(fmt::format("cassette {} does not exist", manifest.string()));
  return cassette;
}

fs::path Cassette::image_dir() const {
  auto dir = path_;
  dir.replace_extension();
  return dir;
}

void Cassette::load() {
  json j;
  try {
    j = json::parse(read_text_file(path_));
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("cassette {} is not valid JSON: {}", path_.string(), e.what()));
  }
  try {
    for (const auto& e : j.at("entries")) {
      CassetteEntry entry{e.at("request_digest").get<std::string>(),
                          e.value("request_summary", std::string{}), e.at("kind").get<std::string>(),
                          e.at("response")};
      if (entry.kind == "image") {
        const auto file = image_dir() / entry.response.at("image_file").get<std::string>();
        images_[entry.request_digest] = read_binary_file(file);
      }
      by_digest_.try_emplace(entry.request_digest, entries_.size());
      entries_.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed cassette {}: {}", path_.string(), e.what()));
  }
}

void Cassette::save_locked() const {
  json entries = json::array();
  for (const auto& e : entries_)
    entries.push_back({{"request_digest", e.request_digest},
                       {"request_summary", e.request_summary},
                       {"kind", e.kind},
                       {"response", e.response}});
  const json manifest = {{"version", kCassetteVersion}, {"entries", std::move(entries)}};
  write_file_atomic(path_, manifest.dump(2) + "\n");
}

const CassetteEntry* Cassette::find_locked(const std::string& digest, std::string_view kind) const {
  auto it = by_digest_.find(digest);
  if (it == by_digest_.end()) return nullptr;
  const auto& entry = entries_[it->second];
  if (entry.kind != kind)
    throw DataError(fmt::format("cassette entry {} is a {} response, expected {}", digest,
                                entry.kind, kind));
  return &entry;
}

std::optional<TextResponse> Cassette::find_text(const std::string& digest) const {
  std::shared_lock lock(mutex_, std::defer_lock);
  if (mode_ == CassetteMode::Record) lock.lock();
  const auto* entry = find_locked(digest, "text");
  if (!entry) return std::nullopt;
  TextResponse resp;
  resp.text = entry->response.at("text").get<std::string>();
  resp.finish_reason = entry->response.value("finish_reason", std::string{"complete"}) == "truncated"
                           ? FinishReason::Truncated
                           : FinishReason::Complete;
  return resp;
}

std::optional<ImageResponse> Cassette::find_image(const std::string& digest) const {
  std::shared_lock lock(mutex_, std::defer_lock);
  if (mode_ == CassetteMode::Record) lock.lock();
  if (!find_locked(digest, "image")) return std::nullopt;
  return ImageResponse{images_.at(digest)};
}

std::optional<VisionResponse> Cassette::find_vision(const std::string& digest) const {
  std::shared_lock lock(mutex_, std::defer_lock);
  if (mode_ == CassetteMode::Record) lock.lock();
  const auto* entry = find_locked(digest, "vision");
  if (!entry) return std::nullopt;
  return VisionResponse{entry->response.at("text").get<std::string>()};
}

void Cassette::append(CassetteEntry entry, const Bytes* image) {
  if (mode_ != CassetteMode::Record) throw PreconditionError("cassette is read-only in replay mode");
  std::unique_lock lock(mutex_);
  if (by_digest_.contains(entry.request_digest)) return;
  if (image) {
    write_file_atomic(image_dir() / (entry.request_digest + ".png"), *image);
    images_[entry.request_digest] = *image;
  }
  by_digest_.emplace(entry.request_digest, entries_.size());
  entries_.push_back(std::move(entry));
  save_locked();
}

void Cassette::record(const std::string& digest, const TextRequest& req, const TextResponse& resp) {
  append({digest, request_summary("text", req.prompt), "text",
          {{"text", resp.text}, {"finish_reason", finish_reason_name(resp.finish_reason)}}},
         nullptr);
}

void Cassette::record(const std::string& digest, const ImageRequest& req, const ImageResponse& resp) {
  append({digest, request_summary("image", req.prompt), "image", {{"image_file", digest + ".png"}}},
         &resp.image_bytes);
}

void Cassette::record(const std::string& digest, const VisionRequest& req,
                      const VisionResponse& resp) {
  append({digest, request_summary("vision", req.prompt), "vision", {{"text", resp.text}}}, nullptr);
}

std::vector<CassetteEntry> Cassette::entries() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::size_t Cassette::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---- backend -------------------------------------------------------------

CassetteBackend::CassetteBackend(std::shared_ptr<Cassette> cassette, Backends inner)
    : cassette_(std::move(cassette)), inner_(std::move(inner)) {}

namespace {

template <typename Inner>
Inner& require_inner(const std::shared_ptr<Inner>& inner, std::string_view kind) {
  if (!inner) throw PreconditionError(fmt::format("record mode needs a live {} backend", kind));
  return *inner;
}

}  // namespace

TextResponse CassetteBackend::text_complete(const TextRequest& req) {
  require_valid(req);
  const auto digest = request_digest(req);
  if (auto hit = cassette_->find_text(digest)) return *hit;
  if (cassette_->mode() == CassetteMode::Replay) throw CassetteMiss(digest);
  auto resp = require_inner(inner_.text, "text").text_complete(req);
  check_response(resp);
  cassette_->record(digest, req, resp);
  spdlog::debug("recorded text response {}", digest);
  return resp;
}

ImageResponse CassetteBackend::image_generate(const ImageRequest& req) {
  require_valid(req);
  const auto digest = request_digest(req);
  if (auto hit = cassette_->find_image(digest)) return *hit;
  if (cassette_->mode() == CassetteMode::Replay) throw CassetteMiss(digest);
  auto resp = require_inner(inner_.image, "image").image_generate(req);
  check_response(req, resp);
  cassette_->record(digest, req, resp);
  spdlog::debug("recorded image response {}", digest);
  return resp;
}

VisionResponse CassetteBackend::vision_query(const VisionRequest& req) {
  require_valid(req);
  const auto digest = request_digest(req);
  if (auto hit = cassette_->find_vision(digest)) return *hit;
  if (cassette_->mode() == CassetteMode::Replay) throw CassetteMiss(digest);
  auto resp = require_inner(inner_.vision, "vision").vision_query(req);
  cassette_->record(digest, req, resp);
  spdlog::debug("recorded vision response {}", digest);
  return resp;
}

Backends make_cassette_backends(std::shared_ptr<Cassette> cassette, Backends inner) {
  auto backend = std::make_shared<CassetteBackend>(std::move(cassette), std::move(inner));
  return {backend, backend, backend};
}

}  // namespace openleaf
