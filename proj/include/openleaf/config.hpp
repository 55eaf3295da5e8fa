#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "openleaf/backends.hpp"
#include "openleaf/cassette.hpp"
#include "openleaf/http_backend.hpp"

namespace openleaf {

// OPENLEAF_RESOURCE_DIR, else the source tree the library was built from.
std::filesystem::path default_resource_root();

// Flat settings keys; each maps to the environment variable
// OPENLEAF_<KEY in upper case>, e.g. text_api_url -> OPENLEAF_TEXT_API_URL.
inline constexpr const char* kSettingKeys[] = {
    "text_api_url",  "text_api_key",   "image_api_url",      "image_api_key",
    "vision_api_url", "vision_api_key", "http_timeout_s",     "max_in_flight",
    "retry_max_attempts", "retry_base_ms", "retry_max_delay_ms",
};

struct Settings {
  HttpEndpoint text;
  HttpEndpoint image;
  HttpEndpoint vision;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

// Layering: `flags` > environment > config file (`key = value` lines,
// TOML-style quoting allowed). A missing config file is not an error.
Settings load_settings(const std::optional<std::filesystem::path>& config_file,
                       const std::map<std::string, std::string>& flags,
                       const EnvLookup& env = process_env());

Backends make_http_backends(const Settings& settings);

enum class BackendMode { Live, Record, Replay };

BackendMode parse_backend_mode(std::string_view name);  // live | record | replay

// Live: HTTP backends. Record: cassette in front of HTTP backends.
// Replay: cassette only; no service configuration needed.
Backends make_backends(BackendMode mode, const std::optional<std::filesystem::path>& cassette,
                       const Settings& settings);

}  // namespace openleaf
