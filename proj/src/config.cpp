#include "openleaf/config.hpp"

#include <cstdlib>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "openleaf/errors.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace openleaf {

fs::path default_resource_root() {
  if (const char* dir = std::getenv("OPENLEAF_RESOURCE_DIR"); dir && *dir) return dir;
  return OPENLEAF_DEFAULT_RESOURCE_DIR;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
  };
}

namespace {

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::map<std::string, std::string> out;
  if (!fs::exists(path)) return out;
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw DataError(fmt::format("cannot parse {}: {}", path.string(), e.what()));
  }
  for (const auto& [key, node] : tree) {
    std::string value(detail::trim(node.data()));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    out[key] = value;
  }
  return out;
}

std::string env_name(std::string_view key) {
  std::string name = "OPENLEAF_";
  for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError(fmt::format("setting {} expects an integer, got '{}'", key, value));
  }
}

}  // namespace

Settings load_settings(const std::optional<fs::path>& config_file,
                       const std::map<std::string, std::string>& flags, const EnvLookup& env) {
  const auto file = config_file ? read_config_file(*config_file) : std::map<std::string, std::string>{};
  auto lookup = [&](const std::string& key) -> std::optional<std::string> {
    if (auto it = flags.find(key); it != flags.end()) return it->second;
    if (auto v = env(env_name(key))) return v;
    if (auto it = file.find(key); it != file.end()) return it->second;
    return std::nullopt;
  };

  Settings settings;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
  int max_in_flight = 2;
  if (auto v = lookup("http_timeout_s")) timeout = std::chrono::seconds(to_int("http_timeout_s", *v));
  if (auto v = lookup("max_in_flight")) max_in_flight = to_int("max_in_flight", *v);
  if (auto v = lookup("retry_max_attempts")) retry.max_attempts = to_int("retry_max_attempts", *v);
  if (auto v = lookup("retry_base_ms")) retry.base = std::chrono::milliseconds(to_int("retry_base_ms", *v));
  if (auto v = lookup("retry_max_delay_ms"))
    retry.max_delay = std::chrono::milliseconds(to_int("retry_max_delay_ms", *v));

  auto endpoint = [&](const std::string& service) {
    HttpEndpoint e;
    e.url = lookup(service + "_api_url").value_or("");
    e.api_key = lookup(service + "_api_key").value_or("");
    e.timeout = timeout;
    e.retry = retry;
    e.max_in_flight = max_in_flight;
    return e;
  };
  settings.text = endpoint("text");
  settings.image = endpoint("image");
  settings.vision = endpoint("vision");
  return settings;
}

Backends make_http_backends(const Settings& settings) {
  auto require_url = [](const HttpEndpoint& e, std::string_view service) {
    if (e.url.empty())
      throw PreconditionError(fmt::format("{} backend URL not configured (set {})", service,
                                          env_name(fmt::format("{}_api_url", service))));
  };
  require_url(settings.text, "text");
  require_url(settings.image, "image");
  require_url(settings.vision, "vision");
  return {std::make_shared<HttpTextBackend>(settings.text),
          std::make_shared<HttpImageBackend>(settings.image),
          std::make_shared<HttpVisionBackend>(settings.vision)};
}

BackendMode parse_backend_mode(std::string_view name) {
  if (name == "live") return BackendMode::Live;
  if (name == "record") return BackendMode::Record;
  if (name == "replay") return BackendMode::Replay;
  throw PreconditionError(fmt::format("unknown backend mode '{}'", name));
}

Backends make_backends(BackendMode mode, const std::optional<fs::path>& cassette,
                       const Settings& settings) {
  if (mode == BackendMode::Live) return make_http_backends(settings);
  if (!cassette) throw PreconditionError("record and replay modes need a cassette path");
  if (mode == BackendMode::Replay)
    return make_cassette_backends(Cassette::open(*cassette, CassetteMode::Replay));
  return make_cassette_backends(Cassette::open(*cassette, CassetteMode::Record),
                                make_http_backends(settings));
}

}  // namespace openleaf
