#include "openleaf/fs_util.hpp"

#include <atomic>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "openleaf/errors.hpp"

namespace fs = std::filesystem;

namespace openleaf {

namespace {

template <typename Container>
Container read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  return Container(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes_atomic(const fs::path& path, const char* data, std::size_t size) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += fmt::format(".tmp{}", counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", tmp.string()));
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw IoError(fmt::format("short write to {}", tmp.string()));
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(fmt::format("cannot move {} into place", path.string()));
  }
}

}  // namespace

std::string read_text_file(const fs::path& path) { return read_all<std::string>(path); }

Bytes read_binary_file(const fs::path& path) {
  auto text = read_all<std::string>(path);
  return Bytes(text.begin(), text.end());
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  write_bytes_atomic(path, contents.data(), contents.size());
}

void write_file_atomic(const fs::path& path, const Bytes& contents) {
  write_bytes_atomic(path, reinterpret_cast<const char*>(contents.data()), contents.size());
}

}  // namespace openleaf
