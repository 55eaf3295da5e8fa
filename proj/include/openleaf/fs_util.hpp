#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "openleaf/digest.hpp"

namespace openleaf {

// Throw IoError naming the path.
std::string read_text_file(const std::filesystem::path& path);
Bytes read_binary_file(const std::filesystem::path& path);

// Writes a sibling temp file and renames it over `path`; creates parent dirs.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, const Bytes& contents);

}  // namespace openleaf
