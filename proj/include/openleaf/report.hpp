#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "openleaf/document.hpp"

namespace openleaf {

std::string html_escape(std::string_view text);

// Self-contained page: the document in order on the left, the evaluation
// (or a "not evaluated" note) on the right. Generated webpages go into an
// iframe with an empty sandbox attribute, so their scripts never run.
// Images are referenced relative to the run directory.
std::string render_report(const InterleavedDocument& doc, const std::optional<json>& eval);

// Reads document.json (required) and eval.json (optional) from `run_dir`,
// writes report.html there and returns its path.
std::filesystem::path write_report(const std::filesystem::path& run_dir);

}  // namespace openleaf
