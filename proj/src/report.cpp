#include "openleaf/report.hpp"

#include <regex>

#include <fmt/format.h>

#include "openleaf/errors.hpp"
#include "openleaf/fs_util.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace openleaf {

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

constexpr const char* kStyleSheet = R"(body { font-family: Georgia, serif; margin: 0; color: #222; }
header { padding: 1em 2em; background: #2f4f3f; color: #fff; }
main { display: flex; gap: 2em; padding: 1em 2em; }
.document { flex: 3; max-width: 48em; }
.evaluation { flex: 1; min-width: 16em; border-left: 1px solid #ccc; padding-left: 1.5em; }
figure { margin: 1.5em 0; }
figure img { max-width: 100%; height: auto; border-radius: 4px; }
figcaption { font-size: 0.8em; color: #666; }
iframe { width: 100%; height: 48em; border: 1px solid #ccc; }
table { border-collapse: collapse; }
td, th { padding: 0.2em 0.6em; text-align: left; border-bottom: 1px solid #eee; }
.score { font-weight: bold; }
.muted { color: #888; })";

void paragraphs(std::string& out, std::string_view text) {
  std::string para;
  auto flush = [&] {
    const auto t = detail::trim(para);
    if (!t.empty()) out += fmt::format("<p>{}</p>\n", html_escape(t));
    para.clear();
  };
  for (auto line : detail::split_lines(text)) {
    if (detail::trim(line).empty()) {
      flush();
      continue;
    }
    if (!para.empty()) para += ' ';
    para += detail::trim(line);
  }
  flush();
}

void figure(std::string& out, const InterleavedDocument& doc, int index) {
  const auto* slot = doc.find_slot(index);
  out += "<figure>\n";
  if (slot && slot->image_ref)
    out += fmt::format("<img src=\"{}\" alt=\"image {}\">\n", html_escape(*slot->image_ref), index);
  else
    out += fmt::format("<p class=\"muted\">[image {} not rendered]</p>\n", index);
  if (slot && !slot->visual_prompt.empty())
    out += fmt::format("<figcaption>{}</figcaption>\n",
                       html_escape(slot->augmented_prompt.value_or(slot->visual_prompt)));
  out += "</figure>\n";
}

std::string embedded_page(const InterleavedDocument& doc) {
  static const std::regex src_re(R"re(src\s*=\s*(["'])img([1-9][0-9]*)\.png\1)re", std::regex::icase);
  std::string page = std::regex_replace(*doc.html, src_re, "src=\"images/img_$2.png\"");
  if (doc.css && !doc.css->empty()) {
    const auto style = fmt::format("<style>\n{}\n</style>\n", *doc.css);
    const auto head_end = detail::to_lower(page).find("</head>");
    if (head_end != std::string::npos)
      page.insert(head_end, style);
    else
      page = style + page;
  }
  return page;
}

std::string score_text(const json& v) {
  return v.is_number() ? fmt::format("{:.2f}", v.get<double>()) : "n/a";
}

void evaluation_panel(std::string& out, const std::optional<json>& eval) {
  out += "<aside class=\"evaluation\">\n<h2>Evaluation</h2>\n";
  if (!eval) {
    out += "<p class=\"muted\">Not evaluated.</p>\n</aside>\n";
    return;
  }
  const json& entity = eval->value("entity", json::object());
  const json& style = eval->value("style", json::object());
  out += "<h3>Entity consistency</h3>\n";
  if (entity.contains("subjects")) {
    out += "<ul>\n";
    for (const auto& s : entity["subjects"])
      out += fmt::format("<li>{}</li>\n", html_escape(s.get<std::string>()));
    out += "</ul>\n";
  }
  out += fmt::format("<p>Score: <span class=\"score\">{}</span></p>\n",
                     score_text(entity.value("score", json())));
  out += "<h3>Style consistency</h3>\n<table>\n";
  if (style.contains("factor_scores")) {
    for (const auto& [factor, value] : style["factor_scores"].items())
      out += fmt::format("<tr><td>{}</td><td>{}</td></tr>\n", html_escape(factor), score_text(value));
  }
  out += "</table>\n";
  out += fmt::format("<p>Final score: <span class=\"score\">{}</span></p>\n",
                     score_text(style.value("final_score", json())));
  out += "</aside>\n";
}

}  // namespace

std::string render_report(const InterleavedDocument& doc, const std::optional<json>& eval) {
  std::string out;
  out += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  out += fmt::format("<title>{} ({})</title>\n", html_escape(doc.query_id), task_name(doc.task));
  out += fmt::format("<style>\n{}\n</style>\n</head>\n<body>\n", kStyleSheet);
  out += fmt::format("<header><h1>{}</h1><p>Task: {}</p></header>\n<main>\n",
                     html_escape(doc.query_id), task_name(doc.task));
  out += "<section class=\"document\">\n";
  if (doc.task == TaskKind::Webpage && doc.html) {
    out += fmt::format("<iframe sandbox=\"\" title=\"generated webpage\" srcdoc=\"{}\"></iframe>\n",
                       html_escape(embedded_page(doc)));
  } else {
    for (const auto& seg : doc.segments) {
      if (seg.is_text())
        paragraphs(out, seg.text);
      else
        figure(out, doc, seg.slot_index);
    }
  }
  if (doc.global_context) {
    out += "<h3>Global context</h3>\n<ul>\n";
    for (const auto& e : doc.global_context->entities)
      out += fmt::format("<li><b>{}</b>: {}</li>\n", html_escape(e.subject_name),
                         html_escape(e.appearance));
    out += fmt::format("<li><b>style</b>: {}</li>\n</ul>\n", html_escape(doc.global_context->style));
  }
  out += "</section>\n";
  evaluation_panel(out, eval);
  out += "</main>\n</body>\n</html>\n";
  return out;
}

fs::path write_report(const fs::path& run_dir) {
  const auto doc_path = run_dir / "document.json";
  if (!fs::exists(doc_path)) throw IoError(fmt::format("missing {}", doc_path.string()));
  const auto doc = deserialize_document(read_text_file(doc_path));
  std::optional<json> eval;
  if (const auto eval_path = run_dir / "eval.json"; fs::exists(eval_path)) {
    try {
      eval = json::parse(read_text_file(eval_path));
    } catch (const json::parse_error& e) {
      throw DataError(fmt::format("{}: {}", eval_path.string(), e.what()));
    }
  }
  const auto out = run_dir / "report.html";
  write_file_atomic(out, render_report(doc, eval));
  return out;
}

}  // namespace openleaf
