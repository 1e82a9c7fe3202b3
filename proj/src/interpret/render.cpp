#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dolfin/error.hpp"
#include "dolfin/interpret.hpp"

namespace dolfin {
namespace {

struct Rgb {
  int r, g, b;
};

constexpr Rgb kHighlight{255, 102, 0};
constexpr Rgb kHeat{33, 102, 172};
constexpr const char* kReset = "\x1b[0m";

int level(double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

/// White blended toward `full` by level / 255.
Rgb blend(Rgb full, int lvl) {
  auto mix = [lvl](int c) { return 255 - static_cast<int>(std::lround((255 - c) * lvl / 255.0)); };
  return {mix(full.r), mix(full.g), mix(full.b)};
}

std::string ansi_background(Rgb c) {
  return "\x1b[48;2;" + std::to_string(c.r) + ";" + std::to_string(c.g) + ";" + std::to_string(c.b) +
         "m\x1b[38;2;0;0;0m";
}

std::string css_color(Rgb c, double alpha) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "rgba(%d,%d,%d,%.3f)", c.r, c.g, c.b, std::clamp(alpha, 0.0, 1.0));
  return buf;
}

std::string percent(double v) { return std::to_string(std::lround(100.0 * v)); }

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string format_probability(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "ansi") return ReportFormat::ansi;
  if (name == "html") return ReportFormat::html;
  throw UsageError("unknown report format '" + std::string(name) + "' (expected ansi or html)");
}

std::string html_escape(std::string_view text) {
  std::string out;
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

std::string render_highlight(const WordSupport& ws, std::size_t category,
                             const std::vector<std::string>& categories, ReportFormat format) {
  if (category >= categories.size()) {
    throw DimensionError("render_highlight: category " + std::to_string(category) + " of " +
                         std::to_string(categories.size()));
  }
  if (ws.support.size() != ws.words.size()) throw DimensionError("render_highlight: malformed word support");
  std::string out;
  if (format == ReportFormat::html) {
    out += "<div class=\"highlight-row\"><span class=\"label\" style=\"font-weight:bold\">" +
           html_escape(categories[category]) + "</span>";
    for (std::size_t i = 0; i < ws.words.size(); ++i) {
      const double q = ws.support[i].at(category);
      out += " <span class=\"word\" title=\"" + format_probability(q) +
             "\" style=\"background-color:" + css_color(kHighlight, q) + "\">" +
             html_escape(ws.words[i]) + "</span>";
    }
    out += "</div>\n";
    return out;
  }
  out += "\x1b[1m" + categories[category] + kReset;
  for (std::size_t i = 0; i < ws.words.size(); ++i) {
    const int lvl = level(ws.support[i].at(category));
    out += ' ';
    out += lvl == 0 ? ws.words[i] : ansi_background(blend(kHighlight, lvl)) + ws.words[i] + kReset;
  }
  out += '\n';
  return out;
}

std::string render_highlight_rows(const WordSupport& ws, const std::vector<std::string>& categories,
                                  ReportFormat format) {
  std::string out;
  for (std::size_t c = 0; c < categories.size(); ++c) out += render_highlight(ws, c, categories, format);
  return out;
}

std::string render_heatmap(const Matrix& values, const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels, ReportFormat format) {
  if (row_labels.size() != values.size()) {
    throw DimensionError("render_heatmap: " + std::to_string(row_labels.size()) + " row labels for " +
                         std::to_string(values.size()) + " rows");
  }
  for (const auto& row : values) {
    if (row.size() != col_labels.size()) {
      throw DimensionError("render_heatmap: " + std::to_string(col_labels.size()) +
                           " column labels for a row of " + std::to_string(row.size()));
    }
    for (double v : row) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw NumericError("render_heatmap: value " + std::to_string(v) + " outside [0, 1]");
      }
    }
  }
  std::string out;
  if (format == ReportFormat::html) {
    out += "<table class=\"heatmap\" style=\"border-collapse:collapse\"><tr><th></th>";
    for (const auto& c : col_labels) out += "<th>" + html_escape(c) + "</th>";
    out += "</tr>\n";
    for (std::size_t r = 0; r < values.size(); ++r) {
      out += "<tr><th style=\"text-align:left\">" + html_escape(row_labels[r]) + "</th>";
      for (double v : values[r]) {
        out += "<td style=\"background-color:" + css_color(kHeat, v) +
               ";text-align:right;padding:2px 4px\">" + percent(v) + "</td>";
      }
      out += "</tr>\n";
    }
    out += "</table>\n";
    return out;
  }
  std::size_t label_width = 0;
  for (const auto& l : row_labels) label_width = std::max(label_width, l.size());
  std::size_t cell = 4;
  for (const auto& l : col_labels) cell = std::max(cell, l.size() + 1);
  out += std::string(label_width, ' ');
  for (const auto& c : col_labels) out += pad_left(c, cell);
  out += '\n';
  for (std::size_t r = 0; r < values.size(); ++r) {
    out += pad_right(row_labels[r], label_width);
    for (double v : values[r]) {
      out += ansi_background(blend(kHeat, level(v))) + pad_left(percent(v), cell) + kReset;
    }
    out += '\n';
  }
  return out;
}

std::string render_feature_subscripts(const WordSupport& ws, ReportFormat format) {
  std::string out;
  for (std::size_t i = 0; i < ws.words.size(); ++i) {
    if (i) out += ' ';
    const std::string j = std::to_string(ws.top_feature.at(i));
    if (format == ReportFormat::html) {
      out += "<span class=\"subscripted\">" + html_escape(ws.words[i]) + "<sub>" + j + "</sub></span>";
    } else {
      out += ws.words[i] + "_" + j;
    }
  }
  return format == ReportFormat::html ? "<p>" + out + "</p>\n" : out + "\n";
}

std::string render_report(const WordSupport& ws, const FeatureSupportTable& table,
                          ReportFormat format) {
  const auto& cats = table.categories;
  std::vector<std::string> features;
  bool any_unused = false;
  for (std::size_t j = 0; j < table.latent; ++j) {
    features.push_back("f" + std::to_string(j) + (table.unused[j] ? "*" : ""));
    any_unused |= table.unused[j];
  }
  std::string text;
  for (std::size_t i = 0; i < ws.words.size(); ++i) text += (i ? " " : "") + ws.words[i];
  const std::string predicted = cats.at(static_cast<std::size_t>(ws.predicted));
  const std::string confidence =
      ws.class_probs.empty() ? "" : format_probability(ws.class_probs[static_cast<std::size_t>(ws.predicted)]);
  const std::string unused_note = "* feature never fired above delta; uniform support";

  std::string out;
  if (format == ReportFormat::html) {
    out += "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"/><title>" + html_escape(text) +
           "</title></head>\n<body style=\"font-family:sans-serif\">\n";
    out += "<h1>" + html_escape(text) + "</h1>\n";
    out += "<p>predicted: <b>" + html_escape(predicted) + "</b> (p = " + confidence +
           "), delta = " + format_probability(table.delta) + "</p>\n";
    out += "<h2>support q(c|w,s)</h2>\n" + render_highlight_rows(ws, cats, format);
    out += "<h2>q(c|f)</h2>\n" + render_heatmap(table.q, cats, features, format);
    if (any_unused) out += "<p>" + html_escape(unused_note) + "</p>\n";
    out += "<h2>p(f|w,s)</h2>\n" + render_heatmap(ws.feature_probs, ws.words, features, format);
    out += "<h2>most probable feature per word</h2>\n" + render_feature_subscripts(ws, format);
    out += "</body></html>\n";
    return out;
  }
  out += "text: " + text + "\n";
  out += "predicted: " + predicted + " (p = " + confidence + "), delta = " + format_probability(table.delta) + "\n\n";
  out += "support q(c|w,s)\n" + render_highlight_rows(ws, cats, format) + "\n";
  out += "q(c|f)\n" + render_heatmap(table.q, cats, features, format);
  if (any_unused) out += unused_note + "\n";
  out += "\np(f|w,s)\n" + render_heatmap(ws.feature_probs, ws.words, features, format);
  out += "\nmost probable feature per word\n" + render_feature_subscripts(ws, format);
  return out;
}

}  // namespace dolfin
