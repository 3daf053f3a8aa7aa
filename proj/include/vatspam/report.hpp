#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "vatspam/error.hpp"
#include "vatspam/model.hpp"

namespace vatspam {

struct ImportanceView {
  std::vector<std::string> tokens;
  std::vector<double> scores;  // normalized, in [-1, 1]
  std::string true_label;
  std::string predicted_label;
  double predicted_prob = 0.0;
  double aggregate = 0.0;  // un-normalized attribution sum
};

struct HeatmapView {
  std::vector<double> matrix;  // n x n row-major
  std::vector<std::string> labels;
  int n = 0;
  std::string caption;
};

namespace detail {

inline std::string escape_markup(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
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

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace detail

// Fig-7-style colored token strip. Green marks positive contributions to the
// predicted label, red negative; background alpha tracks |score| so a zero
// score renders fully transparent. A JSON island carries the raw numbers for
// downstream tools.
inline std::string render_importance_html(const ImportanceView& view) {
  if (view.tokens.size() != view.scores.size())
    throw render_error("importance: tokens/scores length mismatch");
  for (double s : view.scores)
    if (!std::isfinite(s) || s < -1.0 || s > 1.0)
      throw render_error("importance: scores must lie in [-1,1]");
  std::string html;
  html +=
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
      "<title>word importance</title>\n<style>\n"
      "body { font-family: sans-serif; margin: 2em; }\n"
      ".tok { padding: 2px 4px; margin: 1px; border-radius: 3px; display: inline-block; }\n"
      "table.meta td { padding: 2px 10px 2px 0; }\n"
      ".legend span { padding: 2px 8px; margin-right: 6px; }\n"
      "</style>\n</head>\n<body>\n<h1>Word importance</h1>\n<table class=\"meta\">\n";
  html += "<tr><td>True label</td><td>" + detail::escape_markup(view.true_label) + "</td></tr>\n";
  html += "<tr><td>Predicted label</td><td>" + detail::escape_markup(view.predicted_label) +
          "</td></tr>\n";
  html += "<tr><td>Predicted probability</td><td>" + detail::fixed3(view.predicted_prob) +
          "</td></tr>\n";
  html += "<tr><td>Attribution score</td><td>" + detail::fixed3(view.aggregate) + "</td></tr>\n";
  html += "</table>\n<p>\n";
  for (std::size_t i = 0; i < view.tokens.size(); ++i) {
    const double s = view.scores[i];
    const char* hue = s < 0.0 ? "220,0,0" : "0,160,0";
    html += "<span class=\"tok\" style=\"background: rgba(" + std::string(hue) + "," +
            detail::fixed3(std::abs(s)) + ")\">" + detail::escape_markup(view.tokens[i]) +
            "</span>\n";
  }
  html +=
      "</p>\n<p class=\"legend\"><span style=\"background: rgba(0,160,0,0.8)\">supports "
      "prediction</span><span style=\"background: rgba(220,0,0,0.8)\">opposes "
      "prediction</span></p>\n";
  nlohmann::json island{{"tokens", view.tokens},
                        {"scores", view.scores},
                        {"true_label", view.true_label},
                        {"predicted_label", view.predicted_label},
                        {"predicted_prob", view.predicted_prob},
                        {"aggregate", view.aggregate}};
  html += "<script type=\"application/json\" id=\"importance-data\">" + island.dump() +
          "</script>\n</body>\n</html>\n";
  return html;
}

// n x n heatmap; cell luminance is value / matrix max, axis labels are the
// tokens. Pure text-out, so identical views give identical bytes.
inline std::string render_attention_svg(const HeatmapView& view) {
  const int n = view.n;
  if (n < 1 || view.matrix.size() != static_cast<std::size_t>(n) * n)
    throw render_error("attention svg: bad matrix shape");
  if (view.labels.size() != static_cast<std::size_t>(n))
    throw render_error("attention svg: labels length != n");
  double mx = 0.0;
  for (double v : view.matrix) {
    if (!std::isfinite(v)) throw render_error("attention svg: non-finite cell");
    mx = std::max(mx, std::abs(v));
  }
  const int cell = 24, margin = 90, pad = 10;
  const int wh = margin + n * cell + pad;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(wh) +
         "\" height=\"" + std::to_string(wh + 24) + "\" font-family=\"monospace\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(margin) + "\" y=\"16\" font-size=\"13\">" +
         detail::escape_markup(view.caption) + "</text>\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = view.matrix[static_cast<std::size_t>(i) * n + j];
      const int lum = mx > 0.0 ? static_cast<int>(std::lround(255.0 * v / mx)) : 0;
      const std::string c = std::to_string(lum);
      svg += "<rect x=\"" + std::to_string(margin + j * cell) + "\" y=\"" +
             std::to_string(margin + i * cell) + "\" width=\"" + std::to_string(cell) +
             "\" height=\"" + std::to_string(cell) + "\" fill=\"rgb(" + c + "," + c + "," + c +
             ")\"/>\n";
    }
  }
  for (int i = 0; i < n; ++i) {
    // y-axis: query tokens; x-axis: key tokens, rotated.
    svg += "<text x=\"" + std::to_string(margin - 6) + "\" y=\"" +
           std::to_string(margin + i * cell + cell / 2 + 4) + "\" text-anchor=\"end\">" +
           detail::escape_markup(view.labels[static_cast<std::size_t>(i)]) + "</text>\n";
    const int tx = margin + i * cell + cell / 2 + 4;
    const int ty = margin - 6;
    svg += "<text x=\"" + std::to_string(tx) + "\" y=\"" + std::to_string(ty) +
           "\" text-anchor=\"start\" transform=\"rotate(-60 " + std::to_string(tx) + " " +
           std::to_string(ty) + ")\">" + detail::escape_markup(view.labels[static_cast<std::size_t>(i)]) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

struct HeadRef {
  int layer = 0;  // 0-based indices; captions print 1-based per display convention
  int head = 0;
};

// Side-by-side panels of the selected heads for one or two models, one row
// per head, caption "Head L-H" (1-based).
inline std::string render_head_grid(const std::vector<const AttentionGrid*>& grids,
                                    const std::vector<std::string>& names,
                                    const std::vector<HeadRef>& heads) {
  if (grids.empty() || grids.size() > 2 || grids.size() != names.size())
    throw render_error("head grid: need one or two named grids");
  for (const auto* g : grids) {
    if (g->labels != grids[0]->labels)
      throw render_error("head grid: models tokenize the input differently");
  }
  std::string html;
  html +=
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>attention heads"
      "</title>\n<style>\nbody { font-family: sans-serif; }\n"
      "div.row { display: flex; gap: 16px; margin-bottom: 16px; }\n"
      "figure { margin: 0; }\nfigcaption { font-size: 13px; margin-bottom: 4px; }\n"
      "</style>\n</head>\n<body>\n";
  for (const auto& hr : heads) {
    html += "<div class=\"row\">\n";
    for (std::size_t gi = 0; gi < grids.size(); ++gi) {
      const AttentionGrid& g = *grids[gi];
      const std::string caption =
          "Head " + std::to_string(hr.layer + 1) + "-" + std::to_string(hr.head + 1) + " (" +
          names[gi] + ")";
      HeatmapView view;
      view.matrix = g.at(hr.layer, hr.head);
      view.labels = g.labels;
      view.n = g.n;
      view.caption = caption;
      html += "<figure>\n<figcaption>" + detail::escape_markup(caption) + "</figcaption>\n" +
              render_attention_svg(view) + "</figure>\n";
    }
    html += "</div>\n";
  }
  html += "</body>\n</html>\n";
  return html;
}

}  // namespace vatspam
