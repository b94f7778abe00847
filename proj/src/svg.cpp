#include "pointsplit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pointsplit/common.hpp"

namespace pointsplit::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void appendf(std::string& out, const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  out += buf;
}

}  // namespace

std::string gantt_svg(const sched::Timeline& timeline) {
  const double width = 840.0, row_h = 48.0, margin = 60.0, top = 24.0;
  const double span = std::max(timeline.makespan, 1e-9);
  const double px_per_ms = (width - margin - 20.0) / span;
  const double height = top + 2 * row_h + 40.0;

  std::string out;
  appendf(out,
          "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
          "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\" font-size=\"11\">\n",
          width, height, width, height);
  appendf(out, "<rect width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", width, height);
  const char* labels[2] = {"A", "B"};
  const char* fills[2] = {"#5b8def", "#e2883a"};
  for (int row = 0; row < 2; ++row) {
    double y = top + row * row_h;
    appendf(out, "<text x=\"8\" y=\"%.1f\">%s</text>\n", y + row_h / 2 + 4, labels[row]);
    appendf(out,
            "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ccc\"/>\n",
            margin, y + row_h - 6, margin + span * px_per_ms, y + row_h - 6);
  }
  for (const auto& e : timeline.entries) {
    int row = e.proc == sched::Proc::A ? 0 : 1;
    double x = margin + e.start_ms * px_per_ms;
    double w = std::max((e.end_ms - e.start_ms) * px_per_ms, 0.5);
    double y = top + row * row_h + 4;
    appendf(out,
            "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.1f\" fill=\"%s\" "
            "stroke=\"#333\" stroke-width=\"0.5\"><title>%s: %.6g-%.6g ms</title></rect>\n",
            x, y, w, row_h - 16.0, fills[row], escape(e.id).c_str(), e.start_ms, e.end_ms);
    if (w > 30.0)
      appendf(out, "<text x=\"%.2f\" y=\"%.2f\" fill=\"white\">%s</text>\n", x + 3,
              y + (row_h - 16.0) / 2 + 4, escape(e.id).c_str());
  }
  appendf(out, "<text x=\"%.1f\" y=\"%.1f\" fill=\"#333\">makespan %.6g ms</text>\n", margin,
          top + 2 * row_h + 24.0, timeline.makespan);
  out += "</svg>\n";
  return out;
}

std::string heatmap_svg(const std::vector<std::vector<double>>& matrix) {
  const std::size_t n = matrix.size();
  if (n == 0) throw argument_error("empty matrix");
  for (const auto& row : matrix)
    if (row.size() != n) throw argument_error("matrix must be square");

  double lo = matrix[0][0], hi = matrix[0][0];
  for (const auto& row : matrix)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double cell = std::clamp(720.0 / static_cast<double>(n), 1.0, 24.0);
  const double size = cell * static_cast<double>(n);

  std::string out;
  appendf(out,
          "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
          "viewBox=\"0 0 %.2f %.2f\" shape-rendering=\"crispEdges\">\n",
          std::ceil(size), std::ceil(size), size, size);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double t = hi > lo ? (matrix[r][c] - lo) / (hi - lo) : 0.0;
      int shade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      appendf(out,
              "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
              "fill=\"rgb(%d,%d,255)\"/>\n",
              static_cast<double>(c) * cell, static_cast<double>(r) * cell, cell, cell,
              shade, shade);
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace pointsplit::svg
