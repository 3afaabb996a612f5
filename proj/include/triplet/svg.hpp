#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "triplet/dynamics.hpp"
#include "triplet/geometry.hpp"

// Minimal self-contained SVG output: no scripts, fonts, or external links.
namespace triplet::svg {

inline std::string escape(std::string_view s) {
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

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

// Maps a data rectangle onto the pixel plot area, y pointing up.
struct Frame {
  double x0, x1, y0, y1;
  double width = 480, height = 480, margin = 56;

  double px(double x) const { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); }
  double py(double y) const { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); }
};

namespace detail {

inline void open(std::ostringstream& os, const Frame& f, std::string_view title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
     << "\" viewBox=\"0 0 " << num(f.width) << ' ' << num(f.height) << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(f.width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"14\">" << escape(title) << "</text>\n";
}

inline void axes(std::ostringstream& os, const Frame& f, std::string_view xlabel, std::string_view ylabel) {
  os << "<rect x=\"" << num(f.px(f.x0)) << "\" y=\"" << num(f.py(f.y1)) << "\" width=\""
     << num(f.px(f.x1) - f.px(f.x0)) << "\" height=\"" << num(f.py(f.y0) - f.py(f.y1))
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double tx = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double ty = f.y0 + (f.y1 - f.y0) * k / 4.0;
    os << "<text x=\"" << num(f.px(tx)) << "\" y=\"" << num(f.py(f.y0) + 16)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(tx) << "</text>\n";
    os << "<text x=\"" << num(f.px(f.x0) - 6) << "\" y=\"" << num(f.py(ty) + 3)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(ty) << "</text>\n";
  }
  os << "<text x=\"" << num(f.width / 2) << "\" y=\"" << num(f.height - 12)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(xlabel) << "</text>\n";
  os << "<text x=\"14\" y=\"" << num(f.height / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"12\" transform=\"rotate(-90 14 " << num(f.height / 2) << ")\">" << escape(ylabel)
     << "</text>\n";
}

inline void diagonal(std::ostringstream& os, const Frame& f) {
  os << "<line x1=\"" << num(f.px(-1)) << "\" y1=\"" << num(f.py(-1)) << "\" x2=\"" << num(f.px(1)) << "\" y2=\""
     << num(f.py(1)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
}

inline Frame diagram_frame() { return {-1.0, 1.0, -1.0, 1.0}; }

}  // namespace detail

// Arrows at each grid cell, S_ap on x and S_an on y. Lengths are
// proportional to |(d_sap_total, d_san_total)|, the longest arrow spanning
// 90% of a cell.
inline std::string quiver(const VectorField& field, std::string_view title) {
  const Frame f = detail::diagram_frame();
  std::ostringstream os;
  detail::open(os, f, title);
  detail::axes(os, f, "S_ap", "S_an");
  detail::diagonal(os, f);
  double longest = 0.0;
  for (const auto& c : field.cells) longest = std::max(longest, std::hypot(c.update.d_sap_total, c.update.d_san_total));
  const int res = field.grid.resolution;
  const double cell_px = (f.width - 2 * f.margin) / std::max(1, res - 1);
  const double scale = longest > 0.0 ? 0.9 * cell_px / longest : 0.0;
  for (const auto& c : field.cells) {
    const double dx = c.update.d_sap_total * scale;
    const double dy = -c.update.d_san_total * scale;
    const double x = f.px(c.coord.s_ap), y = f.py(c.coord.s_an);
    const bool hard = is_hard(c.coord);
    const char* color = hard ? "#c0392b" : "#2c5aa0";
    if (std::hypot(dx, dy) < 0.05) {
      os << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"0.6\" fill=\"" << color << "\"/>\n";
      continue;
    }
    const double len = std::hypot(dx, dy);
    const double ux = dx / len, uy = dy / len;
    const double head = std::min(3.0, 0.4 * len);
    const double hx = x + dx, hy = y + dy;
    os << "<path d=\"M" << num(x) << ' ' << num(y) << " L" << num(hx) << ' ' << num(hy) << " M"
       << num(hx - head * (ux - 0.5 * uy)) << ' ' << num(hy - head * (uy + 0.5 * ux)) << " L" << num(hx) << ' '
       << num(hy) << " L" << num(hx - head * (ux + 0.5 * uy)) << ' ' << num(hy - head * (uy - 0.5 * ux))
       << "\" stroke=\"" << color << "\" stroke-width=\"0.8\" fill=\"none\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// Diagram scatter; hard points (S_an > S_ap) in red, others in blue.
inline std::string scatter(std::span<const TripletCoord> points, std::string_view title) {
  const Frame f = detail::diagram_frame();
  std::ostringstream os;
  detail::open(os, f, title);
  detail::axes(os, f, "S_ap", "S_an");
  detail::diagonal(os, f);
  for (const auto& p : points) {
    os << "<circle cx=\"" << num(f.px(p.s_ap)) << "\" cy=\"" << num(f.py(p.s_an)) << "\" r=\"2.5\" fill=\""
       << (is_hard(p) ? "#c0392b" : "#2c5aa0") << "\" fill-opacity=\"0.7\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// A path across the diagram with its start marked.
inline std::string path(std::span<const TripletCoord> points, std::string_view title) {
  const Frame f = detail::diagram_frame();
  std::ostringstream os;
  detail::open(os, f, title);
  detail::axes(os, f, "S_ap", "S_an");
  detail::diagonal(os, f);
  if (!points.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#2c5aa0\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
      os << (i ? " " : "") << num(f.px(points[i].s_ap)) << ',' << num(f.py(points[i].s_an));
    }
    os << "\"/>\n<circle cx=\"" << num(f.px(points.front().s_ap)) << "\" cy=\"" << num(f.py(points.front().s_an))
       << "\" r=\"4\" fill=\"#27ae60\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

struct Series {
  std::string name;
  std::vector<double> values;
};

// Line chart over x = 1..n; y range fixed by the caller.
inline std::string lines(std::span<const Series> series, double y0, double y1, std::string_view title,
                         std::string_view xlabel, std::string_view ylabel) {
  std::size_t n = 1;
  for (const auto& s : series) n = std::max(n, s.values.size());
  Frame f{1.0, std::max(2.0, static_cast<double>(n)), y0, y1};
  f.width = 560;
  f.height = 360;
  std::ostringstream os;
  detail::open(os, f, title);
  detail::axes(os, f, xlabel, ylabel);
  static constexpr const char* kColors[] = {"#2c5aa0", "#c0392b", "#27ae60", "#8e44ad", "#d35400"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].values.size(); ++i) {
      const double v = std::clamp(series[k].values[i], y0, y1);
      os << (i ? " " : "") << num(f.px(static_cast<double>(i + 1))) << ',' << num(f.py(v));
    }
    os << "\"/>\n<text x=\"" << num(f.px(f.x1) - 4) << "\" y=\"" << num(f.py(f.y1) + 14 + 14 * static_cast<double>(k))
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">"
       << escape(series[k].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace triplet::svg
