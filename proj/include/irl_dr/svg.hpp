#pragma once

// Bare-bones SVG output for the evaluation plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace irl_dr::svg {

using Series = std::pair<std::string, std::vector<double>>;

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  return colors[i % 5];
}

inline std::string line_chart(const std::string& title, const std::vector<Series>& series) {
  constexpr double W = 720, H = 320, L = 50, R = 110, T = 30, B = 30;
  double lo = INFINITY, hi = -INFINITY;
  std::size_t n = 0;
  for (const auto& [name, v] : series) {
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    n = std::max(n, v.size());
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto px = [&](std::size_t i) { return L + (W - L - R) * (n > 1 ? double(i) / double(n - 1) : 0.5); };
  auto py = [&](double y) { return T + (H - T - B) * (1.0 - (y - lo) / (hi - lo)); };
  std::ostringstream os;
  char buf[96];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  std::snprintf(buf, sizeof buf, "%.3g", hi);
  os << "<text x=\"4\" y=\"" << T + 10 << "\" font-size=\"10\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", lo);
  os << "<text x=\"4\" y=\"" << H - B << "\" font-size=\"10\">" << buf << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& v = series[s].second;
    os << "<polyline fill=\"none\" stroke=\"" << palette(s) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(i), py(v[i]));
      os << buf;
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 8 << "\" y=\"" << T + 14 * (s + 1) << "\" font-size=\"11\" fill=\"" << palette(s)
       << "\">" << escape(series[s].first) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Rows of cells in [-1, 1]; negative is blue, positive is red.
inline std::string heatmap(const std::string& title, const std::vector<std::string>& labels,
                           const std::vector<std::vector<double>>& cells) {
  constexpr double L = 140, T = 30, CW = 6, CH = 16;
  std::size_t cols = 0;
  for (const auto& r : cells) cols = std::max(cols, r.size());
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << L + CW * cols + 10 << "\" height=\""
     << T + CH * cells.size() + 10 << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"4\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << escape(title) << "</text>\n";
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const double y = T + CH * r;
    os << "<text x=\"4\" y=\"" << y + 12 << "\" font-size=\"11\">" << escape(r < labels.size() ? labels[r] : "")
       << "</text>\n";
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const double v = std::clamp(cells[r][c], -1.0, 1.0);
      const int shade = static_cast<int>(255 - 200 * std::abs(v));
      char color[16];
      if (v >= 0)
        std::snprintf(color, sizeof color, "#ff%02x%02x", shade, shade);
      else
        std::snprintf(color, sizeof color, "#%02x%02xff", shade, shade);
      os << "<rect x=\"" << L + CW * c << "\" y=\"" << y << "\" width=\"" << CW << "\" height=\"" << CH - 2
         << "\" fill=\"" << color << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace irl_dr::svg
