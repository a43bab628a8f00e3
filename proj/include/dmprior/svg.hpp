#pragma once

// Minimal SVG line and bar charts for report figures. Coordinates are
// printed with fixed precision so output is byte-stable.

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace dmprior::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;

  void add(double px, double py) {
    x.push_back(px);
    y.push_back(py);
  }
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

struct Frame {
  double width = 640, height = 420, left = 60, right = 20, top = 40, bottom = 50;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

  double px(double x) const { return left + (x - x_min) / (x_max - x_min) * (width - left - right); }
  double py(double y) const {
    return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom);
  }
};

inline void open(std::ostringstream& out, const Frame& f, const std::string& title,
                 const std::string& x_label, const std::string& y_label) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\""
      << num(f.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(f.width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  out << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.py(f.y_min)) << "\" x2=\""
      << num(f.width - f.right) << "\" y2=\"" << num(f.py(f.y_min)) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.top) << "\" x2=\"" << num(f.left)
      << "\" y2=\"" << num(f.py(f.y_min)) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x_min + (f.x_max - f.x_min) * i / 4.0;
    const double yv = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(f.py(f.y_min) + 16)
        << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    out << "<text x=\"" << num(f.left - 6) << "\" y=\"" << num(f.py(yv) + 4)
        << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  out << "<text x=\"" << num(f.px((f.x_min + f.x_max) / 2)) << "\" y=\"" << num(f.height - 10)
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << num(f.py((f.y_min + f.y_max) / 2))
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << num(f.py((f.y_min + f.y_max) / 2))
      << ")\">" << escape(y_label) << "</text>\n";
}

}  // namespace detail

/// Line chart on x in [0, 1]; y range from the data (floor 0). A dashed
/// diagonal is drawn when `diagonal` is set (calibration plots).
inline std::string line_chart(const std::vector<Series>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label,
                              bool diagonal = false) {
  detail::Frame f;
  double y_max = diagonal ? 1.0 : 0.0;
  for (const auto& s : series)
    for (double y : s.y) y_max = std::max(y_max, y);
  f.y_max = y_max > 0 ? y_max * (diagonal ? 1.0 : 1.05) : 1.0;
  std::ostringstream out;
  detail::open(out, f, title, x_label, y_label);
  if (diagonal)
    out << "<line x1=\"" << detail::num(f.px(0)) << "\" y1=\"" << detail::num(f.py(0)) << "\" x2=\""
        << detail::num(f.px(1)) << "\" y2=\"" << detail::num(f.py(1))
        << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = detail::kPalette[k % std::size(detail::kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << (i ? " " : "") << detail::num(f.px(s.x[i])) << ',' << detail::num(f.py(s.y[i]));
    out << "\"/>\n";
    out << "<text x=\"" << detail::num(f.width - f.right - 4) << "\" y=\"" << detail::num(f.top + 14 * k)
        << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << detail::escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

/// Histogram of counts over equal-width bins on [0, 1].
inline std::string bar_chart(const std::vector<std::size_t>& counts, const std::string& title,
                             const std::string& x_label, const std::string& y_label) {
  detail::Frame f;
  std::size_t peak = 1;
  for (auto c : counts) peak = std::max(peak, c);
  f.y_max = static_cast<double>(peak) * 1.05;
  std::ostringstream out;
  detail::open(out, f, title, x_label, y_label);
  const double width = 1.0 / static_cast<double>(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double x0 = f.px(width * static_cast<double>(b));
    const double x1 = f.px(width * static_cast<double>(b + 1));
    const double y0 = f.py(static_cast<double>(counts[b]));
    out << "<rect x=\"" << detail::num(x0) << "\" y=\"" << detail::num(y0) << "\" width=\""
        << detail::num(x1 - x0) << "\" height=\"" << detail::num(f.py(0) - y0)
        << "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace dmprior::svg
