#pragma once

// Minimal standalone SVG line plots with log-log axes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dfw::harness {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct LogLogPlot {
  std::string title, xlabel, ylabel;
  std::vector<PlotSeries> series;
  int width = 720, height = 480;
};

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return p;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
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

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Renders the plot. Points with non-positive or non-finite coordinates are
/// dropped because they have no place on log axes.
inline std::string render_svg(const LogLogPlot& plot) {
  using detail::num;
  const double left = 80, right = 180, top = 40, bottom = 60;
  const double pw = plot.width - left - right, ph = plot.height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  auto usable = [](double x, double y) { return x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y); };
  for (const auto& s : plot.series)
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!usable(s.x[k], s.y[k])) continue;
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, s.y[k]);
      ymax = std::max(ymax, s.y[k]);
    }
  if (!std::isfinite(xmin)) xmin = 1, xmax = 10, ymin = 1, ymax = 10;
  const double lx0 = std::floor(std::log10(xmin)), lx1 = std::max(lx0 + 1, std::ceil(std::log10(xmax)));
  const double ly0 = std::floor(std::log10(ymin)), ly1 = std::max(ly0 + 1, std::ceil(std::log10(ymax)));
  auto px = [&](double x) { return left + (std::log10(x) - lx0) / (lx1 - lx0) * pw; };
  auto py = [&](double y) { return top + ph - (std::log10(y) - ly0) / (ly1 - ly0) * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
     << "\" viewBox=\"0 0 " << plot.width << ' ' << plot.height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"16\">" << detail::xml_escape(plot.title) << "</text>\n";

  // Decade grid and tick labels.
  os << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double e = lx0; e <= lx1; ++e)
    os << "<line x1=\"" << num(px(std::pow(10, e))) << "\" y1=\"" << num(top) << "\" x2=\"" << num(px(std::pow(10, e)))
       << "\" y2=\"" << num(top + ph) << "\"/>\n";
  for (double e = ly0; e <= ly1; ++e)
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(std::pow(10, e))) << "\" x2=\"" << num(left + pw)
       << "\" y2=\"" << num(py(std::pow(10, e))) << "\"/>\n";
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (double e = lx0; e <= lx1; ++e)
    os << "<text x=\"" << num(px(std::pow(10, e))) << "\" y=\"" << num(top + ph + 18)
       << "\" text-anchor=\"middle\">1e" << static_cast<int>(e) << "</text>\n";
  for (double e = ly0; e <= ly1; ++e)
    os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(std::pow(10, e)) + 4) << "\" text-anchor=\"end\">1e"
       << static_cast<int>(e) << "</text>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(plot.height - 16.0) << "\" text-anchor=\"middle\">"
     << detail::xml_escape(plot.xlabel) << "</text>\n"
     << "<text x=\"20\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << num(top + ph / 2) << ")\">" << detail::xml_escape(plot.ylabel) << "</text>\n</g>\n";
  os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const auto& s = plot.series[i];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    bool first = true;
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!usable(s.x[k], s.y[k])) continue;
      os << (first ? "" : " ") << num(px(s.x[k])) << ',' << num(py(s.y[k]));
      first = false;
    }
    os << "\"/>\n";
    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    os << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 36)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n"
       << "<text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dfw::harness
