#pragma once

// Output helpers for the hmnas CLI: atomic file writes, CSV emission, and a
// minimal SVG writer (scatter + line) so every plot ships with a sibling
// CSV carrying the same numbers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

namespace cli {

inline void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool line = false;  // scatter by default
  std::string color = "#1f77b4";
};

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add(PlotSeries series) { series_.push_back(std::move(series)); }

  std::string render() const {
    const double width = 720, height = 480;
    const double ml = 80, mr = 30, mt = 50, mb = 60;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series_) {
      for (const auto& [x, y] : s.points) {
        if (first) {
          xmin = xmax = x;
          ymin = ymax = y;
          first = false;
        }
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
        << "font-family=\"sans-serif\">" << title_ << "</text>\n";

    for (int i = 0; i <= 5; ++i) {
      double xv = xmin + (xmax - xmin) * i / 5.0;
      double yv = ymin + (ymax - ymin) * i / 5.0;
      svg << "<line x1=\"" << px(xv) << "\" y1=\"" << py(ymin) << "\" x2=\"" << px(xv)
          << "\" y2=\"" << py(ymax) << "\" stroke=\"#e0e0e0\"/>\n";
      svg << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(yv) << "\" x2=\"" << px(xmax)
          << "\" y2=\"" << py(yv) << "\" stroke=\"#e0e0e0\"/>\n";
      svg << "<text x=\"" << px(xv) << "\" y=\"" << height - mb + 20
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
          << format_tick(xv) << "</text>\n";
      svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
          << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
          << format_tick(yv) << "</text>\n";
    }
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr
        << "\" height=\"" << height - mt - mb << "\" fill=\"none\" stroke=\"#404040\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label_
        << "</text>\n";
    svg << "<text x=\"18\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
        << "transform=\"rotate(-90 18 " << height / 2 << ")\">" << y_label_ << "</text>\n";

    for (const auto& s : series_) {
      if (s.line && s.points.size() > 1) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : s.points) svg << px(x) << "," << py(y) << " ";
        svg << "\"/>\n";
      }
      for (const auto& [x, y] : s.points)
        svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\""
            << s.color << "\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
  }

 private:
  static std::string format_tick(double v) {
    char buf[32];
    if (v != 0 && (std::fabs(v) >= 1e6 || std::fabs(v) < 1e-3))
      std::snprintf(buf, sizeof(buf), "%.2e", v);
    else
      std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
  }

  std::string title_, x_label_, y_label_;
  std::vector<PlotSeries> series_;
};

}  // namespace cli
