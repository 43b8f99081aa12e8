#pragma once

// CSV rows for build reports and a minimal SVG line plot.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepapprox/uni_builder.hpp"

namespace deepapprox {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline const char* report_csv_header = "function,epsilon,depth,relu,step,total,strict_total,bound,measured,grid,seed";

inline std::string report_csv_row(const BuildReport& r) {
  std::ostringstream os;
  os << csv_field(r.function) << ',' << fmt_double(r.epsilon) << ',' << r.counts.depth << ',' << r.counts.relu << ','
     << r.counts.step << ',' << r.counts.total << ',' << r.strict_total << ',' << fmt_double(r.bound) << ','
     << fmt_double(r.measured) << ',' << csv_field(r.grid) << ',' << r.seed;
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct PlotLabels {
  std::string title, x, y;
};

/// One polyline per series on a shared linear frame.
inline std::string render_svg(const std::vector<Series>& series, const PlotLabels& labels) {
  const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  char buf[256];
  std::ostringstream os;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n", W, H,
                W, H);
  os << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, W - left - right, H - top - bottom);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"24\" font-size=\"15\">", left);
  os << buf << xml_escape(labels.title) << "</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\">", left, H - 12);
  os << buf << xml_escape(labels.x) << "</text>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"12\" y=\"%g\" font-size=\"12\" transform=\"rotate(-90 12 %g)\">",
                H / 2, H / 2);
  os << buf << xml_escape(labels.y) << "</text>\n";
  for (double t : {0.0, 0.5, 1.0}) {
    double xv = x0 + t * (x1 - x0), yv = y0 + t * (y1 - y0);
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%g\" font-size=\"10\">%.4g</text>\n", px(xv) - 10,
                  H - bottom + 14, xv);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%.2f\" font-size=\"10\">%.4g</text>\n", left - 45, py(yv) + 3,
                  yv);
    os << buf;
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* c = colors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(s.x[i]), py(s.y[i]));
      os << buf;
    }
    os << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" fill=\"%s\">", W - right + 10,
                  top + 16 + 18.0 * static_cast<double>(k), c);
    os << buf << xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace deepapprox
