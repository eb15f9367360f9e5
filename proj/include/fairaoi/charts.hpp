#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fairaoi/common.hpp"

namespace fairaoi {

namespace detail {

inline std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_cell(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end != nullptr && (*end == ' ' || *end == '\t')) ++end;
  if (end == begin || (end != nullptr && *end != '\0'))
    return std::numeric_limits<double>::quiet_NaN();
  return v;
}

}  // namespace detail

struct ChartTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // NaN marks non-numeric cells
};

inline ChartTable read_chart_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("charts: cannot open " + path);
  ChartTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    if (first) {
      t.header = cells;
      first = false;
      continue;
    }
    std::vector<double> row(t.header.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < cells.size() && i < row.size(); ++i)
      row[i] = detail::parse_cell(cells[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/*!
 * Fixed-size line chart: first column is the x axis, every other column
 * with at least one numeric cell becomes a polyline. Output is stable
 * byte-for-byte for identical input.
 */
inline std::string render_line_chart(const ChartTable& t) {
  if (t.header.size() < 2) throw model_error("charts: need an x column and one series");
  const double width = 640, height = 420, left = 70, right = 612, top = 24, bottom = 368;

  std::vector<std::size_t> series;
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    bool numeric = false;
    for (const auto& r : t.rows)
      if (!std::isnan(r[c])) {
        numeric = true;
        break;
      }
    if (numeric) series.push_back(c);
  }
  if (series.empty()) throw model_error("charts: no numeric series");

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& r : t.rows) {
    if (std::isnan(r[0])) continue;
    xmin = std::min(xmin, r[0]);
    xmax = std::max(xmax, r[0]);
    for (std::size_t c : series)
      if (!std::isnan(r[c])) {
        ymin = std::min(ymin, r[c]);
        ymax = std::max(ymax, r[c]);
      }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin))
    throw model_error("charts: no plottable rows");
  if (xmax - xmin < 1e-12) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
  auto sy = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  const std::size_t n_colors = sizeof(palette) / sizeof(palette[0]);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
      << bottom << "\" stroke=\"#333333\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
      << "\" stroke=\"#333333\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    double fx = xmin + (xmax - xmin) * i / 5.0;
    double px = sx(fx);
    svg << "<line x1=\"" << detail::fmt_coord(px) << "\" y1=\"" << bottom << "\" x2=\""
        << detail::fmt_coord(px) << "\" y2=\"" << bottom + 5 << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << detail::fmt_coord(px) << "\" y=\"" << bottom + 20
        << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << detail::fmt_tick(fx) << "</text>\n";
    double fy = ymin + (ymax - ymin) * i / 5.0;
    double py = sy(fy);
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::fmt_coord(py) << "\" x2=\"" << left
        << "\" y2=\"" << detail::fmt_coord(py) << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << detail::fmt_coord(py + 4)
        << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
        << detail::fmt_tick(fy) << "</text>\n";
  }
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" << t.header[0]
      << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    std::size_t c = series[si];
    const char* color = palette[si % n_colors];
    std::ostringstream pts;
    bool any = false;
    for (const auto& r : t.rows) {
      if (std::isnan(r[0]) || std::isnan(r[c])) continue;
      if (any) pts << " ";
      pts << detail::fmt_coord(sx(r[0])) << "," << detail::fmt_coord(sy(r[c]));
      any = true;
    }
    if (!any) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << pts.str() << "\"/>\n";
    double ly = top + 14.0 * static_cast<double>(si);
    svg << "<rect x=\"" << right - 150 << "\" y=\"" << detail::fmt_coord(ly) << "\" width=\"10\""
        << " height=\"3\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << right - 135 << "\" y=\"" << detail::fmt_coord(ly + 5)
        << "\" font-size=\"11\" font-family=\"sans-serif\">" << t.header[c] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/*!
 * Renders one SVG per input CSV (named after the CSV stem). A CSV without
 * data rows produces no file and an empty result.
 */
inline std::vector<std::string> emit_charts(const std::string& csv_path,
                                            const std::string& out_dir) {
  ChartTable t = read_chart_csv(csv_path);
  if (t.rows.empty()) return {};
  std::size_t slash = csv_path.find_last_of('/');
  std::string stem = slash == std::string::npos ? csv_path : csv_path.substr(slash + 1);
  std::size_t dot = stem.find_last_of('.');
  if (dot != std::string::npos) stem = stem.substr(0, dot);
  std::string out_path = out_dir.empty() ? stem + ".svg" : out_dir + "/" + stem + ".svg";
  std::string svg = render_line_chart(t);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw config_error("charts: cannot write " + out_path);
  out << svg;
  return {out_path};
}

}  // namespace fairaoi
