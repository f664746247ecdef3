#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "grpca/error.hpp"
#include "grpca/harness/tables.hpp"

namespace grpca::harness {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 5e-13 ? 0.0 : v);
  return buf;
}

inline const char* topology_color(const std::string& t) {
  if (t == "ER") return "#1f77b4";
  if (t == "BA") return "#d62728";
  if (t == "WS") return "#2ca02c";
  return "#555555";
}

}  // namespace detail

/// Metric mean versus achieved density: one panel per method, one line per
/// topology, solid for isotropic and dashed for anisotropic. Every polyline
/// carries data-method / data-regime / data-topology attributes and its
/// points are ordered by increasing achieved density.
inline std::string emit_density_plot(const SweepResult& result, Metric metric) {
  struct Point {
    double x, y;
  };
  std::map<std::string, std::map<std::pair<std::string, std::string>, std::vector<Point>>> series;
  std::vector<std::string> methods;
  std::set<double> densities;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& a : result.by_density) {
    if (a.count == 0) continue;
    const double y = a.mean(metric);
    if (!std::isfinite(y) || !std::isfinite(a.mean_achieved_density)) continue;
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) methods.push_back(a.method);
    series[a.method][{a.regime, a.topology}].push_back({a.mean_achieved_density, y});
    densities.insert(a.density);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  require(densities.size() >= 2, ErrorKind::InsufficientData,
          "emit_density_plot: need at least two densities with " + to_string(metric) + " values");
  if (ymax - ymin < 1e-9) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  const double pw = 300, ph = 240, ml = 58, mr = 16, mt = 34, mb = 44;
  const double cell_w = ml + pw + mr;
  const double width = cell_w * static_cast<double>(methods.size());
  const double height = mt + ph + mb + 40;
  auto sx = [&](double panel, double x) { return panel * cell_w + ml + x * pw; };
  auto sy = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::svg_num(width) + "\" height=\"" +
       detail::svg_num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t pi = 0; pi < methods.size(); ++pi) {
    const double panel = static_cast<double>(pi);
    const double x0 = sx(panel, 0.0), x1 = sx(panel, 1.0), y0 = sy(ymin), y1 = sy(ymax);
    s += "<g data-panel=\"" + methods[pi] + "\">\n";
    s += "<text x=\"" + detail::svg_num((x0 + x1) / 2) + "\" y=\"" + detail::svg_num(mt - 12) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + methods[pi] + "</text>\n";
    s += "<rect x=\"" + detail::svg_num(x0) + "\" y=\"" + detail::svg_num(y1) + "\" width=\"" + detail::svg_num(pw) +
         "\" height=\"" + detail::svg_num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
      const double xv = k / 5.0;
      const double xp = sx(panel, xv);
      s += "<line x1=\"" + detail::svg_num(xp) + "\" y1=\"" + detail::svg_num(y0) + "\" x2=\"" + detail::svg_num(xp) +
           "\" y2=\"" + detail::svg_num(y0 + 4) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + detail::svg_num(xp) + "\" y=\"" + detail::svg_num(y0 + 16) + "\" text-anchor=\"middle\">" +
           detail::tick_label(xv) + "</text>\n";
      const double yv = ymin + (ymax - ymin) * k / 5.0;
      const double yp = sy(yv);
      s += "<line x1=\"" + detail::svg_num(x0 - 4) + "\" y1=\"" + detail::svg_num(yp) + "\" x2=\"" + detail::svg_num(x0) +
           "\" y2=\"" + detail::svg_num(yp) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + detail::svg_num(x0 - 6) + "\" y=\"" + detail::svg_num(yp + 4) + "\" text-anchor=\"end\">" +
           detail::tick_label(yv) + "</text>\n";
    }
    s += "<text x=\"" + detail::svg_num((x0 + x1) / 2) + "\" y=\"" + detail::svg_num(y0 + 32) +
         "\" text-anchor=\"middle\">achieved edge density</text>\n";
    if (pi == 0)
      s += "<text transform=\"translate(14," + detail::svg_num((y0 + y1) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           to_string(metric) + "</text>\n";
    for (auto& [key, pts] : series[methods[pi]]) {
      std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
      std::string coords;
      for (const auto& p : pts) {
        if (!coords.empty()) coords += ' ';
        coords += detail::svg_num(sx(panel, p.x)) + "," + detail::svg_num(sy(p.y));
      }
      const bool dashed = key.first == "anisotropic";
      s += std::string("<polyline data-method=\"") + methods[pi] + "\" data-regime=\"" + key.first +
           "\" data-topology=\"" + key.second + "\" fill=\"none\" stroke=\"" + detail::topology_color(key.second) +
           "\" stroke-width=\"1.8\"" + (dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" + coords + "\"/>\n";
    }
    s += "</g>\n";
  }
  // Legend: topology colours, regime line styles.
  double lx = 10;
  const double ly = height - 14;
  for (const char* t : {"ER", "BA", "WS"}) {
    s += std::string("<line x1=\"") + detail::svg_num(lx) + "\" y1=\"" + detail::svg_num(ly - 4) + "\" x2=\"" +
         detail::svg_num(lx + 22) + "\" y2=\"" + detail::svg_num(ly - 4) + "\" stroke=\"" + detail::topology_color(t) +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + detail::svg_num(lx + 26) + "\" y=\"" + detail::svg_num(ly) + "\">" + t + "</text>\n";
    lx += 60;
  }
  s += "<line x1=\"" + detail::svg_num(lx) + "\" y1=\"" + detail::svg_num(ly - 4) + "\" x2=\"" + detail::svg_num(lx + 22) +
       "\" y2=\"" + detail::svg_num(ly - 4) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + detail::svg_num(lx + 26) + "\" y=\"" + detail::svg_num(ly) + "\">isotropic</text>\n";
  lx += 90;
  s += "<line x1=\"" + detail::svg_num(lx) + "\" y1=\"" + detail::svg_num(ly - 4) + "\" x2=\"" + detail::svg_num(lx + 22) +
       "\" y2=\"" + detail::svg_num(ly - 4) + "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  s += "<text x=\"" + detail::svg_num(lx + 26) + "\" y=\"" + detail::svg_num(ly) + "\">anisotropic</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace grpca::harness
