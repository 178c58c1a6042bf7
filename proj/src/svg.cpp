#include "frcnet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace frcnet {

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_series(Eigen::VectorXd x, Eigen::VectorXd y, std::string color,
                         std::string label) {
  if (x.size() != y.size()) throw std::invalid_argument("SvgPlot: series size mismatch");
  series_.push_back({std::move(x), std::move(y), std::move(color), std::move(label)});
}

void SvgPlot::add_marker(double x, double y, std::string color, std::string label) {
  markers_.push_back({x, y, std::move(color), std::move(label)});
}

void SvgPlot::write(const std::string& path) const {
  constexpr double W = 720, H = 480;
  constexpr double ml = 72, mr = 24, mt = 40, mb = 56;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto take = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto& s : series_)
    for (Eigen::Index i = 0; i < s.x.size(); ++i) take(s.x(i), s.y(i));
  for (const auto& m : markers_) take(m.x, m.y);
  if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax == xmin) { xmax = xmin + 1; }
  if (ymax == ymin) { ymax = ymin + 1; }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("SvgPlot: cannot open " + path);
  std::fprintf(f,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
               "viewBox=\"0 0 %g %g\">\n<rect width=\"%g\" height=\"%g\" fill=\"white\"/>\n",
               W, H, W, H, W, H);
  std::fprintf(f, "<text x=\"%g\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">%s</text>\n",
               W / 2, title_.c_str());

  // axes and ticks
  std::fprintf(f, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
               ml, mt, W - ml - mr, H - mt - mb);
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + i * (xmax - xmin) / 4;
    const double yv = ymin + i * (ymax - ymin) / 4;
    std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                 px(xv), H - mb, px(xv), H - mb + 5);
    std::fprintf(f, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%.4g</text>\n",
                 px(xv), H - mb + 18, xv);
    std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                 ml - 5, py(yv), ml, py(yv));
    std::fprintf(f, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                 ml - 8, py(yv) + 4, yv);
  }
  std::fprintf(f, "<text x=\"%g\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
               ml + (W - ml - mr) / 2, H - 12, x_label_.c_str());
  std::fprintf(f,
               "<text x=\"16\" y=\"%g\" font-size=\"13\" text-anchor=\"middle\" "
               "transform=\"rotate(-90 16 %g)\">%s</text>\n",
               mt + (H - mt - mb) / 2, mt + (H - mt - mb) / 2, y_label_.c_str());

  for (const auto& s : series_) {
    bool open = false;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      const bool ok = std::isfinite(s.x(i)) && std::isfinite(s.y(i));
      if (ok && !open) {
        std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"",
                     s.color.c_str());
        open = true;
      }
      if (ok) std::fprintf(f, "%.2f,%.2f ", px(s.x(i)), py(s.y(i)));
      if (!ok && open) {
        std::fputs("\"/>\n", f);
        open = false;
      }
    }
    if (open) std::fputs("\"/>\n", f);
  }
  for (const auto& m : markers_) {
    if (!std::isfinite(m.x) || !std::isfinite(m.y)) continue;
    std::fprintf(f, "<circle cx=\"%g\" cy=\"%g\" r=\"3.5\" fill=\"%s\"/>\n", px(m.x), py(m.y),
                 m.color.c_str());
  }

  double ly = mt + 16;
  for (const auto& s : series_) {
    if (s.label.empty()) continue;
    std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                 W - mr - 150, ly - 4, W - mr - 126, ly - 4, s.color.c_str());
    std::fprintf(f, "<text x=\"%g\" y=\"%g\" font-size=\"12\">%s</text>\n", W - mr - 120, ly,
                 s.label.c_str());
    ly += 16;
  }
  for (const auto& m : markers_) {
    if (m.label.empty()) continue;
    std::fprintf(f, "<circle cx=\"%g\" cy=\"%g\" r=\"3.5\" fill=\"%s\"/>\n", W - mr - 138, ly - 4,
                 m.color.c_str());
    std::fprintf(f, "<text x=\"%g\" y=\"%g\" font-size=\"12\">%s</text>\n", W - mr - 120, ly,
                 m.label.c_str());
    ly += 16;
  }
  std::fputs("</svg>\n", f);
  std::fclose(f);
}

}  // namespace frcnet
