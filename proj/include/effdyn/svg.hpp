#pragma once

// Minimal SVG plots: one axes box, auto-scaled data bounds, polylines,
// closed polygons and ellipses (emitted as path elements), and a legend.
// Output depends only on the inputs, so it is byte-reproducible.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace effdyn::svg {

using Eigen::Vector2d;

inline std::string escape(const std::string &s) {
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

/// Boundary of {S^(1/2) u : |u| = 1} for the symmetric part S of `m`.
inline std::vector<Vector2d> ellipse_points(const Eigen::Matrix2d &m, int samples = 96) {
  const Eigen::Matrix2d s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(s);
  const Eigen::Matrix2d root = eig.eigenvectors() *
                               eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                               eig.eigenvectors().transpose();
  std::vector<Vector2d> pts;
  pts.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / samples;
    pts.push_back(root * Vector2d(std::cos(th), std::sin(th)));
  }
  return pts;
}

class Plot {
public:
  Plot(std::string title, std::string x_label, std::string y_label,
       int width = 640, int height = 480)
      : title_(std::move(title)), xl_(std::move(x_label)), yl_(std::move(y_label)),
        w_(width), h_(height) {}

  void polyline(std::vector<Vector2d> pts, std::string color, std::string label = {}) {
    add({std::move(pts), std::move(color), std::move(label), Kind::Line});
  }
  void polygon(std::vector<Vector2d> pts, std::string color, std::string label = {}) {
    add({std::move(pts), std::move(color), std::move(label), Kind::Polygon});
  }
  void ellipse(const Eigen::Matrix2d &m, std::string color, std::string label = {}) {
    add({ellipse_points(m), std::move(color), std::move(label), Kind::Path});
  }
  /// Keeps x and y on the same scale (for ellipses and polygons).
  void equal_aspect(bool on = true) { equal_ = on; }

  std::string render() const {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto &s : series_)
      for (const auto &p : s.pts) {
        if (!p.allFinite())
          continue;
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
      }
    if (!std::isfinite(x0)) {
      x0 = y0 = -1.0;
      x1 = y1 = 1.0;
    }
    pad(x0, x1);
    pad(y0, y1);

    const double left = 70, right = 20 + (has_labels() ? 150 : 0), top = 40, bottom = 50;
    const double pw = w_ - left - right, ph = h_ - top - bottom;
    double sx = pw / (x1 - x0), sy = ph / (y1 - y0);
    if (equal_) {
      const double s = std::min(sx, sy);
      const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
      sx = sy = s;
      x0 = cx - 0.5 * pw / s;
      x1 = cx + 0.5 * pw / s;
      y0 = cy - 0.5 * ph / s;
      y1 = cy + 0.5 * ph / s;
    }
    auto X = [&](double x) { return left + (x - x0) * sx; };
    auto Y = [&](double y) { return top + ph - (y - y0) * sy; };

    std::ostringstream o;
    o << std::fixed << std::setprecision(2);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
      << "\" viewBox=\"0 0 " << w_ << ' ' << h_ << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << w_ / 2.0 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title_) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ticks(x0, x1)) {
      o << "<line x1=\"" << X(t) << "\" y1=\"" << top + ph << "\" x2=\"" << X(t) << "\" y2=\""
        << top + ph + 5 << "\" stroke=\"black\"/>";
      o << "<text x=\"" << X(t) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << label(t) << "</text>\n";
    }
    for (double t : ticks(y0, y1)) {
      o << "<line x1=\"" << left - 5 << "\" y1=\"" << Y(t) << "\" x2=\"" << left << "\" y2=\""
        << Y(t) << "\" stroke=\"black\"/>";
      o << "<text x=\"" << left - 8 << "\" y=\"" << Y(t) + 4 << "\" text-anchor=\"end\">"
        << label(t) << "</text>\n";
    }
    if (x0 < 0 && x1 > 0)
      o << "<line x1=\"" << X(0) << "\" y1=\"" << top << "\" x2=\"" << X(0) << "\" y2=\""
        << top + ph << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    if (y0 < 0 && y1 > 0)
      o << "<line x1=\"" << left << "\" y1=\"" << Y(0) << "\" x2=\"" << left + pw << "\" y2=\""
        << Y(0) << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << h_ - 12 << "\" text-anchor=\"middle\">"
      << escape(xl_) << "</text>\n";
    o << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(yl_) << "</text>\n";

    o << "<g>\n";
    for (const auto &s : series_) {
      std::vector<Vector2d> pts;
      for (const auto &p : s.pts)
        if (p.allFinite())
          pts.push_back(p);
      if (pts.empty())
        continue;
      if (s.kind == Kind::Path) {
        o << "<path d=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
          o << (i ? " L " : "M ") << X(pts[i].x()) << ' ' << Y(pts[i].y());
        o << " Z\" fill=\"" << s.color << "\" fill-opacity=\"0.15\" stroke=\"" << s.color
          << "\" stroke-width=\"2\"/>\n";
        continue;
      }
      o << (s.kind == Kind::Polygon ? "<polygon" : "<polyline") << " points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i)
        o << (i ? " " : "") << X(pts[i].x()) << ',' << Y(pts[i].y());
      o << "\" fill=\"" << (s.kind == Kind::Polygon ? s.color : std::string("none"))
        << "\" fill-opacity=\"0.12\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    }
    o << "</g>\n";

    double ly = top + 10;
    for (const auto &s : series_) {
      if (s.label.empty())
        continue;
      const double lx = left + pw + 15;
      o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22 << "\" y2=\"" << ly
        << "\" stroke=\"" << s.color << "\" stroke-width=\"3\"/>";
      o << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 4 << "\">" << escape(s.label)
        << "</text>\n";
      ly += 18;
    }
    o << "</svg>\n";
    return o.str();
  }

private:
  enum class Kind { Line, Polygon, Path };
  struct Series {
    std::vector<Vector2d> pts;
    std::string color, label;
    Kind kind;
  };

  void add(Series s) { series_.push_back(std::move(s)); }
  bool has_labels() const {
    return std::any_of(series_.begin(), series_.end(),
                       [](const Series &s) { return !s.label.empty(); });
  }
  static void pad(double &lo, double &hi) {
    if (hi - lo < 1e-12) {
      const double c = 0.5 * (lo + hi);
      const double d = std::max(1.0, std::abs(c)) * 0.5;
      lo = c - d;
      hi = c + d;
      return;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
  static std::vector<double> ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
      out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
  }
  static std::string label(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
  }

  std::string title_, xl_, yl_;
  int w_, h_;
  bool equal_ = false;
  std::vector<Series> series_;
};

} // namespace effdyn::svg
