#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace effdyn::geometry {

using Point = Eigen::Vector2d;

inline double cross(const Point &o, const Point &a, const Point &b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Counter-clockwise convex hull (monotone chain); collinear points dropped.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point &a, const Point &b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3)
    return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto &p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0)
      --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0)
      --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Largest t >= 0 with t * dir inside the convex polygon (origin inside).
inline double ray_extent(const std::vector<Point> &ccw_hull, const Point &dir) {
  if (ccw_hull.size() < 3)
    return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ccw_hull.size(); ++i) {
    const Point &a = ccw_hull[i];
    const Point &b = ccw_hull[(i + 1) % ccw_hull.size()];
    // Outward normal of a CCW edge and its offset: n . p <= h.
    const Point n(b.y() - a.y(), a.x() - b.x());
    const double h = n.dot(a);
    const double nd = n.dot(dir);
    if (nd > 0.0)
      best = std::min(best, h / nd);
  }
  return best;
}

/// Area via the shoelace formula (positive for CCW order).
inline double area(const std::vector<Point> &poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point &p = poly[i];
    const Point &q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

} // namespace effdyn::geometry
