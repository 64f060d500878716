#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "shotmark/geometry.hpp"
#include "shotmark/imaging.hpp"

namespace shotmark {

namespace detail {

inline std::vector<Point> counter_clockwise(std::vector<Point> poly) {
  if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

/// Sutherland-Hodgman: clips `subject` against the convex polygon `clip`.
inline std::vector<Point> clip_polygon(std::vector<Point> subject, const std::vector<Point>& clip) {
  const std::vector<Point> ccw = counter_clockwise(clip);
  for (std::size_t i = 0; i < ccw.size() && !subject.empty(); ++i) {
    const Point a = ccw[i], b = ccw[(i + 1) % ccw.size()];
    auto inside = [&](Point p) { return cross(b - a, p - a) >= 0.0; };
    auto crossing = [&](Point p, Point q) {
      const double dp = cross(b - a, p - a), dq = cross(b - a, q - a);
      const double t = dp / (dp - dq);
      return p + t * (q - p);
    };
    std::vector<Point> out;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Point cur = subject[j], prev = subject[(j + subject.size() - 1) % subject.size()];
      if (inside(cur)) {
        if (!inside(prev)) out.push_back(crossing(prev, cur));
        out.push_back(cur);
      } else if (inside(prev)) {
        out.push_back(crossing(prev, cur));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

/// Even-odd point-in-polygon test.
inline bool contains_point(std::span<const Point> poly, Point p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if ((poly[i].y > p.y) != (poly[j].y > p.y)) {
      const double x = poly[j].x + (p.y - poly[j].y) * (poly[i].x - poly[j].x) / (poly[i].y - poly[j].y);
      if (p.x < x) in = !in;
    }
  }
  return in;
}

/// Intersection and union areas by sampling a 256-cell grid over the joint
/// bounding box with 4x4 samples per cell.
inline double raster_iou(std::span<const Point> p, std::span<const Point> q) {
  double x0 = p[0].x, x1 = p[0].x, y0 = p[0].y, y1 = p[0].y;
  for (auto poly : {p, q})
    for (const auto& v : poly) {
      x0 = std::min(x0, v.x);
      x1 = std::max(x1, v.x);
      y0 = std::min(y0, v.y);
      y1 = std::max(y1, v.y);
    }
  constexpr int n = 256 * 4;
  const double sx = (x1 - x0) / n, sy = (y1 - y0) / n;
  if (sx <= 0.0 || sy <= 0.0) return 0.0;
  long inter = 0, uni = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Point s{x0 + (i + 0.5) * sx, y0 + (j + 0.5) * sy};
      const bool a = contains_point(p, s), b = contains_point(q, s);
      inter += a && b;
      uni += a || b;
    }
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

} // namespace detail

/// Intersection over union of two quadrilaterals. Convex pairs are clipped
/// exactly; anything else is rasterized.
inline double iou(const Quadrilateral& predicted, const Quadrilateral& truth) {
  const auto ring_p = predicted.ring(), ring_t = truth.ring();
  const std::vector<Point> p(ring_p.begin(), ring_p.end()), t(ring_t.begin(), ring_t.end());
  if (!predicted.is_convex() || !truth.is_convex()) return detail::raster_iou(p, t);
  const double ap = std::abs(signed_area(p)), at = std::abs(signed_area(t));
  const std::vector<Point> clipped = detail::clip_polygon(p, t);
  const double inter = clipped.size() >= 3 ? std::abs(signed_area(clipped)) : 0.0;
  const double uni = ap + at - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

inline double area_proportion(const Quadrilateral& truth, int shot_width, int shot_height) {
  require(shot_width > 0 && shot_height > 0, "area_proportion: empty shot");
  return truth.area() / (static_cast<double>(shot_width) * shot_height);
}

template <class T>
double area_proportion(const Quadrilateral& truth, const Raster<T>& shot) {
  return area_proportion(truth, shot.width, shot.height);
}

} // namespace shotmark
