#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "shotmark/error.hpp"

namespace shotmark {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point p, Point q) { return {p.x + q.x, p.y + q.y}; }
  friend Point operator-(Point p, Point q) { return {p.x - q.x, p.y - q.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double dot(Point p, Point q) { return p.x * q.x + p.y * q.y; }
inline double cross(Point p, Point q) { return p.x * q.y - p.y * q.x; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double distance(Point p, Point q) { return norm(p - q); }

/// Signed shoelace area; positive for counter-clockwise in a y-up frame,
/// which is clockwise on screen (y down).
inline double signed_area(std::span<const Point> poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

inline double polygon_area(std::span<const Point> poly) {
  return std::abs(signed_area(poly));
}

inline bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

inline bool is_convex(std::span<const Point> poly) {
  int sign = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % poly.size()];
    const Point c = poly[(i + 2) % poly.size()];
    const double z = cross(b - a, c - b);
    if (z == 0.0) continue;
    const int s = z > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return sign != 0;
}

/// Four corners in canonical order: A top-left, B top-right, C bottom-left,
/// D bottom-right. The boundary walk is A, B, D, C.
struct Quadrilateral {
  Point a, b, c, d;

  std::array<Point, 4> ring() const { return {a, b, d, c}; }
  double area() const {
    const auto r = ring();
    return polygon_area(r);
  }
  bool is_simple() const {
    return !segments_intersect(a, b, d, c) && !segments_intersect(b, d, c, a);
  }
  bool is_convex() const {
    const auto r = ring();
    return shotmark::is_convex(r);
  }
  Point center() const { return 0.25 * (a + b + c + d); }

  friend bool operator==(const Quadrilateral&, const Quadrilateral&) = default;
};

/// Reorders four arbitrary corners into A/B/C/D by their position around the
/// centroid: the two upper points become A (left) and B (right).
inline Quadrilateral canonical_order(std::array<Point, 4> pts) {
  Point center{0, 0};
  for (const auto& p : pts) center = center + 0.25 * p;
  std::sort(pts.begin(), pts.end(), [&](Point p, Point q) {
    return std::atan2(p.y - center.y, p.x - center.x) <
           std::atan2(q.y - center.y, q.x - center.x);
  });
  // Angular order in a y-down frame walks clockwise on screen. Rotate so the
  // walk starts at the corner with the smallest x + y (top-left).
  std::size_t start = 0;
  for (std::size_t i = 1; i < 4; ++i)
    if (pts[i].x + pts[i].y < pts[start].x + pts[start].y) start = i;
  std::array<Point, 4> walk;
  for (std::size_t i = 0; i < 4; ++i) walk[i] = pts[(start + i) % 4];
  // walk = TL, TR, BR, BL
  return {walk[0], walk[1], walk[3], walk[2]};
}

/// Line in implicit form n . p = offset with |n| = 1.
struct Line {
  Point normal{0, 1};
  double offset = 0.0;

  static Line through(Point p, Point direction) {
    const double len = norm(direction);
    if (len == 0.0) fail(ErrorKind::Degenerate, "line direction has zero length");
    const Point n{-direction.y / len, direction.x / len};
    return {n, dot(n, p)};
  }

  Point direction() const { return {normal.y, -normal.x}; }
  double signed_distance(Point p) const { return dot(normal, p) - offset; }
};

inline bool intersect(const Line& l1, const Line& l2, Point& out,
                      double parallel_tol = 1e-9) {
  const double det = l1.normal.x * l2.normal.y - l1.normal.y * l2.normal.x;
  if (std::abs(det) < parallel_tol) return false;
  out.x = (l1.offset * l2.normal.y - l1.normal.y * l2.offset) / det;
  out.y = (l1.normal.x * l2.offset - l1.offset * l2.normal.x) / det;
  return true;
}

/// Projective map x' = (a1 x + b1 y + c1) / (a0 x + b0 y + 1),
/// y' = (a2 x + b2 y + c2) / (a0 x + b0 y + 1).
struct Homography {
  double a1 = 1, b1 = 0, c1 = 0;
  double a2 = 0, b2 = 1, c2 = 0;
  double a0 = 0, b0 = 0;

  static Homography identity() { return {}; }

  static Homography translation(double dx, double dy) {
    Homography h;
    h.c1 = dx;
    h.c2 = dy;
    return h;
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d m;
    m << a1, b1, c1, a2, b2, c2, a0, b0, 1.0;
    return m;
  }

  /// Normalizes so the bottom-right entry is one.
  static Homography from_matrix(const Eigen::Matrix3d& m) {
    const double s = m(2, 2);
    if (std::abs(s) < 1e-15)
      fail(ErrorKind::Degenerate, "homography cannot be normalized");
    return {m(0, 0) / s, m(0, 1) / s, m(0, 2) / s, m(1, 0) / s,
            m(1, 1) / s, m(1, 2) / s, m(2, 0) / s, m(2, 1) / s};
  }

  bool invertible() const {
    if (std::abs(a1 * b2 - a2 * b1) < 1e-12) return false;
    return std::abs(matrix().determinant()) > 1e-12;
  }

  Homography inverse() const {
    if (!invertible()) fail(ErrorKind::Degenerate, "homography is singular");
    return from_matrix(matrix().inverse());
  }

  Point apply(Point p) const {
    const double w = a0 * p.x + b0 * p.y + 1.0;
    return {(a1 * p.x + b1 * p.y + c1) / w, (a2 * p.x + b2 * p.y + c2) / w};
  }

  /// this after other
  Homography compose(const Homography& other) const {
    return from_matrix(matrix() * other.matrix());
  }
};

} // namespace shotmark
