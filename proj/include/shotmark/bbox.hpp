#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "shotmark/error.hpp"
#include "shotmark/geometry.hpp"
#include "shotmark/localizer.hpp"

namespace shotmark {

struct Peak {
  int row = 0;
  int col = 0;
  double value = 0.0;
  Point position; ///< grid coordinates (x = column, y = row), sub-cell refined
};

struct PeakSets {
  std::vector<Peak> max_peaks; ///< values > 0
  std::vector<Peak> min_peaks; ///< values < 0
  double scale = 1.0;
};

/// Alternating argmax/argmin extraction on one working copy of the heat map.
/// Each round records the current maximum and minimum and zeroes the 3x3
/// neighborhood of both. A side stops once its extreme reaches zero.
inline PeakSets extract_peaks(const IntensityHeatMap& ihm, int count) {
  require(count > 0, "peak count must be positive");
  PeakSets out;
  out.scale = ihm.scale;
  if (ihm.empty()) return out;
  std::vector<double> work = ihm.values;
  const int rows = ihm.rows, cols = ihm.cols;
  auto clear = [&](int r0, int c0) {
    for (int r = std::max(0, r0 - 1); r <= std::min(rows - 1, r0 + 1); ++r)
      for (int c = std::max(0, c0 - 1); c <= std::min(cols - 1, c0 + 1); ++c)
        work[static_cast<std::size_t>(r) * cols + c] = 0.0;
  };
  auto make_peak = [&](std::size_t i) {
    const int r = static_cast<int>(i / cols), c = static_cast<int>(i % cols);
    return Peak{r, c, work[i], {double(c), double(r)}};
  };
  bool max_done = false, min_done = false;
  for (int round = 0; round < count && !(max_done && min_done); ++round) {
    std::optional<Peak> hi, lo;
    if (!max_done) {
      const auto it = std::max_element(work.begin(), work.end());
      if (*it > 0.0) hi = make_peak(static_cast<std::size_t>(it - work.begin()));
      else max_done = true;
    }
    if (!min_done) {
      const auto it = std::min_element(work.begin(), work.end());
      if (*it < 0.0) lo = make_peak(static_cast<std::size_t>(it - work.begin()));
      else min_done = true;
    }
    if (hi) {
      out.max_peaks.push_back(*hi);
      clear(hi->row, hi->col);
    }
    if (lo) {
      out.min_peaks.push_back(*lo);
      clear(lo->row, lo->col);
    }
  }
  return out;
}

/// Moves each peak to the vertex of a parabola through the peak and its two
/// neighbors along each axis, read from the unmodified heat map. Offsets are
/// clamped to half a cell.
inline void refine_peaks(const IntensityHeatMap& ihm, PeakSets& peaks) {
  auto refine = [&](Peak& p, double sign) {
    auto value = [&](int r, int c) {
      if (r < 0 || c < 0 || r >= ihm.rows || c >= ihm.cols) return 0.0;
      return std::max(0.0, sign * ihm.at(r, c));
    };
    auto offset = [](double left, double mid, double right) {
      const double denom = left - 2.0 * mid + right;
      if (denom >= 0.0) return 0.0;
      return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
    };
    const double mid = value(p.row, p.col);
    p.position = {p.col + offset(value(p.row, p.col - 1), mid, value(p.row, p.col + 1)),
                  p.row + offset(value(p.row - 1, p.col), mid, value(p.row + 1, p.col))};
  };
  for (auto& p : peaks.max_peaks) refine(p, 1.0);
  for (auto& p : peaks.min_peaks) refine(p, -1.0);
}

/// Max peaks split by row against their mean row (A above, B below); min
/// peaks split by column against their mean column (A left, B right). Points
/// exactly on the mean belong to neither side.
struct PeakClusters {
  std::vector<Point> a_max, b_max, a_min, b_min;

  bool degenerate() const {
    return a_max.size() < 2 || b_max.size() < 2 || a_min.size() < 2 || b_min.size() < 2;
  }
};

inline PeakClusters cluster_peaks(const PeakSets& peaks) {
  require(!peaks.max_peaks.empty() && !peaks.min_peaks.empty(), "cluster_peaks: empty peak set");
  PeakClusters out;
  double mean_y = 0.0, mean_x = 0.0;
  for (const auto& p : peaks.max_peaks) mean_y += p.position.y;
  for (const auto& p : peaks.min_peaks) mean_x += p.position.x;
  mean_y /= static_cast<double>(peaks.max_peaks.size());
  mean_x /= static_cast<double>(peaks.min_peaks.size());
  for (const auto& p : peaks.max_peaks) {
    if (p.position.y < mean_y) out.a_max.push_back(p.position);
    else if (p.position.y > mean_y) out.b_max.push_back(p.position);
  }
  for (const auto& p : peaks.min_peaks) {
    if (p.position.x < mean_x) out.a_min.push_back(p.position);
    else if (p.position.x > mean_x) out.b_min.push_back(p.position);
  }
  return out;
}

namespace detail {

/// Least squares dependent = m * regressor + c. Zero regressor variance gives
/// the constant line through the dependent mean.
inline std::pair<double, double> least_squares(const std::vector<Point>& pts, bool y_on_x) {
  require(!pts.empty(), "least_squares: no points");
  double mr = 0.0, md = 0.0;
  for (const auto& p : pts) {
    mr += y_on_x ? p.x : p.y;
    md += y_on_x ? p.y : p.x;
  }
  mr /= static_cast<double>(pts.size());
  md /= static_cast<double>(pts.size());
  double srr = 0.0, srd = 0.0;
  for (const auto& p : pts) {
    const double r = (y_on_x ? p.x : p.y) - mr, d = (y_on_x ? p.y : p.x) - md;
    srr += r * r;
    srd += r * d;
  }
  if (srr <= 1e-12) return {0.0, md};
  const double m = srd / srr;
  return {m, md - m * mr};
}

} // namespace detail

/// y = m x + c
inline Line fit_row_line(const std::vector<Point>& pts) {
  const auto [m, c] = detail::least_squares(pts, true);
  const double len = std::hypot(m, 1.0);
  return {{-m / len, 1.0 / len}, c / len};
}

/// x = m y + c, for near-vertical runs of points.
inline Line fit_column_line(const std::vector<Point>& pts) {
  const auto [m, c] = detail::least_squares(pts, false);
  const double len = std::hypot(m, 1.0);
  return {{1.0 / len, -m / len}, c / len};
}

struct BoundaryLines {
  Line top, bottom, left, right;
};

inline BoundaryLines fit_lines(const PeakClusters& clusters) {
  if (clusters.degenerate())
    fail(ErrorKind::Degenerate, "fit_lines: every cluster needs at least two points");
  return {fit_row_line(clusters.a_max), fit_row_line(clusters.b_max),
          fit_column_line(clusters.a_min), fit_column_line(clusters.b_min)};
}

/// A = top x left, B = top x right, C = bottom x left, D = bottom x right.
inline Quadrilateral intersect_corners(const BoundaryLines& lines) {
  Point a, b, c, d;
  if (!intersect(lines.top, lines.left, a) || !intersect(lines.top, lines.right, b) ||
      !intersect(lines.bottom, lines.left, c) || !intersect(lines.bottom, lines.right, d))
    fail(ErrorKind::Degenerate, "intersect_corners: parallel boundary lines");
  return canonical_order({a, b, c, d});
}

/// lambda * exp(-v) where v sums, over the four corners, the dot product of
/// the unit edge directions arriving at that corner.
inline double angle_penalty(const Quadrilateral& q, double lambda = 5.0) {
  auto unit = [](Point from, Point to) {
    const Point e = to - from;
    const double len = norm(e);
    if (len < 1e-12) fail(ErrorKind::Degenerate, "angle_penalty: zero-length edge");
    return (1.0 / len) * e;
  };
  const double v = dot(unit(q.b, q.a), unit(q.c, q.a)) + dot(unit(q.a, q.b), unit(q.d, q.b)) +
                   dot(unit(q.a, q.c), unit(q.d, q.c)) + dot(unit(q.b, q.d), unit(q.c, q.d));
  return lambda * std::exp(-v);
}

inline double area_cost(const Quadrilateral& q, double scale) {
  require(scale > 0.0, "area_cost: scale must be positive");
  const double s = q.area();
  if (!(s > 0.0)) fail(ErrorKind::Degenerate, "area_cost: non-positive area");
  return s / scale;
}

inline double local_cost(double ap_cost, double a_cost) { return ap_cost * a_cost; }

/// Heat-map cell to image coordinates. A cell sits at the center of its
/// window in the scaled image; shot coordinates undo the bilinear rescale.
struct GridMapping {
  double stride = 64;
  double window_side = 128;
  double scale = 1.0;

  double grid_to_scaled_factor() const { return stride; }
  Point to_scaled(Point g) const {
    const double off = (window_side - 1.0) / 2.0;
    return {g.x * stride + off, g.y * stride + off};
  }
  Point scaled_to_shot(Point p) const {
    return {(p.x + 0.5) / scale - 0.5, (p.y + 0.5) / scale - 0.5};
  }
  Line line_to_scaled(const Line& l) const {
    const double off = (window_side - 1.0) / 2.0;
    return {l.normal, l.offset * stride + l.normal.x * off + l.normal.y * off};
  }
};

/// Pushes every line away from `center` by `distance`.
inline BoundaryLines offset_outward(BoundaryLines lines, Point center, double distance) {
  for (Line* l : {&lines.top, &lines.bottom, &lines.left, &lines.right}) {
    const double side = l->signed_distance(center) < 0.0 ? 1.0 : -1.0;
    l->offset += side * distance;
  }
  return lines;
}

struct BBoxParams {
  int alpha = 13;            ///< smallest peak count tried
  int beta = 18;             ///< largest peak count tried
  double ap_lambda = 5.0;
  int scales_considered = 4; ///< decided scale plus nearest neighbors
  bool expand_to_edges = true;
  double support_radius = 1.0; ///< grid cells
  /// Each cluster must extend over at least this share of the quad edge its
  /// line produces; shorter runs extrapolate their slope too far.
  double min_cluster_span = 0.5;
};

struct QuadCandidate {
  Quadrilateral quad;        ///< shot pixels, boundary of the marked region
  Quadrilateral peak_quad;   ///< scaled-image pixels through the peak lines
  double ap_cost = 0.0;
  double a_cost = 0.0;
  double local_cost = 0.0;
  int peak_count = 0;
  int scale_index = 0;
  double scale = 1.0;
  double support = 0.0; ///< fraction of clustered peaks near their fitted line
  int clustered_peaks = 0;
};

/// Smallest ratio, over the four clusters, of the points' extent along
/// their line to the length of the matching quad edge (grid units).
inline double cluster_span_ratio(const PeakClusters& cl, const BoundaryLines& lines, const Quadrilateral& q) {
  auto extent = [](const std::vector<Point>& pts, const Line& l) {
    const Point dir = l.direction();
    double lo = 1e300, hi = -1e300;
    for (const auto& p : pts) {
      lo = std::min(lo, dot(dir, p));
      hi = std::max(hi, dot(dir, p));
    }
    return hi - lo;
  };
  const double r[] = {extent(cl.a_max, lines.top) / distance(q.a, q.b),
                      extent(cl.b_max, lines.bottom) / distance(q.c, q.d),
                      extent(cl.a_min, lines.left) / distance(q.a, q.c),
                      extent(cl.b_min, lines.right) / distance(q.b, q.d)};
  return *std::min_element(std::begin(r), std::end(r));
}

inline double line_support(const PeakClusters& cl, const BoundaryLines& lines, double radius) {
  int near = 0, total = 0;
  auto count = [&](const std::vector<Point>& pts, const Line& l) {
    for (const auto& p : pts) {
      ++total;
      if (std::abs(l.signed_distance(p)) <= radius) ++near;
    }
  };
  count(cl.a_max, lines.top);
  count(cl.b_max, lines.bottom);
  count(cl.a_min, lines.left);
  count(cl.b_min, lines.right);
  return total > 0 ? static_cast<double>(near) / total : 0.0;
}

/// One candidate from one heat map and one peak count; nullopt when the peaks
/// do not support a valid quadrilateral.
inline std::optional<QuadCandidate> build_candidate(const IntensityHeatMap& ihm, int scale_index,
                                                    int peak_count, double decided_scale,
                                                    const BBoxParams& params = {}) {
  if (ihm.empty()) return std::nullopt;
  PeakSets peaks = extract_peaks(ihm, peak_count);
  if (peaks.max_peaks.empty() || peaks.min_peaks.empty()) return std::nullopt;
  refine_peaks(ihm, peaks);
  const PeakClusters clusters = cluster_peaks(peaks);
  if (clusters.degenerate()) return std::nullopt;
  try {
    const BoundaryLines grid_lines = fit_lines(clusters);
    if (params.min_cluster_span > 0.0 &&
        cluster_span_ratio(clusters, grid_lines, intersect_corners(grid_lines)) < params.min_cluster_span)
      return std::nullopt;
    const GridMapping map{double(ihm.stride), double(ihm.window_side), ihm.scale};
    BoundaryLines scaled{map.line_to_scaled(grid_lines.top), map.line_to_scaled(grid_lines.bottom),
                         map.line_to_scaled(grid_lines.left), map.line_to_scaled(grid_lines.right)};
    const Quadrilateral peak_quad = intersect_corners(scaled);
    if (!peak_quad.is_simple() || !peak_quad.is_convex()) return std::nullopt;

    QuadCandidate cand;
    cand.peak_quad = peak_quad;
    cand.ap_cost = angle_penalty(peak_quad, params.ap_lambda);
    cand.a_cost = area_cost(peak_quad, ihm.scale);
    cand.local_cost = local_cost(cand.ap_cost, cand.a_cost);
    cand.peak_count = peak_count;
    cand.scale_index = scale_index;
    cand.scale = ihm.scale;
    cand.support = line_support(clusters, grid_lines, params.support_radius);
    cand.clustered_peaks = static_cast<int>(clusters.a_max.size() + clusters.b_max.size() +
                                            clusters.a_min.size() + clusters.b_min.size());

    // Peak lines run through the centers of the margin blocks; the region
    // boundary lies half a block further out.
    const BoundaryLines outer =
        params.expand_to_edges
            ? offset_outward(scaled, peak_quad.center(), ihm.window_side / 2.0 * ihm.scale / decided_scale)
            : scaled;
    const Quadrilateral q = intersect_corners(outer);
    cand.quad = canonical_order({map.scaled_to_shot(q.a), map.scaled_to_shot(q.b),
                                 map.scaled_to_shot(q.c), map.scaled_to_shot(q.d)});
    return cand;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Degenerate) return std::nullopt;
    throw;
  }
}

/// Indices of the decided scale and its nearest neighbors in scan order,
/// clipped to the available range.
inline std::vector<int> candidate_scales(int decision, int scale_count, int wanted) {
  require(decision >= 0 && decision < scale_count, "candidate_scales: decision out of range");
  wanted = std::min(wanted, scale_count);
  int lo = decision - (wanted - 1) / 2;
  lo = std::clamp(lo, 0, scale_count - wanted);
  std::vector<int> out;
  for (int i = lo; i < lo + wanted; ++i) out.push_back(i);
  return out;
}

inline std::vector<QuadCandidate> generate_candidates(const ScaleSweep& sweep,
                                                      const BBoxParams& params = {}) {
  std::vector<QuadCandidate> out;
  if (sweep.decision < 0) return out;
  const double decided = sweep.ihms[sweep.decision].scale;
  for (int s : candidate_scales(sweep.decision, static_cast<int>(sweep.ihms.size()),
                                params.scales_considered))
    for (int p = params.alpha; p <= params.beta; ++p)
      if (auto c = build_candidate(sweep.ihms[s], s, p, decided, params)) out.push_back(*c);
  return out;
}

/// Maximum local cost; ties go to the larger peak count, then to the scale
/// nearest the decision.
inline const QuadCandidate& select_best(const std::vector<QuadCandidate>& candidates,
                                        int decision = 0) {
  if (candidates.empty()) fail(ErrorKind::LocalizationFailed, "localization failed: no valid candidate");
  const QuadCandidate* best = &candidates.front();
  for (const auto& c : candidates) {
    if (c.local_cost > best->local_cost) best = &c;
    else if (c.local_cost == best->local_cost) {
      if (c.peak_count > best->peak_count) best = &c;
      else if (c.peak_count == best->peak_count &&
               std::abs(c.scale_index - decision) < std::abs(best->scale_index - decision))
        best = &c;
    }
  }
  return *best;
}

} // namespace shotmark
