#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "shotmark/bbox.hpp"
#include "shotmark/error.hpp"
#include "shotmark/localizer.hpp"
#include "shotmark/rectify.hpp"

namespace shotmark {

enum class Status { Found, NoWatermarkFound, LocalizationFailed };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Found: return "found";
    case Status::NoWatermarkFound: return "no watermark found";
    case Status::LocalizationFailed: return "localization failed";
  }
  return "unknown";
}

struct PipelineParams {
  DetectParams detect{};
  BBoxParams bbox{};
  /// Minimum share of clustered peaks lying on their fitted line for the
  /// winning candidate to count as a watermark.
  double min_support = 0.6;
  /// Minimum positive and negative cells in the decided heat map.
  int min_signed_cells = 8;
  /// Marked margins push nearly all top values into one sector; the decided
  /// map needs a cell of each sign with |d| at this share of the top count.
  double min_dominance = 0.8;
  bool extract = false;
  ExtractParams payload{};
};

struct Timings {
  double detect_ms = 0.0;
  double bbox_ms = 0.0;
  double extract_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineResult {
  Status status = Status::NoWatermarkFound;
  std::string message;
  std::optional<QuadCandidate> best;
  std::vector<double> sim;
  int decision = -1;
  double decided_scale = 0.0;
  std::optional<ExtractionReport> extraction;
  RasterImage rectified;
  Timings timings;
  ScaleSweep sweep;

  bool found() const { return status == Status::Found; }
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// Localizes the marked region in a shot and, on request, rectifies it and
/// reads the payload. Missing or implausible marks come back as a status.
inline PipelineResult run_pipeline(const RasterImage& shot, const PipelineParams& params = {}) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  PipelineResult res;
  res.sweep = sweep_scales(shot, params.detect);
  res.sim = res.sweep.sim;
  res.decision = res.sweep.decision;
  res.timings.detect_ms = detail::ms_since(t0);

  auto finish = [&](Status s, std::string msg) {
    res.status = s;
    res.message = std::move(msg);
    res.timings.total_ms = detail::ms_since(t0);
    return res;
  };
  if (res.decision < 0) return finish(Status::NoWatermarkFound, "every heat map is empty");
  const IntensityHeatMap& decided = res.sweep.ihms[res.decision];
  res.decided_scale = decided.scale;
  int pos = 0, neg = 0;
  for (double v : decided.values) {
    pos += v > 0.0;
    neg += v < 0.0;
  }
  if (pos < params.min_signed_cells || neg < params.min_signed_cells)
    return finish(Status::NoWatermarkFound, "decided heat map lacks both sector signatures");
  const auto [d_lo, d_hi] = std::minmax_element(decided.d.begin(), decided.d.end());
  const double dominant = params.min_dominance * params.detect.top_count;
  if (*d_hi < dominant || -*d_lo < dominant)
    return finish(Status::NoWatermarkFound, "no window is dominated by either sector");

  const auto t1 = clock::now();
  const auto candidates = generate_candidates(res.sweep, params.bbox);
  res.timings.bbox_ms = detail::ms_since(t1);
  if (candidates.empty()) return finish(Status::LocalizationFailed, "no valid candidate");
  res.best = select_best(candidates, res.decision);
  if (res.best->support < params.min_support)
    return finish(Status::NoWatermarkFound, "peaks do not line up along the margins");

  if (params.extract) {
    const auto t2 = clock::now();
    try {
      res.rectified = rectify(shot, res.best->quad);
      res.extraction = extract_payload(res.rectified, params.payload);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidArgument && e.kind() != ErrorKind::Degenerate) throw;
    }
    res.timings.extract_ms = detail::ms_since(t2);
  }
  return finish(Status::Found, "");
}

} // namespace shotmark
