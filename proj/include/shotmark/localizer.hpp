#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <thread>
#include <vector>

#include "shotmark/embedder.hpp"
#include "shotmark/error.hpp"
#include "shotmark/imaging.hpp"

namespace shotmark {

struct DetectParams {
  int window_side = 128;
  int stride = 64;
  /// Scan order, largest first.
  std::vector<double> scales{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2};
  int threshold = 4;            ///< minimum |d| for a nonzero heat-map cell
  int top_count = 45;           ///< magnitudes kept per sector
  double angle_margin_deg = 5.0;
  int wiener_window = 3;
  double min_peak_ratio = 0.5;  ///< smallest interior SIM peak, relative to the maximum
  MarkParams mark{};            ///< embedding geometry the detector looks for
  unsigned threads = 0;         ///< 0 = hardware concurrency
};

/// Half-plane bin lists for the two orthogonal sectors a detection window
/// inspects. Conjugate mates carry identical magnitudes and are left out.
struct DetectionSectors {
  int window_side = 0;
  std::vector<BinOffset> sector_a;
  std::vector<BinOffset> sector_b;
};

/// Every integer bin whose polar position lies in the radius band (rescaled to
/// the window size) and in the widened angular sector of each group.
inline DetectionSectors make_detection_sectors(const DetectParams& params) {
  const MarkParams& m = params.mark;
  const double ratio = static_cast<double>(params.window_side) / m.block_side;
  const double r_lo = m.radius_min * ratio, r_hi = m.radius_max * ratio;
  const double a_lo = m.angle_min_deg - params.angle_margin_deg;
  const double a_hi = m.angle_max_deg + params.angle_margin_deg;
  require(r_hi < params.window_side / 2.0, "detection radius exceeds window Nyquist");

  DetectionSectors sectors;
  sectors.window_side = params.window_side;
  const int reach = static_cast<int>(std::ceil(r_hi));
  for (int v = 0; v <= reach; ++v) {
    for (int u = -reach; u <= reach; ++u) {
      const double rho = std::hypot(u, v);
      if (rho < r_lo - 1e-9 || rho > r_hi + 1e-9) continue;
      const double deg = std::atan2(v, u) * 180.0 / std::numbers::pi;
      if (deg >= a_lo && deg <= a_hi) sectors.sector_a.push_back({u, v});
      if (deg >= a_lo + 90.0 && deg <= a_hi + 90.0) sectors.sector_b.push_back({u, v});
    }
  }
  return sectors;
}

struct WindowScore {
  double intensity = 0.0;
  int d = 0;
  int n1 = 0, n2 = 0;
  double c1 = 0.0, c2 = 0.0;
  double pivot = 0.0;
};

/// Count-difference test on two magnitude samples. Both are reduced to their
/// top_count largest values; the pivot is the mean of what remains; d counts
/// how many more sector-A values than sector-B values reach the pivot. The
/// score is the dominant sector's qualifying sum times d, or 0 when
/// |d| < threshold.
inline WindowScore score_sectors(std::vector<double> mags_a, std::vector<double> mags_b,
                                 int top_count, int threshold) {
  auto keep_top = [top_count](std::vector<double>& v) {
    const std::size_t k = std::min<std::size_t>(v.size(), static_cast<std::size_t>(top_count));
    std::partial_sort(v.begin(), v.begin() + k, v.end(), std::greater<>());
    v.resize(k);
  };
  keep_top(mags_a);
  keep_top(mags_b);

  WindowScore s;
  const std::size_t total = mags_a.size() + mags_b.size();
  if (total == 0) return s;
  s.pivot = (std::accumulate(mags_a.begin(), mags_a.end(), 0.0) +
             std::accumulate(mags_b.begin(), mags_b.end(), 0.0)) /
            static_cast<double>(total);
  for (double m : mags_a)
    if (m >= s.pivot) { ++s.n1; s.c1 += m; }
  for (double m : mags_b)
    if (m >= s.pivot) { ++s.n2; s.c2 += m; }
  s.d = s.n1 - s.n2;
  if (std::abs(s.d) < threshold) return s;
  s.intensity = (s.d > 0 ? s.c1 : s.c2) * s.d;
  return s;
}

inline WindowScore blind_detect_spectrum(const Spectrum& spec, const DetectionSectors& sectors,
                                         int top_count, int threshold) {
  std::vector<double> a, b;
  a.reserve(sectors.sector_a.size());
  b.reserve(sectors.sector_b.size());
  for (const auto& bin : sectors.sector_a) a.push_back(spec.magnitude(bin.u, bin.v));
  for (const auto& bin : sectors.sector_b) b.push_back(spec.magnitude(bin.u, bin.v));
  return score_sectors(std::move(a), std::move(b), top_count, threshold);
}

/// Blind detection on one residual window.
template <class T>
WindowScore blind_detect_window(const Raster<T>& noise_window, const DetectionSectors& sectors,
                                int top_count = 45, int threshold = 4) {
  require(noise_window.width == sectors.window_side && noise_window.height == sectors.window_side,
          "window size does not match the detection sectors");
  return blind_detect_spectrum(fft2(noise_window), sectors, top_count, threshold);
}

/// Signed per-window watermark intensity at one scale.
struct IntensityHeatMap {
  int rows = 0;
  int cols = 0;
  double scale = 1.0;
  int window_side = 0;
  int stride = 0;
  std::vector<double> values; ///< row-major
  std::vector<int> d;         ///< count differences, row-major

  bool empty() const { return rows == 0 || cols == 0; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * cols + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col]; }

  double stddev() const {
    if (values.empty()) return 0.0;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / n);
  }
};

namespace detail {

inline void parallel_for(int n, unsigned threads, const std::function<void(int)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(n, 1)));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = static_cast<int>(t); i < n; i += static_cast<int>(threads)) body(i);
    });
  for (auto& th : pool) th.join();
}

} // namespace detail

/// Slides the detection window over a residual image. An image smaller than
/// the window gives an empty map.
inline IntensityHeatMap compute_ihm(const Plane& noise, const DetectionSectors& sectors,
                                    const DetectParams& params, double scale = 1.0) {
  require(params.stride > 0, "stride must be positive");
  IntensityHeatMap ihm;
  ihm.scale = scale;
  ihm.window_side = sectors.window_side;
  ihm.stride = params.stride;
  const int w = sectors.window_side;
  if (noise.width < w || noise.height < w) return ihm;
  ihm.rows = (noise.height - w) / params.stride + 1;
  ihm.cols = (noise.width - w) / params.stride + 1;
  ihm.values.assign(static_cast<std::size_t>(ihm.rows) * ihm.cols, 0.0);
  ihm.d.assign(ihm.values.size(), 0);

  detail::parallel_for(ihm.rows, params.threads, [&](int row) {
    RealFft2 fft(w);
    std::vector<double> a(sectors.sector_a.size()), b(sectors.sector_b.size());
    for (int col = 0; col < ihm.cols; ++col) {
      const int x0 = col * params.stride, y0 = row * params.stride;
      double* dst = fft.input();
      for (int y = 0; y < w; ++y) {
        const float* src = &noise.at(x0, y0 + y);
        std::copy(src, src + w, dst + static_cast<std::size_t>(y) * w);
      }
      fft.execute();
      for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = fft.magnitude(sectors.sector_a[i].u, sectors.sector_a[i].v);
      for (std::size_t i = 0; i < b.size(); ++i)
        b[i] = fft.magnitude(sectors.sector_b[i].u, sectors.sector_b[i].v);
      const WindowScore s = score_sectors(a, b, params.top_count, params.threshold);
      const std::size_t i = static_cast<std::size_t>(row) * ihm.cols + col;
      ihm.values[i] = s.intensity;
      ihm.d[i] = s.d;
    }
  });
  return ihm;
}

struct ScaledLuma {
  double scale = 1.0;
  Plane luma;
};

/// Luma of the shot at every scan scale. Scale 1 is the luma itself.
inline std::vector<ScaledLuma> multiscale(const RasterImage& shot, const std::vector<double>& scales) {
  require(!shot.empty(), "multiscale: empty shot");
  const Plane luma = convert<float>(to_luma(shot));
  std::vector<ScaledLuma> out;
  for (double s : scales) {
    require(s > 0.0 && s <= 1.0, "scan scales must lie in (0, 1]");
    const int w = std::max(1, static_cast<int>(std::lround(shot.width * s)));
    const int h = std::max(1, static_cast<int>(std::lround(shot.height * s)));
    out.push_back({s, (w == shot.width && h == shot.height) ? luma : resize_bilinear(luma, w, h)});
  }
  return out;
}

struct ScaleSweep {
  std::vector<IntensityHeatMap> ihms; ///< one per scan scale, in scan order
  std::vector<double> sim;            ///< stddev of each heat map
  int decision = -1;
};

/// First strict interior local maximum of the scale-intensity series in scan
/// order that reaches `min_peak_ratio` of the series maximum; argmax when
/// none does.
inline int scale_decision(const std::vector<double>& sim, double min_peak_ratio = 0.5) {
  require(!sim.empty(), "scale_decision: empty series");
  if (std::all_of(sim.begin(), sim.end(), [](double v) { return v == 0.0; }))
    fail(ErrorKind::NoWatermarkFound, "no watermark found: every heat map is empty");
  const auto top = std::max_element(sim.begin(), sim.end());
  for (std::size_t i = 1; i + 1 < sim.size(); ++i)
    if (sim[i] > sim[i - 1] && sim[i] > sim[i + 1] && sim[i] >= min_peak_ratio * *top)
      return static_cast<int>(i);
  return static_cast<int>(top - sim.begin());
}

/// Heat maps and SIM at every scale. The decision is left at -1 when every
/// map is zero.
inline ScaleSweep sweep_scales(const RasterImage& shot, const DetectParams& params = {}) {
  const DetectionSectors sectors = make_detection_sectors(params);
  ScaleSweep sweep;
  for (const auto& level : multiscale(shot, params.scales)) {
    IntensityHeatMap ihm;
    if (level.luma.width >= params.window_side && level.luma.height >= params.window_side) {
      const Plane noise = wiener_residual(level.luma, params.wiener_window);
      ihm = compute_ihm(noise, sectors, params, level.scale);
    } else {
      ihm.scale = level.scale;
      ihm.window_side = params.window_side;
      ihm.stride = params.stride;
    }
    sweep.sim.push_back(ihm.stddev());
    sweep.ihms.push_back(std::move(ihm));
  }
  try {
    sweep.decision = scale_decision(sweep.sim, params.min_peak_ratio);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoWatermarkFound) throw;
  }
  return sweep;
}

} // namespace shotmark
