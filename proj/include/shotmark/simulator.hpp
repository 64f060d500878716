#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

#include "shotmark/error.hpp"
#include "shotmark/geometry.hpp"
#include "shotmark/imaging.hpp"
#include "shotmark/io.hpp"
#include "shotmark/rectify.hpp"
#include "shotmark/synth.hpp"

namespace shotmark {

struct ShotConfig {
  double area_proportion = 0.5;
  double angle_offset_deg = 0.0; ///< camera yaw about the content center
  double illumination_gain = 1.0;
  double illumination_gamma = 1.0;
  double noise_sigma = 0.0; ///< gray levels
  double blur_sigma = 0.0;  ///< optical blur in sensor pixels
  std::optional<int> jpeg_quality;
  BackgroundKind background = BackgroundKind::Clutter;
  std::uint64_t seed = 1;
  /// Fixed sensor size in pixels; the content scale follows from the area
  /// proportion, so smaller proportions mean a smaller, farther screen.
  double sensor_pixels = 12e6;
  /// When positive, overrides the sensor: content is drawn at this scale and
  /// the canvas is sized to reach the area proportion.
  double content_scale = 0.0;
  /// Viewing distance in units of the content width.
  double camera_distance = 2.0;
};

struct Shot {
  RasterImage image;
  Quadrilateral truth; ///< outer boundary of the content in shot pixels
  double content_scale = 1.0;
};

namespace detail {

/// Yaw projection of the content outline about its middle, at unit
/// magnification for the center. Without yaw the outline comes back unchanged.
inline std::array<Point, 4> yaw_corners(int width, int height, double yaw_deg, double distance) {
  const Quadrilateral outline = raster_outline(width, height);
  const Point center{width / 2.0 - 0.5, height / 2.0 - 0.5};
  const double t = yaw_deg * std::numbers::pi / 180.0;
  const double d = distance * width;
  std::array<Point, 4> out;
  const std::array<Point, 4> in{outline.a, outline.b, outline.c, outline.d};
  for (std::size_t i = 0; i < 4; ++i) {
    const double x = in[i].x - center.x, y = in[i].y - center.y;
    const double depth = d + x * std::sin(t);
    out[i] = {x * std::cos(t) * d / depth + center.x, y * d / depth + center.y};
  }
  return out;
}

/// Separable Gaussian blur, kernel truncated at 3 sigma, edges clamped.
inline void gaussian_blur(RasterImage& img, double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * r + 1);
  float total = 0.0f;
  for (int i = -r; i <= r; ++i) total += k[i + r] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
  for (auto& v : k) v /= total;
  const int w = img.width, h = img.height, ch = img.channels;
  std::vector<float> tmp(img.data.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        float acc = 0.0f;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        tmp[(static_cast<std::size_t>(y) * w + x) * ch + c] = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        float acc = 0.0f;
        for (int i = -r; i <= r; ++i)
          acc += k[i + r] * tmp[(static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x) * ch + c];
        img.at(x, y, c) = to_u8(acc);
      }
}

inline double apply_tone(double v, double gain, double gamma) {
  return gain * std::pow(std::clamp(v, 0.0, 255.0) / 255.0, gamma) * 255.0;
}

} // namespace detail

/// Composites `marked` into a 4:3 synthetic background under yaw
/// perspective, then applies optical blur, tone change, Gaussian noise and an
/// optional JPEG pass.
inline Shot simulate_shot(const RasterImage& marked, const ShotConfig& cfg) {
  require(!marked.empty() && (marked.channels == 1 || marked.channels == 3),
          "simulate_shot: marked image must be gray or RGB");
  require(cfg.area_proportion > 0.0 && cfg.area_proportion < 1.0, "area proportion must lie in (0, 1)");
  require(cfg.angle_offset_deg >= 0.0 && cfg.angle_offset_deg < 90.0, "angle offset must lie in [0, 90)");
  require(cfg.illumination_gain > 0.0 && cfg.illumination_gamma > 0.0, "illumination must be positive");
  require(cfg.noise_sigma >= 0.0 && cfg.blur_sigma >= 0.0, "noise and blur must be non-negative");
  require(cfg.camera_distance > 0.5, "camera distance too small");
  std::mt19937_64 rng(cfg.seed);

  const auto unit = detail::yaw_corners(marked.width, marked.height, cfg.angle_offset_deg, cfg.camera_distance);
  const double unit_area = Quadrilateral{unit[0], unit[1], unit[2], unit[3]}.area();
  int cw, ch;
  double scale;
  if (cfg.content_scale > 0.0) {
    scale = cfg.content_scale;
    const double canvas = scale * scale * unit_area / cfg.area_proportion;
    cw = static_cast<int>(std::lround(std::sqrt(canvas * 4.0 / 3.0)));
    ch = static_cast<int>(std::lround(cw * 0.75));
  } else {
    require(cfg.sensor_pixels > 0.0, "sensor size must be positive");
    cw = static_cast<int>(std::lround(std::sqrt(cfg.sensor_pixels * 4.0 / 3.0)));
    ch = static_cast<int>(std::lround(cw * 0.75));
    scale = std::sqrt(cfg.area_proportion * cw * ch / unit_area);
  }

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& p : unit) {
    x0 = std::min(x0, p.x * scale);
    x1 = std::max(x1, p.x * scale);
    y0 = std::min(y0, p.y * scale);
    y1 = std::max(y1, p.y * scale);
  }
  if (x1 - x0 > cw - 1.0 || y1 - y0 > ch - 1.0)
    fail(ErrorKind::InvalidArgument, "area proportion unreachable on a 4:3 canvas");
  // Integer placement keeps an undistorted paste pixel-exact.
  std::uniform_int_distribution<int> ox(static_cast<int>(std::ceil(-x0 - 0.5)),
                                        static_cast<int>(std::floor(cw - 0.5 - x1))),
      oy(static_cast<int>(std::ceil(-y0 - 0.5)), static_cast<int>(std::floor(ch - 0.5 - y1)));
  const double dx = ox(rng), dy = oy(rng);
  std::array<Point, 4> placed;
  for (std::size_t i = 0; i < 4; ++i) placed[i] = {unit[i].x * scale + dx, unit[i].y * scale + dy};

  Shot shot;
  shot.content_scale = scale;
  shot.truth = {placed[0], placed[1], placed[2], placed[3]};
  const Homography to_shot = solve_homography(raster_outline(marked.width, marked.height), shot.truth);
  const Homography to_content = to_shot.inverse();

  RasterImage canvas = synthesize_background(cw, ch, cfg.background, rng());
  double px[3];
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) {
      const Point src = to_content.apply({double(x), double(y)});
      if (!sample_bilinear(marked, src.x, src.y, px)) continue;
      for (int c = 0; c < 3; ++c) canvas.at(x, y, c) = to_u8(px[marked.channels == 1 ? 0 : c]);
    }

  if (cfg.blur_sigma > 0.0) detail::gaussian_blur(canvas, cfg.blur_sigma);
  const bool tone = cfg.illumination_gain != 1.0 || cfg.illumination_gamma != 1.0;
  if (tone || cfg.noise_sigma > 0.0) {
    std::array<double, 256> lut;
    for (int v = 0; v < 256; ++v) lut[v] = detail::apply_tone(v, cfg.illumination_gain, cfg.illumination_gamma);
    // One noise draw per pixel, shared by its channels.
    std::normal_distribution<float> noise(0.0f, cfg.noise_sigma > 0.0 ? static_cast<float>(cfg.noise_sigma) : 1.0f);
    for (std::size_t i = 0; i < canvas.data.size(); i += 3) {
      const double n = cfg.noise_sigma > 0.0 ? noise(rng) : 0.0;
      for (std::size_t c = i; c < i + 3; ++c) canvas.data[c] = to_u8(lut[canvas.data[c]] + n);
    }
  }
  if (cfg.jpeg_quality) canvas = jpeg_round_trip(canvas, *cfg.jpeg_quality);
  shot.image = std::move(canvas);
  return shot;
}

} // namespace shotmark
