#pragma once

// Procedural imagery: natural-looking test covers and shot backgrounds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "shotmark/imaging.hpp"

namespace shotmark {

namespace detail {

/// Smoothly interpolated lattice noise in [-1, 1].
inline void add_value_noise(std::vector<float>& field, int w, int h, double cell,
                            double amplitude, std::mt19937_64& rng) {
  const int lw = static_cast<int>(std::ceil(w / cell)) + 2;
  const int lh = static_cast<int>(std::ceil(h / cell)) + 2;
  std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
  std::vector<float> lattice(static_cast<std::size_t>(lw) * lh);
  for (auto& v : lattice) v = uni(rng);
  auto smooth = [](double t) { return static_cast<float>(t * t * (3.0 - 2.0 * t)); };
  std::vector<int> xi(w);
  std::vector<float> xt(w);
  for (int x = 0; x < w; ++x) {
    const double gx = x / cell;
    xi[x] = static_cast<int>(gx);
    xt[x] = smooth(gx - xi[x]);
  }
  const float amp = static_cast<float>(amplitude);
  for (int y = 0; y < h; ++y) {
    const double gy = y / cell;
    const int y0 = static_cast<int>(gy);
    const float ty = smooth(gy - y0);
    const float* r0 = &lattice[static_cast<std::size_t>(y0) * lw];
    const float* r1 = r0 + lw;
    float* row = &field[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      const int x0 = xi[x];
      const float top = r0[x0] + xt[x] * (r0[x0 + 1] - r0[x0]);
      const float bot = r1[x0] + xt[x] * (r1[x0 + 1] - r1[x0]);
      row[x] += amp * (top + ty * (bot - top));
    }
  }
}

inline void box_blur3(Raster<float>& img) {
  const int w = img.width, h = img.height, ch = img.channels;
  std::vector<float> tmp(img.data.size());
  auto idx = [&](int x, int y, int c) { return (static_cast<std::size_t>(y) * w + x) * ch + c; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        float sum = img.data[idx(x, y, c)];
        int n = 1;
        if (x > 0) { sum += img.data[idx(x - 1, y, c)]; ++n; }
        if (x + 1 < w) { sum += img.data[idx(x + 1, y, c)]; ++n; }
        tmp[idx(x, y, c)] = sum / n;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        float sum = tmp[idx(x, y, c)];
        int n = 1;
        if (y > 0) { sum += tmp[idx(x, y - 1, c)]; ++n; }
        if (y + 1 < h) { sum += tmp[idx(x, y + 1, c)]; ++n; }
        img.data[idx(x, y, c)] = sum / n;
      }
}

struct Rgb {
  float r, g, b;
};

inline Rgb random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> uni(20.0f, 235.0f);
  return {uni(rng), uni(rng), uni(rng)};
}

/// Fills random ellipses, rotated rectangles and triangles.
inline void draw_shapes(Raster<float>& img, int count, double min_size, double max_size,
                        std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, img.width), uy(0.0, img.height);
  std::uniform_real_distribution<double> usize(min_size, max_size);
  std::uniform_real_distribution<double> uangle(0.0, std::numbers::pi);
  std::uniform_int_distribution<int> ukind(0, 2);
  std::uniform_real_distribution<float> ushade(-40.0f, 40.0f);
  for (int s = 0; s < count; ++s) {
    const int kind = ukind(rng);
    const double cx = ux(rng), cy = uy(rng);
    const double rx = usize(rng) / 2, ry = usize(rng) / 2;
    const double ang = uangle(rng);
    const Rgb color = random_color(rng);
    const float shade = ushade(rng);
    const double ca = std::cos(ang), sa = std::sin(ang);
    std::uniform_real_distribution<double> uoff(-max_size / 2, max_size / 2);
    std::array<Point, 3> tri;
    for (auto& p : tri) p = {cx + uoff(rng), cy + uoff(rng)};
    double bx0 = cx - std::hypot(rx, ry), bx1 = cx + std::hypot(rx, ry);
    double by0 = cy - std::hypot(rx, ry), by1 = cy + std::hypot(rx, ry);
    if (kind == 2) {
      bx0 = std::min({tri[0].x, tri[1].x, tri[2].x});
      bx1 = std::max({tri[0].x, tri[1].x, tri[2].x});
      by0 = std::min({tri[0].y, tri[1].y, tri[2].y});
      by1 = std::max({tri[0].y, tri[1].y, tri[2].y});
    }
    const int x0 = std::max(0, static_cast<int>(bx0)), x1 = std::min(img.width - 1, static_cast<int>(bx1) + 1);
    const int y0 = std::max(0, static_cast<int>(by0)), y1 = std::min(img.height - 1, static_cast<int>(by1) + 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
        bool inside = false;
        if (kind == 0) inside = (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
        else if (kind == 1) inside = std::abs(u) <= rx && std::abs(v) <= ry;
        else {
          const Point p{double(x), double(y)};
          const double c0 = cross(tri[1] - tri[0], p - tri[0]);
          const double c1 = cross(tri[2] - tri[1], p - tri[1]);
          const double c2 = cross(tri[0] - tri[2], p - tri[2]);
          inside = (c0 >= 0 && c1 >= 0 && c2 >= 0) || (c0 <= 0 && c1 <= 0 && c2 <= 0);
        }
        if (!inside) continue;
        const float g = shade * static_cast<float>(u / std::max(rx, 1.0));
        img.at(x, y, 0) = color.r + g;
        img.at(x, y, 1) = color.g + g;
        img.at(x, y, 2) = color.b + g;
      }
    }
  }
}

inline RasterImage quantize(const Raster<float>& img) { return convert<std::uint8_t>(img); }

} // namespace detail

/// Photograph-like RGB cover: smooth color field, overlapping shapes, and
/// multi-octave texture down to 4-pixel detail.
inline RasterImage synthesize_natural(int width, int height, std::uint64_t seed) {
  require(width > 0 && height > 0, "synthesize_natural: empty size");
  std::mt19937_64 rng(seed);
  Raster<float> img(width, height, 3);

  const std::array<detail::Rgb, 4> corner = {detail::random_color(rng), detail::random_color(rng),
                                            detail::random_color(rng), detail::random_color(rng)};
  for (int y = 0; y < height; ++y) {
    const float ty = float(y) / std::max(1, height - 1);
    for (int x = 0; x < width; ++x) {
      const float tx = float(x) / std::max(1, width - 1);
      auto mix = [&](float detail::Rgb::*ch) {
        return (1 - ty) * ((1 - tx) * corner[0].*ch + tx * corner[1].*ch) +
               ty * ((1 - tx) * corner[2].*ch + tx * corner[3].*ch);
      };
      img.at(x, y, 0) = mix(&detail::Rgb::r);
      img.at(x, y, 1) = mix(&detail::Rgb::g);
      img.at(x, y, 2) = mix(&detail::Rgb::b);
    }
  }
  const double scale = std::min(width, height);
  detail::draw_shapes(img, 40, scale * 0.05, scale * 0.5, rng);
  detail::box_blur3(img);

  std::vector<float> texture(static_cast<std::size_t>(width) * height, 0.0f);
  std::uniform_real_distribution<double> urough(0.6, 1.2);
  const double roughness = urough(rng);
  for (double cell = 256; cell >= 4; cell /= 2)
    detail::add_value_noise(texture, width, height, cell, 6.0 * std::pow(cell / 4.0, 0.35) * roughness, rng);
  for (std::size_t i = 0; i < texture.size(); ++i)
    for (int c = 0; c < 3; ++c) img.data[3 * i + c] += texture[i];
  return detail::quantize(img);
}

enum class BackgroundKind { Solid, Texture, Clutter };

inline RasterImage synthesize_background(int width, int height, BackgroundKind kind,
                                         std::uint64_t seed) {
  require(width > 0 && height > 0, "synthesize_background: empty size");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  Raster<float> img(width, height, 3);
  const detail::Rgb base = detail::random_color(rng);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.data[3 * i] = base.r;
    img.data[3 * i + 1] = base.g;
    img.data[3 * i + 2] = base.b;
  }
  if (kind == BackgroundKind::Solid) return detail::quantize(img);

  std::vector<float> texture(img.pixel_count(), 0.0f);
  for (double cell = 512; cell >= 8; cell /= 2)
    detail::add_value_noise(texture, width, height, cell, 5.0 * std::pow(cell / 8.0, 0.4), rng);
  for (std::size_t i = 0; i < texture.size(); ++i)
    for (int c = 0; c < 3; ++c) img.data[3 * i + c] += texture[i];
  if (kind == BackgroundKind::Clutter) {
    const double scale = std::min(width, height);
    detail::draw_shapes(img, 25, scale * 0.03, scale * 0.25, rng);
  }
  return detail::quantize(img);
}

} // namespace shotmark
