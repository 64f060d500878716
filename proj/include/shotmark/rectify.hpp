#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "shotmark/embedder.hpp"
#include "shotmark/error.hpp"
#include "shotmark/geometry.hpp"
#include "shotmark/imaging.hpp"

namespace shotmark {

struct Dimensions {
  int width = 0;
  int length = 0; ///< vertical extent
};

/// Mean of opposite edge lengths, rounded, at least one pixel.
inline Dimensions estimate_dims(const Quadrilateral& q) {
  if (!q.is_simple() || !(q.area() > 0.0))
    fail(ErrorKind::Degenerate, "estimate_dims: degenerate quadrilateral");
  const double w = (distance(q.a, q.b) + distance(q.c, q.d)) / 2.0;
  const double l = (distance(q.a, q.c) + distance(q.b, q.d)) / 2.0;
  return {std::max(1, static_cast<int>(std::lround(w))), std::max(1, static_cast<int>(std::lround(l)))};
}

/// Projective map taking each corner of `src` to the same-named corner of
/// `dst`, from the eight linear equations in the eight unknowns.
inline Homography solve_homography(const Quadrilateral& src, const Quadrilateral& dst) {
  const std::array<Point, 4> s{src.a, src.b, src.c, src.d}, d{dst.a, dst.b, dst.c, dst.d};
  Eigen::Matrix<double, 8, 8> m = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> rhs;
  // unknowns: a1 b1 c1 a2 b2 c2 a0 b0
  for (int i = 0; i < 4; ++i) {
    const double x = s[i].x, y = s[i].y, u = d[i].x, v = d[i].y;
    m.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    m.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    rhs(2 * i) = u;
    rhs(2 * i + 1) = v;
  }
  const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(m);
  if (lu.rank() < 8) fail(ErrorKind::Degenerate, "solve_homography: singular system");
  const Eigen::Matrix<double, 8, 1> x = lu.solve(rhs);
  const Homography h{x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7)};
  if (!h.invertible()) fail(ErrorKind::Degenerate, "solve_homography: singular homography");
  return h;
}

/// Targets the pixel centers (0,0), (W-1,0), (0,H-1), (W-1,H-1).
inline Homography solve_homography(const Quadrilateral& src, int dst_width, int dst_height) {
  require(dst_width > 0 && dst_height > 0, "solve_homography: empty destination");
  const double w = dst_width - 1.0, h = dst_height - 1.0;
  return solve_homography(src, Quadrilateral{{0, 0}, {w, 0}, {0, h}, {w, h}});
}

/// Outer boundary of a W x H raster: pixel centers sit at integers, so the
/// edges are half a pixel beyond them.
inline Quadrilateral raster_outline(int width, int height) {
  const double w = width - 0.5, h = height - 0.5;
  return {{-0.5, -0.5}, {w, -0.5}, {-0.5, h}, {w, h}};
}

/// Perspective correction of the region bounded by `quad` onto an upright
/// raster of the estimated dimensions.
template <class T>
Raster<T> rectify(const Raster<T>& shot, const Quadrilateral& quad) {
  require(!shot.empty(), "rectify: empty shot");
  const Dimensions dims = estimate_dims(quad);
  const Homography h = solve_homography(quad, raster_outline(dims.width, dims.length));
  return warp_perspective(shot, h, dims.width, dims.length);
}

struct WatermarkPayload {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  friend bool operator==(const WatermarkPayload&, const WatermarkPayload&) = default;
};

/// Two rings two bins either side of a quarter of the block side; bins every
/// 6 degrees on the arcs clear of both localization sectors.
constexpr int kPayloadCapacity = 32;

inline std::vector<BinOffset> payload_bins(int block_side) {
  require(block_side >= 32, "payload_bins: block side too small");
  std::vector<BinOffset> bins;
  const double center = block_side / 4.0;
  for (double radius : {center - 2.0, center + 2.0})
    for (int deg = 0; deg < 180; deg += 6) {
      const bool clear = deg <= 24 || (deg >= 66 && deg <= 114) || deg >= 156;
      if (!clear) continue;
      const double t = deg * std::numbers::pi / 180.0;
      const BinOffset b{static_cast<int>(std::lround(radius * std::cos(t))),
                        static_cast<int>(std::lround(radius * std::sin(t)))};
      if (std::find(bins.begin(), bins.end(), b) == bins.end()) bins.push_back(b);
    }
  require(static_cast<int>(bins.size()) >= kPayloadCapacity, "payload_bins: ring too small");
  bins.resize(kPayloadCapacity);
  return bins;
}

/// Blocks strictly inside the ring of localization margin blocks.
inline std::vector<BlockRect> interior_blocks(int width, int height, int block_side) {
  std::vector<BlockRect> out;
  for (int y = block_side; y + 2 * block_side <= height; y += block_side)
    for (int x = block_side; x + 2 * block_side <= width; x += block_side)
      out.push_back({x, y, block_side});
  return out;
}

/// Writes the payload into every interior block of the luma channel: bit 1
/// raises its bin to mean + stddev of the block's magnitudes, bit 0 lowers
/// it to mean - stddev / 2.
inline RasterImage embed_payload(const RasterImage& img, const WatermarkPayload& payload,
                                 int block_side = 128) {
  require(img.channels == 1 || img.channels == 3, "embed_payload expects 1 or 3 channels");
  require(!payload.bits.empty(), "embed_payload: empty payload");
  if (static_cast<int>(payload.size()) > kPayloadCapacity)
    fail(ErrorKind::InvalidArgument, "payload exceeds ring capacity");
  const auto blocks = interior_blocks(img.width, img.height, block_side);
  if (blocks.empty()) fail(ErrorKind::InvalidArgument, "embed_payload: no interior block");
  const auto bins = payload_bins(block_side);
  const RasterImage luma = to_luma(img);
  RasterImage out = img;
  for (const auto& r : blocks) {
    const RasterImage block = crop(luma, r.x, r.y, r.side, r.side);
    Spectrum spec = fft2(block);
    const SpectrumStats st = magnitude_stats(spec);
    for (std::size_t i = 0; i < payload.size(); ++i) {
      const double target = payload.bits[i] ? st.mean + st.stddev : std::max(0.0, st.mean - st.stddev / 2.0);
      const BinOffset b = bins[i];
      set_magnitudes(spec, {b, {-b.u, -b.v}}, target);
    }
    const RasterImage marked = convert<std::uint8_t>(ifft2(spec));
    for (int y = 0; y < r.side; ++y)
      for (int x = 0; x < r.side; ++x) {
        const int delta = int(marked.at(x, y)) - int(block.at(x, y));
        if (delta == 0) continue;
        for (int c = 0; c < img.channels; ++c) {
          auto& s = out.at(r.x + x, r.y + y, c);
          s = to_u8(int(s) + delta);
        }
      }
  }
  return out;
}

struct ExtractionReport {
  WatermarkPayload payload;
  double confidence = 0.0; ///< mean vote margin in [0, 1]
  int windows_used = 0;
  int window_side = 0;
};

struct ExtractParams {
  int block_side = 128;
  int stride = 128;
  int payload_bits = 16;
  int nominal_width = 0;  ///< marked width before capture; 0 = unknown
  int nominal_height = 0; ///< with the width, resamples to the marked size first
  /// A bin votes 1 above this multiple of the window's mean magnitude.
  double vote_threshold = 8.0;
  /// Each bit reads the largest magnitude within this many bins of its ring
  /// bin, absorbing the small rotation and scale left by rectification.
  int bin_reach = 1;
};

/// Majority vote of per-window bit decisions. With both nominal dimensions
/// the rectified image is first resampled to the marked size; with the width
/// alone, window side and stride follow the rectified-to-nominal ratio. The
/// outer ring of windows is skipped whenever interior windows exist.
inline ExtractionReport extract_payload(const RasterImage& rectified, const ExtractParams& params = {}) {
  require(params.payload_bits > 0 && params.payload_bits <= kPayloadCapacity,
          "extract_payload: payload length out of range");
  require(!rectified.empty(), "extract_payload: empty image");
  RasterImage luma = rectified.channels == 1 ? rectified : to_luma(rectified);
  double ratio = 1.0;
  if (params.nominal_width > 0 && params.nominal_height > 0) {
    if (luma.width != params.nominal_width || luma.height != params.nominal_height)
      luma = resize_bilinear(luma, params.nominal_width, params.nominal_height);
  } else if (params.nominal_width > 0) {
    ratio = static_cast<double>(rectified.width) / params.nominal_width;
  }
  const int win = std::max(16, static_cast<int>(std::lround(params.block_side * ratio)));
  const int stride = std::max(1, static_cast<int>(std::lround(params.stride * ratio)));
  if (luma.width < win || luma.height < win)
    fail(ErrorKind::InvalidArgument, "extract_payload: image smaller than one window");
  const int cols = (luma.width - win) / stride + 1, rows = (luma.height - win) / stride + 1;
  const int c0 = cols > 2 ? 1 : 0, c1 = cols > 2 ? cols - 1 : cols;
  const int r0 = rows > 2 ? 1 : 0, r1 = rows > 2 ? rows - 1 : rows;
  require(params.bin_reach >= 0, "extract_payload: negative bin reach");
  const auto bins = payload_bins(params.block_side);
  auto read = [&](const Spectrum& spec, BinOffset b) {
    double m = 0.0;
    for (int dv = -params.bin_reach; dv <= params.bin_reach; ++dv)
      for (int du = -params.bin_reach; du <= params.bin_reach; ++du)
        m = std::max(m, spec.magnitude(b.u + du, b.v + dv));
    return m;
  };

  std::vector<int> ones(params.payload_bits, 0);
  int windows = 0;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const Spectrum spec = fft2(crop(luma, c * stride, r * stride, win, win));
      const double mean = magnitude_stats(spec).mean;
      for (int i = 0; i < params.payload_bits; ++i)
        ones[i] += read(spec, bins[i]) > params.vote_threshold * mean ? 1 : 0;
      ++windows;
    }

  ExtractionReport rep;
  rep.windows_used = windows;
  rep.window_side = win;
  double margin = 0.0;
  for (int i = 0; i < params.payload_bits; ++i) {
    rep.payload.bits.push_back(2 * ones[i] > windows ? 1 : 0);
    margin += std::abs(2.0 * ones[i] - windows) / windows;
  }
  rep.confidence = margin / params.payload_bits;
  return rep;
}

inline double nc(const WatermarkPayload& w, const WatermarkPayload& w_star) {
  if (w.size() != w_star.size() || w.bits.empty())
    fail(ErrorKind::InvalidArgument, "nc: payload lengths differ");
  double diff = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) diff += std::abs(int(w.bits[i]) - int(w_star.bits[i]));
  return 1.0 - diff / static_cast<double>(w.size());
}

/// Four bits per hex digit, most significant first.
inline WatermarkPayload payload_from_hex(std::string_view hex) {
  WatermarkPayload p;
  for (char ch : hex) {
    int v;
    if (ch >= '0' && ch <= '9') v = ch - '0';
    else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
    else if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
    else fail(ErrorKind::InvalidArgument, std::string("invalid hex digit '") + ch + "'");
    for (int b = 3; b >= 0; --b) p.bits.push_back(static_cast<std::uint8_t>((v >> b) & 1));
  }
  if (p.bits.empty()) fail(ErrorKind::InvalidArgument, "empty hex payload");
  return p;
}

/// Pads with zero bits to a whole hex digit.
inline std::string payload_to_hex(const WatermarkPayload& p) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < p.size(); i += 4) {
    int v = 0;
    for (std::size_t b = 0; b < 4; ++b) v = (v << 1) | (i + b < p.size() ? p.bits[i + b] : 0);
    out.push_back(digits[v]);
  }
  return out;
}

} // namespace shotmark
