#pragma once

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

#include "shotmark/error.hpp"
#include "shotmark/imaging.hpp"

namespace shotmark {

struct BlockRect {
  int x = 0;
  int y = 0;
  int side = 0;
  friend bool operator==(const BlockRect&, const BlockRect&) = default;
};

/// Margin blocks: group A holds the top and bottom rows (corners included),
/// group B the left and right columns between them.
struct PairedGroups {
  std::vector<BlockRect> group_a;
  std::vector<BlockRect> group_b;
  int block_side = 0;
};

inline PairedGroups select_paired_blocks(int width, int height, int block_side) {
  require(block_side > 0, "block side must be positive");
  if (width < 2 * block_side || height < 2 * block_side)
    fail(ErrorKind::InvalidArgument, "image too small for paired margin blocks");
  const int cols = width / block_side;
  const int rows = height / block_side;
  PairedGroups groups;
  groups.block_side = block_side;
  // Bottom row and right column hug the image edge even when the size is not
  // a multiple of the block side.
  const int bottom = height - block_side;
  const int right = width - block_side;
  for (int c = 0; c < cols; ++c) {
    const int x = (c == cols - 1) ? right : c * block_side;
    groups.group_a.push_back({x, 0, block_side});
    groups.group_a.push_back({x, bottom, block_side});
  }
  for (int r = 1; r < rows - 1; ++r) {
    groups.group_b.push_back({0, r * block_side, block_side});
    groups.group_b.push_back({right, r * block_side, block_side});
  }
  if (groups.group_b.empty())
    fail(ErrorKind::InvalidArgument, "image too small: no left/right margin blocks");
  return groups;
}

template <class T>
PairedGroups select_paired_blocks(const Raster<T>& img, int block_side) {
  return select_paired_blocks(img.width, img.height, block_side);
}

struct MarkParams {
  double target_psnr = 34.5;
  int block_side = 128;
  double radius_min = 15.0;
  double radius_max = 25.0;
  double radius_step = 1.25;
  double angle_min_deg = 35.0;
  double angle_max_deg = 55.0;
  double angle_step_deg = 5.0;
  int max_iterations = 64;
};

enum class Group { A, B };

struct BinOffset {
  int u = 0; ///< horizontal frequency
  int v = 0; ///< vertical frequency
  auto operator<=>(const BinOffset&) const = default;
};

struct EmbeddingLocationSet {
  Group group = Group::A;
  std::vector<double> radii;
  std::vector<double> angles; ///< radians, group shift applied
  std::vector<BinOffset> bins; ///< deduplicated, conjugate mates included
};

namespace detail {

inline std::vector<double> inclusive_range(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) out.push_back(lo + i * step);
  return out;
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

} // namespace detail

inline EmbeddingLocationSet make_location_set(const MarkParams& params, Group group) {
  const double half = params.block_side / 2.0;
  require(params.radius_step > 0 && params.angle_step_deg > 0, "range steps must be positive");
  require(0 < params.radius_min && params.radius_min < params.radius_max &&
              params.radius_max < half,
          "radius range must satisfy 0 < r1 < r2 < l/2");
  require(0 < params.angle_min_deg && params.angle_min_deg < params.angle_max_deg &&
              params.angle_max_deg < 90.0,
          "angle range must satisfy 0 < phi1 < phi2 < 90 degrees");

  EmbeddingLocationSet set;
  set.group = group;
  set.radii = detail::inclusive_range(params.radius_min, params.radius_max, params.radius_step);
  const double shift = group == Group::B ? std::numbers::pi / 2 : 0.0;
  for (double deg : detail::inclusive_range(params.angle_min_deg, params.angle_max_deg,
                                            params.angle_step_deg))
    set.angles.push_back(detail::deg2rad(deg) + shift);

  std::set<BinOffset> bins;
  for (double rho : set.radii) {
    for (double theta : set.angles) {
      const BinOffset b{static_cast<int>(std::lround(rho * std::cos(theta))),
                        static_cast<int>(std::lround(rho * std::sin(theta)))};
      bins.insert(b);
      bins.insert({-b.u, -b.v});
    }
  }
  set.bins.assign(bins.begin(), bins.end());
  return set;
}

struct SpectrumStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline SpectrumStats magnitude_stats(const Spectrum& spec) {
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& c : spec.coefficients) {
    const double m = std::abs(c);
    sum += m;
    sum_sq += m * m;
  }
  const double n = static_cast<double>(spec.coefficients.size());
  const double mean = sum / n;
  return {mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean))};
}

/// Sets |Y| at every bin to `magnitude`, keeping each bin's phase.
inline void set_magnitudes(Spectrum& spec, const std::vector<BinOffset>& bins, double magnitude) {
  for (const auto& b : bins) {
    Complex& c = spec.at(b.u, b.v);
    const double m = std::abs(c);
    c = m > 0.0 ? c * (magnitude / m) : Complex(magnitude, 0.0);
  }
}

struct BlockEmbedResult {
  RasterImage marked;
  double psnr = 0.0;
  double intensity = 0.0; ///< final K
  int iterations = 0;
  bool converged = false;
};

/// Iterative magnitude embedding under a PSNR band [T - 1, T]. The intensity
/// starts at mean + stddev of |Y| and moves by stddev / 15, toward stronger
/// marks while the PSNR is above the band and weaker below it. The step halves
/// whenever the direction flips.
inline BlockEmbedResult embed_block(const RasterImage& block, const EmbeddingLocationSet& set,
                                    const MarkParams& params) {
  require(block.channels == 1, "embed_block expects a luma block");
  require(block.width == block.height, "embed_block expects a square block");
  require(params.target_psnr > 0, "target PSNR must be positive");
  require(params.max_iterations > 0, "max_iterations must be positive");

  const Spectrum cover = fft2(block);
  const SpectrumStats stats = magnitude_stats(cover);
  const double hi = params.target_psnr, lo = params.target_psnr - 1.0;

  double k = stats.mean + stats.stddev;
  double step = stats.stddev / 15.0;
  int last_direction = 0;

  BlockEmbedResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= params.max_iterations; ++it) {
    Spectrum work = cover;
    set_magnitudes(work, set.bins, k);
    RasterImage marked = convert<std::uint8_t>(ifft2(work));
    const double ps = psnr(block, marked);

    const double gap = ps > hi ? ps - hi : (ps < lo ? lo - ps : 0.0);
    if (gap < best_gap) {
      best_gap = gap;
      best = {std::move(marked), ps, k, it, gap == 0.0};
    }
    if (gap == 0.0) break;
    best.iterations = it;

    const int direction = ps > hi ? 1 : -1;
    if (last_direction != 0 && direction != last_direction) step *= 0.5;
    last_direction = direction;
    k = std::max(0.0, k + direction * step);
  }
  return best;
}

struct MarkResult {
  RasterImage marked;
  double psnr = 0.0; ///< whole image
  int blocks = 0;
  int converged_blocks = 0;
  std::vector<double> block_psnr;
};

/// Marks every margin block of the luma channel. RGB inputs receive the
/// integer luma change on all three channels, which leaves Cb and Cr as they
/// were (up to clipping).
inline MarkResult mark_image(const RasterImage& img, const MarkParams& params = {}) {
  require(img.channels == 1 || img.channels == 3, "mark_image expects 1 or 3 channels");
  const PairedGroups groups = select_paired_blocks(img, params.block_side);
  const auto set_a = make_location_set(params, Group::A);
  const auto set_b = make_location_set(params, Group::B);
  const RasterImage luma = to_luma(img);

  MarkResult result;
  result.marked = img;
  auto process = [&](const BlockRect& r, const EmbeddingLocationSet& set) {
    const RasterImage block = crop(luma, r.x, r.y, r.side, r.side);
    const BlockEmbedResult e = embed_block(block, set, params);
    ++result.blocks;
    result.converged_blocks += e.converged ? 1 : 0;
    result.block_psnr.push_back(e.psnr);
    for (int y = 0; y < r.side; ++y) {
      for (int x = 0; x < r.side; ++x) {
        const int delta = int(e.marked.at(x, y)) - int(block.at(x, y));
        if (delta == 0) continue;
        for (int c = 0; c < img.channels; ++c) {
          auto& s = result.marked.at(r.x + x, r.y + y, c);
          s = to_u8(int(s) + delta);
        }
      }
    }
  };
  for (const auto& r : groups.group_a) process(r, set_a);
  for (const auto& r : groups.group_b) process(r, set_b);
  result.psnr = psnr(img, result.marked);
  return result;
}

} // namespace shotmark
