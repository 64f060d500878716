#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <tuple>
#include <type_traits>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>

#include "shotmark/error.hpp"
#include "shotmark/geometry.hpp"

namespace shotmark {

/// Row-major interleaved raster. Sample (x, y, c) lives at
/// (y * width + x) * channels + c.
template <class T>
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    require(w >= 0 && h >= 0, "raster dimensions must be non-negative");
    require(c == 1 || c == 3, "raster must have 1 or 3 channels");
  }

  bool empty() const { return width == 0 || height == 0; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using RasterImage = Raster<std::uint8_t>;
/// Single-channel float workspace.
using Plane = Raster<float>;

template <class T>
inline std::uint8_t to_u8(T v) {
  const double r = std::round(static_cast<double>(v));
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

template <class Out, class In>
Raster<Out> convert(const Raster<In>& in) {
  Raster<Out> out(in.width, in.height, in.channels);
  if constexpr (std::is_same_v<Out, std::uint8_t> && !std::is_same_v<In, std::uint8_t>) {
    std::transform(in.data.begin(), in.data.end(), out.data.begin(),
                   [](In v) { return to_u8(v); });
  } else {
    std::transform(in.data.begin(), in.data.end(), out.data.begin(),
                   [](In v) { return static_cast<Out>(v); });
  }
  return out;
}

/// Integer BT.601 luma. Single-channel input is returned unchanged.
inline RasterImage to_luma(const RasterImage& img) {
  require(img.channels == 1 || img.channels == 3, "to_luma expects 1 or 3 channels");
  if (img.channels == 1) return img;
  RasterImage out(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const int r = img.data[3 * i], g = img.data[3 * i + 1], b = img.data[3 * i + 2];
    out.data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

/// Full-range BT.601 YCbCr, float planes. Used to modify luma while leaving
/// chroma untouched.
struct YCbCr {
  Plane y, cb, cr;
};

inline YCbCr to_ycbcr(const RasterImage& rgb) {
  require(rgb.channels == 3, "to_ycbcr expects an RGB raster");
  YCbCr out{Plane(rgb.width, rgb.height), Plane(rgb.width, rgb.height),
            Plane(rgb.width, rgb.height)};
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    const float r = rgb.data[3 * i], g = rgb.data[3 * i + 1], b = rgb.data[3 * i + 2];
    out.y.data[i] = 0.299f * r + 0.587f * g + 0.114f * b;
    out.cb.data[i] = 128.0f - 0.168736f * r - 0.331264f * g + 0.5f * b;
    out.cr.data[i] = 128.0f + 0.5f * r - 0.418688f * g - 0.081312f * b;
  }
  return out;
}

inline RasterImage from_ycbcr(const YCbCr& in) {
  RasterImage out(in.y.width, in.y.height, 3);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const double y = in.y.data[i], cb = in.cb.data[i] - 128.0, cr = in.cr.data[i] - 128.0;
    out.data[3 * i] = to_u8(y + 1.402 * cr);
    out.data[3 * i + 1] = to_u8(y - 0.344136 * cb - 0.714136 * cr);
    out.data[3 * i + 2] = to_u8(y + 1.772 * cb);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectra. Forward transform is unnormalized (DC = sum of samples); the
// inverse carries the 1/(width*height) factor.

using Complex = std::complex<double>;

struct Spectrum {
  int width = 0;
  int height = 0;
  std::vector<Complex> coefficients;

  Spectrum() = default;
  Spectrum(int w, int h) : width(w), height(h), coefficients(static_cast<std::size_t>(w) * h) {}

  /// Bin (u, v) with u the horizontal and v the vertical frequency; negative
  /// indices wrap.
  Complex& at(int u, int v) { return coefficients[index(u, v)]; }
  const Complex& at(int u, int v) const { return coefficients[index(u, v)]; }
  double magnitude(int u, int v) const { return std::abs(at(u, v)); }

  std::vector<double> magnitudes() const {
    std::vector<double> out(coefficients.size());
    std::transform(coefficients.begin(), coefficients.end(), out.begin(),
                   [](const Complex& c) { return std::abs(c); });
    return out;
  }

  std::size_t index(int u, int v) const {
    const int uu = ((u % width) + width) % width;
    const int vv = ((v % height) + height) % height;
    return static_cast<std::size_t>(vv) * width + uu;
  }
};

namespace detail {

inline std::mutex& planner_mutex();

class FftPlans {
public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(int w, int h, int sign) {
    std::lock_guard lock(planner_mutex());
    auto key = std::tuple{w, h, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<Complex> scratch(static_cast<std::size_t>(w) * h);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~FftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

private:
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void fft_in_place(std::vector<Complex>& data, int w, int h, int sign) {
  fftw_plan plan = FftPlans::instance().get(w, h, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

} // namespace detail

/// Reusable real-input forward transform of an n x n block with its own
/// buffers. Only the half spectrum u in [0, n/2] is computed; the other half
/// follows from conjugate symmetry. Not shareable across threads; give each
/// worker its own instance.
class RealFft2 {
public:
  explicit RealFft2(int n) : n_(n), half_(n / 2 + 1) {
    require(n > 0, "RealFft2 size must be positive");
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n * n));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * half_));
    std::lock_guard lock(detail::planner_mutex());
    plan_ = fftw_plan_dft_r2c_2d(n, n, in_, out_, FFTW_ESTIMATE);
  }
  RealFft2(const RealFft2&) = delete;
  RealFft2& operator=(const RealFft2&) = delete;
  ~RealFft2() {
    {
      std::lock_guard lock(detail::planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }

  int size() const { return n_; }
  /// Row-major n x n input buffer.
  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }

  double magnitude(int u, int v) const {
    if (u < 0) {
      u = -u;
      v = -v;
    }
    u %= n_;
    v = ((v % n_) + n_) % n_;
    if (u >= half_) {
      u = n_ - u;
      v = (n_ - v) % n_;
    }
    const fftw_complex& c = out_[static_cast<std::size_t>(v) * half_ + u];
    return std::hypot(c[0], c[1]);
  }

private:
  int n_;
  int half_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

/// Forward DFT of a square single-channel block.
template <class T>
Spectrum fft2(const Raster<T>& block) {
  require(block.channels == 1, "fft2 expects a single-channel block");
  require(block.width == block.height && block.width > 0, "fft2 expects a square block");
  Spectrum spec(block.width, block.height);
  std::transform(block.data.begin(), block.data.end(), spec.coefficients.begin(),
                 [](T v) { return Complex(static_cast<double>(v), 0.0); });
  detail::fft_in_place(spec.coefficients, spec.width, spec.height, FFTW_FORWARD);
  return spec;
}

/// Inverse DFT; returns the real part, unquantized.
inline Raster<double> ifft2(const Spectrum& spec) {
  require(spec.width == spec.height && spec.width > 0, "ifft2 expects a square spectrum");
  std::vector<Complex> data = spec.coefficients;
  detail::fft_in_place(data, spec.width, spec.height, FFTW_BACKWARD);
  Raster<double> out(spec.width, spec.height, 1);
  const double scale = 1.0 / (static_cast<double>(spec.width) * spec.height);
  for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = data[i].real() * scale;
  return out;
}

// ---------------------------------------------------------------------------

template <class T>
double mse(const Raster<T>& a, const Raster<T>& b) {
  require(a.width == b.width && a.height == b.height && a.channels == b.channels,
          "mse: dimension mismatch");
  require(!a.data.empty(), "mse: empty raster");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

/// 10 log10(255^2 / MSE); +infinity for identical rasters.
template <class T>
double psnr(const Raster<T>& cover, const Raster<T>& marked) {
  const double m = mse(cover, marked);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

template <class T>
Raster<T> crop(const Raster<T>& img, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && x0 + w <= img.width && y0 + h <= img.height,
          "crop rectangle outside raster");
  Raster<T> out(w, h, img.channels);
  const std::size_t row = static_cast<std::size_t>(w) * img.channels;
  for (int y = 0; y < h; ++y) {
    const T* src = &img.at(x0, y0 + y);
    std::copy(src, src + row, &out.at(0, y));
  }
  return out;
}

template <class T>
void paste(Raster<T>& dst, const Raster<T>& src, int x0, int y0) {
  require(src.channels == dst.channels, "paste: channel mismatch");
  require(x0 >= 0 && y0 >= 0 && x0 + src.width <= dst.width && y0 + src.height <= dst.height,
          "paste rectangle outside raster");
  const std::size_t row = static_cast<std::size_t>(src.width) * src.channels;
  for (int y = 0; y < src.height; ++y) {
    const T* s = &src.at(0, y);
    std::copy(s, s + row, &dst.at(x0, y0 + y));
  }
}

namespace detail {

/// Mean over a (2r+1)^2 neighborhood clipped to the raster, row-major passes
/// with running sums.
inline void box_mean(const float* v, int w, int h, int r, std::vector<float>& out) {
  std::vector<double> rows(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const float* src = v + static_cast<std::size_t>(y) * w;
    double* dst = rows.data() + static_cast<std::size_t>(y) * w;
    double acc = 0.0;
    for (int x = 0; x < std::min(r, w); ++x) acc += src[x];
    for (int x = 0; x < w; ++x) {
      if (x + r < w) acc += src[x + r];
      if (x - r - 1 >= 0) acc -= src[x - r - 1];
      dst[x] = acc;
    }
  }
  std::vector<double> col(w, 0.0);
  std::vector<double> count_x(w);
  for (int x = 0; x < w; ++x) count_x[x] = std::min(w - 1, x + r) - std::max(0, x - r) + 1;
  for (int y = 0; y < std::min(r, h); ++y)
    for (int x = 0; x < w; ++x) col[x] += rows[static_cast<std::size_t>(y) * w + x];
  out.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    if (y + r < h) {
      const double* add = rows.data() + static_cast<std::size_t>(y + r) * w;
      for (int x = 0; x < w; ++x) col[x] += add[x];
    }
    if (y - r - 1 >= 0) {
      const double* sub = rows.data() + static_cast<std::size_t>(y - r - 1) * w;
      for (int x = 0; x < w; ++x) col[x] -= sub[x];
    }
    const double count_y = std::min(h - 1, y + r) - std::max(0, y - r) + 1;
    float* dst = out.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) dst[x] = static_cast<float>(col[x] / (count_x[x] * count_y));
  }
}

} // namespace detail

/// img - wiener(img) with the classical adaptive local Wiener estimator:
/// local mean and variance over the window, noise power taken as the mean of
/// all local variances.
template <class T>
Plane wiener_residual(const Raster<T>& img, int window = 3) {
  require(img.channels == 1, "wiener_residual expects a single-channel raster");
  require(window >= 3 && window % 2 == 1, "wiener window must be odd and >= 3");
  if (window > img.width || window > img.height)
    fail(ErrorKind::InvalidArgument, "wiener window larger than image");

  const int w = img.width, h = img.height, r = window / 2;
  const std::size_t n = img.data.size();
  std::vector<float> v(img.data.begin(), img.data.end());
  std::vector<float> sq(n);
  std::transform(v.begin(), v.end(), sq.begin(), [](float s) { return s * s; });
  std::vector<float> mean, mean_sq;
  detail::box_mean(v.data(), w, h, r, mean);
  detail::box_mean(sq.data(), w, h, r, mean_sq);

  double noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float var = std::max(0.0f, mean_sq[i] - mean[i] * mean[i]);
    mean_sq[i] = var;
    noise += var;
  }
  noise /= static_cast<double>(n);

  Plane out(w, h, 1);
  const float nz = static_cast<float>(noise);
  for (std::size_t i = 0; i < n; ++i) {
    const float var = mean_sq[i];
    const float denom = std::max(var, nz);
    const float gain = denom > 0.0f ? std::max(0.0f, var - nz) / denom : 0.0f;
    out.data[i] = (v[i] - mean[i]) * (1.0f - gain);
  }
  return out;
}

/// Bilinear sample with pixel centers at integer coordinates. Returns false
/// when (x, y) falls outside the raster.
template <class T>
bool sample_bilinear(const Raster<T>& img, double x, double y, double* out) {
  if (x < -0.5 || y < -0.5 || x > img.width - 0.5 || y > img.height - 0.5) return false;
  const double cx = std::clamp(x, 0.0, img.width - 1.0);
  const double cy = std::clamp(y, 0.0, img.height - 1.0);
  const int x0 = std::min(static_cast<int>(cx), img.width - 1);
  const int y0 = std::min(static_cast<int>(cy), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = cx - x0, fy = cy - y0;
  for (int c = 0; c < img.channels; ++c) {
    const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    out[c] = (1 - fy) * top + fy * bottom;
  }
  return true;
}

template <class T>
T from_double(double v) {
  if constexpr (std::is_same_v<T, std::uint8_t>) return to_u8(v);
  else return static_cast<T>(v);
}

template <class T>
Raster<T> resize_bilinear(const Raster<T>& img, int out_w, int out_h) {
  require(out_w > 0 && out_h > 0, "resize target must be non-empty");
  require(!img.empty(), "resize source is empty");
  Raster<T> out(out_w, out_h, img.channels);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  double px[3];
  for (int y = 0; y < out_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < out_w; ++x) {
      sample_bilinear(img, std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0),
                      std::clamp(src_y, 0.0, img.height - 1.0), px);
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = from_double<T>(px[c]);
    }
  }
  return out;
}

/// Output pixel p takes the source value at h^-1(p); h maps source to output
/// coordinates. Pixels with no source are 0.
template <class T>
Raster<T> warp_perspective(const Raster<T>& img, const Homography& h, int out_w, int out_h) {
  require(out_w > 0 && out_h > 0, "warp target must be non-empty");
  if (!h.invertible()) fail(ErrorKind::Degenerate, "warp_perspective: degenerate homography");
  const Homography inv = h.inverse();
  Raster<T> out(out_w, out_h, img.channels);
  double px[3];
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Point src = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      if (!sample_bilinear(img, src.x, src.y, px)) continue;
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = from_double<T>(px[c]);
    }
  }
  return out;
}

} // namespace shotmark
