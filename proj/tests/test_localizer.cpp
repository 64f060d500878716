#include <gtest/gtest.h>

#include <random>

#include "shotmark/embedder.hpp"
#include "shotmark/localizer.hpp"
#include "shotmark/synth.hpp"

using namespace shotmark;

namespace {

DetectionSectors swapped(const DetectionSectors& s) { return {s.window_side, s.sector_b, s.sector_a}; }

Plane residual_of(const RasterImage& img) { return wiener_residual(to_luma(img)); }

class MarkedFixture : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    cover_ = new RasterImage(synthesize_natural(768, 512, 29));
    marked_ = new RasterImage(mark_image(*cover_, {}).marked);
  }
  static void TearDownTestSuite() {
    delete cover_;
    delete marked_;
  }
  static RasterImage* cover_;
  static RasterImage* marked_;
};
RasterImage* MarkedFixture::cover_ = nullptr;
RasterImage* MarkedFixture::marked_ = nullptr;

} // namespace

TEST(Multiscale, SizesAndIdentityAtOne) {
  RasterImage shot(1000, 800, 3, 90);
  shot.at(3, 4, 1) = 200;
  const auto levels = multiscale(shot, DetectParams{}.scales);
  ASSERT_EQ(levels.size(), 9u);
  EXPECT_EQ(levels.front().luma.width, 1000);
  EXPECT_EQ(levels.front().luma.height, 800);
  EXPECT_EQ(levels.back().luma.width, 200);
  EXPECT_EQ(levels.back().luma.height, 160);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    EXPECT_EQ(levels[i].luma.width, static_cast<int>(std::lround(1000 * levels[i].scale)));
    EXPECT_EQ(levels[i].luma.height, static_cast<int>(std::lround(800 * levels[i].scale)));
  }
  EXPECT_EQ(levels.front().luma, convert<float>(to_luma(shot)));
}

TEST(ScoreSectors, IdenticalSetsGiveZero) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0, 100);
  std::vector<double> a(60);
  for (auto& v : a) v = u(rng);
  const WindowScore s = score_sectors(a, a, 45, 4);
  EXPECT_EQ(s.d, 0);
  EXPECT_EQ(s.intensity, 0.0);
}

TEST(ScoreSectors, HandComputed) {
  // Pivot is the mean of all eight values (4.9375): three A values and one B
  // value reach it.
  const WindowScore s = score_sectors({9, 8, 7, 1}, {4, 3, 2, 5.5}, 45, 2);
  EXPECT_NEAR(s.pivot, (9 + 8 + 7 + 1 + 4 + 3 + 2 + 5.5) / 8.0, 1e-12);
  EXPECT_EQ(s.n1, 3);
  EXPECT_EQ(s.n2, 1);
  EXPECT_EQ(s.d, 2);
  EXPECT_DOUBLE_EQ(s.intensity, (9 + 8 + 7) * 2.0);
  // Below threshold the window scores zero but d is still reported.
  const WindowScore quiet = score_sectors({9, 8, 7, 1}, {4, 3, 2, 5.5}, 45, 3);
  EXPECT_EQ(quiet.d, 2);
  EXPECT_EQ(quiet.intensity, 0.0);
}

TEST(ScoreSectors, TopCountTruncates) {
  std::vector<double> a(100), b(100);
  for (int i = 0; i < 100; ++i) {
    a[i] = i;
    b[i] = i + 0.5;
  }
  const WindowScore s = score_sectors(a, b, 45, 0);
  EXPECT_EQ(s.n1 + s.n2, 45);
  // Fewer values than top_count: everything is used.
  EXPECT_NO_THROW(score_sectors({1, 2}, {3}, 45, 4));
}

TEST(BlindDetect, SignSymmetry) {
  const DetectParams params;
  const DetectionSectors sectors = make_detection_sectors(params);
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0, 12);
  for (int trial = 0; trial < 50; ++trial) {
    Plane win(128, 128);
    for (auto& v : win.data) v = static_cast<float>(n(rng));
    const WindowScore s = blind_detect_window(win, sectors, params.top_count, 0);
    const WindowScore t = blind_detect_window(win, swapped(sectors), params.top_count, 0);
    EXPECT_EQ(s.d, -t.d);
    EXPECT_DOUBLE_EQ(s.intensity, -t.intensity);
  }
}

TEST(BlindDetect, NoiseWindowsAreCentered) {
  const DetectParams params;
  const DetectionSectors sectors = make_detection_sectors(params);
  std::mt19937 rng(6);
  std::normal_distribution<double> n(0, 12);
  double mean_d = 0.0;
  int quiet = 0;
  const int trials = 400;
  for (int trial = 0; trial < trials; ++trial) {
    Plane win(128, 128);
    for (auto& v : win.data) v = static_cast<float>(n(rng));
    const WindowScore s = blind_detect_window(win, sectors, params.top_count, params.threshold);
    mean_d += s.d;
    quiet += s.intensity == 0.0;
  }
  mean_d /= trials;
  EXPECT_LT(std::abs(mean_d), 1.0);
  RecordProperty("quiet_fraction", std::to_string(double(quiet) / trials));
}

TEST(BlindDetect, DegenerateEqualSectors) {
  const DetectParams params;
  DetectionSectors sectors = make_detection_sectors(params);
  sectors.sector_b = sectors.sector_a;
  Plane win(128, 128);
  std::mt19937 rng(2);
  for (auto& v : win.data) v = static_cast<float>(rng() % 50);
  const WindowScore s = blind_detect_window(win, sectors);
  EXPECT_EQ(s.d, 0);
  EXPECT_EQ(s.intensity, 0.0);
}

TEST(BlindDetect, WindowSizeMismatchThrows) {
  const DetectionSectors sectors = make_detection_sectors({});
  EXPECT_THROW(blind_detect_window(Plane(64, 64), sectors), Error);
}

TEST_F(MarkedFixture, MarkedBlocksGiveExpectedSign) {
  const DetectParams params;
  const DetectionSectors sectors = make_detection_sectors(params);
  const Plane noise = residual_of(*marked_);
  int positive = 0, negative = 0;
  for (const auto& r : select_paired_blocks(*marked_, 128).group_a)
    positive += blind_detect_window(crop(noise, r.x, r.y, 128, 128), sectors).d > 0;
  for (const auto& r : select_paired_blocks(*marked_, 128).group_b)
    negative += blind_detect_window(crop(noise, r.x, r.y, 128, 128), sectors).d < 0;
  EXPECT_EQ(positive, 12);
  EXPECT_EQ(negative, 4);
}

TEST(ComputeIhm, GridDimensions) {
  const DetectParams params;
  const DetectionSectors sectors = make_detection_sectors(params);
  const IntensityHeatMap ihm = compute_ihm(Plane(256, 256), sectors, params);
  EXPECT_EQ(ihm.rows, 3);
  EXPECT_EQ(ihm.cols, 3);
  const IntensityHeatMap wide = compute_ihm(Plane(300, 200), sectors, params);
  EXPECT_EQ(wide.rows, (200 - 128) / 64 + 1);
  EXPECT_EQ(wide.cols, (300 - 128) / 64 + 1);
  EXPECT_TRUE(compute_ihm(Plane(100, 300), sectors, params).empty());
}

TEST_F(MarkedFixture, IhmCellsZeroBelowThreshold) {
  DetectParams params;
  params.threads = 1;
  const IntensityHeatMap ihm = compute_ihm(residual_of(*marked_), make_detection_sectors(params), params);
  for (std::size_t i = 0; i < ihm.values.size(); ++i)
    if (std::abs(ihm.d[i]) < params.threshold) EXPECT_EQ(ihm.values[i], 0.0);
    else EXPECT_EQ(ihm.values[i] > 0, ihm.d[i] > 0);
}

TEST_F(MarkedFixture, MarginBandAtScaleOne) {
  DetectParams params;
  const IntensityHeatMap ihm = compute_ihm(residual_of(*marked_), make_detection_sectors(params), params);
  // Windows aligned with the top and bottom blocks are positive, left and
  // right negative.
  for (int c = 0; c < ihm.cols; c += 2) {
    EXPECT_GT(ihm.at(0, c), 0.0) << c;
    EXPECT_GT(ihm.at(ihm.rows - 1, c), 0.0) << c;
  }
  for (int r = 2; r + 2 < ihm.rows; r += 2) {
    EXPECT_LT(ihm.at(r, 0), 0.0) << r;
    EXPECT_LT(ihm.at(r, ihm.cols - 1), 0.0) << r;
  }
}

TEST_F(MarkedFixture, QuietOutsideRegion) {
  // Marked image pasted into a larger textured canvas. Windows that do not
  // touch it score far below the windows on its margin blocks.
  RasterImage canvas = synthesize_background(1536, 1024, BackgroundKind::Texture, 3);
  paste(canvas, *marked_, 384, 256);
  DetectParams params;
  const IntensityHeatMap ihm = compute_ihm(residual_of(canvas), make_detection_sectors(params), params);
  int outside = 0, zero = 0, margin = 0;
  double outside_abs = 0.0, margin_abs = 0.0;
  for (int r = 0; r < ihm.rows; ++r)
    for (int c = 0; c < ihm.cols; ++c) {
      const int x0 = c * 64, y0 = r * 64;
      const bool disjoint = x0 + 128 <= 384 || x0 >= 384 + 768 || y0 + 128 <= 256 || y0 >= 256 + 512;
      const bool on_top = y0 == 256 && x0 >= 384 && x0 + 128 <= 384 + 768;
      if (on_top) {
        ++margin;
        margin_abs += std::abs(ihm.at(r, c));
      }
      if (!disjoint) continue;
      ++outside;
      zero += ihm.at(r, c) == 0.0;
      outside_abs += std::abs(ihm.at(r, c));
    }
  ASSERT_GT(outside, 0);
  ASSERT_GT(margin, 0);
  RecordProperty("zero_fraction_outside", std::to_string(double(zero) / outside));
  EXPECT_LT(outside_abs / outside, 0.01 * margin_abs / margin);
}

TEST(ScaleDecision, SingleBump) { EXPECT_EQ(scale_decision({0, 0, 5, 1, 0, 0, 0, 0, 0}), 2); }

TEST(ScaleDecision, FirstPeakWins) { EXPECT_EQ(scale_decision({1, 3, 2, 4, 1, 0, 0, 0, 0}), 1); }

TEST(ScaleDecision, MonotoneFallsBackToArgmax) {
  EXPECT_EQ(scale_decision({9, 8, 7, 6, 5, 4, 3, 2, 1}), 0);
  EXPECT_EQ(scale_decision({1, 2, 3, 4, 5, 6, 7, 8, 9}), 8);
}

TEST(ScaleDecision, PlateauIsNotAPeak) { EXPECT_EQ(scale_decision({1, 4, 4, 1, 0, 0, 0, 0, 0}), 1); }

TEST(ScaleDecision, SmallBumpsSkipped) {
  // The interior bump at index 6 is far below the endpoint maximum.
  EXPECT_EQ(scale_decision({10, 8, 6, 4, 2, 1, 2, 1, 0}), 0);
  EXPECT_EQ(scale_decision({10, 8, 6, 4, 2, 1, 2, 1, 0}, 0.0), 6);
  EXPECT_EQ(scale_decision({10, 8, 9, 4, 2, 1, 2, 1, 0}), 2);
}

TEST(ScaleDecision, AllZeroIsNoWatermark) {
  try {
    scale_decision(std::vector<double>(9, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoWatermarkFound);
  }
}

TEST_F(MarkedFixture, SweepShapeAndDeterminism) {
  DetectParams params;
  params.threads = 2;
  const ScaleSweep a = sweep_scales(*marked_, params);
  ASSERT_EQ(a.ihms.size(), 9u);
  ASSERT_EQ(a.sim.size(), 9u);
  for (double s : a.sim) EXPECT_GE(s, 0.0);
  // 768x512 at scale 0.2 is smaller than a window.
  EXPECT_TRUE(a.ihms.back().empty());
  EXPECT_EQ(a.sim.back(), 0.0);
  EXPECT_EQ(a.decision, 0);
  params.threads = 1;
  const ScaleSweep b = sweep_scales(*marked_, params);
  EXPECT_EQ(a.sim, b.sim);
  for (std::size_t i = 0; i < a.ihms.size(); ++i) EXPECT_EQ(a.ihms[i].values, b.ihms[i].values);
}
