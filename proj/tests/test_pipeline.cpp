#include <gtest/gtest.h>

#include "shotmark/eval.hpp"
#include "shotmark/pipeline.hpp"

using namespace shotmark;

class PipelineTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    cover_ = new RasterImage(synthesize_natural(1536, 1024, 41));
    marked_ = new RasterImage(prepare_marked(*cover_, payload_from_hex("a5c3"), {}, 34.5));
  }
  static void TearDownTestSuite() {
    delete cover_;
    delete marked_;
  }
  static PipelineParams extracting() {
    PipelineParams p;
    p.extract = true;
    p.payload.nominal_width = 1536;
    p.payload.nominal_height = 1024;
    return p;
  }
  static RasterImage* cover_;
  static RasterImage* marked_;
};
RasterImage* PipelineTest::cover_ = nullptr;
RasterImage* PipelineTest::marked_ = nullptr;

TEST_F(PipelineTest, FrontalShotFound) {
  ShotConfig c = phone_capture();
  c.area_proportion = 0.4;
  c.content_scale = 1.0;
  const Shot shot = simulate_shot(*marked_, c);
  const PipelineResult r = run_pipeline(shot.image, extracting());
  ASSERT_TRUE(r.found()) << r.message;
  EXPECT_GE(iou(r.best->quad, shot.truth), 0.95);
  EXPECT_NEAR(r.decided_scale, 1.0, 1e-9);
  ASSERT_TRUE(r.extraction);
  EXPECT_GE(nc(payload_from_hex("a5c3"), r.extraction->payload), 0.9);
  EXPECT_EQ(r.sim.size(), r.sweep.ihms.size());
}

TEST_F(PipelineTest, YawedShotFound) {
  ShotConfig c = phone_capture();
  c.area_proportion = 0.4;
  c.angle_offset_deg = 20.0;
  c.content_scale = 1.0;
  const Shot shot = simulate_shot(*marked_, c);
  const PipelineResult r = run_pipeline(shot.image, extracting());
  ASSERT_TRUE(r.found()) << r.message;
  EXPECT_GE(iou(r.best->quad, shot.truth), 0.9);
}

TEST_F(PipelineTest, EnlargedContentHitsMatchingScale) {
  // Drawn 1.25x larger, the margin blocks return to nominal size at 0.8.
  ShotConfig c;
  c.area_proportion = 0.4;
  c.content_scale = 1.25;
  const Shot shot = simulate_shot(*marked_, c);
  const PipelineResult r = run_pipeline(shot.image);
  ASSERT_TRUE(r.found()) << r.message;
  EXPECT_NEAR(r.decided_scale, 0.8, 0.1 + 1e-9);
  EXPECT_GE(iou(r.best->quad, shot.truth), 0.9);
}

TEST_F(PipelineTest, UnmarkedReportsNoWatermark) {
  for (std::uint64_t seed : {51u, 52u, 53u}) {
    const RasterImage plain = synthesize_natural(1024, 768, seed);
    const PipelineResult r = run_pipeline(plain);
    EXPECT_FALSE(r.found()) << "seed " << seed;
    EXPECT_EQ(r.status, Status::NoWatermarkFound) << r.message;
  }
  ShotConfig c;
  c.area_proportion = 0.4;
  c.content_scale = 1.0;
  EXPECT_FALSE(run_pipeline(simulate_shot(*cover_, c).image).found());
}

TEST_F(PipelineTest, DominanceGateRejectsWeakMaps) {
  ShotConfig c;
  c.area_proportion = 0.4;
  c.content_scale = 1.0;
  const Shot shot = simulate_shot(*marked_, c);
  PipelineParams strict;
  strict.min_dominance = 1.01;
  const PipelineResult r = run_pipeline(shot.image, strict);
  EXPECT_EQ(r.status, Status::NoWatermarkFound);
  EXPECT_GE(r.decision, 0);
}

TEST(Pipeline, FlatImageHasEmptyMaps) {
  const PipelineResult r = run_pipeline(RasterImage(640, 480, 3, 90));
  EXPECT_EQ(r.status, Status::NoWatermarkFound);
  EXPECT_EQ(r.decision, -1);
  EXPECT_STREQ(to_string(r.status), "no watermark found");
}
