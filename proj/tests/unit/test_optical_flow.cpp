#include "cinepred/error.hpp"
#include "cinepred/metrics.hpp"
#include "cinepred/optical_flow.hpp"
#include "cinepred/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace cinepred;
using cinepred::support::interior_endpoint_error;
using cinepred::support::smooth_image;

namespace {

SyntheticGroundTruth translation_sequence(double amplitude, Eigen::Index frames) {
  SyntheticSpec spec;
  spec.height = 64;
  spec.width = 64;
  spec.frame_count = frames;
  spec.sampling_hz = 4.0;
  spec.seed = 11;
  SyntheticMode mode;
  mode.shape = ModeShape::TranslateY;
  mode.amplitude_px = amplitude;
  mode.frequency_hz = 0.25;
  spec.modes = {mode};
  return generate_synthetic_sequence(spec);
}

}  // namespace

TEST(PyramidTest, SingleLayerIsTheInput) {
  const Image img = smooth_image(20, 30);
  const auto pyr = gaussian_pyramid(img, 1, 0.5);
  ASSERT_EQ(pyr.size(), 1u);
  EXPECT_TRUE((pyr[0] == img).all());
}

TEST(PyramidTest, LevelSizesUseCeilingHalving) {
  const auto pyr = gaussian_pyramid(Image::Constant(270, 270, 1.0), 3, 0.5);
  ASSERT_EQ(pyr.size(), 3u);
  EXPECT_EQ(pyr[0].rows(), 270);
  EXPECT_EQ(pyr[1].rows(), 135);
  EXPECT_EQ(pyr[2].rows(), 68);
  EXPECT_EQ(pyr[2].cols(), 68);
}

TEST(PyramidTest, ConstantImageStaysConstant) {
  const auto pyr = gaussian_pyramid(Image::Constant(40, 40, 77.0), 3, 1.0);
  for (const auto& level : pyr) {
    EXPECT_NEAR(level.minCoeff(), 77.0, 1e-12);
    EXPECT_NEAR(level.maxCoeff(), 77.0, 1e-12);
  }
}

TEST(PyramidTest, TooSmallCoarsestLevelThrows) {
  EXPECT_THROW(gaussian_pyramid(Image::Zero(28, 28), 3, 0.5), InvalidArgument);
  EXPECT_NO_THROW(gaussian_pyramid(Image::Zero(29, 29), 3, 0.5));
}

TEST(FlowParamsTest, ValidationRejectsBadValues) {
  FlowParams p;
  EXPECT_NO_THROW(p.validate());
  p.sigma_init = 0.0;
  EXPECT_NO_THROW(p.validate());
  p.sigma_init = -0.1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = FlowParams{};
  p.sigma_lk = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = FlowParams{};
  p.n_iter = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = FlowParams{};
  p.n_layers = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(LucasKanadeTest, IdenticalImagesGiveZeroField) {
  const Image img = smooth_image(48, 48);
  for (int layers : {1, 2, 3}) {
    FlowParams p;
    p.n_layers = layers;
    p.n_iter = 2;
    const auto f = lucas_kanade_dense(img, img, p);
    EXPECT_LT(f.ux.abs().maxCoeff(), 1e-6);
    EXPECT_LT(f.uy.abs().maxCoeff(), 1e-6);
  }
}

TEST(LucasKanadeTest, FlatImagesGiveZeroField) {
  const Image flat = Image::Constant(32, 32, 100.0);
  const auto f = lucas_kanade_dense(flat, flat, FlowParams{});
  EXPECT_EQ(f.ux.abs().maxCoeff(), 0.0);
  EXPECT_EQ(f.uy.abs().maxCoeff(), 0.0);
}

TEST(LucasKanadeTest, RecoversHorizontalShiftOfThree) {
  const Image ref = smooth_image(64, 64);
  const Image target = support::shifted(ref, 3, 0);
  FlowParams p;
  p.n_layers = 2;
  p.n_iter = 1;
  const auto f = lucas_kanade_dense(ref, target, p);
  EXPECT_LT(interior_endpoint_error(f, 3.0, 0.0, 12), 0.1);
}

TEST(LucasKanadeTest, RecoversIntegerShiftsWithinPyramidReach) {
  const Image ref = smooth_image(80, 80);
  FlowParams p;
  p.n_layers = 2;
  p.n_iter = 3;
  // |s| <= 2^n_layers * 2 = 8 px; shifts of up to 4 px along each axis.
  for (int dx : {-4, -1, 2, 4})
    for (int dy : {-3, 0, 4}) {
      const Image target = support::shifted(ref, dx, dy);
      const auto f = lucas_kanade_dense(ref, target, p);
      EXPECT_LT(interior_endpoint_error(f, dx, dy, 16), 0.15) << dx << "," << dy;
    }
}

TEST(LucasKanadeTest, RecoversPeakDeformationOfTwoModeSequence) {
  SyntheticSpec spec = SyntheticSpec::default_two_mode(60);
  const auto gt = generate_synthetic_sequence(spec);
  Eigen::Index peak = 1;
  double best = 0.0;
  for (Eigen::Index k = 1; k < 60; ++k) {
    const double m = gt.true_dvfs[k].uy.abs().maxCoeff() + gt.true_dvfs[k].ux.abs().maxCoeff();
    if (m > best) {
      best = m;
      peak = k;
    }
  }
  FlowParams p;
  p.sigma_lk = 3.0;
  p.n_layers = 2;
  p.n_iter = 3;
  const auto est = lucas_kanade_dense(gt.sequence.frames[0], gt.sequence.frames[peak], p);
  const auto& truth = gt.true_dvfs[peak];
  double sum = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index r = 10; r < 86; ++r)
    for (Eigen::Index c = 10; c < 86; ++c) {
      sum += std::hypot(est.ux(r, c) - truth.ux(r, c), est.uy(r, c) - truth.uy(r, c));
      ++n;
    }
  EXPECT_LT(sum / static_cast<double>(n), 0.3);
}

TEST(LucasKanadeTest, IsBitDeterministic) {
  const Image ref = smooth_image(40, 40);
  const Image target = support::shifted(ref, 2, -1);
  FlowParams p;
  p.n_iter = 2;
  const auto a = lucas_kanade_dense(ref, target, p);
  const auto b = lucas_kanade_dense(ref, target, p);
  EXPECT_TRUE((a.ux == b.ux).all());
  EXPECT_TRUE((a.uy == b.uy).all());
}

TEST(RegisterSequenceTest, StaticSequenceGivesZeroFields) {
  ImageSequence seq;
  for (int k = 0; k < 4; ++k) seq.frames.push_back(smooth_image(32, 32));
  const auto series = register_sequence(seq, FlowParams{});
  ASSERT_EQ(series.fields.size(), 4u);
  for (const auto& f : series.fields) {
    EXPECT_LT(f.ux.abs().maxCoeff(), 1e-6);
    EXPECT_LT(f.uy.abs().maxCoeff(), 1e-6);
  }
}

TEST(RegisterSequenceTest, TwoFramesGiveTwoFieldsFirstZero) {
  ImageSequence seq;
  seq.frames = {smooth_image(32, 32), smooth_image(32, 32, 1.0, 0.0)};
  const auto series = register_sequence(seq, FlowParams{});
  ASSERT_EQ(series.fields.size(), 2u);
  EXPECT_EQ(series.fields[0].ux.abs().maxCoeff(), 0.0);
  EXPECT_EQ(series.fields[0].uy.abs().maxCoeff(), 0.0);
  EXPECT_GT(series.fields[1].ux.abs().maxCoeff(), 0.5);
}

TEST(FlowGridTest, GridOrderIsNested) {
  const auto grid = make_flow_grid({0.1, 0.5}, {0.5}, {1.0, 2.0}, {1}, {1, 2});
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_EQ(grid[0].sigma_init, 0.1);
  EXPECT_EQ(grid[0].sigma_lk, 1.0);
  EXPECT_EQ(grid[0].n_iter, 1);
  EXPECT_EQ(grid[1].n_iter, 2);
  EXPECT_EQ(grid[2].sigma_lk, 2.0);
  EXPECT_EQ(grid[4].sigma_init, 0.5);
}

TEST(FlowGridTest, EmptyGridThrows) {
  const auto gt = translation_sequence(1.0, 6);
  EXPECT_THROW(optimize_flow_params(gt.sequence, {}, 4), InvalidArgument);
}

TEST(FlowGridTest, SingleCombinationIsReturnedWithItsError) {
  const auto gt = translation_sequence(1.5, 8);
  FlowParams p;
  p.sigma_lk = 2.0;
  const auto result = optimize_flow_params(gt.sequence, {p}, 6);
  EXPECT_EQ(result.best, p);
  ASSERT_EQ(result.entries.size(), 1u);
  const auto fields = register_prefix(gt.sequence, p, 6);
  EXPECT_DOUBLE_EQ(result.best_e_gt, ground_truth_registration_error(fields, gt.sequence, 6));
  EXPECT_DOUBLE_EQ(result.entries[0].e_gt, result.best_e_gt);
}

TEST(FlowGridTest, LargeTranslationSelectsThreeLayers) {
  const auto gt = translation_sequence(6.0, 10);
  FlowParams one;
  one.n_layers = 1;
  one.n_iter = 1;
  FlowParams three = one;
  three.n_layers = 3;
  const auto result = optimize_flow_params(gt.sequence, {one, three}, 9);
  EXPECT_EQ(result.best.n_layers, 3);
  EXPECT_GT(result.entries[0].e_gt, result.entries[1].e_gt);
}

TEST(FlowGridTest, AnalyticFieldBoundsEveryGridPoint) {
  const auto gt = generate_synthetic_sequence(SyntheticSpec::default_two_mode(12));
  const double exact = ground_truth_registration_error(gt.true_dvfs, gt.sequence, 12);
  const auto grid = make_flow_grid({0.1}, {0.5}, {2.0, 3.0}, {1, 2}, {1});
  const auto result = optimize_flow_params(gt.sequence, grid, 12);
  for (const auto& e : result.entries) EXPECT_LE(exact, e.e_gt + 1.0);
  double minimum = result.entries.front().e_gt;
  for (const auto& e : result.entries) minimum = std::min(minimum, e.e_gt);
  EXPECT_EQ(result.best_e_gt, minimum);
}

TEST(FlowGridTest, RegisteredSeriesMatchesGridMinimum) {
  const auto gt = generate_synthetic_sequence(SyntheticSpec::default_two_mode(10));
  const auto grid = make_flow_grid({0.1}, {0.5}, {2.0, 3.0}, {2}, {1});
  const auto result = optimize_flow_params(gt.sequence, grid, 10);
  const auto series = register_sequence(gt.sequence, result.best);
  EXPECT_DOUBLE_EQ(ground_truth_registration_error(series.fields, gt.sequence, 10),
                   result.best_e_gt);
}
