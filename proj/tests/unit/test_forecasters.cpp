#include "cinepred/error.hpp"
#include "cinepred/forecasters.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cinepred;

namespace {

// Entry-wise equality that treats NaN as equal to NaN.
bool same_entries(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return ((a.array() == b.array()) || (a.array().isNaN() && b.array().isNaN())).all();
}

Eigen::MatrixXd two_tone_series(Eigen::Index m, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  Eigen::MatrixXd w(m, 2);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double t = static_cast<double>(k) / 3.2;
    w(k, 0) = 40.0 * std::sin(2.0 * 3.14159265358979 * 0.4 * t) + n(rng);
    w(k, 1) = 15.0 * std::sin(2.0 * 3.14159265358979 * 0.55 * t + 0.3) + n(rng);
  }
  return w;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd inv = svd.singularValues();
  const double tol = 1e-12 * inv.maxCoeff();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] > tol ? 1.0 / inv[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

TEST(MethodNameTest, RoundTripsAndRejectsUnknown) {
  for (Method m : {Method::Rtrl, Method::Uoro, Method::Snap1, Method::Dni, Method::Lms,
                   Method::LinReg, Method::FrozenRnn})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("lstm"), InvalidArgument);
  EXPECT_TRUE(is_recurrent(Method::Dni));
  EXPECT_FALSE(is_recurrent(Method::Lms));
  EXPECT_FALSE(is_stochastic(Method::LinReg));
}

TEST(SupervisedPairsTest, ScalarSeriesExample) {
  Eigen::MatrixXd w(4, 1);
  w << 1, 2, 3, 4;
  const auto pairs = make_supervised_pairs(w, 1, 1);
  ASSERT_EQ(pairs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(pairs[i].input, Eigen::Vector2d(1.0, static_cast<double>(i + 1)));
    EXPECT_EQ(pairs[i].target[0], static_cast<double>(i + 2));
    EXPECT_EQ(pairs[i].target_index, static_cast<Eigen::Index>(i + 2));
  }
}

TEST(SupervisedPairsTest, LengthsAndStackingOrder) {
  Eigen::MatrixXd w(10, 3);
  for (Eigen::Index k = 0; k < 10; ++k)
    for (Eigen::Index j = 0; j < 3; ++j) w(k, j) = 10.0 * (k + 1) + (j + 1);
  const auto pairs = make_supervised_pairs(w, 2, 3);
  ASSERT_EQ(pairs.size(), 10u - 2u - 3u + 1u);
  const auto& p = pairs.front();
  ASSERT_EQ(p.input.size(), 7);
  ASSERT_EQ(p.target.size(), 3);
  Eigen::VectorXd expected(7);
  expected << 1, 11, 12, 13, 21, 22, 23;
  EXPECT_EQ(p.input, expected);
  EXPECT_EQ(p.target, Eigen::Vector3d(51, 52, 53));
  EXPECT_EQ(p.target_index, 5);
}

TEST(SupervisedPairsTest, InvalidRangesThrow) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Ones(4, 1);
  EXPECT_THROW(make_supervised_pairs(w, 3, 2), InvalidArgument);
  EXPECT_THROW(make_supervised_pairs(w, 0, 1), InvalidArgument);
  EXPECT_THROW(make_supervised_pairs(w, 1, 0), InvalidArgument);
  EXPECT_THROW(make_supervised_pairs(w, 1, 1, IndexRange{2, 4}), InvalidArgument);
  EXPECT_NO_THROW(make_supervised_pairs(w, 1, 1, IndexRange{2, 3}));
}

TEST(NormalizationTest, TrainingInputsBecomeStandardized) {
  const Eigen::MatrixXd w = two_tone_series(60, 1.0, 1);
  const auto pairs = make_supervised_pairs(w, 3, 2);
  const auto stats = NormalizationStats::from_pairs(pairs);
  const auto norm = normalize(pairs, stats);
  const Eigen::Index d = norm.front().input.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& p : norm) mean += p.input;
  mean /= static_cast<double>(norm.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& p : norm) var += (p.input - mean).array().square().matrix();
  var /= static_cast<double>(norm.size());
  EXPECT_NEAR(norm.front().input[0], 1.0, 0.0);  // bias passes through
  for (Eigen::Index i = 1; i < d; ++i) {
    EXPECT_NEAR(mean[i], 0.0, 1e-12);
    EXPECT_NEAR(var[i], 1.0, 1e-12);
  }
  EXPECT_EQ(stats.mean[0], 0.0);
  EXPECT_EQ(stats.stddev[0], 1.0);
  EXPECT_TRUE((stats.stddev.array() > 0.0).all());
}

TEST(NormalizationTest, ConstantCoordinateIsUnchanged) {
  Eigen::MatrixXd w(8, 2);
  for (Eigen::Index k = 0; k < 8; ++k) {
    w(k, 0) = 5.0;
    w(k, 1) = static_cast<double>(k * k);
  }
  const auto pairs = make_supervised_pairs(w, 1, 1);
  const auto stats = NormalizationStats::from_pairs(pairs);
  EXPECT_EQ(stats.mean[1], 0.0);
  EXPECT_EQ(stats.stddev[1], 1.0);
  EXPECT_EQ(normalize(pairs, stats).front().input[1], 5.0);
}

TEST(NormalizationTest, OutputScalingRoundTrips) {
  const Eigen::MatrixXd w = two_tone_series(40, 0.5, 2);
  const auto pairs = make_supervised_pairs(w, 2, 1);
  for (OutputScaling mode : {OutputScaling::Affine, OutputScaling::Literal}) {
    const auto stats = NormalizationStats::from_pairs(pairs, mode);
    for (const auto& p : pairs) {
      const Eigen::VectorXd back = stats.denormalize_output(stats.normalize_target(p.target));
      EXPECT_LT((back - p.target).cwiseAbs().maxCoeff(), 1e-10);
    }
    const auto round = denormalize(normalize(pairs, stats), stats);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      EXPECT_LT((round[i].input - pairs[i].input).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((round[i].target - pairs[i].target).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(NormalizationTest, OutputScalingFormulas) {
  const Eigen::MatrixXd w = two_tone_series(40, 0.5, 2);
  const auto pairs = make_supervised_pairs(w, 2, 1);
  const Eigen::Vector2d y(0.5, -1.0);

  const auto affine = NormalizationStats::from_pairs(pairs);
  EXPECT_EQ(affine.scaling, OutputScaling::Affine);
  Eigen::VectorXd out = affine.denormalize_output(y);
  EXPECT_NEAR(out[0], affine.stddev[1] * 0.5 + affine.mean[1], 1e-12);
  EXPECT_NEAR(out[1], affine.stddev[2] * -1.0 + affine.mean[2], 1e-12);
  // A target is normalized exactly as the same weights are at the first input step.
  const auto& later = pairs[5];
  const Eigen::VectorXd as_input = affine.normalize_input(pairs[7].input);
  EXPECT_LT((affine.normalize_target(later.target) - as_input.segment(1, 2)).cwiseAbs().maxCoeff(),
            1e-12);

  const auto literal = NormalizationStats::from_pairs(pairs, OutputScaling::Literal);
  out = literal.denormalize_output(y);
  EXPECT_NEAR(out[0], literal.stddev[1] * (0.5 + literal.mean[1]), 1e-12);
  EXPECT_NEAR(out[1], literal.stddev[2] * (-1.0 + literal.mean[2]), 1e-12);

  EXPECT_EQ(parse_output_scaling("literal"), OutputScaling::Literal);
  EXPECT_EQ(output_scaling_name(OutputScaling::Affine), "affine");
  EXPECT_THROW(parse_output_scaling("log"), InvalidArgument);
}

TEST(ClipGradientTest, Examples) {
  Eigen::VectorXd small(2);
  small << 30, 40;
  EXPECT_EQ(clip_gradient(small, 100.0), small);
  Eigen::VectorXd big(2);
  big << 300, 400;
  const Eigen::VectorXd c = clip_gradient(big, 100.0);
  EXPECT_NEAR(c[0], 60.0, 1e-12);
  EXPECT_NEAR(c[1], 80.0, 1e-12);
  EXPECT_EQ(clip_gradient(Eigen::VectorXd::Zero(3), 100.0), Eigen::VectorXd::Zero(3));
  EXPECT_THROW(clip_gradient(small, 0.0), InvalidArgument);
}

TEST(LmsTest, HandComputedFirstStep) {
  LmsFilter lms(2, 1, 0.1);
  const Eigen::VectorXd pred = lms.step(Eigen::Vector2d(1, 1), Eigen::VectorXd::Ones(1));
  EXPECT_EQ(pred[0], 0.0);
  EXPECT_NEAR(lms.weights()(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(lms.weights()(0, 1), 0.1, 1e-15);
}

TEST(LmsTest, ZeroErrorLeavesWeightsUnchanged) {
  LmsFilter lms(3, 2, 0.5);
  Eigen::MatrixXd w(2, 3);
  w << 1, 2, 3, 4, 5, 6;
  lms.set_weights(w);
  const Eigen::Vector3d u(0.1, -0.2, 0.3);
  lms.step(u, w * u);
  EXPECT_EQ(lms.weights(), w);
}

TEST(LmsTest, LargeErrorIsClippedToThreshold) {
  LmsFilter lms(2, 1, 0.1);
  lms.step(Eigen::Vector2d(3, 4), Eigen::VectorXd::Constant(1, 10.0));
  // e u^T = (30, 40), norm 50 -> scaled to norm 2.
  EXPECT_NEAR(lms.weights().norm(), 0.1 * kLmsClip, 1e-12);
  EXPECT_NEAR(lms.weights()(0, 0), 0.1 * 2.0 * 0.6, 1e-12);
}

TEST(LmsTest, LearnsNoiselessLinearStream) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd w_star(2, 3);
  w_star << 0.5, -0.3, 0.8, 0.1, 0.6, -0.4;
  LmsFilter lms(3, 2, 0.2);
  double late = 0.0;
  for (int n = 0; n < 200; ++n) {
    Eigen::Vector3d in(1.0, u(rng), u(rng));
    const Eigen::VectorXd pred = lms.step(in, w_star * in);
    if (n >= 190) late += (pred - w_star * in).squaredNorm() / 10.0;
  }
  EXPECT_LT(late, 1e-3);
}

TEST(LinRegTest, RecoversGeneratingMatrix) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd w_star(2, 4);
  for (Eigen::Index i = 0; i < w_star.size(); ++i) w_star(i) = n(rng);
  std::vector<SupervisedPair> pairs;
  for (int k = 0; k < 20; ++k) {
    SupervisedPair p;
    p.input = Eigen::VectorXd(4);
    p.input << 1.0, n(rng), n(rng), n(rng);
    p.target = w_star * p.input;
    pairs.push_back(p);
  }
  const auto model = fit_linear_regression(pairs);
  EXPECT_LT((model.w - w_star).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LinRegTest, UnderdeterminedFitInterpolatesWithMinimumNorm) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<SupervisedPair> pairs;
  Eigen::MatrixXd u(3, 6);
  Eigen::MatrixXd y(3, 2);
  for (int k = 0; k < 3; ++k) {
    SupervisedPair p;
    p.input = Eigen::VectorXd(6);
    for (Eigen::Index i = 0; i < 6; ++i) p.input[i] = n(rng);
    p.target = Eigen::Vector2d(n(rng), n(rng));
    u.row(k) = p.input.transpose();
    y.row(k) = p.target.transpose();
    pairs.push_back(p);
  }
  const auto model = fit_linear_regression(pairs);
  for (const auto& p : pairs) EXPECT_LT((model.predict(p.input) - p.target).norm(), 1e-10);
  const Eigen::MatrixXd oracle = (pseudo_inverse(u) * y).transpose();
  EXPECT_LT((model.w - oracle).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LinRegTest, MatchesPseudoInverseOnRandomSystem) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<SupervisedPair> pairs;
  Eigen::MatrixXd u(9, 5);
  Eigen::MatrixXd y(9, 3);
  for (int k = 0; k < 9; ++k) {
    SupervisedPair p;
    p.input = Eigen::VectorXd(5);
    for (Eigen::Index i = 0; i < 5; ++i) p.input[i] = n(rng);
    p.input[4] = p.input[3];  // rank deficient on purpose
    p.target = Eigen::Vector3d(n(rng), n(rng), n(rng));
    u.row(k) = p.input.transpose();
    y.row(k) = p.target.transpose();
    pairs.push_back(p);
  }
  const auto model = fit_linear_regression(pairs);
  const Eigen::MatrixXd oracle = (pseudo_inverse(u) * y).transpose();
  EXPECT_LT((model.w - oracle).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(BaselineTest, PreviousWeightExamples) {
  Eigen::MatrixXd ramp(6, 1);
  ramp << 0, 2, 4, 6, 8, 10;
  EXPECT_EQ(predict_baseline_previous(ramp, 0), ramp);
  const Eigen::MatrixXd p3 = predict_baseline_previous(ramp, 3);
  EXPECT_TRUE(std::isnan(p3(2, 0)));
  for (Eigen::Index k = 3; k < 6; ++k) EXPECT_DOUBLE_EQ(ramp(k, 0) - p3(k, 0), 3 * 2.0);
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(6, 2, 4.0);
  const Eigen::MatrixXd pf = predict_baseline_previous(flat, 2);
  EXPECT_EQ(pf.bottomRows(4), flat.bottomRows(4));
}

TEST(RunForecastTest, PredictionsStartAtFirstTargetAndUseTrainingStatsOnly) {
  const Eigen::MatrixXd w = two_tone_series(80, 0.5, 7);
  ForecastSettings s;
  s.method = Method::LinReg;
  s.L = 4;
  s.h = 2;
  const auto run = run_forecast(s, w, 40, 70, 0);
  ASSERT_FALSE(run.diverged);
  for (Eigen::Index k = 1; k <= 80; ++k) {
    const bool predicted = k >= s.L + s.h && k <= 70;
    EXPECT_EQ(run.predicted.row(k - 1).allFinite(), predicted) << k;
  }
  // Changing data after m_train must not change predictions up to m_train.
  Eigen::MatrixXd altered = w;
  altered.bottomRows(40).array() += 100.0;
  const auto run2 = run_forecast(s, altered, 40, 70, 0);
  EXPECT_TRUE(same_entries(run.predicted.topRows(40), run2.predicted.topRows(40)));
}

TEST(RunForecastTest, LinearRegressionBeatsBaselineOnNoisyTones) {
  const Eigen::MatrixXd w = two_tone_series(200, 1.0, 8);
  ForecastSettings s;
  s.method = Method::LinReg;
  s.L = 12;
  s.h = 3;
  const auto run = run_forecast(s, w, 160, 200, 0);
  const Eigen::MatrixXd base = predict_baseline_previous(w, 3);
  const IndexRange test{181, 200};
  EXPECT_LT(weight_nrmse(run.predicted, w, test), weight_nrmse(base, w, test));
}

TEST(RunForecastTest, HugeLearningRateNeverLeaksNonFiniteValues) {
  const Eigen::MatrixXd w = two_tone_series(120, 1.0, 9);
  ForecastSettings s;
  s.method = Method::Rtrl;
  s.eta = 1e6;
  s.L = 2;
  s.q = 3;
  s.h = 1;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto run = run_forecast(s, w, 60, 120, seed);
    if (run.diverged)
      EXPECT_NE(run.failure.find("divergence"), std::string::npos);
    else
      EXPECT_TRUE(run.predicted.bottomRows(118).allFinite());
  }
}

TEST(RunForecastTest, SameSeedIsDeterministicForEveryMethod) {
  const Eigen::MatrixXd w = two_tone_series(100, 1.0, 10);
  for (Method m : {Method::Rtrl, Method::Uoro, Method::Snap1, Method::Dni, Method::Lms,
                   Method::LinReg, Method::FrozenRnn}) {
    ForecastSettings s;
    s.method = m;
    s.eta = 0.01;
    s.L = 3;
    s.q = 4;
    s.h = 2;
    const auto a = run_forecast(s, w, 50, 100, 17);
    const auto b = run_forecast(s, w, 50, 100, 17);
    ASSERT_FALSE(a.diverged) << method_name(m);
    EXPECT_TRUE(((a.predicted.array() == b.predicted.array()) ||
                 (a.predicted.array().isNaN() && b.predicted.array().isNaN()))
                    .all())
        << method_name(m);
  }
}

TEST(RunForecastTest, RecurrentSeedsProduceDifferentRuns) {
  const Eigen::MatrixXd w = two_tone_series(100, 1.0, 11);
  ForecastSettings s;
  s.method = Method::Uoro;
  s.eta = 0.01;
  s.L = 3;
  s.q = 4;
  const auto a = run_forecast(s, w, 50, 100, 1);
  const auto b = run_forecast(s, w, 50, 100, 2);
  EXPECT_NE(a.predicted.bottomRows(10), b.predicted.bottomRows(10));
}

TEST(RunForecastTest, ResetBeforeRestartsLms) {
  const Eigen::MatrixXd w = two_tone_series(60, 0.5, 12);
  ForecastSettings s;
  s.method = Method::Lms;
  s.eta = 0.1;
  s.L = 2;
  s.h = 1;
  const auto plain = run_forecast(s, w, 30, 60, 0);
  s.reset_before = {45};
  const auto reset = run_forecast(s, w, 30, 60, 0);
  EXPECT_TRUE(same_entries(plain.predicted.topRows(44), reset.predicted.topRows(44)));
  // A freshly reset LMS predicts zero in normalized units, i.e. sigma * mu.
  EXPECT_NE(plain.predicted.row(44), reset.predicted.row(44));
}
