#include "cinepred/error.hpp"
#include "cinepred/pca_model.hpp"
#include "test_support.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <random>

using namespace cinepred;

namespace {

std::vector<DisplacementField> fields_from_rows(const Eigen::MatrixXd& x, Eigen::Index h,
                                                Eigen::Index w) {
  std::vector<DisplacementField> out;
  for (Eigen::Index k = 0; k < x.rows(); ++k)
    out.push_back(DisplacementField::unflatten(x.row(k).transpose(), h, w));
  return out;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

void make_first_nonzero_positive(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) {
      if (v[i] < 0.0) v = -v;
      return;
    }
}

}  // namespace

TEST(DataMatrixTest, ConstantSecondFieldExample) {
  std::vector<DisplacementField> fields{DisplacementField(2, 2),
                                        support::uniform_field(2, 2, 1.0, 0.0)};
  const auto data = build_data_matrix(fields, 2);
  Eigen::RowVectorXd row2(8);
  row2 << 1, 0, 1, 0, 1, 0, 1, 0;
  EXPECT_EQ(data.x.row(1), row2);
  EXPECT_EQ(data.mean, 0.5 * row2);
  EXPECT_LT(data.centered.colwise().sum().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DataMatrixTest, ColumnsOfCenteredMatrixSumToZero) {
  std::mt19937_64 rng(2);
  std::vector<DisplacementField> fields;
  for (int k = 0; k < 7; ++k) fields.push_back(support::random_field(3, 4, rng, 5.0));
  const auto data = build_data_matrix(fields, 5);
  EXPECT_EQ(data.x.rows(), 5);
  const Eigen::ArrayXd sums = data.centered.colwise().sum().transpose().array().abs();
  const Eigen::ArrayXd stds =
      (data.centered.array().square().colwise().sum() / 5.0).sqrt().transpose();
  EXPECT_TRUE((sums / 5.0 < 1e-9 * stds.max(1.0)).all());
}

TEST(DataMatrixTest, StaticFieldsGiveZeroMatrices) {
  std::vector<DisplacementField> fields(4, DisplacementField(3, 3));
  const auto data = build_data_matrix(fields, 4);
  EXPECT_EQ(data.x.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(data.centered.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DataMatrixTest, RejectsTooFewTrainingFrames) {
  std::vector<DisplacementField> fields(4, DisplacementField(3, 3));
  EXPECT_THROW(build_data_matrix(fields, 1), InvalidArgument);
  EXPECT_THROW(build_data_matrix(fields, 5), InvalidArgument);
}

TEST(MotionModelTest, RankOneDataIsReproduced) {
  std::mt19937_64 rng(4);
  const Eigen::VectorXd v = random_matrix(12, 1, rng).col(0);
  Eigen::MatrixXd x(5, 12);
  const double alpha[] = {0.3, -1.2, 2.0, 0.7, -0.4};
  for (int k = 0; k < 5; ++k) x.row(k) = alpha[k] * v.transpose();
  const auto data = build_data_matrix(fields_from_rows(x, 2, 3), 5);
  const auto model = fit_motion_model(data, 1);
  const Eigen::MatrixXd approx = model.train_weights() * model.components().transpose();
  EXPECT_LT((data.centered - approx).norm() / data.centered.norm(), 1e-8);
  EXPECT_THROW(fit_motion_model(data, 2), RankError);
}

TEST(MotionModelTest, MatchesSingularValueOracleUpToSign) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = random_matrix(3, 4, rng);
  const auto data = build_data_matrix(fields_from_rows(x, 1, 2), 3);
  const auto model = fit_motion_model(data, 2);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.centered, Eigen::ComputeFullU | Eigen::ComputeFullV);
  for (Eigen::Index j = 0; j < 2; ++j) {
    Eigen::VectorXd left = svd.matrixU().col(j);
    const double s = svd.singularValues()[j];
    Eigen::VectorXd right = svd.matrixV().col(j);
    // Align the oracle with the model's sign rule on the time-domain vector.
    Eigen::VectorXd aligned = left;
    make_first_nonzero_positive(aligned);
    if (aligned.dot(left) < 0.0) right = -right;
    EXPECT_NEAR(model.lambdas()[j], s, 1e-8);
    EXPECT_LT((model.train_weights().col(j) - s * aligned).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((model.components().col(j) - right).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(MotionModelTest, RandomMatricesAchieveTruncatedSvdResidual) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::MatrixXd x = random_matrix(6, 10, rng);
    const auto data = build_data_matrix(fields_from_rows(x, 1, 5), 6);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.centered);
    for (Eigen::Index n = 1; n <= 4; ++n) {
      const auto model = fit_motion_model(data, n);
      const double residual =
          (data.centered - model.train_weights() * model.components().transpose()).norm();
      const double oracle = svd.singularValues().tail(svd.singularValues().size() - n).norm();
      EXPECT_NEAR(residual, oracle, 1e-8);
      const Eigen::MatrixXd gram = model.components().transpose() * model.components();
      EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(MotionModelTest, SignRuleAndEnergyOrdering) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const auto data = build_data_matrix(fields_from_rows(random_matrix(8, 12, rng), 2, 3), 8);
    const auto model = fit_motion_model(data, 5);
    for (Eigen::Index j = 0; j < 5; ++j) {
      const auto col = model.train_weights().col(j);
      for (Eigen::Index i = 0; i < col.size(); ++i)
        if (col[i] != 0.0) {
          EXPECT_GT(col[i], 0.0);
          break;
        }
      if (j > 0) EXPECT_GE(model.lambdas()[j - 1], model.lambdas()[j]);
      EXPECT_GE(model.lambdas()[j], 0.0);
    }
  }
}

TEST(MotionModelTest, ProjectionExamples) {
  std::mt19937_64 rng(8);
  std::vector<DisplacementField> fields;
  for (int k = 0; k < 6; ++k) fields.push_back(support::random_field(3, 3, rng));
  const auto data = build_data_matrix(fields, 6);
  const auto model = fit_motion_model(data, 3);

  EXPECT_LT(model.project(model.mean_field()).cwiseAbs().maxCoeff(), 1e-12);

  DisplacementField plus = model.mean_field();
  const auto u2 = model.component_field(1);
  plus.ux += u2.ux;
  plus.uy += u2.uy;
  const Eigen::VectorXd w = model.project(plus);
  EXPECT_NEAR(w[0], 0.0, 1e-10);
  EXPECT_NEAR(w[1], 1.0, 1e-10);
  EXPECT_NEAR(w[2], 0.0, 1e-10);

  for (int k = 0; k < 6; ++k)
    EXPECT_LT((model.project(fields[k]) - model.train_weights().row(k).transpose())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-8);
}

TEST(MotionModelTest, ReconstructionExamples) {
  std::mt19937_64 rng(9);
  std::vector<DisplacementField> fields;
  for (int k = 0; k < 5; ++k) fields.push_back(support::random_field(2, 4, rng));
  const auto data = build_data_matrix(fields, 5);
  const auto model = fit_motion_model(data, 4);  // rank of the centered data

  const auto mu = model.reconstruct(Eigen::VectorXd::Zero(4));
  EXPECT_TRUE((mu.ux == model.mean_field().ux).all());
  EXPECT_TRUE((mu.uy == model.mean_field().uy).all());

  const auto e3 = model.reconstruct(Eigen::VectorXd::Unit(4, 2));
  const Eigen::VectorXd expected = model.mean_vector() + model.components().col(2);
  EXPECT_LT((e3.flatten() - expected).cwiseAbs().maxCoeff(), 1e-15);

  for (const auto& f : fields) {
    const auto back = model.reconstruct(model.project(f));
    EXPECT_LT((back.flatten() - f.flatten()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(MotionModelTest, ProjectReconstructIdempotenceAndSpan) {
  std::mt19937_64 rng(10);
  std::vector<DisplacementField> fields;
  for (int k = 0; k < 8; ++k) fields.push_back(support::random_field(4, 4, rng));
  const auto model = fit_motion_model(build_data_matrix(fields, 8), 3);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd w(3);
    for (Eigen::Index i = 0; i < 3; ++i) w[i] = n(rng);
    const auto rec = model.reconstruct(w);
    EXPECT_LT((model.project(rec) - w).cwiseAbs().maxCoeff(), 1e-8);
    const Eigen::VectorXd d = rec.flatten() - model.mean_vector();
    const Eigen::VectorXd residual = d - model.components() * (model.components().transpose() * d);
    EXPECT_LT(residual.norm(), 1e-8);
  }
}

TEST(MotionModelTest, ShapeAndLengthMismatchesThrow) {
  std::mt19937_64 rng(11);
  std::vector<DisplacementField> fields;
  for (int k = 0; k < 4; ++k) fields.push_back(support::random_field(3, 3, rng));
  const auto model = fit_motion_model(build_data_matrix(fields, 4), 2);
  EXPECT_THROW(model.project(DisplacementField(3, 4)), InvalidArgument);
  EXPECT_THROW(model.reconstruct(Eigen::VectorXd::Zero(3)), InvalidArgument);
  EXPECT_THROW(fit_motion_model(build_data_matrix(fields, 4), 0), InvalidArgument);
  EXPECT_THROW(fit_motion_model(build_data_matrix(fields, 4), 4), RankError);
}

TEST(MotionModelTest, StaticDataHasNoComponents) {
  std::vector<DisplacementField> fields(5, support::uniform_field(3, 3, 1.0, 2.0));
  const auto data = build_data_matrix(fields, 5);
  try {
    fit_motion_model(data, 1);
    FAIL() << "expected a rank error";
  } catch (const RankError& e) {
    EXPECT_NE(std::string(e.what()).find("requested components exceed data rank"),
              std::string::npos);
  }
}

TEST(MotionModelTest, SaveLoadRoundTrip) {
  std::mt19937_64 rng(12);
  std::vector<DisplacementField> fields;
  for (int k = 0; k < 6; ++k) fields.push_back(support::random_field(4, 5, rng));
  const auto model = fit_motion_model(build_data_matrix(fields, 6), 3);
  const auto dir = support::temp_dir("pca");
  model.save(dir, 6);
  const auto back = MotionModel::load(dir);
  std::filesystem::remove_all(dir);
  ASSERT_EQ(back.n_cp(), 3);
  EXPECT_EQ(back.height(), 4);
  EXPECT_EQ(back.width(), 5);
  // Fields are stored as float32.
  EXPECT_LT((back.components() - model.components()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((back.mean_vector() - model.mean_vector()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(back.lambdas(), model.lambdas());
  EXPECT_EQ(back.train_weights(), model.train_weights());
}

TEST(MotionModelTest, TruncationKeepsLeadingComponents) {
  std::mt19937_64 rng(13);
  std::vector<DisplacementField> fields;
  for (int k = 0; k < 6; ++k) fields.push_back(support::random_field(3, 3, rng));
  const auto data = build_data_matrix(fields, 6);
  const auto full = fit_motion_model(data, 4);
  const auto two = fit_motion_model(data, 2);
  const auto cut = full.truncated(2);
  EXPECT_LT((cut.components() - two.components()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((cut.train_weights() - two.train_weights()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(full.truncated(5), InvalidArgument);
}
