#pragma once

// PCA respiratory motion model fitted on the Gram matrix of the centered
// training DVFs.

#include "cinepred/grid.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace cinepred {

struct MotionDataMatrix {
  /// Row k is the interleaved flattening of the field at t_{k+1}.
  Eigen::MatrixXd x;
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd centered;
  Eigen::Index height = 0;
  Eigen::Index width = 0;
};

/// Uses fields[0 .. m_train - 1]. Throws when m_train < 2 or exceeds the
/// number of fields.
MotionDataMatrix build_data_matrix(const std::vector<DisplacementField>& fields,
                                   Eigen::Index m_train);

class MotionModel {
 public:
  MotionModel() = default;
  MotionModel(Eigen::VectorXd mean, Eigen::MatrixXd components, Eigen::VectorXd lambdas,
              Eigen::MatrixXd train_weights, Eigen::Index height, Eigen::Index width);

  Eigen::Index n_cp() const { return components_.cols(); }
  Eigen::Index height() const { return height_; }
  Eigen::Index width() const { return width_; }

  /// Flattened mean field (length 2|I|).
  const Eigen::VectorXd& mean_vector() const { return mean_; }
  /// Columns are the flattened principal DVFs; orthonormal.
  const Eigen::MatrixXd& components() const { return components_; }
  /// lambda_j = sqrt of the j-th eigenvalue of Xc Xc^T, descending.
  const Eigen::VectorXd& lambdas() const { return lambdas_; }
  /// Rows t_1..t_M, columns w_j.
  const Eigen::MatrixXd& train_weights() const { return train_weights_; }

  DisplacementField mean_field() const;
  DisplacementField component_field(Eigen::Index j) const;

  /// w_j = sum_x <u(x) - mu(x), u_j(x)>.
  Eigen::VectorXd project(const DisplacementField& field) const;
  /// mu(x) + sum_j w_j u_j(x).
  DisplacementField reconstruct(const Eigen::Ref<const Eigen::VectorXd>& weights) const;

  /// Keeps the leading `n` components.
  MotionModel truncated(Eigen::Index n) const;

  /// Writes mean.dvf, component_<j>.dvf, model.json and train_weights.csv.
  void save(const std::filesystem::path& dir, Eigen::Index m_train) const;
  static MotionModel load(const std::filesystem::path& dir);

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;
  Eigen::VectorXd lambdas_;
  Eigen::MatrixXd train_weights_;
  Eigen::Index height_ = 0;
  Eigen::Index width_ = 0;
};

/// Spectral decomposition of the M x M Gram matrix, descending order, each
/// eigenvector sign-normalized by its first nonzero entry. Throws RankError
/// when lambda_{n_cp}^2 < 1e-12 lambda_1^2.
MotionModel fit_motion_model(const MotionDataMatrix& data, Eigen::Index n_cp);

/// Projects every field; rows follow the input order.
Eigen::MatrixXd project_all(const MotionModel& model, const std::vector<DisplacementField>& fields);

}  // namespace cinepred
