#include "cinepred/pca_model.hpp"

#include "cinepred/csv.hpp"
#include "cinepred/error.hpp"
#include "cinepred/image_io.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace cinepred {

namespace fs = std::filesystem;

MotionDataMatrix build_data_matrix(const std::vector<DisplacementField>& fields,
                                   Eigen::Index m_train) {
  if (m_train < 2) throw InvalidArgument("data matrix requires m_train >= 2");
  if (m_train > static_cast<Eigen::Index>(fields.size()))
    throw InvalidArgument("m_train exceeds the number of fields");
  MotionDataMatrix data;
  data.height = fields.front().height();
  data.width = fields.front().width();
  const Eigen::Index cols = 2 * data.height * data.width;
  data.x.resize(m_train, cols);
  for (Eigen::Index k = 0; k < m_train; ++k) {
    const auto& f = fields[k];
    if (f.height() != data.height || f.width() != data.width)
      throw InvalidArgument("fields differ in shape");
    data.x.row(k) = f.flatten().transpose();
  }
  data.mean = data.x.colwise().mean();
  data.centered = data.x.rowwise() - data.mean;
  return data;
}

MotionModel::MotionModel(Eigen::VectorXd mean, Eigen::MatrixXd components,
                         Eigen::VectorXd lambdas, Eigen::MatrixXd train_weights,
                         Eigen::Index height, Eigen::Index width)
    : mean_(std::move(mean)),
      components_(std::move(components)),
      lambdas_(std::move(lambdas)),
      train_weights_(std::move(train_weights)),
      height_(height),
      width_(width) {}

DisplacementField MotionModel::mean_field() const {
  return DisplacementField::unflatten(mean_, height_, width_);
}

DisplacementField MotionModel::component_field(Eigen::Index j) const {
  if (j < 0 || j >= n_cp()) throw InvalidArgument("component index out of range");
  return DisplacementField::unflatten(components_.col(j), height_, width_);
}

Eigen::VectorXd MotionModel::project(const DisplacementField& field) const {
  if (field.height() != height_ || field.width() != width_)
    throw InvalidArgument("field shape does not match the motion model");
  return components_.transpose() * (field.flatten() - mean_);
}

DisplacementField MotionModel::reconstruct(const Eigen::Ref<const Eigen::VectorXd>& weights) const {
  if (weights.size() != n_cp())
    throw InvalidArgument("weight vector length does not match n_cp");
  const Eigen::VectorXd flat = mean_ + components_ * weights;
  return DisplacementField::unflatten(flat, height_, width_);
}

MotionModel MotionModel::truncated(Eigen::Index n) const {
  if (n < 1 || n > n_cp()) throw InvalidArgument("cannot truncate to that many components");
  return MotionModel(mean_, components_.leftCols(n), lambdas_.head(n),
                     train_weights_.leftCols(n), height_, width_);
}

void MotionModel::save(const fs::path& dir, Eigen::Index m_train) const {
  fs::create_directories(dir);
  write_dvf(dir / "mean.dvf", mean_field());
  nlohmann::json comps = nlohmann::json::array();
  for (Eigen::Index j = 0; j < n_cp(); ++j) {
    char name[48];
    std::snprintf(name, sizeof name, "component_%ld.dvf", static_cast<long>(j + 1));
    write_dvf(dir / name, component_field(j));
    comps.push_back(name);
  }
  nlohmann::json doc;
  doc["eigenvalues"] = std::vector<double>(lambdas_.data(), lambdas_.data() + lambdas_.size());
  doc["n_cp"] = n_cp();
  doc["m_train"] = m_train;
  doc["height"] = height_;
  doc["width"] = width_;
  doc["mean"] = "mean.dvf";
  doc["components"] = comps;
  std::ofstream(dir / "model.json") << doc.dump(2) << "\n";
  write_weights_csv(dir / "train_weights.csv", train_weights_);
}

MotionModel MotionModel::load(const fs::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw LoadError("cannot open " + (dir / "model.json").string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed model.json: ") + e.what());
  }
  const auto lambdas = doc.at("eigenvalues").get<std::vector<double>>();
  const DisplacementField mean = read_dvf(dir / doc.value("mean", std::string("mean.dvf")));
  const auto names = doc.at("components").get<std::vector<std::string>>();
  Eigen::MatrixXd comps(2 * mean.pixel_count(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const DisplacementField c = read_dvf(dir / names[j]);
    if (c.height() != mean.height() || c.width() != mean.width())
      throw LoadError("component shape differs from the mean field");
    comps.col(static_cast<Eigen::Index>(j)) = c.flatten();
  }
  Eigen::MatrixXd w;
  if (fs::exists(dir / "train_weights.csv")) w = read_weights_csv(dir / "train_weights.csv");
  return MotionModel(mean.flatten(), std::move(comps),
                     Eigen::Map<const Eigen::VectorXd>(lambdas.data(),
                                                       static_cast<Eigen::Index>(lambdas.size())),
                     std::move(w), mean.height(), mean.width());
}

MotionModel fit_motion_model(const MotionDataMatrix& data, Eigen::Index n_cp) {
  const Eigen::Index m = data.centered.rows();
  if (n_cp < 1) throw InvalidArgument("n_cp must be >= 1");
  if (n_cp > m) throw RankError("requested components exceed data rank");

  const Eigen::MatrixXd gram = data.centered * data.centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw Error("numeric", "Gram eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return solver.eigenvalues()[a] > solver.eigenvalues()[b];
  });

  const double top = std::max(solver.eigenvalues()[order[0]], 0.0);
  const double kth = std::max(solver.eigenvalues()[order[n_cp - 1]], 0.0);
  if (!(top > 0.0) || kth < 1e-12 * top) throw RankError("requested components exceed data rank");

  Eigen::MatrixXd v(m, n_cp);
  Eigen::VectorXd lambdas(n_cp);
  for (Eigen::Index j = 0; j < n_cp; ++j) {
    Eigen::VectorXd col = solver.eigenvectors().col(order[j]);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (col[i] != 0.0) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
    v.col(j) = col;
    lambdas[j] = std::sqrt(std::max(solver.eigenvalues()[order[j]], 0.0));
  }

  Eigen::MatrixXd w = v * lambdas.asDiagonal();
  Eigen::MatrixXd u = data.centered.transpose() * v * lambdas.cwiseInverse().asDiagonal();
  return MotionModel(data.mean.transpose(), std::move(u), std::move(lambdas), std::move(w),
                     data.height, data.width);
}

Eigen::MatrixXd project_all(const MotionModel& model, const std::vector<DisplacementField>& fields) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(fields.size()), model.n_cp());
  for (std::size_t k = 0; k < fields.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = model.project(fields[k]).transpose();
  return out;
}

}  // namespace cinepred
