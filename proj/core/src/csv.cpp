#include "cinepred/csv.hpp"

#include "cinepred/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cinepred {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_weights_csv(const std::filesystem::path& path, const Eigen::MatrixXd& weights) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << "k";
  for (Eigen::Index j = 0; j < weights.cols(); ++j) out << ",w_" << j + 1;
  out << "\n";
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    if (weights.cols() > 0 && weights.row(k).array().isNaN().all()) continue;
    out << k + 1;
    for (Eigen::Index j = 0; j < weights.cols(); ++j) out << "," << format_double(weights(k, j));
    out << "\n";
  }
}

Eigen::MatrixXd read_weights_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty weights CSV: " + path.string());
  Eigen::Index cols = 0;
  for (char c : line) cols += c == ',';
  if (cols == 0) throw LoadError("weights CSV has no weight columns: " + path.string());

  std::vector<std::pair<Eigen::Index, std::vector<double>>> rows;
  Eigen::Index max_k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const Eigen::Index k = std::stol(cell);
    if (k < 1) throw LoadError("weights CSV time index must be >= 1");
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(vals.size()) != cols)
      throw LoadError("weights CSV row has the wrong number of columns");
    max_k = std::max(max_k, k);
    rows.emplace_back(k, std::move(vals));
  }
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Constant(max_k, cols, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [k, vals] : rows)
    for (Eigen::Index j = 0; j < cols; ++j) out(k - 1, j) = vals[j];
  return out;
}

}  // namespace cinepred
