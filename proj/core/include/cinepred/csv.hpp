#pragma once

// Weight-series CSV: header "k,w_1,...,w_n", one row per 1-based time
// index k. Rows that are entirely NaN are omitted on write and restored as
// NaN on read.

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace cinepred {

void write_weights_csv(const std::filesystem::path& path, const Eigen::MatrixXd& weights);
Eigen::MatrixXd read_weights_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal representation used by every CSV writer.
std::string format_double(double v);

}  // namespace cinepred
