#pragma once

// Experiment configuration: data split, horizons, methods, per-method
// hyper-parameter grids, run counts, flow grid, warp parameters and the
// sequences to process. Two presets exist: "paper" (full grids and run
// counts) and "desk" (a reduced protocol on one synthetic sequence).

#include "cinepred/forecasters.hpp"
#include "cinepred/optical_flow.hpp"
#include "cinepred/synthetic.hpp"
#include "cinepred/warping.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cinepred {

struct MethodGrid {
  std::vector<double> eta;  ///< ignored by linear regression
  std::vector<int> L;
  std::vector<int> q;       ///< recurrent methods only
};

struct HyperParams {
  double eta = 0.0;
  int L = 1;
  int q = 0;
  bool operator==(const HyperParams&) const = default;
};

/// Grid points in nested order eta > L > q, keeping only the parameters
/// the method uses.
std::vector<HyperParams> expand_grid(const MethodGrid& grid, Method method);

struct RunCounts {
  int n_cv = 10;
  int n_warp = 5;
  int n_test_pca = 10;
};

struct FlowGridSpec {
  std::vector<double> sigma_init{0.1};
  std::vector<double> sigma_sub{0.5};
  std::vector<double> sigma_lk{2.0};
  std::vector<int> n_layers{2};
  std::vector<int> n_iter{1};

  std::vector<FlowParams> expand() const;
};

/// Either a manifest on disk or a synthetic sequence generated in memory.
struct SequenceSource {
  std::filesystem::path manifest;
  std::optional<SyntheticSpec> synthetic;
};

struct ExperimentConfig {
  std::string profile = "desk";
  std::vector<SequenceSource> sequences;
  Eigen::Index m_train = 90;
  Eigen::Index m_train_linreg = 160;
  Eigen::Index m_cv = 180;
  std::vector<int> horizons;
  std::vector<Method> methods;
  std::map<Method, MethodGrid> grids;
  std::vector<int> n_cp_range{1, 2, 3, 4};
  RunCounts runs;
  std::map<Method, RunCounts> run_overrides;
  std::uint64_t seed = 42;
  FlowGridSpec flow_grid;
  WarpParams warp;
  /// Test-range time indices whose predicted frames are written as PGM;
  /// empty writes the first test frame.
  std::vector<Eigen::Index> frame_steps;
  /// Reset online forecasters before the first test pair.
  bool reset_before_test = false;
  OutputScaling output_scaling = OutputScaling::Affine;

  static ExperimentConfig desk();
  static ExperimentConfig paper();
  /// "desk" or "paper".
  static ExperimentConfig preset(std::string_view name);

  RunCounts runs_for(Method m) const;
  Eigen::Index m_train_for(Method m) const;

  /// Checks everything that does not depend on the sequence length.
  void validate() const;
  /// Adds 2 <= m_train < m_cv < M for every method in use.
  void validate(Eigen::Index frame_count) const;
};

/// Overlays the keys present in `doc` onto `base`. Grids merge per method;
/// "run_overrides", when present, replaces the base overrides.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base);
/// Grids are emitted for the configured methods only.
nlohmann::json config_to_json(const ExperimentConfig& config);
/// Reads a JSON file; relative manifest paths resolve against its directory.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);

/// splitmix64 mix of (global seed, method, h, n_cp, grid index, run index).
std::uint64_t run_seed(std::uint64_t global_seed, Method method, int h, int n_cp,
                       std::int64_t grid_index, std::int64_t run_index);

}  // namespace cinepred
