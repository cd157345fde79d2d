#pragma once

// The full experiment: flow parameter search, PCA fit, hyper-parameter grid
// search on the cross-validation range, n_cp selection by the mean
// predicted registration error, and test evaluation with baselines.

#include "cinepred/config.hpp"
#include "cinepred/forecasters.hpp"
#include "cinepred/image_io.hpp"
#include "cinepred/metrics.hpp"
#include "cinepred/pca_model.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cinepred {

struct SplitRanges {
  IndexRange train;
  IndexRange cv;
  IndexRange test;
};

/// train = [1, m_train], cv = [m_train + 1, m_cv], test = [m_cv + 1, M].
/// Requires 2 <= m_train < m_cv < M.
SplitRanges split_indices(Eigen::Index M, Eigen::Index m_train, Eigen::Index m_cv);

/// A learned method with fixed hyper-parameters, or the previous-weight
/// baseline when `method` is empty.
struct Forecaster {
  std::optional<Method> method;
  HyperParams params;
  OutputScaling scaling = OutputScaling::Affine;

  std::string name() const;
  int run_count(int requested) const;
};

/// One run over time indices up to `k_end`; `weights` holds n_cp columns.
ForecastRun forecast_weights(const Forecaster& f, int h, const Eigen::MatrixXd& weights,
                             Eigen::Index m_train, Eigen::Index k_end, std::uint64_t seed,
                             const std::vector<Eigen::Index>& reset_before = {});

struct GridCell {
  HyperParams params;
  double cv_nrmse = 0.0;  ///< run-averaged; NaN when every run diverged
  int valid_runs = 0;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  HyperParams best;
  double best_cv_nrmse = 0.0;
  std::vector<GridCell> cells;  ///< grid order
};

/// Averages the cross-validation weight nRMSE over `runs` online runs per
/// grid point and returns the minimum (ties go to the earlier grid point).
/// Throws InvalidArgument when every grid point diverged.
GridSearchResult run_grid_search(const Eigen::MatrixXd& weights, Method method, int h,
                                 const std::vector<HyperParams>& grid, int runs,
                                 const SplitRanges& split, std::uint64_t global_seed,
                                 OutputScaling scaling = OutputScaling::Affine);

/// Smallest error wins; ties go to the smaller n_cp.
int select_n_cp(const std::map<int, double>& e_pred);

struct NcpSelection {
  int n_cp = 0;
  std::map<int, double> e_pred;
};

/// E_pred for each candidate n_cp (with its own forecaster) using fields
/// reconstructed from predicted weights over the cross-validation range.
/// `model` and `weights` carry at least max(n_cp) components.
NcpSelection select_n_cp(const ImageSequence& seq, const MotionModel& model,
                         const Eigen::MatrixXd& weights, const std::map<int, Forecaster>& candidates,
                         int h, int n_warp, const SplitRanges& split, std::uint64_t global_seed);

struct RunMetrics {
  std::string sequence;
  std::string method;
  int h = 0;
  int n_cp = 0;
  int run = 0;  ///< 1-based
  double weight_nrmse = std::numeric_limits<double>::quiet_NaN();
  double image_nrmse = std::numeric_limits<double>::quiet_NaN();
  double cross_correlation = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
  double mean_dvf_error_mm = std::numeric_limits<double>::quiet_NaN();
  double max_dvf_error_mm = std::numeric_limits<double>::quiet_NaN();
};

struct MetricSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double half_range = std::numeric_limits<double>::quiet_NaN();  ///< NaN with < 2 samples
  int count = 0;
};

struct AggregateRow {
  std::string sequence;
  std::string method;
  int h = 0;
  int n_cp = 0;
  HyperParams params;
  int failed_runs = 0;
  MetricSummary weight_nrmse, image_nrmse, cross_correlation, ssim, mean_dvf_error_mm,
      max_dvf_error_mm;
  /// Previous-weight baseline on the same weights, n_cp and horizon.
  double prev_weight_nrmse = std::numeric_limits<double>::quiet_NaN();
};

struct MetricsReport {
  std::vector<RunMetrics> runs;
  std::vector<AggregateRow> aggregate;
};

MetricSummary summarize(const std::vector<double>& samples);

/// Frame-averaged image and DVF metrics over the test range; entry
/// k - test.first of each prediction vector belongs to time index k.
/// weight_nrmse is left NaN.
RunMetrics evaluate_predictions(const ImageSequence& seq,
                                const std::vector<DisplacementField>& truth,
                                const std::vector<Image>& predicted_frames,
                                const std::vector<DisplacementField>& predicted_fields,
                                IndexRange test);

struct TestPlan {
  std::string sequence;
  Forecaster forecaster;
  int h = 1;
  int n_cp = 1;
  int n_test_pca = 1;
  int n_warp = 1;
  bool reset_before_test = false;
};

/// Forecasts over the test range with max(n_test_pca, n_warp) runs (online
/// methods keep learning through cv and test), reconstructs and warps, and
/// aggregates. Diverged runs are excluded and counted.
struct TestOutput {
  MetricsReport report;
  /// Weights and test frames (entry k - test.first) of the first valid run.
  Eigen::MatrixXd first_run_weights;
  std::vector<Image> first_run_frames;
};
TestOutput evaluate_test(const ImageSequence& seq, const std::vector<DisplacementField>& truth,
                         const MotionModel& model, const Eigen::MatrixXd& weights,
                         const TestPlan& plan, const SplitRanges& split, const WarpParams& warp,
                         std::uint64_t global_seed);

/// "previous image" and "original DVF" rows for horizon h.
MetricsReport evaluate_image_baselines(const std::string& sequence, const ImageSequence& seq,
                                       const std::vector<DisplacementField>& truth, int h,
                                       const SplitRanges& split, const WarpParams& warp);

struct ExperimentResult {
  MetricsReport report;
  std::filesystem::path summary_path;
};

/// Runs every configured sequence and writes, under out_dir:
///   config.json, aggregate.csv, summary.json
///   <sequence>/flow_grid.csv, cv_grid.csv, ncp_selection.csv, test_runs.csv
///   <sequence>/weights/<method>_h<h>.csv   predicted weights, first run
///   <sequence>/frames/<method>_h<h>_k<k>.pgm
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir,
                                std::ostream* progress = nullptr);

/// Loads or generates the sequence of a config entry.
ImageSequence materialize_sequence(const SequenceSource& source);

}  // namespace cinepred
