#pragma once

// Dense pyramidal iterative Lucas-Kanade registration and the grid search
// over its parameters.

#include "cinepred/grid.hpp"
#include "cinepred/image_io.hpp"

#include <utility>
#include <vector>

namespace cinepred {

struct FlowParams {
  double sigma_init = 0.1;  ///< pre-filter std of both inputs (0 disables)
  double sigma_sub = 0.5;   ///< Gaussian std before each 2x decimation
  double sigma_lk = 2.0;    ///< Gaussian window weighting the moment matrix
  int n_layers = 2;
  int n_iter = 1;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
  bool operator==(const FlowParams&) const = default;
};

struct DvfSeries {
  /// fields[k] maps frame 1 onto frame k + 1; fields[0] is zero.
  std::vector<DisplacementField> fields;
  FlowParams params;
};

/// Level 0 is `image`; level l + 1 is level l blurred with sigma_sub and
/// decimated by 2 (ceil dimensions). Throws when the coarsest level is
/// smaller than 8x8.
std::vector<Image> gaussian_pyramid(const Image& image, int n_layers, double sigma_sub);

/// Estimates u with reference(x) ~ target(x + u(x)).
DisplacementField lucas_kanade_dense(const Image& reference, const Image& target,
                                     const FlowParams& params);

DvfSeries register_sequence(const ImageSequence& seq, const FlowParams& params);

/// Registers frames 2..m_train only; the remaining fields are left zero-sized.
std::vector<DisplacementField> register_prefix(const ImageSequence& seq,
                                               const FlowParams& params, Eigen::Index m_train);

/// Cartesian product of per-parameter value lists, in nested order
/// sigma_init > sigma_sub > sigma_lk > n_layers > n_iter.
std::vector<FlowParams> make_flow_grid(const std::vector<double>& sigma_init,
                                       const std::vector<double>& sigma_sub,
                                       const std::vector<double>& sigma_lk,
                                       const std::vector<int>& n_layers,
                                       const std::vector<int>& n_iter);

struct FlowGridEntry {
  FlowParams params;
  double e_gt = 0.0;
};

struct FlowGridResult {
  FlowParams best;
  double best_e_gt = 0.0;
  std::vector<FlowGridEntry> entries;  ///< one per grid point, grid order
};

/// Minimizes the ground-truth registration error over frames 2..m_train.
/// Ties resolve to the earliest grid point.
FlowGridResult optimize_flow_params(const ImageSequence& seq,
                                    const std::vector<FlowParams>& grid, Eigen::Index m_train);

}  // namespace cinepred
