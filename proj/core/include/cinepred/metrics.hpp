#pragma once

// Evaluation quantities: weight and image nRMSE, registration errors,
// correlation, SSIM, endpoint errors and confidence half-ranges.

#include "cinepred/grid.hpp"
#include "cinepred/image_io.hpp"

#include <Eigen/Core>

#include <span>
#include <utility>
#include <vector>

namespace cinepred {

/// Inclusive 1-based time-index interval [first, last].
struct IndexRange {
  Eigen::Index first = 1;
  Eigen::Index last = 0;

  Eigen::Index size() const { return last >= first ? last - first + 1 : 0; }
  bool empty() const { return size() == 0; }
  bool contains(Eigen::Index k) const { return k >= first && k <= last; }
  bool operator==(const IndexRange&) const = default;
};

/// Normalized RMSE between predicted and true weight series (rows = time
/// t_1.., cols = component) over the rows in `range`. The denominator is the
/// deviation of the truth from its per-component mean over the range.
double weight_nrmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                    IndexRange range);

/// delta(x) = |I(x + u(x), t_k) - I(x, t_1)| with bilinear sampling; k is
/// 1-based.
Image instant_registration_error(const DisplacementField& field, const ImageSequence& seq,
                                 Eigen::Index k);
double instant_registration_error(const DisplacementField& field, const ImageSequence& seq,
                                  Eigen::Index row, Eigen::Index col, Eigen::Index k);

/// RMS of delta over pixels divided by the RMS deviation of frame 1 from
/// its mean intensity.
double instant_nrmse(const DisplacementField& field, const ImageSequence& seq, Eigen::Index k);

/// Mean of instant_nrmse over runs and the frames of `range`.
/// predicted[i][k - range.first] is run i's field for frame k.
double mean_pred_registration_error(
    const std::vector<std::vector<DisplacementField>>& predicted, const ImageSequence& seq,
    IndexRange range);

/// RMS of delta over all pixels of frames 2..m_train; fields[k - 1] maps
/// frame 1 onto frame k.
double ground_truth_registration_error(const std::vector<DisplacementField>& fields,
                                       const ImageSequence& seq, Eigen::Index m_train);

/// nRMSE with pixels in the role of weight components.
double image_nrmse(const Image& pred, const Image& truth);

/// Pearson correlation of flattened intensities.
double cross_correlation(const Image& a, const Image& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Mean local SSIM over the positions where the full Gaussian window fits.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

struct EndpointErrors {
  double mean_mm = 0.0;
  double max_mm = 0.0;
};

/// Euclidean endpoint errors with components scaled by (row, col) spacing.
EndpointErrors dvf_endpoint_errors(const DisplacementField& pred,
                                   const DisplacementField& truth,
                                   std::array<double, 2> spacing_mm);

/// 1.96 * sample std / sqrt(n); requires n >= 2.
double confidence_half_range(std::span<const double> samples);

double mean(std::span<const double> samples);

}  // namespace cinepred
