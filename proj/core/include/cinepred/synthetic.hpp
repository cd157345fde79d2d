#pragma once

// Synthetic 2D+t sequences with analytically known deformation: a smooth
// reference image is pushed forward by u(x, t) = sum_j s_j(t) * f_j(x),
// where the f_j are fixed smooth fields and the s_j quasi-periodic signals
// with s_j(0) = 0.

#include "cinepred/grid.hpp"
#include "cinepred/image_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cinepred {

enum class ModeShape {
  TranslateX,  ///< unit field (1, 0)
  TranslateY,  ///< unit field (0, 1)
  BumpX,       ///< Gaussian bump of peak 1 in the x component
  BumpY,       ///< Gaussian bump of peak 1 in the y component
};

struct SyntheticMode {
  ModeShape shape = ModeShape::BumpY;
  double amplitude_px = 0.0;
  double frequency_hz = 0.25;
  /// Phase modulation: theta(t) = 2 pi f t + depth * sin(2 pi f_mod t).
  double phase_mod_depth = 0.0;
  double phase_mod_hz = 0.0;
  /// Relative weight of a sin(2 theta) harmonic.
  double harmonic = 0.0;
  /// Bump centre as a fraction of (width, height) and std as a fraction of
  /// min(width, height). Ignored for translations.
  double center_x = 0.5;
  double center_y = 0.5;
  double bump_sigma = 0.3;

  double signal(double t_seconds) const;
  double max_abs_signal() const { return std::abs(amplitude_px) * (1.0 + std::abs(harmonic)); }
};

struct SyntheticSpec {
  Eigen::Index height = 96;
  Eigen::Index width = 96;
  Eigen::Index frame_count = 200;
  double sampling_hz = 3.2;
  std::string name = "synthetic";
  std::vector<SyntheticMode> modes;
  /// Gaussian intensity noise added to each frame (levels), frame 1 included.
  double noise_std = 0.0;
  int blob_count = 40;
  std::uint64_t seed = 1;
  /// Quantize frames to 8-bit integers as real acquisitions are.
  bool quantize = true;

  /// Two smooth modes (SI "breathing" bump plus an AP bump) with distinct
  /// quasi-periodic drives.
  static SyntheticSpec default_two_mode(Eigen::Index frame_count = 200);
};

struct SyntheticGroundTruth {
  ImageSequence sequence;
  std::vector<DisplacementField> true_dvfs;
  /// weight_signals[j][k] = s_j(t_k).
  std::vector<std::vector<double>> weight_signals;
  Image reference;
};

/// Unit field of one mode on a height x width grid.
DisplacementField mode_field(const SyntheticMode& mode, Eigen::Index height, Eigen::Index width);

/// Smooth reference image (gradient background plus Gaussian blobs).
Image synthetic_reference(Eigen::Index height, Eigen::Index width, int blob_count,
                          std::uint64_t seed);

/// Throws InvalidArgument when the maximal displacement can push content
/// off the image (more than a fifth of the smaller image side).
SyntheticGroundTruth generate_synthetic_sequence(const SyntheticSpec& spec);

/// Resamples `reference` so that frame(x + u(x)) = reference(x), inverting
/// the push-forward field by fixed-point iteration and sampling bicubically.
Image push_forward(const Image& reference, const DisplacementField& field);

}  // namespace cinepred
