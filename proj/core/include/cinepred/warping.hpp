#pragma once

// Forward warping of the initial frame by a push-forward field using
// Nadaraya-Watson regression: every source pixel x carries I(x, t_1) to
// x + u(x), and each output pixel is the Gaussian-weighted mean of the
// intensities landing within the cutoff radius.

#include "cinepred/grid.hpp"

namespace cinepred {

enum class WarpFallback {
  ReferenceIntensity,  ///< keep the reference value at that pixel
  NearestSource,       ///< intensity of the closest landing point
};

struct WarpParams {
  double sigma_warp = 0.5;
  double cutoff_radius = 2.0;
  WarpFallback fallback = WarpFallback::ReferenceIntensity;

  void validate() const;
};

/// Output is clamped to [0, 255]. Throws InvalidArgument on shape mismatch
/// or non-finite field entries.
Image warp_image(const Image& reference, const DisplacementField& field,
                 const WarpParams& params = {});

}  // namespace cinepred
