#pragma once

// Image and displacement-field primitives shared by every module: storage
// types, bilinear sampling, separable Gaussian filtering.

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace cinepred {

/// Grayscale intensity grid, indexed (row, col) = (y, x). Values are reals,
/// nominally in [0, 255].
using Image = Eigen::ArrayXXd;

/// Per-pixel push-forward displacement u(x) in pixels. `ux` is the column
/// (x) component and `uy` the row (y) component.
struct DisplacementField {
  Eigen::ArrayXXd ux;
  Eigen::ArrayXXd uy;

  DisplacementField() = default;
  DisplacementField(Eigen::Index height, Eigen::Index width)
      : ux(Eigen::ArrayXXd::Zero(height, width)),
        uy(Eigen::ArrayXXd::Zero(height, width)) {}

  static DisplacementField zeros(Eigen::Index height, Eigen::Index width) {
    return DisplacementField(height, width);
  }

  Eigen::Index height() const { return ux.rows(); }
  Eigen::Index width() const { return ux.cols(); }
  Eigen::Index pixel_count() const { return ux.size(); }

  bool all_finite() const { return ux.allFinite() && uy.allFinite(); }

  /// Interleaved flattening ux(x1), uy(x1), ux(x2), ... with pixels in
  /// row-major order.
  Eigen::VectorXd flatten() const;
  static DisplacementField unflatten(const Eigen::Ref<const Eigen::VectorXd>& v,
                                     Eigen::Index height, Eigen::Index width);
};

/// Bilinear interpolation at (x, y) with coordinates clamped to the grid.
double sample_bilinear(const Image& image, double x, double y);

/// Bicubic (Catmull-Rom / Keys a = -0.5) interpolation with border clamping.
double sample_bicubic(const Image& image, double x, double y);

/// Normalized 1D Gaussian kernel truncated at ceil(3 sigma). sigma <= 0
/// yields the identity kernel {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable convolution with border replication.
Image convolve_separable(const Image& image, const std::vector<double>& kernel);

/// Gaussian smoothing (identity when sigma <= 0).
Image gaussian_blur(const Image& image, double sigma);

/// Central-difference gradients with border replication.
void central_gradients(const Image& image, Image& gx, Image& gy);

/// Round to nearest integer and clamp to [0, 255].
Image quantize_8bit(const Image& image);

}  // namespace cinepred
