#include "cinepred/grid.hpp"

#include <algorithm>
#include <cmath>

namespace cinepred {

Eigen::VectorXd DisplacementField::flatten() const {
  const Eigen::Index h = height();
  const Eigen::Index w = width();
  Eigen::VectorXd v(2 * h * w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const Eigen::Index i = r * w + c;
      v[2 * i] = ux(r, c);
      v[2 * i + 1] = uy(r, c);
    }
  }
  return v;
}

DisplacementField DisplacementField::unflatten(
    const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index height,
    Eigen::Index width) {
  DisplacementField f(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const Eigen::Index i = r * width + c;
      f.ux(r, c) = v[2 * i];
      f.uy(r, c) = v[2 * i + 1];
    }
  }
  return f;
}

double sample_bilinear(const Image& image, double x, double y) {
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const auto x0 = static_cast<Eigen::Index>(std::floor(x));
  const auto y0 = static_cast<Eigen::Index>(std::floor(y));
  const Eigen::Index x1 = std::min(x0 + 1, w - 1);
  const Eigen::Index y1 = std::min(y0 + 1, h - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double top = (1.0 - fx) * image(y0, x0) + fx * image(y0, x1);
  const double bottom = (1.0 - fx) * image(y1, x0) + fx * image(y1, x1);
  return (1.0 - fy) * top + fy * bottom;
}

namespace {

double keys_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

}  // namespace

double sample_bicubic(const Image& image, double x, double y) {
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const auto xi = static_cast<Eigen::Index>(std::floor(x));
  const auto yi = static_cast<Eigen::Index>(std::floor(y));
  const double fx = x - static_cast<double>(xi);
  const double fy = y - static_cast<double>(yi);
  double acc = 0.0;
  for (int m = -1; m <= 2; ++m) {
    const double wy = keys_weight(fy - m);
    if (wy == 0.0) continue;
    const Eigen::Index r = std::clamp<Eigen::Index>(yi + m, 0, h - 1);
    double row = 0.0;
    for (int n = -1; n <= 2; ++n) {
      const double wx = keys_weight(fx - n);
      if (wx == 0.0) continue;
      const Eigen::Index c = std::clamp<Eigen::Index>(xi + n, 0, w - 1);
      row += wx * image(r, c);
    }
    acc += wy * row;
  }
  return acc;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

Image convolve_separable(const Image& image, const std::vector<double>& kernel) {
  if (kernel.size() == 1) return image * kernel[0];
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  const auto radius = static_cast<Eigen::Index>(kernel.size() / 2);

  Image tmp(h, w);
  for (Eigen::Index c = 0; c < w; ++c) {
    for (Eigen::Index r = 0; r < h; ++r) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) {
        const Eigen::Index rr = std::clamp<Eigen::Index>(r + k, 0, h - 1);
        acc += kernel[k + radius] * image(rr, c);
      }
      tmp(r, c) = acc;
    }
  }
  Image out(h, w);
  for (Eigen::Index c = 0; c < w; ++c) {
    for (Eigen::Index r = 0; r < h; ++r) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) {
        const Eigen::Index cc = std::clamp<Eigen::Index>(c + k, 0, w - 1);
        acc += kernel[k + radius] * tmp(r, cc);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  return convolve_separable(image, gaussian_kernel(sigma));
}

void central_gradients(const Image& image, Image& gx, Image& gy) {
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  gx.resize(h, w);
  gy.resize(h, w);
  for (Eigen::Index c = 0; c < w; ++c) {
    const Eigen::Index cl = std::max<Eigen::Index>(c - 1, 0);
    const Eigen::Index cr = std::min<Eigen::Index>(c + 1, w - 1);
    for (Eigen::Index r = 0; r < h; ++r) {
      const Eigen::Index ru = std::max<Eigen::Index>(r - 1, 0);
      const Eigen::Index rd = std::min<Eigen::Index>(r + 1, h - 1);
      gx(r, c) = 0.5 * (image(r, cr) - image(r, cl));
      gy(r, c) = 0.5 * (image(rd, c) - image(ru, c));
    }
  }
}

Image quantize_8bit(const Image& image) {
  return image.round().max(0.0).min(255.0);
}

}  // namespace cinepred
