#include "cinepred/metrics.hpp"

#include "cinepred/error.hpp"

#include <algorithm>
#include <cmath>

namespace cinepred {

double weight_nrmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                    IndexRange range) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw InvalidArgument("weight_nrmse: prediction and truth shapes differ");
  if (range.empty()) throw InvalidArgument("weight_nrmse: empty range");
  if (range.first < 1 || range.last > truth.rows())
    throw InvalidArgument("weight_nrmse: range outside the series");

  const auto n = range.size();
  const auto pred_block = pred.middleRows(range.first - 1, n);
  const auto truth_block = truth.middleRows(range.first - 1, n);
  const Eigen::RowVectorXd mean_row = truth_block.colwise().mean();
  const double num = (pred_block - truth_block).squaredNorm();
  const double den = (truth_block.rowwise() - mean_row).squaredNorm();
  if (!(den > 0.0)) throw InvalidArgument("weight_nrmse: truth is constant over the range");
  return std::sqrt(num / den);
}

double instant_registration_error(const DisplacementField& field, const ImageSequence& seq,
                                  Eigen::Index row, Eigen::Index col, Eigen::Index k) {
  if (k < 1 || k > seq.frame_count()) throw InvalidArgument("frame index out of range");
  const Image& first = seq.frames.front();
  const Image& frame = seq.frames[k - 1];
  const double x = static_cast<double>(col) + field.ux(row, col);
  const double y = static_cast<double>(row) + field.uy(row, col);
  return std::abs(sample_bilinear(frame, x, y) - first(row, col));
}

Image instant_registration_error(const DisplacementField& field, const ImageSequence& seq,
                                 Eigen::Index k) {
  if (k < 1 || k > seq.frame_count()) throw InvalidArgument("frame index out of range");
  if (field.height() != seq.height() || field.width() != seq.width())
    throw InvalidArgument("field shape does not match the sequence");
  Image delta(seq.height(), seq.width());
  for (Eigen::Index r = 0; r < delta.rows(); ++r)
    for (Eigen::Index c = 0; c < delta.cols(); ++c)
      delta(r, c) = instant_registration_error(field, seq, r, c, k);
  return delta;
}

double instant_nrmse(const DisplacementField& field, const ImageSequence& seq, Eigen::Index k) {
  const Image delta = instant_registration_error(field, seq, k);
  const Image& first = seq.frames.front();
  const double den = (first - first.mean()).square().sum();
  if (!(den > 0.0)) throw InvalidArgument("instant_nrmse: frame 1 is constant");
  return std::sqrt(delta.square().sum() / den);
}

double mean_pred_registration_error(
    const std::vector<std::vector<DisplacementField>>& predicted, const ImageSequence& seq,
    IndexRange range) {
  if (predicted.empty()) throw InvalidArgument("E_pred requires at least one run");
  if (range.empty()) throw InvalidArgument("E_pred requires a nonempty range");
  double acc = 0.0;
  for (const auto& run : predicted) {
    if (static_cast<Eigen::Index>(run.size()) != range.size())
      throw InvalidArgument("E_pred: run does not cover the range");
    for (Eigen::Index k = range.first; k <= range.last; ++k)
      acc += instant_nrmse(run[k - range.first], seq, k);
  }
  return acc / static_cast<double>(predicted.size() * range.size());
}

double ground_truth_registration_error(const std::vector<DisplacementField>& fields,
                                       const ImageSequence& seq, Eigen::Index m_train) {
  if (m_train < 2 || m_train > seq.frame_count())
    throw InvalidArgument("E_gt: m_train must satisfy 2 <= m_train <= M");
  if (static_cast<Eigen::Index>(fields.size()) < m_train)
    throw InvalidArgument("E_gt: fewer fields than frames");
  double acc = 0.0;
  for (Eigen::Index k = 2; k <= m_train; ++k)
    acc += instant_registration_error(fields[k - 1], seq, k).square().sum();
  const double count = static_cast<double>(m_train - 1) *
                       static_cast<double>(seq.height() * seq.width());
  return std::sqrt(acc / count);
}

double image_nrmse(const Image& pred, const Image& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw InvalidArgument("image_nrmse: shapes differ");
  const double den = (truth - truth.mean()).square().sum();
  if (!(den > 0.0)) throw InvalidArgument("image_nrmse: truth image is constant");
  return std::sqrt((pred - truth).square().sum() / den);
}

double cross_correlation(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("cross_correlation: shapes differ");
  const Image da = a - a.mean();
  const Image db = b - b.mean();
  const double va = da.square().sum();
  const double vb = db.square().sum();
  if (!(va > 0.0) || !(vb > 0.0))
    throw InvalidArgument("cross_correlation: zero-variance image");
  return std::clamp((da * db).sum() / std::sqrt(va * vb), -1.0, 1.0);
}

namespace {

// Valid-region Gaussian filtering with an explicit window size.
Image filter_valid(const Image& img, const std::vector<double>& k) {
  const auto n = static_cast<Eigen::Index>(k.size());
  const Eigen::Index h = img.rows() - n + 1;
  const Eigen::Index w = img.cols() - n + 1;
  Image tmp(h, img.cols());
  for (Eigen::Index c = 0; c < img.cols(); ++c)
    for (Eigen::Index r = 0; r < h; ++r) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += k[i] * img(r + i, c);
      tmp(r, c) = acc;
    }
  Image out(h, w);
  for (Eigen::Index c = 0; c < w; ++c)
    for (Eigen::Index r = 0; r < h; ++r) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += k[i] * tmp(r, c + i);
      out(r, c) = acc;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("ssim: shapes differ");
  if (params.window < 1 || params.window % 2 == 0)
    throw InvalidArgument("ssim: window must be odd and positive");
  if (a.rows() < params.window || a.cols() < params.window)
    throw InvalidArgument("ssim: image smaller than the window");

  std::vector<double> k(params.window);
  const int half = params.window / 2;
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    k[i + half] = std::exp(-0.5 * i * i / (params.sigma * params.sigma));
    sum += k[i + half];
  }
  for (double& v : k) v /= sum;

  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
  const Image mu_a = filter_valid(a, k);
  const Image mu_b = filter_valid(b, k);
  const Image var_a = filter_valid(a * a, k) - mu_a * mu_a;
  const Image var_b = filter_valid(b * b, k) - mu_b * mu_b;
  const Image cov = filter_valid(a * b, k) - mu_a * mu_b;
  const Image map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                    ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
  return map.mean();
}

EndpointErrors dvf_endpoint_errors(const DisplacementField& pred,
                                   const DisplacementField& truth,
                                   std::array<double, 2> spacing_mm) {
  if (pred.height() != truth.height() || pred.width() != truth.width())
    throw InvalidArgument("dvf_endpoint_errors: shapes differ");
  const Eigen::ArrayXXd dx = (pred.ux - truth.ux) * spacing_mm[1];
  const Eigen::ArrayXXd dy = (pred.uy - truth.uy) * spacing_mm[0];
  const Eigen::ArrayXXd norm = (dx.square() + dy.square()).sqrt();
  return {norm.mean(), norm.maxCoeff()};
}

double mean(std::span<const double> samples) {
  if (samples.empty()) throw InvalidArgument("mean of an empty sample");
  double acc = 0.0;
  for (double v : samples) acc += v;
  return acc / static_cast<double>(samples.size());
}

double confidence_half_range(std::span<const double> samples) {
  if (samples.size() < 2)
    throw InvalidArgument("confidence_half_range requires at least 2 samples");
  const double m = mean(samples);
  double ss = 0.0;
  for (double v : samples) ss += (v - m) * (v - m);
  const auto n = static_cast<double>(samples.size());
  return 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace cinepred
