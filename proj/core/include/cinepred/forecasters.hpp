#pragma once

// Forecasting of the time-dependent PCA weights h steps ahead.
//
// A weight series is an M x n_cp matrix whose row k - 1 holds w(t_k). The
// supervised pair n (1-based) is
//
//   input  u_n     = [1, w(t_n), w(t_{n+1}), ..., w(t_{n+L-1})]   (m + 1 = n_cp L + 1)
//   target y_{n+1} = w(t_{n+L+h-1})
//
// so pair n predicts time index k = n + L + h - 1 from data up to k - h.

#include "cinepred/metrics.hpp"
#include "cinepred/rnn.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cinepred {

inline constexpr double kRnnClip = 100.0;
inline constexpr double kLmsClip = 2.0;
inline constexpr double kRnnInitStd = 0.02;

enum class Method { Rtrl, Uoro, Snap1, Dni, Lms, LinReg, FrozenRnn };

std::string_view method_name(Method m);
/// Accepts the names produced by method_name ("rtrl", "uoro", "snap1",
/// "dni", "lms", "linreg", "frozen_rnn").
Method parse_method(std::string_view name);
bool is_recurrent(Method m);
/// True when repeated runs with different seeds can differ.
bool is_stochastic(Method m);

struct SupervisedPair {
  Eigen::VectorXd input;
  Eigen::VectorXd target;
  Eigen::Index n = 0;             ///< 1-based pair index
  Eigen::Index target_index = 0;  ///< k = n + L + h - 1
};

/// Pairs for n in `range` (1-based, inclusive), which must lie inside
/// [1, M - L - h + 1]. Throws when the valid range is empty.
std::vector<SupervisedPair> make_supervised_pairs(const Eigen::MatrixXd& weights, int L, int h,
                                                  IndexRange range);
/// All valid pairs.
std::vector<SupervisedPair> make_supervised_pairs(const Eigen::MatrixXd& weights, int L, int h);

/// How a network output returns to weight units, using the stats of the
/// first-step entries w_j(t_n):
///   Affine   sigma * y + mu, so targets are standardized like the inputs
///   Literal  sigma * (y + mu), so targets become y / sigma - mu; mu stays in
///            weight units and shifts the normalized targets
enum class OutputScaling { Affine, Literal };

std::string_view output_scaling_name(OutputScaling s);
OutputScaling parse_output_scaling(std::string_view name);

/// Mean and standard deviation of the training inputs. Constant
/// coordinates (the bias among them) get mean 0 and std 1 so they pass
/// through unchanged.
struct NormalizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  OutputScaling scaling = OutputScaling::Affine;

  static NormalizationStats from_pairs(std::span<const SupervisedPair> training,
                                       OutputScaling scaling = OutputScaling::Affine);

  Eigen::VectorXd normalize_input(const Eigen::VectorXd& u) const;
  /// Inverse of denormalize_output.
  Eigen::VectorXd normalize_target(const Eigen::VectorXd& y) const;
  Eigen::VectorXd denormalize_output(const Eigen::VectorXd& y) const;
};

std::vector<SupervisedPair> normalize(std::span<const SupervisedPair> pairs,
                                      const NormalizationStats& stats);
std::vector<SupervisedPair> denormalize(std::span<const SupervisedPair> pairs,
                                        const NormalizationStats& stats);

/// Returns g when ||g|| <= tau, else g * tau / ||g||.
Eigen::VectorXd clip_gradient(const Eigen::Ref<const Eigen::VectorXd>& g, double tau);

/// Least-mean-squares filter y = W u, W zero-initialized.
class LmsFilter {
 public:
  LmsFilter(Eigen::Index input_size, Eigen::Index output_size, double eta,
            double clip_threshold = kLmsClip);

  /// Predicts, then W += eta * clip(e u^T) with e = target - prediction.
  Eigen::VectorXd step(const Eigen::VectorXd& input, const Eigen::VectorXd& target);

  const Eigen::MatrixXd& weights() const { return w_; }
  void set_weights(const Eigen::MatrixXd& w) { w_ = w; }

 private:
  Eigen::MatrixXd w_;
  double eta_;
  double clip_;
};

struct LinRegModel {
  Eigen::MatrixXd w;  ///< p x (m + 1)
  Eigen::VectorXd predict(const Eigen::VectorXd& input) const { return w * input; }
};

/// Minimum-norm least-squares fit of y = W u.
LinRegModel fit_linear_regression(std::span<const SupervisedPair> training);

/// Row k of the result is row k - h of `weights`; the first h rows are NaN.
Eigen::MatrixXd predict_baseline_previous(const Eigen::MatrixXd& weights, int h);

struct ForecastSettings {
  Method method = Method::Lms;
  double eta = 0.05;
  int L = 6;
  int q = 10;
  int h = 1;
  OutputScaling output_scaling = OutputScaling::Affine;
  /// Target indices before which recurrent/LMS state is reset; empty keeps
  /// state across training, cross-validation and test.
  std::vector<Eigen::Index> reset_before;
};

struct ForecastRun {
  /// Same shape as the input series; NaN where no prediction was made.
  Eigen::MatrixXd predicted;
  bool diverged = false;
  std::string failure;
};

/// Runs one forecaster through the series up to time index `k_end`.
/// Normalization statistics (and the linear regression fit) use only pairs
/// whose target index is <= m_train; online methods then predict-and-learn
/// on every pair in time order.
ForecastRun run_forecast(const ForecastSettings& settings, const Eigen::MatrixXd& weights,
                         Eigen::Index m_train, Eigen::Index k_end, std::uint64_t seed);

}  // namespace cinepred
