#include "cinepred/forecasters.hpp"

#include "cinepred/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cinepred {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Rtrl: return "rtrl";
    case Method::Uoro: return "uoro";
    case Method::Snap1: return "snap1";
    case Method::Dni: return "dni";
    case Method::Lms: return "lms";
    case Method::LinReg: return "linreg";
    case Method::FrozenRnn: return "frozen_rnn";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Rtrl, Method::Uoro, Method::Snap1, Method::Dni, Method::Lms,
                   Method::LinReg, Method::FrozenRnn})
    if (method_name(m) == name) return m;
  throw InvalidArgument("unknown forecasting method: " + std::string(name));
}

bool is_recurrent(Method m) {
  return m == Method::Rtrl || m == Method::Uoro || m == Method::Snap1 || m == Method::Dni ||
         m == Method::FrozenRnn;
}

bool is_stochastic(Method m) { return is_recurrent(m); }

std::vector<SupervisedPair> make_supervised_pairs(const Eigen::MatrixXd& weights, int L, int h,
                                                  IndexRange range) {
  if (L < 1) throw InvalidArgument("signal history length L must be >= 1");
  if (h < 1 || h > 7) throw InvalidArgument("horizon h must lie in [1, 7]");
  const Eigen::Index m = weights.rows();
  const Eigen::Index last_valid = m - L - h + 1;
  if (last_valid < 1) throw InvalidArgument("series too short for L + h: no supervised pairs");
  if (range.empty() || range.first < 1 || range.last > last_valid)
    throw InvalidArgument("pair range outside [1, M - L - h + 1]");

  const Eigen::Index p = weights.cols();
  std::vector<SupervisedPair> pairs;
  pairs.reserve(static_cast<std::size_t>(range.size()));
  for (Eigen::Index n = range.first; n <= range.last; ++n) {
    SupervisedPair pair;
    pair.n = n;
    pair.target_index = n + L + h - 1;
    pair.input.resize(1 + p * L);
    pair.input[0] = 1.0;
    for (int l = 0; l < L; ++l)
      pair.input.segment(1 + l * p, p) = weights.row(n - 1 + l).transpose();
    pair.target = weights.row(pair.target_index - 1).transpose();
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<SupervisedPair> make_supervised_pairs(const Eigen::MatrixXd& weights, int L, int h) {
  const Eigen::Index last_valid = weights.rows() - L - h + 1;
  if (last_valid < 1) throw InvalidArgument("series too short for L + h: no supervised pairs");
  return make_supervised_pairs(weights, L, h, IndexRange{1, last_valid});
}

std::string_view output_scaling_name(OutputScaling s) {
  return s == OutputScaling::Affine ? "affine" : "literal";
}

OutputScaling parse_output_scaling(std::string_view name) {
  if (name == "affine") return OutputScaling::Affine;
  if (name == "literal") return OutputScaling::Literal;
  throw InvalidArgument("unknown output scaling: " + std::string(name));
}

NormalizationStats NormalizationStats::from_pairs(std::span<const SupervisedPair> training,
                                                  OutputScaling scaling) {
  if (training.empty()) throw InvalidArgument("normalization needs at least one training pair");
  const Eigen::Index d = training.front().input.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& p : training) mean += p.input;
  mean /= static_cast<double>(training.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& p : training) var += (p.input - mean).array().square().matrix();
  var /= static_cast<double>(training.size());

  NormalizationStats s;
  s.scaling = scaling;
  s.mean = mean;
  s.stddev = var.array().sqrt().matrix();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(s.stddev[i] > 1e-12 * std::max(1.0, std::abs(mean[i])))) {
      s.mean[i] = 0.0;
      s.stddev[i] = 1.0;
    }
  }
  return s;
}

Eigen::VectorXd NormalizationStats::normalize_input(const Eigen::VectorXd& u) const {
  if (u.size() != mean.size()) throw InvalidArgument("input length does not match stats");
  return ((u - mean).array() / stddev.array()).matrix();
}

Eigen::VectorXd NormalizationStats::normalize_target(const Eigen::VectorXd& y) const {
  const Eigen::Index p = y.size();
  if (1 + p > mean.size()) throw InvalidArgument("target longer than the stats allow");
  const auto mu = mean.segment(1, p).array();
  const auto sigma = stddev.segment(1, p).array();
  if (scaling == OutputScaling::Literal) return (y.array() / sigma - mu).matrix();
  return ((y.array() - mu) / sigma).matrix();
}

Eigen::VectorXd NormalizationStats::denormalize_output(const Eigen::VectorXd& y) const {
  const Eigen::Index p = y.size();
  if (1 + p > mean.size()) throw InvalidArgument("output longer than the stats allow");
  const auto mu = mean.segment(1, p).array();
  const auto sigma = stddev.segment(1, p).array();
  if (scaling == OutputScaling::Literal) return (sigma * (y.array() + mu)).matrix();
  return (sigma * y.array() + mu).matrix();
}

std::vector<SupervisedPair> normalize(std::span<const SupervisedPair> pairs,
                                      const NormalizationStats& stats) {
  std::vector<SupervisedPair> out(pairs.begin(), pairs.end());
  for (auto& p : out) {
    p.input = stats.normalize_input(p.input);
    p.target = stats.normalize_target(p.target);
  }
  return out;
}

std::vector<SupervisedPair> denormalize(std::span<const SupervisedPair> pairs,
                                        const NormalizationStats& stats) {
  std::vector<SupervisedPair> out(pairs.begin(), pairs.end());
  for (auto& p : out) {
    p.input = (p.input.array() * stats.stddev.array() + stats.mean.array()).matrix();
    p.target = stats.denormalize_output(p.target);
  }
  return out;
}

Eigen::VectorXd clip_gradient(const Eigen::Ref<const Eigen::VectorXd>& g, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("clipping threshold must be positive");
  const double norm = g.norm();
  if (norm <= tau) return g;
  return g * (tau / norm);
}

LmsFilter::LmsFilter(Eigen::Index input_size, Eigen::Index output_size, double eta,
                     double clip_threshold)
    : w_(Eigen::MatrixXd::Zero(output_size, input_size)), eta_(eta), clip_(clip_threshold) {
  if (input_size < 1 || output_size < 1) throw InvalidArgument("LMS sizes must be positive");
  if (!(clip_threshold > 0.0)) throw InvalidArgument("clip threshold must be positive");
}

Eigen::VectorXd LmsFilter::step(const Eigen::VectorXd& input, const Eigen::VectorXd& target) {
  if (input.size() != w_.cols() || target.size() != w_.rows())
    throw InvalidArgument("LMS dimension mismatch");
  const Eigen::VectorXd prediction = w_ * input;
  const Eigen::MatrixXd outer = (target - prediction) * input.transpose();
  const double norm = outer.norm();
  const double scale = norm > clip_ ? clip_ / norm : 1.0;
  w_ += (eta_ * scale) * outer;
  if (!w_.allFinite()) throw DivergenceError("divergence: non-finite LMS weights");
  return prediction;
}

LinRegModel fit_linear_regression(std::span<const SupervisedPair> training) {
  if (training.empty()) throw InvalidArgument("linear regression needs at least one pair");
  const Eigen::Index n = static_cast<Eigen::Index>(training.size());
  const Eigen::Index d = training.front().input.size();
  const Eigen::Index p = training.front().target.size();
  Eigen::MatrixXd u(n, d);
  Eigen::MatrixXd y(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    u.row(i) = training[i].input.transpose();
    y.row(i) = training[i].target.transpose();
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(u);
  LinRegModel model;
  model.w = cod.solve(y).transpose();
  return model;
}

Eigen::MatrixXd predict_baseline_previous(const Eigen::MatrixXd& weights, int h) {
  if (h < 0) throw InvalidArgument("horizon must be non-negative");
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(weights.rows(), weights.cols(),
                                                  std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index k = h; k < weights.rows(); ++k) out.row(k) = weights.row(k - h);
  return out;
}

ForecastRun run_forecast(const ForecastSettings& s, const Eigen::MatrixXd& weights,
                         Eigen::Index m_train, Eigen::Index k_end, std::uint64_t seed) {
  if (k_end > weights.rows()) throw InvalidArgument("k_end beyond the weight series");
  if (s.method != Method::LinReg && !(s.eta >= 0.0))
    throw InvalidArgument("learning rate must be non-negative");
  if (is_recurrent(s.method) && s.q < 1) throw InvalidArgument("hidden size q must be >= 1");

  const Eigen::Index last_n = k_end - s.L - s.h + 1;
  const auto pairs = make_supervised_pairs(weights.topRows(k_end), s.L, s.h,
                                           IndexRange{1, last_n});
  std::vector<SupervisedPair> training;
  for (const auto& p : pairs)
    if (p.target_index <= m_train) training.push_back(p);
  if (training.empty()) throw InvalidArgument("no training pairs: m_train too small for L + h");

  const NormalizationStats stats = NormalizationStats::from_pairs(training, s.output_scaling);
  const auto normalized = normalize(pairs, stats);

  ForecastRun run;
  run.predicted = Eigen::MatrixXd::Constant(weights.rows(), weights.cols(),
                                            std::numeric_limits<double>::quiet_NaN());
  const Eigen::Index in_size = normalized.front().input.size();
  const Eigen::Index p = weights.cols();

  auto should_reset = [&](Eigen::Index k) {
    return std::find(s.reset_before.begin(), s.reset_before.end(), k) != s.reset_before.end();
  };

  try {
    if (s.method == Method::LinReg) {
      const auto norm_training = normalize(training, stats);
      const LinRegModel model = fit_linear_regression(norm_training);
      for (const auto& pair : normalized)
        run.predicted.row(pair.target_index - 1) =
            stats.denormalize_output(model.predict(pair.input)).transpose();
    } else if (s.method == Method::Lms) {
      LmsFilter lms(in_size, p, s.eta);
      for (const auto& pair : normalized) {
        if (should_reset(pair.target_index)) lms.set_weights(Eigen::MatrixXd::Zero(p, in_size));
        run.predicted.row(pair.target_index - 1) =
            stats.denormalize_output(lms.step(pair.input, pair.target)).transpose();
      }
    } else {
      std::mt19937_64 rng(seed);
      RnnWeights init = RnnWeights::gaussian(s.q, in_size, p, kRnnInitStd, rng);
      RnnTrainer trainer = RnnTrainer::Rtrl;
      switch (s.method) {
        case Method::Rtrl: trainer = RnnTrainer::Rtrl; break;
        case Method::Uoro: trainer = RnnTrainer::Uoro; break;
        case Method::Snap1: trainer = RnnTrainer::Snap1; break;
        case Method::Dni: trainer = RnnTrainer::Dni; break;
        case Method::FrozenRnn: trainer = RnnTrainer::Frozen; break;
        default: break;
      }
      auto net = make_recurrent_net(trainer, std::move(init), s.eta, rng(), kRnnClip);
      for (const auto& pair : normalized) {
        if (should_reset(pair.target_index)) net->reset_state();
        const RnnStep step = net->step(pair.input, pair.target);
        run.predicted.row(pair.target_index - 1) =
            stats.denormalize_output(step.prediction).transpose();
      }
    }
  } catch (const DivergenceError& e) {
    run.diverged = true;
    run.failure = e.what();
  }
  if (!run.diverged) {
    for (Eigen::Index k = 0; k < run.predicted.rows(); ++k) {
      const auto row = run.predicted.row(k);
      if (!row.array().isNaN().all() && !row.allFinite()) {
        run.diverged = true;
        run.failure = "divergence: non-finite prediction";
        break;
      }
    }
  }
  return run;
}

}  // namespace cinepred
