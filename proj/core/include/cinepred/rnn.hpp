#pragma once

// Single-hidden-layer vanilla RNN trained online:
//
//   x_{n+1} = tanh(W_a x_n + W_b u_n),   y_{n+1} = W_c x_{n+1}
//
// with the instantaneous loss ||y_{n+1} - target||^2. The trainers differ in
// how they estimate the loss gradient with respect to the recurrent
// parameters theta = (W_a, W_b):
//
//   RTRL    exact influence matrix dx/dtheta (q x n_theta)
//   UORO    unbiased rank-one estimate x_tilde * theta_tilde^T
//   SnAp-1  influence restricted to each parameter's own hidden unit
//   DNI     one-step backprop plus a learned linear synthetic credit A [x; 1]
//   Frozen  W_a, W_b fixed; only W_c learns
//
// Gradient vectors use the layout [vec(W_a), vec(W_b), vec(W_c)], each block
// row-major, so the entry for W_a(i, j) sits at i * q + j.

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>

namespace cinepred {

enum class RnnTrainer { Rtrl, Uoro, Snap1, Dni, Frozen };

struct RnnWeights {
  Eigen::MatrixXd wa;  ///< q x q
  Eigen::MatrixXd wb;  ///< q x (m + 1)
  Eigen::MatrixXd wc;  ///< p x q

  Eigen::Index hidden_size() const { return wa.rows(); }
  Eigen::Index input_size() const { return wb.cols(); }
  Eigen::Index output_size() const { return wc.rows(); }
  Eigen::Index recurrent_param_count() const { return wa.size() + wb.size(); }
  Eigen::Index param_count() const { return recurrent_param_count() + wc.size(); }

  /// Entries drawn i.i.d. from N(0, sigma^2) in the order W_a, W_b, W_c.
  static RnnWeights gaussian(Eigen::Index q, Eigen::Index input_size, Eigen::Index p,
                             double sigma, std::mt19937_64& rng);
  static RnnWeights zeros(Eigen::Index q, Eigen::Index input_size, Eigen::Index p);

  Eigen::VectorXd flatten() const;
  void assign(const Eigen::Ref<const Eigen::VectorXd>& flat);
};

struct RnnForward {
  Eigen::VectorXd hidden;  ///< x_{n+1}
  Eigen::VectorXd output;  ///< y_{n+1}
};

/// Throws InvalidArgument on dimension mismatch.
RnnForward rnn_forward(const RnnWeights& w, const Eigen::VectorXd& hidden,
                       const Eigen::VectorXd& input);

struct RnnStep {
  Eigen::VectorXd prediction;
  /// Unclipped gradient estimate used for this step's update.
  Eigen::VectorXd gradient;
};

class RecurrentNet {
 public:
  RecurrentNet(RnnWeights weights, double eta, double clip_threshold);
  virtual ~RecurrentNet() = default;
  RecurrentNet(const RecurrentNet&) = delete;
  RecurrentNet& operator=(const RecurrentNet&) = delete;

  /// Forward pass on `input`, gradient of the squared error against
  /// `target`, clipped SGD update. Throws DivergenceError when any weight or
  /// state entry becomes non-finite.
  RnnStep step(const Eigen::VectorXd& input, const Eigen::VectorXd& target);

  /// Zeroes the hidden state and the trainer's sensitivity state.
  virtual void reset_state();

  const RnnWeights& weights() const { return weights_; }
  const Eigen::VectorXd& hidden() const { return hidden_; }
  void set_hidden(const Eigen::VectorXd& x) { hidden_ = x; }
  double eta() const { return eta_; }

 protected:
  /// Gradient for the step that moved `prev_hidden` to `fwd.hidden`, given
  /// dL/dx_{n+1}. Advances the trainer's own state; weights are not yet
  /// updated when this runs.
  virtual Eigen::VectorXd recurrent_gradient(const Eigen::VectorXd& prev_hidden,
                                             const Eigen::VectorXd& input,
                                             const RnnForward& fwd,
                                             const Eigen::VectorXd& dloss_dhidden) = 0;
  virtual void after_update() {}
  virtual bool state_finite() const { return true; }

  RnnWeights weights_;
  Eigen::VectorXd hidden_;
  double eta_;
  double clip_;
};

class RtrlNet : public RecurrentNet {
 public:
  RtrlNet(RnnWeights weights, double eta, double clip_threshold = 100.0);
  void reset_state() override;
  /// dx_n / dtheta, q x n_theta.
  const Eigen::MatrixXd& influence() const { return influence_; }

 protected:
  Eigen::VectorXd recurrent_gradient(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                     const RnnForward&, const Eigen::VectorXd&) override;
  bool state_finite() const override { return influence_.allFinite(); }

 private:
  Eigen::MatrixXd influence_;
};

class UoroNet : public RecurrentNet {
 public:
  UoroNet(RnnWeights weights, double eta, std::uint64_t seed, double clip_threshold = 100.0);
  void reset_state() override;
  const Eigen::VectorXd& x_tilde() const { return x_tilde_; }
  const Eigen::VectorXd& theta_tilde() const { return theta_tilde_; }

  static constexpr double kRhoFloor = 1e-7;

 protected:
  Eigen::VectorXd recurrent_gradient(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                     const RnnForward&, const Eigen::VectorXd&) override;
  bool state_finite() const override {
    return x_tilde_.allFinite() && theta_tilde_.allFinite();
  }

 private:
  Eigen::VectorXd x_tilde_;
  Eigen::VectorXd theta_tilde_;
  std::mt19937_64 rng_;
};

class Snap1Net : public RecurrentNet {
 public:
  Snap1Net(RnnWeights weights, double eta, double clip_threshold = 100.0);
  void reset_state() override;
  /// d x_owner(theta) / d theta, one entry per recurrent parameter.
  const Eigen::VectorXd& influence() const { return influence_; }

 protected:
  Eigen::VectorXd recurrent_gradient(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                     const RnnForward&, const Eigen::VectorXd&) override;
  bool state_finite() const override { return influence_.allFinite(); }

 private:
  Eigen::VectorXd influence_;
};

class DniNet : public RecurrentNet {
 public:
  DniNet(RnnWeights weights, double eta, double clip_threshold = 100.0);
  /// Synthetic credit matrix A, q x (q + 1); zero at construction.
  const Eigen::MatrixXd& credit_matrix() const { return credit_; }
  void set_credit_matrix(const Eigen::MatrixXd& a) { credit_ = a; }
  /// A [x; 1].
  Eigen::VectorXd synthetic_credit(const Eigen::VectorXd& x) const;
  /// Unclipped gradient of the last A update.
  const Eigen::MatrixXd& last_credit_gradient() const { return credit_grad_; }

 protected:
  Eigen::VectorXd recurrent_gradient(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                     const RnnForward&, const Eigen::VectorXd&) override;
  void after_update() override;
  bool state_finite() const override { return credit_.allFinite(); }

 private:
  Eigen::MatrixXd credit_;
  Eigen::MatrixXd credit_grad_;
};

class FrozenNet : public RecurrentNet {
 public:
  FrozenNet(RnnWeights weights, double eta, double clip_threshold = 100.0);

 protected:
  Eigen::VectorXd recurrent_gradient(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                     const RnnForward&, const Eigen::VectorXd&) override;
};

std::unique_ptr<RecurrentNet> make_recurrent_net(RnnTrainer trainer, RnnWeights weights,
                                                 double eta, std::uint64_t seed,
                                                 double clip_threshold = 100.0);

}  // namespace cinepred
