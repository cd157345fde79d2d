#include "cinepred/rnn.hpp"

#include "cinepred/error.hpp"
#include "cinepred/forecasters.hpp"

#include <cmath>

namespace cinepred {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void fill_gaussian(Eigen::MatrixXd& m, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
}

void write_rowmajor(Eigen::Ref<Eigen::VectorXd> dst, const Eigen::MatrixXd& m) {
  Eigen::Map<RowMajorMatrix>(dst.data(), m.rows(), m.cols()) = m;
}

void read_rowmajor(Eigen::MatrixXd& m, const Eigen::Ref<const Eigen::VectorXd>& src) {
  m = Eigen::Map<const RowMajorMatrix>(src.data(), m.rows(), m.cols());
}

}  // namespace

RnnWeights RnnWeights::gaussian(Eigen::Index q, Eigen::Index input_size, Eigen::Index p,
                                double sigma, std::mt19937_64& rng) {
  RnnWeights w = zeros(q, input_size, p);
  fill_gaussian(w.wa, sigma, rng);
  fill_gaussian(w.wb, sigma, rng);
  fill_gaussian(w.wc, sigma, rng);
  return w;
}

RnnWeights RnnWeights::zeros(Eigen::Index q, Eigen::Index input_size, Eigen::Index p) {
  if (q < 1 || input_size < 1 || p < 1) throw InvalidArgument("RNN sizes must be positive");
  return {Eigen::MatrixXd::Zero(q, q), Eigen::MatrixXd::Zero(q, input_size),
          Eigen::MatrixXd::Zero(p, q)};
}

Eigen::VectorXd RnnWeights::flatten() const {
  Eigen::VectorXd v(param_count());
  write_rowmajor(v.segment(0, wa.size()), wa);
  write_rowmajor(v.segment(wa.size(), wb.size()), wb);
  write_rowmajor(v.segment(wa.size() + wb.size(), wc.size()), wc);
  return v;
}

void RnnWeights::assign(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != param_count()) throw InvalidArgument("flat parameter length mismatch");
  read_rowmajor(wa, flat.segment(0, wa.size()));
  read_rowmajor(wb, flat.segment(wa.size(), wb.size()));
  read_rowmajor(wc, flat.segment(wa.size() + wb.size(), wc.size()));
}

RnnForward rnn_forward(const RnnWeights& w, const Eigen::VectorXd& hidden,
                       const Eigen::VectorXd& input) {
  if (w.wa.rows() != w.wa.cols() || w.wb.rows() != w.wa.rows() || w.wc.cols() != w.wa.rows())
    throw InvalidArgument("inconsistent RNN weight shapes");
  if (hidden.size() != w.hidden_size()) throw InvalidArgument("hidden state size mismatch");
  if (input.size() != w.input_size()) throw InvalidArgument("RNN input size mismatch");
  RnnForward out;
  out.hidden = (w.wa * hidden + w.wb * input).array().tanh().matrix();
  out.output = w.wc * out.hidden;
  return out;
}

RecurrentNet::RecurrentNet(RnnWeights weights, double eta, double clip_threshold)
    : weights_(std::move(weights)),
      hidden_(Eigen::VectorXd::Zero(weights_.hidden_size())),
      eta_(eta),
      clip_(clip_threshold) {
  if (!(clip_threshold > 0.0)) throw InvalidArgument("clip threshold must be positive");
  if (!(eta >= 0.0)) throw InvalidArgument("learning rate must be non-negative");
}

void RecurrentNet::reset_state() { hidden_.setZero(); }

RnnStep RecurrentNet::step(const Eigen::VectorXd& input, const Eigen::VectorXd& target) {
  if (target.size() != weights_.output_size()) throw InvalidArgument("RNN target size mismatch");
  const Eigen::VectorXd prev = hidden_;
  const RnnForward fwd = rnn_forward(weights_, prev, input);
  const Eigen::VectorXd dloss_dy = 2.0 * (fwd.output - target);
  const Eigen::VectorXd dloss_dx = weights_.wc.transpose() * dloss_dy;

  const Eigen::Index n_rec = weights_.recurrent_param_count();
  Eigen::VectorXd grad(weights_.param_count());
  grad.head(n_rec) = recurrent_gradient(prev, input, fwd, dloss_dx);
  write_rowmajor(grad.tail(weights_.wc.size()), dloss_dy * fwd.hidden.transpose());

  if (eta_ != 0.0) {
    const Eigen::VectorXd update = clip_gradient(grad, clip_);
    weights_.assign(weights_.flatten() - eta_ * update);
  }
  after_update();
  hidden_ = fwd.hidden;

  if (!hidden_.allFinite() || !weights_.wa.allFinite() || !weights_.wb.allFinite() ||
      !weights_.wc.allFinite() || !state_finite())
    throw DivergenceError("divergence: non-finite RNN state");
  return {fwd.output, std::move(grad)};
}

// Immediate partial dF/dtheta before the tanh derivative: row i holds
// prev_hidden at the W_a(i, .) slots and input at the W_b(i, .) slots.

RtrlNet::RtrlNet(RnnWeights weights, double eta, double clip_threshold)
    : RecurrentNet(std::move(weights), eta, clip_threshold) {
  RtrlNet::reset_state();
}

void RtrlNet::reset_state() {
  RecurrentNet::reset_state();
  influence_ = Eigen::MatrixXd::Zero(weights_.hidden_size(), weights_.recurrent_param_count());
}

Eigen::VectorXd RtrlNet::recurrent_gradient(const Eigen::VectorXd& prev,
                                            const Eigen::VectorXd& input,
                                            const RnnForward& fwd,
                                            const Eigen::VectorXd& dloss_dx) {
  const Eigen::Index q = weights_.hidden_size();
  const Eigen::Index n_in = weights_.input_size();
  Eigen::MatrixXd next = weights_.wa * influence_;
  for (Eigen::Index i = 0; i < q; ++i) {
    next.row(i).segment(i * q, q) += prev.transpose();
    next.row(i).segment(q * q + i * n_in, n_in) += input.transpose();
  }
  const Eigen::ArrayXd deriv = 1.0 - fwd.hidden.array().square();
  influence_ = deriv.matrix().asDiagonal() * next;
  return influence_.transpose() * dloss_dx;
}

UoroNet::UoroNet(RnnWeights weights, double eta, std::uint64_t seed, double clip_threshold)
    : RecurrentNet(std::move(weights), eta, clip_threshold), rng_(seed) {
  UoroNet::reset_state();
}

void UoroNet::reset_state() {
  RecurrentNet::reset_state();
  x_tilde_ = Eigen::VectorXd::Zero(weights_.hidden_size());
  theta_tilde_ = Eigen::VectorXd::Zero(weights_.recurrent_param_count());
}

Eigen::VectorXd UoroNet::recurrent_gradient(const Eigen::VectorXd& prev,
                                            const Eigen::VectorXd& input,
                                            const RnnForward& fwd,
                                            const Eigen::VectorXd& dloss_dx) {
  const Eigen::Index q = weights_.hidden_size();
  const Eigen::Index n_in = weights_.input_size();
  const Eigen::VectorXd deriv = (1.0 - fwd.hidden.array().square()).matrix();

  Eigen::VectorXd nu(q);
  for (Eigen::Index i = 0; i < q; ++i) nu[i] = (rng_() & 1U) ? 1.0 : -1.0;

  // nu^T (D * immediate partial), one entry per recurrent parameter.
  Eigen::VectorXd nu_partial(weights_.recurrent_param_count());
  for (Eigen::Index i = 0; i < q; ++i) {
    const double coeff = nu[i] * deriv[i];
    nu_partial.segment(i * q, q) = coeff * prev;
    nu_partial.segment(q * q + i * n_in, n_in) = coeff * input;
  }
  const Eigen::VectorXd jx = deriv.cwiseProduct(weights_.wa * x_tilde_);

  const double rho0 =
      std::sqrt((theta_tilde_.norm() + kRhoFloor) / (jx.norm() + kRhoFloor));
  const double rho1 = std::sqrt((nu_partial.norm() + kRhoFloor) / (nu.norm() + kRhoFloor));

  x_tilde_ = rho0 * jx + rho1 * nu;
  theta_tilde_ = theta_tilde_ / rho0 + nu_partial / rho1;
  return dloss_dx.dot(x_tilde_) * theta_tilde_;
}

Snap1Net::Snap1Net(RnnWeights weights, double eta, double clip_threshold)
    : RecurrentNet(std::move(weights), eta, clip_threshold) {
  Snap1Net::reset_state();
}

void Snap1Net::reset_state() {
  RecurrentNet::reset_state();
  influence_ = Eigen::VectorXd::Zero(weights_.recurrent_param_count());
}

Eigen::VectorXd Snap1Net::recurrent_gradient(const Eigen::VectorXd& prev,
                                             const Eigen::VectorXd& input,
                                             const RnnForward& fwd,
                                             const Eigen::VectorXd& dloss_dx) {
  const Eigen::Index q = weights_.hidden_size();
  const Eigen::Index n_in = weights_.input_size();
  Eigen::VectorXd grad(influence_.size());
  for (Eigen::Index i = 0; i < q; ++i) {
    const double d = 1.0 - fwd.hidden[i] * fwd.hidden[i];
    const double self = weights_.wa(i, i);
    auto wa_block = influence_.segment(i * q, q);
    auto wb_block = influence_.segment(q * q + i * n_in, n_in);
    wa_block = d * (self * wa_block + prev);
    wb_block = d * (self * wb_block + input);
    grad.segment(i * q, q) = dloss_dx[i] * wa_block;
    grad.segment(q * q + i * n_in, n_in) = dloss_dx[i] * wb_block;
  }
  return grad;
}

DniNet::DniNet(RnnWeights weights, double eta, double clip_threshold)
    : RecurrentNet(std::move(weights), eta, clip_threshold) {
  const Eigen::Index q = weights_.hidden_size();
  credit_ = Eigen::MatrixXd::Zero(q, q + 1);
  credit_grad_ = Eigen::MatrixXd::Zero(q, q + 1);
}

Eigen::VectorXd DniNet::synthetic_credit(const Eigen::VectorXd& x) const {
  const Eigen::Index q = weights_.hidden_size();
  return credit_.leftCols(q) * x + credit_.col(q);
}

Eigen::VectorXd DniNet::recurrent_gradient(const Eigen::VectorXd& prev,
                                           const Eigen::VectorXd& input,
                                           const RnnForward& fwd,
                                           const Eigen::VectorXd& dloss_dx) {
  const Eigen::Index q = weights_.hidden_size();
  const Eigen::Index n_in = weights_.input_size();
  const Eigen::VectorXd credit = dloss_dx + synthetic_credit(fwd.hidden);
  const Eigen::VectorXd dpre =
      (1.0 - fwd.hidden.array().square()).matrix().cwiseProduct(credit);

  Eigen::VectorXd grad(weights_.recurrent_param_count());
  for (Eigen::Index i = 0; i < q; ++i) {
    grad.segment(i * q, q) = dpre[i] * prev;
    grad.segment(q * q + i * n_in, n_in) = dpre[i] * input;
  }

  // Bootstrap target for the credit at x_n: J_n^T (dL_n/dx_{n+1} + A [x_{n+1}; 1]).
  const Eigen::VectorXd bootstrap = weights_.wa.transpose() * dpre;
  Eigen::VectorXd augmented(q + 1);
  augmented << prev, 1.0;
  credit_grad_ = 2.0 * (synthetic_credit(prev) - bootstrap) * augmented.transpose();
  return grad;
}

void DniNet::after_update() {
  if (eta_ == 0.0) return;
  const Eigen::Map<const Eigen::VectorXd> flat(credit_grad_.data(), credit_grad_.size());
  const Eigen::VectorXd clipped = clip_gradient(flat, clip_);
  credit_ -= eta_ * Eigen::Map<const Eigen::MatrixXd>(clipped.data(), credit_.rows(),
                                                      credit_.cols());
}

FrozenNet::FrozenNet(RnnWeights weights, double eta, double clip_threshold)
    : RecurrentNet(std::move(weights), eta, clip_threshold) {}

Eigen::VectorXd FrozenNet::recurrent_gradient(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                              const RnnForward&, const Eigen::VectorXd&) {
  return Eigen::VectorXd::Zero(weights_.recurrent_param_count());
}

std::unique_ptr<RecurrentNet> make_recurrent_net(RnnTrainer trainer, RnnWeights weights,
                                                 double eta, std::uint64_t seed,
                                                 double clip_threshold) {
  switch (trainer) {
    case RnnTrainer::Rtrl:
      return std::make_unique<RtrlNet>(std::move(weights), eta, clip_threshold);
    case RnnTrainer::Uoro:
      return std::make_unique<UoroNet>(std::move(weights), eta, seed, clip_threshold);
    case RnnTrainer::Snap1:
      return std::make_unique<Snap1Net>(std::move(weights), eta, clip_threshold);
    case RnnTrainer::Dni:
      return std::make_unique<DniNet>(std::move(weights), eta, clip_threshold);
    case RnnTrainer::Frozen:
      return std::make_unique<FrozenNet>(std::move(weights), eta, clip_threshold);
  }
  throw InvalidArgument("unknown RNN trainer");
}

}  // namespace cinepred
