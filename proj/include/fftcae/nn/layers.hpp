#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fftcae/nn/tensor.hpp"

namespace fftcae::nn {

template <typename Scalar>
using ParamMap = Eigen::Map<Vector<Scalar>>;

/// Glorot-uniform bound for a kernel connecting in_ch to out_ch channels.
template <typename Scalar>
Scalar glorot_limit(Eigen::Index in_ch, Eigen::Index out_ch, Eigen::Index kernel) {
  return std::sqrt(Scalar(6) / static_cast<Scalar>((in_ch + out_ch) * kernel));
}

/// Strided 1-D convolution with "same" zero padding.
///
///   y(o, t) = b(o) + sum_{i, tau} K(o, i, tau) * x(i, stride * t + tau - pad_left)
template <typename Scalar>
class Conv1D {
 public:
  Conv1D() = default;
  Conv1D(Eigen::Index in_channels, Eigen::Index out_channels, Eigen::Index kernel_size, Eigen::Index stride)
      : in_(in_channels),
        kernel_(kernel_size),
        stride_(stride),
        weights_(Tensor<Scalar>::Zero(out_channels, in_channels * kernel_size)),
        bias_(Vector<Scalar>::Zero(out_channels)) {
    if (in_channels < 1 || out_channels < 1 || kernel_size < 1 || stride < 1)
      throw ShapeError("Conv1D: channels, kernel size and stride must be positive");
  }

  Eigen::Index in_channels() const { return in_; }
  Eigen::Index out_channels() const { return weights_.rows(); }
  Eigen::Index kernel_size() const { return kernel_; }
  Eigen::Index stride() const { return stride_; }

  Scalar& weight(Eigen::Index o, Eigen::Index i, Eigen::Index tau) { return weights_(o, i * kernel_ + tau); }
  Scalar weight(Eigen::Index o, Eigen::Index i, Eigen::Index tau) const { return weights_(o, i * kernel_ + tau); }
  Vector<Scalar>& bias() { return bias_; }
  const Vector<Scalar>& bias() const { return bias_; }

  Eigen::Index output_length(Eigen::Index len) const { return same_output_length(len, stride_); }

  template <typename Rng>
  void init_glorot(Rng& rng) {
    const Scalar limit = glorot_limit<Scalar>(in_, out_channels(), kernel_);
    std::uniform_real_distribution<Scalar> dist(-limit, limit);
    for (Eigen::Index o = 0; o < out_channels(); ++o)
      for (Eigen::Index i = 0; i < in_; ++i)
        for (Eigen::Index tau = 0; tau < kernel_; ++tau) weight(o, i, tau) = dist(rng);
    bias_.setZero();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    require_channels(x.rows(), in_, "Conv1D");
    const Eigen::Index out_len = output_length(x.cols());
    const Tensor<Scalar> cols = im2col(x, kernel_, stride_, same_pad_left(x.cols(), kernel_, stride_), out_len);
    Tensor<Scalar> y = weights_ * cols;
    y.colwise() += bias_;
    return y;
  }

  /// Accumulates dL/dK and dL/db into the gradient blocks and returns dL/dx.
  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, std::span<Vector<Scalar>> grads) const {
    const Eigen::Index pad = same_pad_left(x.cols(), kernel_, stride_);
    const Tensor<Scalar> cols = im2col(x, kernel_, stride_, pad, dy.cols());
    Eigen::Map<Tensor<Scalar>> gw(grads[0].data(), weights_.rows(), weights_.cols());
    gw.noalias() += dy * cols.transpose();
    grads[1] += dy.rowwise().sum();
    const Tensor<Scalar> dcols = weights_.transpose() * dy;
    return col2im(dcols, in_, kernel_, stride_, pad, x.cols());
  }

  std::vector<ParamMap<Scalar>> parameters() {
    return {ParamMap<Scalar>(weights_.data(), weights_.size()), ParamMap<Scalar>(bias_.data(), bias_.size())};
  }

 private:
  Eigen::Index in_ = 1;
  Eigen::Index kernel_ = 1;
  Eigen::Index stride_ = 1;
  Tensor<Scalar> weights_;  // out x (in * kernel), column i * kernel + tau
  Vector<Scalar> bias_;
};

/// Transposed 1-D convolution, defined as the exact adjoint of Conv1D with the
/// same kernel size and stride applied to a sequence of length stride * len:
///
///   y(o, stride * t + tau - pad_left) += K(o, i, tau) * x(i, t),   y += b
///
/// so that <Conv1D_W(u), v> == <ConvTranspose1D_K(v), u> when K(o, i, tau) == W(i, o, tau).
template <typename Scalar>
class ConvTranspose1D {
 public:
  ConvTranspose1D() = default;
  ConvTranspose1D(Eigen::Index in_channels, Eigen::Index out_channels, Eigen::Index kernel_size, Eigen::Index stride)
      : out_(out_channels),
        kernel_(kernel_size),
        stride_(stride),
        weights_(Tensor<Scalar>::Zero(out_channels * kernel_size, in_channels)),
        bias_(Vector<Scalar>::Zero(out_channels)) {
    if (in_channels < 1 || out_channels < 1 || kernel_size < 1 || stride < 1)
      throw ShapeError("ConvTranspose1D: channels, kernel size and stride must be positive");
  }

  Eigen::Index in_channels() const { return weights_.cols(); }
  Eigen::Index out_channels() const { return out_; }
  Eigen::Index kernel_size() const { return kernel_; }
  Eigen::Index stride() const { return stride_; }

  Scalar& weight(Eigen::Index o, Eigen::Index i, Eigen::Index tau) { return weights_(o * kernel_ + tau, i); }
  Scalar weight(Eigen::Index o, Eigen::Index i, Eigen::Index tau) const { return weights_(o * kernel_ + tau, i); }
  Vector<Scalar>& bias() { return bias_; }
  const Vector<Scalar>& bias() const { return bias_; }

  Eigen::Index output_length(Eigen::Index len) const { return stride_ * len; }

  template <typename Rng>
  void init_glorot(Rng& rng) {
    const Scalar limit = glorot_limit<Scalar>(in_channels(), out_, kernel_);
    std::uniform_real_distribution<Scalar> dist(-limit, limit);
    for (Eigen::Index o = 0; o < out_; ++o)
      for (Eigen::Index i = 0; i < in_channels(); ++i)
        for (Eigen::Index tau = 0; tau < kernel_; ++tau) weight(o, i, tau) = dist(rng);
    bias_.setZero();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    require_channels(x.rows(), in_channels(), "ConvTranspose1D");
    const Eigen::Index out_len = output_length(x.cols());
    const Tensor<Scalar> cols = weights_ * x;
    Tensor<Scalar> y = col2im(cols, out_, kernel_, stride_, same_pad_left(out_len, kernel_, stride_), out_len);
    y.colwise() += bias_;
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, std::span<Vector<Scalar>> grads) const {
    const Eigen::Index pad = same_pad_left(dy.cols(), kernel_, stride_);
    const Tensor<Scalar> dcols = im2col(dy, kernel_, stride_, pad, x.cols());
    Eigen::Map<Tensor<Scalar>> gw(grads[0].data(), weights_.rows(), weights_.cols());
    gw.noalias() += dcols * x.transpose();
    grads[1] += dy.rowwise().sum();
    return weights_.transpose() * dcols;
  }

  std::vector<ParamMap<Scalar>> parameters() {
    return {ParamMap<Scalar>(weights_.data(), weights_.size()), ParamMap<Scalar>(bias_.data(), bias_.size())};
  }

 private:
  Eigen::Index out_ = 1;
  Eigen::Index kernel_ = 1;
  Eigen::Index stride_ = 1;
  Tensor<Scalar> weights_;  // (out * kernel) x in, row o * kernel + tau
  Vector<Scalar> bias_;
};

/// Per-channel batch normalization over the (batch, position) axes.
/// Running statistics follow running = momentum * running + (1 - momentum) * batch.
template <typename Scalar>
class BatchNorm {
 public:
  struct Statistics {
    Vector<Scalar> mean;
    Vector<Scalar> var;
  };

  BatchNorm() = default;
  explicit BatchNorm(Eigen::Index channels, Scalar epsilon = Scalar(1e-3), Scalar momentum = Scalar(0.99))
      : gamma_(Vector<Scalar>::Ones(channels)),
        beta_(Vector<Scalar>::Zero(channels)),
        running_mean_(Vector<Scalar>::Zero(channels)),
        running_var_(Vector<Scalar>::Ones(channels)),
        epsilon_(epsilon),
        momentum_(momentum) {
    if (channels < 1) throw ShapeError("BatchNorm: channel count must be positive");
    if (!(epsilon > 0)) throw DomainError("BatchNorm: epsilon must be positive");
    if (!(momentum > 0 && momentum < 1)) throw DomainError("BatchNorm: momentum must lie in (0, 1)");
  }

  Eigen::Index channels() const { return gamma_.size(); }
  Scalar epsilon() const { return epsilon_; }
  Scalar momentum() const { return momentum_; }
  Vector<Scalar>& gamma() { return gamma_; }
  Vector<Scalar>& beta() { return beta_; }
  Vector<Scalar>& running_mean() { return running_mean_; }
  Vector<Scalar>& running_var() { return running_var_; }
  const Vector<Scalar>& gamma() const { return gamma_; }
  const Vector<Scalar>& beta() const { return beta_; }
  const Vector<Scalar>& running_mean() const { return running_mean_; }
  const Vector<Scalar>& running_var() const { return running_var_; }

  /// Biased mean and variance per channel over every sample and position.
  Statistics batch_statistics(const Batch<Scalar>& x) const {
    const Eigen::Index c = channels();
    Statistics s{Vector<Scalar>::Zero(c), Vector<Scalar>::Zero(c)};
    Eigen::Index count = 0;
    for (const auto& t : x) {
      require_channels(t.rows(), c, "BatchNorm");
      s.mean += t.rowwise().sum();
      count += t.cols();
    }
    if (count == 0) throw ShapeError("BatchNorm: empty batch");
    s.mean /= static_cast<Scalar>(count);
    for (const auto& t : x) s.var += (t.colwise() - s.mean).array().square().matrix().rowwise().sum();
    s.var /= static_cast<Scalar>(count);
    return s;
  }

  void update_running(const Statistics& s) {
    running_mean_ = momentum_ * running_mean_ + (Scalar(1) - momentum_) * s.mean;
    running_var_ = momentum_ * running_var_ + (Scalar(1) - momentum_) * s.var;
  }

  /// Normalizes with `stats` (Train) or the running statistics (Infer).
  Batch<Scalar> forward(const Batch<Scalar>& x, Mode mode, const Statistics* stats = nullptr) const {
    Statistics owned;
    if (mode == Mode::Train && stats == nullptr) {
      owned = batch_statistics(x);
      stats = &owned;
    }
    const Vector<Scalar>& mean = mode == Mode::Train ? stats->mean : running_mean_;
    const Vector<Scalar>& var = mode == Mode::Train ? stats->var : running_var_;
    const Vector<Scalar> scale = gamma_.cwiseQuotient((var.array() + epsilon_).sqrt().matrix());
    const Vector<Scalar> shift = beta_ - scale.cwiseProduct(mean);
    Batch<Scalar> y;
    y.reserve(x.size());
    for (const auto& t : x) {
      require_channels(t.rows(), channels(), "BatchNorm");
      Tensor<Scalar> out = scale.asDiagonal() * t;
      out.colwise() += shift;
      y.push_back(std::move(out));
    }
    return y;
  }

  /// grads = {dgamma, dbeta}. In Train mode the batch statistics depend on x
  /// and contribute to dL/dx; in Infer mode the layer is affine.
  Batch<Scalar> backward(const Batch<Scalar>& x, const Batch<Scalar>& dy, Mode mode,
                         std::span<Vector<Scalar>> grads) const {
    const Eigen::Index c = channels();
    Statistics stats = mode == Mode::Train ? batch_statistics(x) : Statistics{running_mean_, running_var_};
    const Vector<Scalar> inv_std = (stats.var.array() + epsilon_).rsqrt().matrix();

    Vector<Scalar> dbeta = Vector<Scalar>::Zero(c);
    Vector<Scalar> dgamma = Vector<Scalar>::Zero(c);
    Eigen::Index count = 0;
    for (std::size_t b = 0; b < x.size(); ++b) {
      const Tensor<Scalar> xhat = inv_std.asDiagonal() * (x[b].colwise() - stats.mean);
      dbeta += dy[b].rowwise().sum();
      dgamma += xhat.cwiseProduct(dy[b]).rowwise().sum();
      count += x[b].cols();
    }
    grads[0] += dgamma;
    grads[1] += dbeta;

    Batch<Scalar> dx;
    dx.reserve(x.size());
    const Vector<Scalar> g_inv = gamma_.cwiseProduct(inv_std);
    if (mode == Mode::Infer) {
      for (const auto& d : dy) dx.push_back(g_inv.asDiagonal() * d);
      return dx;
    }
    const Scalar n = static_cast<Scalar>(count);
    for (std::size_t b = 0; b < x.size(); ++b) {
      const Tensor<Scalar> xhat = inv_std.asDiagonal() * (x[b].colwise() - stats.mean);
      Tensor<Scalar> d = n * dy[b];
      d.colwise() -= dbeta;
      d -= dgamma.asDiagonal() * xhat;
      dx.push_back((g_inv / n).asDiagonal() * d);
    }
    return dx;
  }

  std::vector<ParamMap<Scalar>> parameters() {
    return {ParamMap<Scalar>(gamma_.data(), gamma_.size()), ParamMap<Scalar>(beta_.data(), beta_.size())};
  }

 private:
  Vector<Scalar> gamma_;
  Vector<Scalar> beta_;
  Vector<Scalar> running_mean_;
  Vector<Scalar> running_var_;
  Scalar epsilon_ = Scalar(1e-3);
  Scalar momentum_ = Scalar(0.99);
};

/// Rectifier, kept only for comparison experiments against the linear model.
template <typename Scalar>
class ReLU {
 public:
  Tensor<Scalar> forward(const Tensor<Scalar>& x) const { return x.cwiseMax(Scalar(0)); }
  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy) const {
    return (x.array() > Scalar(0)).select(dy, Scalar(0));
  }
};

}  // namespace fftcae::nn
