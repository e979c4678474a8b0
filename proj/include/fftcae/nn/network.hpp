#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fftcae/nn/layers.hpp"

namespace fftcae::nn {

enum class LayerKind { Conv1D, ConvTranspose1D, BatchNorm, ReLU };

inline std::string to_string(LayerKind kind);
inline LayerKind layer_kind_from_string(const std::string& name);

/// Declarative description of one layer. `filters`, `kernel` and `stride`
/// are ignored for BatchNorm and ReLU, which keep the incoming channel count.
struct LayerSpec {
  LayerKind kind = LayerKind::Conv1D;
  Eigen::Index filters = 1;
  Eigen::Index kernel = 1;
  Eigen::Index stride = 1;

  bool operator==(const LayerSpec&) const = default;
};

/// Sequential stack of layers with no activations other than an optional ReLU.
template <typename Scalar>
class Network {
 public:
  using Layer = std::variant<Conv1D<Scalar>, ConvTranspose1D<Scalar>, BatchNorm<Scalar>, ReLU<Scalar>>;
  using Statistics = typename BatchNorm<Scalar>::Statistics;

  /// Everything a backward pass needs: the input to every layer plus the output,
  /// and the batch statistics each BatchNorm layer used.
  struct Trace {
    Mode mode = Mode::Infer;
    std::vector<Batch<Scalar>> activations;
    std::vector<std::optional<Statistics>> stats;

    const Batch<Scalar>& output() const { return activations.back(); }
  };

  Network() = default;

  static Network build(std::span<const LayerSpec> specs, Eigen::Index in_channels, Scalar bn_epsilon,
                       Scalar bn_momentum) {
    Network net;
    Eigen::Index channels = in_channels;
    for (const LayerSpec& s : specs) {
      switch (s.kind) {
        case LayerKind::Conv1D:
          net.layers_.emplace_back(Conv1D<Scalar>(channels, s.filters, s.kernel, s.stride));
          channels = s.filters;
          break;
        case LayerKind::ConvTranspose1D:
          net.layers_.emplace_back(ConvTranspose1D<Scalar>(channels, s.filters, s.kernel, s.stride));
          channels = s.filters;
          break;
        case LayerKind::BatchNorm:
          net.layers_.emplace_back(BatchNorm<Scalar>(channels, bn_epsilon, bn_momentum));
          break;
        case LayerKind::ReLU:
          net.layers_.emplace_back(ReLU<Scalar>{});
          break;
      }
    }
    return net;
  }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Glorot-uniform kernels in declaration order, zero biases, unit gamma.
  template <typename Rng>
  void init(Rng& rng) {
    for (auto& layer : layers_) {
      std::visit(
          [&rng](auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Conv1D<Scalar>> || std::is_same_v<L, ConvTranspose1D<Scalar>>)
              l.init_glorot(rng);
          },
          layer);
    }
  }

  /// Total stride factor of the stack; inputs must have a length divisible by it.
  Eigen::Index total_downsampling() const {
    Eigen::Index f = 1;
    for (const auto& layer : layers_)
      if (const auto* c = std::get_if<Conv1D<Scalar>>(&layer)) f *= c->stride();
    return f;
  }

  Trace forward_trace(const Batch<Scalar>& x, Mode mode) const {
    Trace trace;
    trace.mode = mode;
    trace.activations.reserve(layers_.size() + 1);
    trace.stats.resize(layers_.size());
    trace.activations.push_back(x);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Batch<Scalar>& in = trace.activations.back();
      Batch<Scalar> out;
      if (const auto* bn = std::get_if<BatchNorm<Scalar>>(&layers_[li])) {
        if (mode == Mode::Train) {
          trace.stats[li] = bn->batch_statistics(in);
          out = bn->forward(in, mode, &*trace.stats[li]);
        } else {
          out = bn->forward(in, mode);
        }
      } else {
        out.reserve(in.size());
        std::visit(
            [&](const auto& l) {
              using L = std::decay_t<decltype(l)>;
              if constexpr (!std::is_same_v<L, BatchNorm<Scalar>>)
                for (const auto& t : in) out.push_back(l.forward(t));
            },
            layers_[li]);
      }
      trace.activations.push_back(std::move(out));
    }
    return trace;
  }

  Batch<Scalar> predict(const Batch<Scalar>& x) const { return forward_trace(x, Mode::Infer).activations.back(); }

  Tensor<Scalar> predict(const Tensor<Scalar>& x) const { return predict(Batch<Scalar>{x}).front(); }

  /// Parameter blocks in declaration order: (kernel, bias) per convolution,
  /// (gamma, beta) per batch norm.
  std::vector<ParamMap<Scalar>> parameters() {
    std::vector<ParamMap<Scalar>> out;
    for (auto& layer : layers_) {
      std::visit(
          [&out](auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (!std::is_same_v<L, ReLU<Scalar>>)
              for (auto& p : l.parameters()) out.push_back(p);
          },
          layer);
    }
    return out;
  }

  std::vector<Vector<Scalar>> zero_gradients() const {
    std::vector<Vector<Scalar>> grads;
    for (const auto& layer : layers_) {
      std::visit(
          [&grads](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BatchNorm<Scalar>>) {
              grads.push_back(Vector<Scalar>::Zero(l.channels()));
              grads.push_back(Vector<Scalar>::Zero(l.channels()));
            } else if constexpr (!std::is_same_v<L, ReLU<Scalar>>) {
              grads.push_back(Vector<Scalar>::Zero(l.out_channels() * l.in_channels() * l.kernel_size()));
              grads.push_back(Vector<Scalar>::Zero(l.out_channels()));
            }
          },
          layer);
    }
    return grads;
  }

  /// Backpropagates dL/d(output) through the trace. Returns parameter gradients
  /// in parameters() order; writes dL/d(input) when requested.
  std::vector<Vector<Scalar>> backward(const Trace& trace, Batch<Scalar> grad_out,
                                       Batch<Scalar>* grad_input = nullptr) const {
    std::vector<Vector<Scalar>> grads = zero_gradients();
    std::vector<std::size_t> first_block(layers_.size());
    std::size_t block = 0;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      first_block[li] = block;
      block += std::holds_alternative<ReLU<Scalar>>(layers_[li]) ? 0 : 2;
    }

    for (std::size_t li = layers_.size(); li-- > 0;) {
      const Batch<Scalar>& in = trace.activations[li];
      const bool has_params = !std::holds_alternative<ReLU<Scalar>>(layers_[li]);
      std::span<Vector<Scalar>> g = has_params ? std::span<Vector<Scalar>>(grads.data() + first_block[li], 2)
                                               : std::span<Vector<Scalar>>();
      Batch<Scalar> grad_in;
      if (const auto* bn = std::get_if<BatchNorm<Scalar>>(&layers_[li])) {
        grad_in = bn->backward(in, grad_out, trace.mode, g);
      } else {
        grad_in.reserve(in.size());
        std::visit(
            [&](const auto& l) {
              using L = std::decay_t<decltype(l)>;
              if constexpr (std::is_same_v<L, ReLU<Scalar>>) {
                for (std::size_t b = 0; b < in.size(); ++b) grad_in.push_back(l.backward(in[b], grad_out[b]));
              } else if constexpr (!std::is_same_v<L, BatchNorm<Scalar>>) {
                for (std::size_t b = 0; b < in.size(); ++b) grad_in.push_back(l.backward(in[b], grad_out[b], g));
              }
            },
            layers_[li]);
      }
      grad_out = std::move(grad_in);
    }
    if (grad_input) *grad_input = std::move(grad_out);
    return grads;
  }

  /// Folds the batch statistics recorded in a Train-mode trace into the running averages.
  void commit_statistics(const Trace& trace) {
    for (std::size_t li = 0; li < layers_.size(); ++li)
      if (auto* bn = std::get_if<BatchNorm<Scalar>>(&layers_[li]); bn && trace.stats[li]) bn->update_running(*trace.stats[li]);
  }

 private:
  std::vector<Layer> layers_;
};

/// Mean of squared differences over every entry of the batch.
template <typename Scalar>
Scalar mse_loss(const Batch<Scalar>& pred, const Batch<Scalar>& target) {
  if (pred.size() != target.size()) throw ShapeError("mse_loss: batch sizes differ");
  Scalar sum = 0;
  Eigen::Index count = 0;
  for (std::size_t b = 0; b < pred.size(); ++b) {
    if (pred[b].rows() != target[b].rows() || pred[b].cols() != target[b].cols())
      throw ShapeError("mse_loss: tensor shapes differ at batch index " + std::to_string(b));
    sum += (pred[b] - target[b]).squaredNorm();
    count += pred[b].size();
  }
  if (count == 0) throw ShapeError("mse_loss: empty batch");
  return sum / static_cast<Scalar>(count);
}

template <typename Scalar>
Batch<Scalar> mse_gradient(const Batch<Scalar>& pred, const Batch<Scalar>& target) {
  Eigen::Index count = 0;
  for (const auto& p : pred) count += p.size();
  Batch<Scalar> grad;
  grad.reserve(pred.size());
  for (std::size_t b = 0; b < pred.size(); ++b)
    grad.push_back((Scalar(2) / static_cast<Scalar>(count)) * (pred[b] - target[b]));
  return grad;
}

template <typename Scalar>
struct LossGradients {
  Scalar loss = 0;
  std::vector<Vector<Scalar>> params;
  Batch<Scalar> input;
};

/// d(MSE)/d(theta) for every parameter block, plus d(MSE)/d(input).
/// Running statistics are left untouched.
template <typename Scalar>
LossGradients<Scalar> backward(const Network<Scalar>& net, const Batch<Scalar>& input, const Batch<Scalar>& target,
                               Mode mode = Mode::Train) {
  const auto trace = net.forward_trace(input, mode);
  LossGradients<Scalar> out;
  out.loss = mse_loss(trace.output(), target);
  out.params = net.backward(trace, mse_gradient(trace.output(), target), &out.input);
  return out;
}

inline std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv1D:
      return "Conv1D";
    case LayerKind::ConvTranspose1D:
      return "Conv1DTranspose";
    case LayerKind::BatchNorm:
      return "BatchNormalization";
    case LayerKind::ReLU:
      return "ReLU";
  }
  return "?";
}

inline LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "Conv1D") return LayerKind::Conv1D;
  if (name == "Conv1DTranspose") return LayerKind::ConvTranspose1D;
  if (name == "BatchNormalization") return LayerKind::BatchNorm;
  if (name == "ReLU") return LayerKind::ReLU;
  throw DomainError("unknown layer kind '" + name + "'");
}

}  // namespace fftcae::nn
