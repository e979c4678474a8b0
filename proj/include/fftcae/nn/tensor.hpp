#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "fftcae/errors.hpp"

namespace fftcae::nn {

/// One sample: rows are channels, columns are positions along the sequence.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Batch = std::vector<Tensor<Scalar>>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Mode { Train, Infer };

inline void require_channels(Eigen::Index got, Eigen::Index want, const char* layer) {
  if (got != want)
    throw ShapeError(std::string(layer) + ": input has " + std::to_string(got) + " channels, expected " +
                     std::to_string(want));
}

/// Lays out the receptive fields of `x` as columns: row (c * k + tau), column t
/// holds x(c, stride * t + tau - pad_left), zero outside [0, length).
template <typename Scalar>
Tensor<Scalar> im2col(const Tensor<Scalar>& x, Eigen::Index kernel, Eigen::Index stride, Eigen::Index pad_left,
                      Eigen::Index out_len) {
  const Eigen::Index channels = x.rows();
  const Eigen::Index len = x.cols();
  Tensor<Scalar> cols = Tensor<Scalar>::Zero(channels * kernel, out_len);
  for (Eigen::Index t = 0; t < out_len; ++t) {
    for (Eigen::Index tau = 0; tau < kernel; ++tau) {
      const Eigen::Index pos = stride * t + tau - pad_left;
      if (pos < 0 || pos >= len) continue;
      for (Eigen::Index c = 0; c < channels; ++c) cols(c * kernel + tau, t) = x(c, pos);
    }
  }
  return cols;
}

/// Adjoint of im2col: scatter-adds columns back onto a (channels x len) grid.
template <typename Scalar>
Tensor<Scalar> col2im(const Tensor<Scalar>& cols, Eigen::Index channels, Eigen::Index kernel, Eigen::Index stride,
                      Eigen::Index pad_left, Eigen::Index len) {
  Tensor<Scalar> x = Tensor<Scalar>::Zero(channels, len);
  for (Eigen::Index t = 0; t < cols.cols(); ++t) {
    for (Eigen::Index tau = 0; tau < kernel; ++tau) {
      const Eigen::Index pos = stride * t + tau - pad_left;
      if (pos < 0 || pos >= len) continue;
      for (Eigen::Index c = 0; c < channels; ++c) x(c, pos) += cols(c * kernel + tau, t);
    }
  }
  return x;
}

/// "Same" padding: output length ceil(len / stride), with the padding split
/// evenly and the odd element on the right.
inline Eigen::Index same_output_length(Eigen::Index len, Eigen::Index stride) { return (len + stride - 1) / stride; }

inline Eigen::Index same_pad_left(Eigen::Index len, Eigen::Index kernel, Eigen::Index stride) {
  const Eigen::Index out = same_output_length(len, stride);
  const Eigen::Index total = std::max<Eigen::Index>((out - 1) * stride + kernel - len, 0);
  return total / 2;
}

}  // namespace fftcae::nn
