#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fftcae/nn/layers.hpp"

namespace fftcae::nn {

template <typename Scalar>
struct AdamState {
  long step = 0;
  std::vector<Vector<Scalar>> m;
  std::vector<Vector<Scalar>> v;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

/// One bias-corrected Adam update:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// Moment buffers are created on the first call.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, std::span<ParamMap<Scalar>> params, std::span<const Vector<Scalar>> grads) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient block counts differ");
  if (state.m.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.m.push_back(Vector<Scalar>::Zero(p.size()));
      state.v.push_back(Vector<Scalar>::Zero(p.size()));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: optimizer state does not match parameter blocks");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].size() != grads[i].size() || state.m[i].size() != params[i].size() ||
        state.v[i].size() != params[i].size())
      throw ShapeError("adam_step: shape mismatch in block " + std::to_string(i));

  ++state.step;
  const Scalar t = static_cast<Scalar>(state.step);
  const Scalar correction1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar correction2 = Scalar(1) - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (Scalar(1) - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (Scalar(1) - state.beta2) * grads[i].cwiseAbs2();
    const auto m_hat = (state.m[i] / correction1).array();
    const auto v_hat = (state.v[i] / correction2).array();
    params[i].array() -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
  }
}

}  // namespace fftcae::nn
