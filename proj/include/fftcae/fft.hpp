#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "fftcae/errors.hpp"

namespace fftcae {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

inline bool is_pow2(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index m = 1;
  while (m < n) m <<= 1;
  return m;
}

/// In-place iterative radix-2 Cooley-Tukey transform.
///
/// Forward: X[k] = sum_j x[j] exp(-2 pi i jk / n), unnormalized.
/// Inverse: x[j] = (1/n) sum_k X[k] exp(+2 pi i jk / n).
///
/// Twiddles are evaluated directly with cos/sin rather than by recurrence,
/// which keeps the error at a few ulps times log2(n).
template <typename Derived>
void fft_inplace(Eigen::MatrixBase<Derived>& data, bool inverse = false) {
  using Complex = typename Derived::Scalar;
  using Scalar = typename Complex::value_type;
  const Eigen::Index n = data.size();
  if (!is_pow2(n)) throw LengthError("FFT length " + std::to_string(n) + " is not a power of two");
  if (n == 1) return;

  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data(i), data(j));
  }

  const Scalar sign = inverse ? Scalar(1) : Scalar(-1);
  Eigen::Matrix<Complex, Eigen::Dynamic, 1> twiddle(n / 2);
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const Scalar angle = sign * Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k) / Scalar(n);
    twiddle(k) = Complex(std::cos(angle), std::sin(angle));
  }

  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const Eigen::Index half = len / 2;
    const Eigen::Index step = n / len;
    for (Eigen::Index start = 0; start < n; start += len) {
      for (Eigen::Index k = 0; k < half; ++k) {
        const Complex u = data(start + k);
        const Complex v = data(start + k + half) * twiddle(k * step);
        data(start + k) = u + v;
        data(start + k + half) = u - v;
      }
    }
  }

  if (inverse) data /= Scalar(n);
}

/// Forward transform of a real sequence.
template <typename Derived>
ComplexVector<typename Derived::Scalar> fft_real(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  ComplexVector<Scalar> data = x.template cast<std::complex<Scalar>>();
  fft_inplace(data, false);
  return data;
}

template <typename Derived>
ComplexVector<typename Derived::Scalar::value_type> fft_complex(const Eigen::MatrixBase<Derived>& x, bool inverse) {
  ComplexVector<typename Derived::Scalar::value_type> data = x;
  fft_inplace(data, inverse);
  return data;
}

}  // namespace fftcae
