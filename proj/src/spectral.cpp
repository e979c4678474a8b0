#include "fftcae/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fftcae/errors.hpp"

namespace fftcae {

PaddedSignal pad_to_pow2(const NormalizedSignal& signal, std::optional<Eigen::Index> target_m) {
  const Eigen::Index n = signal.size();
  Eigen::Index m = next_pow2(std::max<Eigen::Index>(n, 1));
  if (target_m) {
    if (!is_pow2(*target_m)) throw LengthError("target length " + std::to_string(*target_m) + " is not a power of two");
    if (*target_m < n)
      throw LengthError("signal length " + std::to_string(n) + " exceeds target length " + std::to_string(*target_m));
    m = *target_m;
  }
  PaddedSignal out;
  out.original_length = n;
  out.signal.sample_rate_hz = signal.sample_rate_hz;
  out.signal.samples = Eigen::VectorXd::Zero(m);
  out.signal.samples.head(n) = signal.samples;
  return out;
}

Spectrum fft(const NormalizedSignal& signal) {
  Spectrum out;
  out.coeffs = fft_real(signal.samples);
  out.original_length = signal.size();
  out.sample_rate_hz = signal.sample_rate_hz;
  return out;
}

Spectrum fft(const PaddedSignal& padded) {
  Spectrum out = fft(padded.signal);
  out.original_length = padded.original_length;
  return out;
}

InverseResult ifft(const Spectrum& spectrum) {
  const Eigen::VectorXcd time = fft_complex(spectrum.coeffs, true);
  InverseResult out;
  out.imag_residue = time.size() > 0 ? time.imag().cwiseAbs().maxCoeff() : 0.0;
  const Eigen::Index keep = std::min(spectrum.original_length, time.size());
  out.signal.sample_rate_hz = spectrum.sample_rate_hz;
  out.signal.samples = time.real().head(keep);
  return out;
}

MagPhase decompose(const Spectrum& spectrum) {
  MagPhase out;
  out.magnitudes = spectrum.coeffs.cwiseAbs();
  out.phases.resize(spectrum.size());
  for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
    const double mag = out.magnitudes(j);
    out.phases(j) = mag > 0.0 ? spectrum.coeffs(j) / mag : std::complex<double>(1.0, 0.0);
  }
  return out;
}

Spectrum recombine(const Eigen::VectorXd& magnitudes, const Eigen::VectorXcd& phases) {
  if (magnitudes.size() != phases.size())
    throw LengthError("recombine: " + std::to_string(magnitudes.size()) + " magnitudes vs " +
                      std::to_string(phases.size()) + " phases");
  if ((magnitudes.array() < 0.0).any()) throw DomainError("recombine: negative magnitude");
  Spectrum out;
  out.coeffs = magnitudes.cast<std::complex<double>>().cwiseProduct(phases);
  out.original_length = magnitudes.size();
  return out;
}

Eigen::VectorXd phi_apply(const PhiKind& kind, const Eigen::VectorXd& magnitudes) {
  switch (kind.tag) {
    case PhiKind::Tag::Identity:
      return magnitudes;
    case PhiKind::Tag::Log:
      return magnitudes.array().max(kind.epsilon).log().matrix();
  }
  return magnitudes;
}

Eigen::VectorXd phi_invert(const PhiKind& kind, const Eigen::VectorXd& values) {
  switch (kind.tag) {
    case PhiKind::Tag::Identity:
      return values.cwiseMax(0.0);
    case PhiKind::Tag::Log:
      return values.array().exp().matrix();
  }
  return values;
}

Eigen::VectorXd make_window(WindowKind kind, Eigen::Index n) {
  if (kind == WindowKind::Rect) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

Eigen::MatrixXd stft(const NormalizedSignal& signal, const StftParams& params) {
  if (!is_pow2(params.window_len)) throw LengthError("STFT window length must be a power of two");
  if (params.hop < 1) throw DomainError("STFT hop must be positive");
  const PaddedSignal padded = pad_to_pow2(signal);
  const Eigen::Index m = padded.signal.size();
  if (params.window_len > m)
    throw LengthError("STFT window " + std::to_string(params.window_len) + " exceeds padded signal length " +
                      std::to_string(m));

  const Eigen::VectorXd window = make_window(params.window, params.window_len);
  const Eigen::Index frames = 1 + (m - params.window_len) / params.hop;
  const Eigen::Index bins = params.window_len / 2 + 1;
  Eigen::MatrixXd grid(bins, frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::VectorXd frame = padded.signal.samples.segment(t * params.hop, params.window_len).cwiseProduct(window);
    grid.col(t) = fft_real(frame).head(bins).cwiseAbs();
  }
  return grid;
}

}  // namespace fftcae
