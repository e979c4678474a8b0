#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fftcae/audio_io.hpp"
#include "fftcae/fft.hpp"

namespace fftcae {

/// DFT coefficients of a zero-padded signal. `original_length` is the number
/// of leading samples that belong to the signal; ifft truncates to it.
struct Spectrum {
  Eigen::VectorXcd coeffs;
  Eigen::Index original_length = 0;
  int sample_rate_hz = 16000;

  Eigen::Index size() const { return coeffs.size(); }
};

/// Polar split of a spectrum. Zero-magnitude bins get phase 1+0i.
struct MagPhase {
  Eigen::VectorXd magnitudes;
  Eigen::VectorXcd phases;
};

/// Scalar map applied to magnitudes before the network sees them.
struct PhiKind {
  enum class Tag { Identity, Log };
  Tag tag = Tag::Identity;
  double epsilon = 1e-8;

  static PhiKind identity() { return {Tag::Identity, 1e-8}; }
  static PhiKind log(double epsilon = 1e-8) { return {Tag::Log, epsilon}; }
  bool operator==(const PhiKind&) const = default;
};

struct PaddedSignal {
  NormalizedSignal signal;
  Eigen::Index original_length = 0;
};

struct InverseResult {
  NormalizedSignal signal;
  /// max |Im x_j| over the untruncated inverse; near zero for Hermitian input.
  double imag_residue = 0.0;
};

PaddedSignal pad_to_pow2(const NormalizedSignal& signal, std::optional<Eigen::Index> target_m = std::nullopt);

Spectrum fft(const NormalizedSignal& signal);
Spectrum fft(const PaddedSignal& padded);
InverseResult ifft(const Spectrum& spectrum);

MagPhase decompose(const Spectrum& spectrum);
Spectrum recombine(const Eigen::VectorXd& magnitudes, const Eigen::VectorXcd& phases);

Eigen::VectorXd phi_apply(const PhiKind& kind, const Eigen::VectorXd& magnitudes);
Eigen::VectorXd phi_invert(const PhiKind& kind, const Eigen::VectorXd& values);

enum class WindowKind { Hann, Rect };

struct StftParams {
  Eigen::Index window_len = 512;
  Eigen::Index hop = 128;
  WindowKind window = WindowKind::Hann;
};

/// Periodic Hann (or rectangular) window of length n.
Eigen::VectorXd make_window(WindowKind kind, Eigen::Index n);

/// Magnitude grid with rows = frequency bins 0..window_len/2 and columns =
/// frames. Frame t covers samples [t*hop, t*hop + window_len) of the
/// power-of-two padded signal.
Eigen::MatrixXd stft(const NormalizedSignal& signal, const StftParams& params);

}  // namespace fftcae
