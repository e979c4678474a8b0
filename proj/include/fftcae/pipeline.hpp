#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fftcae/audio_io.hpp"
#include "fftcae/channel.hpp"
#include "fftcae/nn/network.hpp"
#include "fftcae/spectral.hpp"

namespace fftcae {

struct TrainingConfig {
  double lr = 1e-3;
  int max_epochs = 100;
  int patience = 10;
  int batch_size = 16;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;

  bool operator==(const TrainingConfig&) const = default;
};

/// Encoder Conv1D(64, k8) BN Conv1D(32, k8) BN Conv1D(16, k4), decoder
/// Conv1DTranspose(32, k8) BN Conv1DTranspose(64, k8) BN Conv1DTranspose(1, k8),
/// every convolution with stride 2 and linear activation.
std::vector<nn::LayerSpec> default_layer_spec();

struct PipelineConfig {
  PhiKind phi = PhiKind::log();
  /// Power-of-two spectrum length. Zero means "smallest power of two that
  /// holds the longest training signal", resolved by train().
  Eigen::Index padded_length_m = 0;
  int sample_rate_hz = 16000;
  std::vector<nn::LayerSpec> layer_spec = default_layer_spec();
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.99;
  TrainingConfig training;

  bool operator==(const PipelineConfig&) const = default;
};

/// Throws DomainError when the config cannot describe a trainable model.
void validate(const PipelineConfig& config);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;

  bool operator==(const EpochLog&) const = default;
};

/// Trained magnitude estimator. Treat as immutable once train() returns.
struct ConvAEModel {
  PipelineConfig config;
  nn::Network<double> network;
  std::vector<EpochLog> train_log;
  /// 1-based epoch whose weights were kept; 0 when no epoch ran.
  int best_epoch = 0;
};

/// (degraded, clean) pairs for one task/level.
struct PairedDataset {
  std::vector<std::pair<AudioSignal, AudioSignal>> pairs;
  std::string level_tag;
};

PairedDataset load_dataset(const Manifest& manifest);

/// Network inputs phi(|FFT(degraded)|) and targets phi(|FFT(clean)|), one
/// 1 x m tensor per pair. Phases are not part of the features.
struct FeatureSet {
  nn::Batch<double> inputs;
  nn::Batch<double> targets;
};

FeatureSet build_features(const PairedDataset& dataset, const PhiKind& phi, Eigen::Index padded_length_m);

/// phi(|FFT(pad(x))|) as a 1 x m tensor.
nn::Tensor<double> spectral_features(const NormalizedSignal& signal, const PhiKind& phi, Eigen::Index padded_length_m);

/// Fresh model with Glorot-initialized weights drawn from the training seed.
/// `config.padded_length_m` must already be resolved.
ConvAEModel initialize_model(const PipelineConfig& config);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Adam on the MSE between predicted and clean phi-magnitudes, with a seeded
/// train/validation split and early stopping on validation loss. Returns the
/// weights of the best validation epoch.
ConvAEModel train(const PairedDataset& dataset, PipelineConfig config, const EpochCallback& on_epoch = {});

/// Maps a phi-magnitude vector through the network in inference mode
/// (the quantity before phi^-1).
Eigen::VectorXd predict_phi(const ConvAEModel& model, const Eigen::VectorXd& phi_magnitudes);

struct EnhanceResult {
  /// Recombined spectrum A_j * phase_j before the inverse transform.
  Spectrum spectrum;
  /// Phases of the degraded input spectrum.
  Eigen::VectorXcd degraded_phases;
  /// Real part of the untruncated inverse transform.
  Eigen::VectorXd full_time;
  /// Truncated, unquantized output.
  NormalizedSignal output;
  AudioSignal audio;
  std::size_t clamped = 0;
  double imag_residue = 0.0;
};

/// Given the degraded spectrum's polar split, returns the magnitudes A.
using MagnitudeEstimator = std::function<Eigen::VectorXd(const MagPhase& degraded)>;

/// The reconstruction x_approx = IFFT(A_j * X_deg_j / |X_deg_j|) with A from
/// an arbitrary estimator; enhance() plugs in the trained network.
EnhanceResult reconstruct(const AudioSignal& degraded, Eigen::Index padded_length_m, int expected_rate_hz,
                          const MagnitudeEstimator& estimator);

EnhanceResult enhance_detailed(const ConvAEModel& model, const AudioSignal& degraded);
AudioSignal enhance(const ConvAEModel& model, const AudioSignal& degraded);

}  // namespace fftcae
