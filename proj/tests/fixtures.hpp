#pragma once

#include <cmath>
#include <numbers>

#include "fftcae/channel.hpp"
#include "fftcae/pipeline.hpp"

namespace fftcae::fixture {

inline AudioSignal tone(double freq_hz, double amplitude, Eigen::Index n, int rate = 16000) {
  NormalizedSignal s{Eigen::VectorXd(n), rate};
  for (Eigen::Index i = 0; i < n; ++i)
    s.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate);
  return to_audio(s).signal;
}

/// In-memory corpus built the same way synthesize_corpus builds its files.
inline PairedDataset pairs(const std::string& preset, int n, std::uint64_t seed, Eigen::Index samples = 1024,
                           SourceKind kind = SourceKind::ToneMix) {
  PairedDataset ds;
  ds.level_tag = preset;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    const NormalizedSignal clean = synthesize_source(kind, samples, derive_seed(s, 0));
    const NormalizedSignal degraded = degrade(clean, make_degradation(find_preset(preset), derive_seed(s, 1)));
    ds.pairs.emplace_back(to_audio(degraded).signal, to_audio(clean).signal);
  }
  return ds;
}

/// Single 1x1 convolution with unit weight: the network output equals its input.
inline ConvAEModel identity_model(PhiKind phi, Eigen::Index m = 1024, double weight = 1.0) {
  PipelineConfig config;
  config.phi = phi;
  config.padded_length_m = m;
  config.layer_spec = {{nn::LayerKind::Conv1D, 1, 1, 1}};
  ConvAEModel model = initialize_model(config);
  auto& conv = std::get<nn::Conv1D<double>>(model.network.layers()[0]);
  conv.weight(0, 0, 0) = weight;
  conv.bias().setZero();
  return model;
}

inline PipelineConfig quick_config(int epochs, std::uint64_t seed = 1) {
  PipelineConfig config;
  config.training.max_epochs = epochs;
  config.training.patience = std::max(1, std::min(epochs, 10));
  config.training.seed = seed;
  return config;
}

}  // namespace fftcae::fixture
