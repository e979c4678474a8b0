#include "fftcae/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fftcae/errors.hpp"
#include "fftcae/nn/adam.hpp"

namespace fftcae {

using nn::LayerKind;

std::vector<nn::LayerSpec> default_layer_spec() {
  return {
      {LayerKind::Conv1D, 64, 8, 2},          {LayerKind::BatchNorm, 0, 0, 0},
      {LayerKind::Conv1D, 32, 8, 2},          {LayerKind::BatchNorm, 0, 0, 0},
      {LayerKind::Conv1D, 16, 4, 2},          {LayerKind::ConvTranspose1D, 32, 8, 2},
      {LayerKind::BatchNorm, 0, 0, 0},        {LayerKind::ConvTranspose1D, 64, 8, 2},
      {LayerKind::BatchNorm, 0, 0, 0},        {LayerKind::ConvTranspose1D, 1, 8, 2},
  };
}

namespace {

Eigen::Index downsampling(const std::vector<nn::LayerSpec>& spec) {
  Eigen::Index down = 1, up = 1;
  for (const auto& l : spec) {
    if (l.kind == LayerKind::Conv1D) down *= l.stride;
    if (l.kind == LayerKind::ConvTranspose1D) up *= l.stride;
  }
  if (down != up) throw DomainError("encoder and decoder strides do not cancel; output length would differ from input");
  return down;
}

}  // namespace

void validate(const PipelineConfig& config) {
  const auto& t = config.training;
  if (config.sample_rate_hz <= 0) throw DomainError("sample rate must be positive");
  if (config.phi.tag == PhiKind::Tag::Log && !(config.phi.epsilon > 0)) throw DomainError("log epsilon must be positive");
  if (!(t.lr >= 0)) throw DomainError("learning rate must be non-negative");
  if (t.max_epochs < 0) throw DomainError("max_epochs must be non-negative");
  if (t.patience < 1) throw DomainError("patience must be positive");
  if (t.max_epochs > 0 && t.patience > t.max_epochs) throw DomainError("patience must not exceed max_epochs");
  if (t.batch_size < 1) throw DomainError("batch_size must be positive");
  if (!(t.val_fraction > 0 && t.val_fraction < 1)) throw DomainError("val_fraction must lie in (0, 1)");
  if (config.layer_spec.empty()) throw DomainError("layer spec is empty");
  Eigen::Index channels = 1;
  for (const auto& l : config.layer_spec) {
    if (l.kind == LayerKind::Conv1D || l.kind == LayerKind::ConvTranspose1D) {
      if (l.filters < 1 || l.kernel < 1 || l.stride < 1) throw DomainError("convolution filters, kernel and stride must be positive");
      channels = l.filters;
    }
  }
  if (channels != 1) throw DomainError("the last convolution must have exactly one filter");
  const Eigen::Index factor = downsampling(config.layer_spec);
  if (config.padded_length_m != 0) {
    if (!is_pow2(config.padded_length_m)) throw DomainError("padded length must be a power of two");
    if (config.padded_length_m % factor != 0)
      throw DomainError("padded length must be divisible by the total stride " + std::to_string(factor));
  }
}

PairedDataset load_dataset(const Manifest& manifest) {
  PairedDataset dataset;
  dataset.level_tag = manifest.level_tag;
  for (const auto& e : manifest.entries) dataset.pairs.emplace_back(read_wav(e.degraded_path), read_wav(e.clean_path));
  return dataset;
}

nn::Tensor<double> spectral_features(const NormalizedSignal& signal, const PhiKind& phi, Eigen::Index padded_length_m) {
  const MagPhase mp = decompose(fft(pad_to_pow2(signal, padded_length_m)));
  return phi_apply(phi, mp.magnitudes).transpose();
}

FeatureSet build_features(const PairedDataset& dataset, const PhiKind& phi, Eigen::Index padded_length_m) {
  FeatureSet features;
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const auto& [degraded, clean] = dataset.pairs[i];
    for (const AudioSignal* s : {&degraded, &clean})
      if (static_cast<Eigen::Index>(s->samples.size()) > padded_length_m)
        throw LengthError("pair " + std::to_string(i) + " has " + std::to_string(s->samples.size()) +
                          " samples, more than the padded length " + std::to_string(padded_length_m));
    features.inputs.push_back(spectral_features(to_normalized(degraded), phi, padded_length_m));
    features.targets.push_back(spectral_features(to_normalized(clean), phi, padded_length_m));
  }
  return features;
}

ConvAEModel initialize_model(const PipelineConfig& config) {
  validate(config);
  if (config.padded_length_m == 0) throw DomainError("padded length is unresolved");
  ConvAEModel model;
  model.config = config;
  model.network = nn::Network<double>::build(config.layer_spec, 1, config.bn_epsilon, config.bn_momentum);
  std::mt19937_64 rng(config.training.seed);
  model.network.init(rng);
  return model;
}

namespace {

nn::Batch<double> gather(const nn::Batch<double>& all, std::span<const std::size_t> idx) {
  nn::Batch<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

void check_dataset(const PairedDataset& dataset, int rate) {
  if (dataset.pairs.size() < 2) throw DataError("training needs at least 2 pairs to hold out a validation split");
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const auto& [degraded, clean] = dataset.pairs[i];
    if (degraded.samples.empty() || clean.samples.empty()) throw DataError("pair " + std::to_string(i) + " is empty");
    if (degraded.sample_rate_hz != rate || clean.sample_rate_hz != rate)
      throw RateError("pair " + std::to_string(i) + " is not at " + std::to_string(rate) + " Hz");
  }
}

}  // namespace

ConvAEModel train(const PairedDataset& dataset, PipelineConfig config, const EpochCallback& on_epoch) {
  validate(config);
  check_dataset(dataset, config.sample_rate_hz);
  if (config.padded_length_m == 0) {
    std::size_t longest = 0;
    for (const auto& [d, c] : dataset.pairs) longest = std::max({longest, d.samples.size(), c.samples.size()});
    config.padded_length_m = std::max(next_pow2(static_cast<Eigen::Index>(longest)), downsampling(config.layer_spec));
  }

  ConvAEModel model = initialize_model(config);
  const TrainingConfig& tc = config.training;
  if (tc.max_epochs == 0) return model;

  const FeatureSet features = build_features(dataset, config.phi, config.padded_length_m);
  std::mt19937_64 rng(derive_seed(tc.seed, 1));

  std::vector<std::size_t> order(dataset.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = order.size();
  const auto n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(tc.val_fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  const nn::Batch<double> val_in = gather(features.inputs, val_idx);
  const nn::Batch<double> val_target = gather(features.targets, val_idx);

  nn::AdamState<double> adam;
  adam.lr = tc.lr;
  nn::Network<double> best = model.network;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t stop = std::min(train_idx.size(), start + static_cast<std::size_t>(tc.batch_size));
      const std::span<const std::size_t> idx(train_idx.data() + start, stop - start);
      const nn::Batch<double> x = gather(features.inputs, idx);
      const nn::Batch<double> y = gather(features.targets, idx);

      const auto trace = model.network.forward_trace(x, nn::Mode::Train);
      loss_sum += nn::mse_loss(trace.output(), y) * static_cast<double>(idx.size());
      const auto grads = model.network.backward(trace, nn::mse_gradient(trace.output(), y));
      model.network.commit_statistics(trace);
      auto params = model.network.parameters();
      nn::adam_step<double>(adam, params, grads);
    }

    EpochLog log{epoch, loss_sum / static_cast<double>(train_idx.size()),
                 nn::mse_loss(model.network.predict(val_in), val_target)};
    model.train_log.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.val_loss < best_val) {
      best_val = log.val_loss;
      best = model.network;
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= tc.patience) {
      break;
    }
  }
  model.network = std::move(best);
  return model;
}

Eigen::VectorXd predict_phi(const ConvAEModel& model, const Eigen::VectorXd& phi_magnitudes) {
  if (phi_magnitudes.size() != model.config.padded_length_m)
    throw LengthError("expected " + std::to_string(model.config.padded_length_m) + " bins, got " +
                      std::to_string(phi_magnitudes.size()));
  const nn::Tensor<double> out = model.network.predict(nn::Tensor<double>(phi_magnitudes.transpose()));
  return out.row(0).transpose();
}

EnhanceResult reconstruct(const AudioSignal& degraded, Eigen::Index padded_length_m, int expected_rate_hz,
                          const MagnitudeEstimator& estimator) {
  if (degraded.sample_rate_hz != expected_rate_hz)
    throw RateError("input is " + std::to_string(degraded.sample_rate_hz) + " Hz, model expects " +
                    std::to_string(expected_rate_hz) + " Hz");
  if (degraded.samples.empty()) throw LengthError("input signal is empty");
  if (static_cast<Eigen::Index>(degraded.samples.size()) > padded_length_m)
    throw LengthError("input has " + std::to_string(degraded.samples.size()) + " samples, model supports at most " +
                      std::to_string(padded_length_m));

  const Spectrum deg_spectrum = fft(pad_to_pow2(to_normalized(degraded), padded_length_m));
  const MagPhase mp = decompose(deg_spectrum);
  const Eigen::VectorXd gains = estimator(mp);
  if (gains.size() != mp.magnitudes.size()) throw LengthError("estimator returned the wrong number of magnitudes");

  EnhanceResult result;
  result.degraded_phases = mp.phases;
  result.spectrum = recombine(gains, mp.phases);
  result.spectrum.original_length = deg_spectrum.size();
  result.spectrum.sample_rate_hz = degraded.sample_rate_hz;
  const InverseResult inverse = ifft(result.spectrum);
  result.imag_residue = inverse.imag_residue;
  result.full_time = inverse.signal.samples;
  result.output.sample_rate_hz = degraded.sample_rate_hz;
  result.output.samples = result.full_time.head(deg_spectrum.original_length);
  QuantizeResult q = to_audio(result.output);
  result.audio = std::move(q.signal);
  result.clamped = q.clamped;
  return result;
}

EnhanceResult enhance_detailed(const ConvAEModel& model, const AudioSignal& degraded) {
  const PhiKind phi = model.config.phi;
  return reconstruct(degraded, model.config.padded_length_m, model.config.sample_rate_hz,
                     [&](const MagPhase& mp) { return phi_invert(phi, predict_phi(model, phi_apply(phi, mp.magnitudes))); });
}

AudioSignal enhance(const ConvAEModel& model, const AudioSignal& degraded) {
  return enhance_detailed(model, degraded).audio;
}

}  // namespace fftcae
