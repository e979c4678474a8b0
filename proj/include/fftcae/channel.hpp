#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fftcae/audio_io.hpp"

namespace fftcae {

/// Discrete LTI channel: x_deg = k * x_clean + w (+ u).
struct DegradationConfig {
  Eigen::VectorXd impulse_response{Eigen::VectorXd::Ones(1)};
  double noise_std = 0.0;
  std::optional<NormalizedSignal> interferer;
  std::uint64_t seed = 0;
  /// Output sample i is full-convolution sample i + alignment_delay. Zero
  /// gives the causal channel; (taps - 1) / 2 re-centres a linear-phase FIR.
  Eigen::Index alignment_delay = 0;
};

/// Full convolution truncated to the clean length, plus seeded Gaussian
/// noise, plus the interferer trimmed or zero-padded to length.
NormalizedSignal degrade(const NormalizedSignal& clean, const DegradationConfig& config);

/// Hann-windowed sinc low-pass with unity DC gain. `taps` must be odd.
Eigen::VectorXd lowpass_kernel(double cutoff_hz, int taps, int sample_rate_hz = 16000);

/// Seeded white noise under an exp(-6.908 t / rt60) envelope (60 dB of
/// amplitude decay at t = rt60), scaled to unit energy.
Eigen::VectorXd reverb_kernel(double rt60_s, double length_s, std::uint64_t seed, int sample_rate_hz = 16000);

enum class SourceKind { ToneMix, Chirp, FilteredNoiseBursts };

std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& name);

/// Named degradation family. Zero cutoff or rt60 disables that stage.
struct LevelPreset {
  std::string name;
  double cutoff_hz = 0.0;
  int taps = 1;
  double rt60_s = 0.0;
  double reverb_length_s = 0.0;
  double noise_std = 0.0;
};

const std::vector<LevelPreset>& level_presets();
const LevelPreset& find_preset(const std::string& name);

/// Builds the channel for one pair; the reverb tail is drawn from `seed`.
DegradationConfig make_degradation(const LevelPreset& preset, std::uint64_t seed, int sample_rate_hz = 16000);

/// Deterministic synthetic clean source of `samples` samples at 16 kHz.
NormalizedSignal synthesize_source(SourceKind kind, Eigen::Index samples, std::uint64_t seed,
                                   int sample_rate_hz = 16000);

/// Mixes a base seed with an index (splitmix64 finalizer), so per-item
/// streams do not depend on generation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct SynthSpec {
  int n_pairs = 1;
  double duration_s = 0.064;
  SourceKind source_kind = SourceKind::ToneMix;
  std::string level_profile = "identity";
  std::uint64_t seed = 0;
};

struct ManifestEntry {
  std::filesystem::path clean_path;
  std::filesystem::path degraded_path;
  std::uint64_t seed = 0;
  DegradationConfig config;
};

struct Manifest {
  std::filesystem::path path;
  std::string level_tag;
  std::vector<ManifestEntry> entries;
};

/// Writes n_pairs clean/degraded WAV pairs plus `manifest.jsonl` into
/// out_dir. Paths in the manifest are relative to out_dir. Byte-reproducible.
Manifest synthesize_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Reads a JSON-lines manifest; entry paths are resolved against its directory.
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace fftcae
