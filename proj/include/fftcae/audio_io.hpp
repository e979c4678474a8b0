#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace fftcae {

/// Largest magnitude of a stored sample; -32768 is never produced.
inline constexpr int kPcmScale = 32767;

/// 16-bit PCM samples as stored on disk.
struct AudioSignal {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = 16000;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
  bool operator==(const AudioSignal&) const = default;
};

/// Samples scaled to [-1, 1].
struct NormalizedSignal {
  Eigen::VectorXd samples;
  int sample_rate_hz = 16000;

  Eigen::Index size() const { return samples.size(); }
};

/// Result of float-to-PCM conversion; `clamped` counts samples outside [-1, 1].
struct QuantizeResult {
  AudioSignal signal;
  std::size_t clamped = 0;
};

/// Reads a mono 16-bit PCM RIFF/WAVE file. Unknown chunks are skipped.
AudioSignal read_wav(const std::filesystem::path& path);

/// Writes a canonical 44-byte-header WAV.
void write_wav(const AudioSignal& signal, const std::filesystem::path& path);

/// In-memory encoders used by write_wav; exposed for byte-level tests.
std::vector<std::uint8_t> encode_wav(const AudioSignal& signal);
AudioSignal decode_wav(const std::vector<std::uint8_t>& bytes);

NormalizedSignal to_normalized(const AudioSignal& signal);

/// round(clamp(v, -1, 1) * 32767), ties away from zero.
QuantizeResult to_audio(const NormalizedSignal& signal);

}  // namespace fftcae
