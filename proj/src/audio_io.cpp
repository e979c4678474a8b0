#include "fftcae/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "fftcae/errors.hpp"
#include "fftcae/file_util.hpp"

namespace fftcae {

namespace {

constexpr std::uint16_t kPcmFormat = 1;
constexpr std::uint16_t kBitsPerSample = 16;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated WAV: ") + what);
  }
  std::uint16_t u16() {
    need(2, "u16");
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::string tag() {
    need(4, "chunk id");
    std::string t(reinterpret_cast<const char*>(&bytes_[pos_]), 4);
    pos_ += 4;
    return t;
  }
  void skip(std::size_t n) {
    need(n, "chunk body");
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_wav(const AudioSignal& signal) {
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kPcmFormat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(signal.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, kBitsPerSample);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::int16_t s : signal.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

AudioSignal decode_wav(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  if (in.remaining() < 12) throw FormatError("file too short for a RIFF header");
  if (in.tag() != "RIFF") throw FormatError("missing RIFF tag");
  in.u32();
  if (in.tag() != "WAVE") throw FormatError("missing WAVE tag");

  bool have_fmt = false;
  AudioSignal signal;
  while (in.remaining() >= 8) {
    const std::string id = in.tag();
    const std::uint32_t size = in.u32();
    if (id == "fmt ") {
      if (size < 16) throw FormatError("fmt chunk shorter than 16 bytes");
      in.need(size, "fmt chunk");
      const std::uint16_t format = in.u16();
      const std::uint16_t channels = in.u16();
      const std::uint32_t rate = in.u32();
      in.u32();  // byte rate
      in.u16();  // block align
      const std::uint16_t bits = in.u16();
      in.skip(size - 16);
      if ((size & 1) && in.remaining() > 0) in.skip(1);
      if (format != kPcmFormat) throw UnsupportedFormat("WAV format code " + std::to_string(format) + " is not PCM");
      if (channels != 1) throw UnsupportedFormat("WAV has " + std::to_string(channels) + " channels, expected mono");
      if (bits != kBitsPerSample) throw UnsupportedFormat("WAV has " + std::to_string(bits) + " bits per sample");
      if (rate == 0) throw FormatError("zero sample rate");
      signal.sample_rate_hz = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data chunk precedes fmt chunk");
      if (size % 2 != 0) throw FormatError("odd data chunk size");
      if (in.remaining() < size) throw FormatError("truncated data chunk");
      signal.samples.resize(size / 2);
      for (auto& s : signal.samples) s = static_cast<std::int16_t>(in.u16());
      return signal;
    } else {
      if (in.remaining() < size) throw FormatError("truncated chunk '" + id + "'");
      in.skip(size);
      if ((size & 1) && in.remaining() > 0) in.skip(1);
    }
  }
  throw FormatError(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

AudioSignal read_wav(const std::filesystem::path& path) {
  try {
    return decode_wav(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_wav(const AudioSignal& signal, const std::filesystem::path& path) {
  write_file_atomic(path, encode_wav(signal));
}

NormalizedSignal to_normalized(const AudioSignal& signal) {
  NormalizedSignal out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.samples.resize(static_cast<Eigen::Index>(signal.samples.size()));
  for (std::size_t i = 0; i < signal.samples.size(); ++i) {
    // -32768 is outside the stored range; clamp it so |v| <= 1 holds.
    const int s = std::max<int>(signal.samples[i], -kPcmScale);
    out.samples[static_cast<Eigen::Index>(i)] = static_cast<double>(s) / kPcmScale;
  }
  return out;
}

QuantizeResult to_audio(const NormalizedSignal& signal) {
  QuantizeResult result;
  result.signal.sample_rate_hz = signal.sample_rate_hz;
  result.signal.samples.resize(static_cast<std::size_t>(signal.size()));
  for (Eigen::Index i = 0; i < signal.size(); ++i) {
    double v = signal.samples[i];
    if (std::isnan(v)) v = 0.0;
    if (v > 1.0 || v < -1.0) {
      ++result.clamped;
      v = std::clamp(v, -1.0, 1.0);
    }
    // std::round rounds halfway cases away from zero.
    result.signal.samples[static_cast<std::size_t>(i)] = static_cast<std::int16_t>(std::round(v * kPcmScale));
  }
  return result;
}

}  // namespace fftcae
