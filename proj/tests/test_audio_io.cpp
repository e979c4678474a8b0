#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "fftcae/audio_io.hpp"
#include "fftcae/errors.hpp"
#include "fftcae/file_util.hpp"

namespace fs = std::filesystem;
using namespace fftcae;

namespace {

fs::path data_file(const char* name) { return fs::path(FFTCAE_TEST_DATA_DIR) / name; }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fftcae_test_audio_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(ReadWav, ReadsSamplesInFileOrder) {
  const AudioSignal s = read_wav(data_file("py_wave_writer.wav"));
  const std::vector<std::int16_t> expected{0, 100, -100, 32767, -32767, 1, -1, 12345, -23456, 7};
  EXPECT_EQ(s.sample_rate_hz, 16000);
  EXPECT_EQ(s.samples, expected);
}

TEST(ReadWav, PassesThroughOtherSampleRates) {
  const AudioSignal s = read_wav(data_file("py_44k.wav"));
  EXPECT_EQ(s.sample_rate_hz, 44100);
  EXPECT_EQ(s.samples, (std::vector<std::int16_t>{0, 100, -100}));
}

TEST(ReadWav, EncoderMatchesReferenceWriterByteForByte) {
  // The fixture was produced by Python's `wave` module.
  const auto reference = read_file(data_file("py_wave_writer.wav"));
  EXPECT_EQ(encode_wav(decode_wav(reference)), reference);
}

TEST(ReadWav, RejectsMultichannelAndNon16Bit) {
  EXPECT_THROW(read_wav(data_file("py_stereo.wav")), UnsupportedFormat);
  EXPECT_THROW(read_wav(data_file("py_8bit.wav")), UnsupportedFormat);
}

TEST(ReadWav, RejectsMalformedAndTruncatedFiles) {
  auto bytes = read_file(data_file("py_wave_writer.wav"));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_wav(bad_magic), FormatError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_wav(truncated), FormatError);

  EXPECT_THROW(decode_wav(std::vector<std::uint8_t>(8, 0)), FormatError);
  EXPECT_THROW(read_wav(scratch("does_not_exist.wav")), IoError);
}

TEST(ReadWav, SkipsUnknownChunks) {
  auto bytes = encode_wav(AudioSignal{{5, -5}, 16000});
  const std::vector<std::uint8_t> list_chunk{'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, list_chunk.begin(), list_chunk.end());
  EXPECT_EQ(decode_wav(bytes).samples, (std::vector<std::int16_t>{5, -5}));
}

TEST(WriteWav, RoundTripsExtremalAndShortSignals) {
  for (const AudioSignal& s : {AudioSignal{{0}, 16000}, AudioSignal{{32767, -32767}, 16000}}) {
    const auto path = scratch("rt.wav");
    write_wav(s, path);
    EXPECT_EQ(fs::file_size(path), 44 + 2 * s.samples.size());
    EXPECT_EQ(read_wav(path), s);
  }
}

TEST(WriteWav, RandomSignalRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dist(-32767, 32767);
  AudioSignal s;
  s.samples.resize(10000);
  for (auto& v : s.samples) v = static_cast<std::int16_t>(dist(rng));
  const auto path = scratch("random.wav");
  write_wav(s, path);
  EXPECT_EQ(read_wav(path), s);
}

TEST(WriteWav, UnwritablePathIsIoError) {
  EXPECT_THROW(write_wav(AudioSignal{{1}, 16000}, scratch("no_such_dir") / "x" / "y.wav"), IoError);
}

TEST(Scaling, ToNormalized) {
  const auto n = to_normalized(AudioSignal{{0, 32767, 16384, -32767}, 16000});
  EXPECT_EQ(n.samples[0], 0.0);
  EXPECT_EQ(n.samples[1], 1.0);
  EXPECT_DOUBLE_EQ(n.samples[2], 16384.0 / 32767.0);
  EXPECT_NEAR(n.samples[2], 0.50001526, 1e-8);
  EXPECT_EQ(n.samples[3], -1.0);
  EXPECT_EQ(n.sample_rate_hz, 16000);
}

TEST(Scaling, ToAudioRoundsAndClamps) {
  NormalizedSignal n;
  n.samples = Eigen::VectorXd{{0.0, 1.2, -0.25, -3.0, 0.5 / 32767.0}};
  const auto q = to_audio(n);
  EXPECT_EQ(q.signal.samples, (std::vector<std::int16_t>{0, 32767, -8192, -32767, 1}));
  EXPECT_EQ(q.clamped, 2u);
}

TEST(Scaling, RoundTripIsExactForEveryPcmValue) {
  AudioSignal s;
  for (int v = -32767; v <= 32767; ++v) s.samples.push_back(static_cast<std::int16_t>(v));
  const auto n = to_normalized(s);
  EXPECT_LE(n.samples.cwiseAbs().maxCoeff(), 1.0);
  const auto q = to_audio(n);
  EXPECT_EQ(q.clamped, 0u);
  EXPECT_EQ(q.signal, s);
}
