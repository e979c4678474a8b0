#include "fftcae/channel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fftcae/errors.hpp"
#include "fftcae/file_util.hpp"

namespace fftcae {

using nlohmann::json;

NormalizedSignal degrade(const NormalizedSignal& clean, const DegradationConfig& config) {
  const Eigen::Index n = clean.size();
  const Eigen::Index taps = config.impulse_response.size();
  if (taps == 0) throw DomainError("impulse response is empty");
  if (!config.impulse_response.allFinite()) throw DomainError("impulse response has non-finite taps");
  if (config.noise_std < 0) throw DomainError("noise_std must be non-negative");
  if (config.alignment_delay < 0) throw DomainError("alignment_delay must be non-negative");

  NormalizedSignal out;
  out.sample_rate_hz = clean.sample_rate_hz;
  out.samples = Eigen::VectorXd::Zero(n);
  const Eigen::Index delay = config.alignment_delay;
  for (Eigen::Index i = 0; i < n; ++i) {
    // full[i + delay] = sum_j k[j] x[i + delay - j]
    const Eigen::Index t = i + delay;
    const Eigen::Index j_lo = std::max<Eigen::Index>(0, t - (n - 1));
    const Eigen::Index j_hi = std::min<Eigen::Index>(taps - 1, t);
    double acc = 0.0;
    for (Eigen::Index j = j_lo; j <= j_hi; ++j) acc += config.impulse_response[j] * clean.samples[t - j];
    out.samples[i] = acc;
  }

  if (config.noise_std > 0) {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, config.noise_std);
    for (Eigen::Index i = 0; i < n; ++i) out.samples[i] += noise(rng);
  }
  if (config.interferer) {
    const Eigen::Index len = std::min(n, config.interferer->size());
    out.samples.head(len) += config.interferer->samples.head(len);
  }
  return out;
}

Eigen::VectorXd lowpass_kernel(double cutoff_hz, int taps, int sample_rate_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (!(cutoff_hz > 0 && cutoff_hz < nyquist)) throw DomainError("cutoff must lie in (0, fs/2)");
  if (taps < 1 || taps % 2 == 0) throw DomainError("low-pass tap count must be odd and positive");
  if (taps == 1) return Eigen::VectorXd::Ones(1);

  const double fc = cutoff_hz / sample_rate_hz;
  const int mid = (taps - 1) / 2;
  Eigen::VectorXd k(taps);
  for (int i = 0; i < taps; ++i) {
    const int t = i - mid;
    const double sinc = t == 0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (taps - 1));
    k[i] = sinc * hann;
  }
  return k / k.sum();
}

Eigen::VectorXd reverb_kernel(double rt60_s, double length_s, std::uint64_t seed, int sample_rate_hz) {
  if (!(rt60_s > 0)) throw DomainError("rt60 must be positive");
  if (!(length_s > 0)) throw DomainError("reverb length must be positive");
  const auto n = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::llround(length_s * sample_rate_hz)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> white(0.0, 1.0);
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    k[i] = white(rng) * std::exp(-6.908 * t / rt60_s);
  }
  return k / k.norm();
}

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::ToneMix:
      return "tone-mix";
    case SourceKind::Chirp:
      return "chirp";
    case SourceKind::FilteredNoiseBursts:
      return "noise-bursts";
  }
  return "?";
}

SourceKind source_kind_from_string(const std::string& name) {
  if (name == "tone-mix") return SourceKind::ToneMix;
  if (name == "chirp") return SourceKind::Chirp;
  if (name == "noise-bursts") return SourceKind::FilteredNoiseBursts;
  throw DomainError("unknown source kind '" + name + "' (expected tone-mix, chirp or noise-bursts)");
}

const std::vector<LevelPreset>& level_presets() {
  // Ordered roughly by severity. Filter presets mimic the muffling tube
  // experiments, reverb presets the hallway ones, and LR- presets stack both.
  static const std::vector<LevelPreset> presets{
      {"identity", 0.0, 1, 0.0, 0.0, 0.0},
      {"L-lowpass-4k", 4000.0, 63, 0.0, 0.0, 0.002},
      {"L-lowpass-2k", 2000.0, 63, 0.0, 0.0, 0.003},
      {"L-lowpass-1k", 1000.0, 127, 0.0, 0.0, 0.003},
      {"R-reverb-0.3", 0.0, 1, 0.3, 0.3, 0.002},
      {"R-reverb-0.8", 0.0, 1, 0.8, 0.8, 0.002},
      {"LR-lowpass-2k-reverb-0.5", 2000.0, 63, 0.5, 0.5, 0.003},
  };
  return presets;
}

const LevelPreset& find_preset(const std::string& name) {
  for (const auto& p : level_presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : level_presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw DomainError("unknown level preset '" + name + "' (known: " + known + ")");
}

DegradationConfig make_degradation(const LevelPreset& preset, std::uint64_t seed, int sample_rate_hz) {
  DegradationConfig config;
  config.seed = seed;
  config.noise_std = preset.noise_std;
  Eigen::VectorXd k = Eigen::VectorXd::Ones(1);
  if (preset.cutoff_hz > 0) {
    k = lowpass_kernel(preset.cutoff_hz, preset.taps, sample_rate_hz);
    config.alignment_delay = (preset.taps - 1) / 2;
  }
  if (preset.rt60_s > 0) {
    const Eigen::VectorXd room = reverb_kernel(preset.rt60_s, preset.reverb_length_s, derive_seed(seed, 1), sample_rate_hz);
    Eigen::VectorXd combined = Eigen::VectorXd::Zero(k.size() + room.size() - 1);
    for (Eigen::Index i = 0; i < k.size(); ++i) combined.segment(i, room.size()) += k[i] * room;
    k = combined;
  }
  config.impulse_response = k;
  return config;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

NormalizedSignal tone_mix(Eigen::Index n, std::mt19937_64& rng, int fs) {
  // One tone per band, so every mix has content both below and above 4 kHz.
  static constexpr double kBands[][2] = {{150.0, 1000.0}, {1000.0, 2000.0}, {2000.0, 4000.0}, {4000.0, 7500.0}};
  NormalizedSignal s;
  s.sample_rate_hz = fs;
  s.samples = Eigen::VectorXd::Zero(n);
  for (const auto& band : kBands) {
    const double f = uniform(rng, band[0], band[1]);
    const double amp = uniform(rng, 0.05, 0.2);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < n; ++i)
      s.samples[i] += amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  }
  return s;
}

NormalizedSignal chirp(Eigen::Index n, std::mt19937_64& rng, int fs) {
  const double f0 = uniform(rng, 100.0, 500.0);
  const double f1 = uniform(rng, 3000.0, 7500.0);
  const double amp = uniform(rng, 0.3, 0.6);
  const double duration = static_cast<double>(n) / fs;
  NormalizedSignal s;
  s.sample_rate_hz = fs;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) * t * t / duration));
  }
  return s;
}

NormalizedSignal noise_bursts(Eigen::Index n, std::mt19937_64& rng, int fs) {
  std::normal_distribution<double> white(0.0, 1.0);
  NormalizedSignal raw;
  raw.sample_rate_hz = fs;
  raw.samples = Eigen::VectorXd::Zero(n);
  for (int burst = 0; burst < 3; ++burst) {
    const auto len = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(uniform(rng, 0.1, 0.4) * static_cast<double>(n)));
    const auto start = static_cast<Eigen::Index>(uniform(rng, 0.0, static_cast<double>(n - len)));
    for (Eigen::Index i = start; i < start + len; ++i) raw.samples[i] += white(rng);
  }
  // Band-limit each corpus item differently: low-pass at a random corner.
  DegradationConfig shaping;
  shaping.impulse_response = lowpass_kernel(uniform(rng, 2500.0, 7000.0), 31, fs);
  shaping.alignment_delay = 15;
  NormalizedSignal s = degrade(raw, shaping);
  const double peak = s.samples.cwiseAbs().maxCoeff();
  if (peak > 0) s.samples *= 0.6 / peak;
  return s;
}

json config_to_json(const DegradationConfig& c) {
  json j;
  j["impulse_response"] = std::vector<double>(c.impulse_response.data(), c.impulse_response.data() + c.impulse_response.size());
  j["noise_std"] = c.noise_std;
  j["alignment_delay"] = c.alignment_delay;
  j["seed"] = c.seed;
  j["interferer"] = c.interferer.has_value();
  return j;
}

DegradationConfig config_from_json(const json& j) {
  DegradationConfig c;
  const auto taps = j.at("impulse_response").get<std::vector<double>>();
  c.impulse_response = Eigen::Map<const Eigen::VectorXd>(taps.data(), static_cast<Eigen::Index>(taps.size()));
  c.noise_std = j.at("noise_std").get<double>();
  c.alignment_delay = j.at("alignment_delay").get<Eigen::Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

NormalizedSignal synthesize_source(SourceKind kind, Eigen::Index samples, std::uint64_t seed, int sample_rate_hz) {
  std::mt19937_64 rng(seed);
  switch (kind) {
    case SourceKind::ToneMix:
      return tone_mix(samples, rng, sample_rate_hz);
    case SourceKind::Chirp:
      return chirp(samples, rng, sample_rate_hz);
    case SourceKind::FilteredNoiseBursts:
      return noise_bursts(samples, rng, sample_rate_hz);
  }
  throw DomainError("unknown source kind");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Manifest synthesize_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  constexpr int kRate = 16000;
  if (spec.n_pairs < 1) throw DomainError("n_pairs must be positive");
  const double exact = spec.duration_s * kRate;
  const auto samples = static_cast<Eigen::Index>(std::llround(exact));
  if (std::abs(exact - static_cast<double>(samples)) > 1e-6 || samples < 16)
    throw DomainError("duration_s * 16000 must be an integer sample count >= 16");
  const LevelPreset& preset = find_preset(spec.level_profile);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.path = out_dir / "manifest.jsonl";
  manifest.level_tag = preset.name;
  std::ostringstream lines;
  for (int i = 0; i < spec.n_pairs; ++i) {
    const std::uint64_t pair_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
    const NormalizedSignal clean = synthesize_source(spec.source_kind, samples, derive_seed(pair_seed, 0), kRate);
    const DegradationConfig config = make_degradation(preset, derive_seed(pair_seed, 1), kRate);
    const NormalizedSignal degraded = degrade(clean, config);

    char name[32];
    std::snprintf(name, sizeof(name), "%05d", i);
    ManifestEntry entry{std::filesystem::path("clean") / (std::string(name) + ".wav"),
                        std::filesystem::path("degraded") / (std::string(name) + ".wav"), pair_seed, config};
    std::filesystem::create_directories(out_dir / "clean");
    std::filesystem::create_directories(out_dir / "degraded");
    write_wav(to_audio(clean).signal, out_dir / entry.clean_path);
    write_wav(to_audio(degraded).signal, out_dir / entry.degraded_path);

    json record;
    record["clean_path"] = entry.clean_path.generic_string();
    record["degraded_path"] = entry.degraded_path.generic_string();
    record["seed"] = pair_seed;
    record["level"] = preset.name;
    record["source"] = to_string(spec.source_kind);
    record["duration_s"] = spec.duration_s;
    record["config"] = config_to_json(config);
    lines << record.dump() << '\n';

    entry.clean_path = out_dir / entry.clean_path;
    entry.degraded_path = out_dir / entry.degraded_path;
    manifest.entries.push_back(std::move(entry));
  }
  write_file_atomic(manifest.path, lines.str());
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest manifest;
  manifest.path = path;
  const auto base = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json record = json::parse(line);
      ManifestEntry entry;
      entry.clean_path = base / record.at("clean_path").get<std::string>();
      entry.degraded_path = base / record.at("degraded_path").get<std::string>();
      entry.seed = record.at("seed").get<std::uint64_t>();
      entry.config = config_from_json(record.at("config"));
      if (manifest.level_tag.empty() && record.contains("level")) manifest.level_tag = record["level"].get<std::string>();
      manifest.entries.push_back(std::move(entry));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad manifest record: " + e.what());
    }
  }
  if (manifest.entries.empty()) throw DataError("manifest " + path.string() + " lists no pairs");
  return manifest;
}

}  // namespace fftcae
