#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fftcae/audio_io.hpp"
#include "fftcae/channel.hpp"
#include "fftcae/errors.hpp"
#include "fftcae/file_util.hpp"
#include "fftcae/metrics.hpp"
#include "fftcae/model_io.hpp"
#include "fftcae/pipeline.hpp"
#include "fftcae/spectrogram_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fftcae;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

json read_json_file(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// Sorted *.wav names (not paths) in a directory.
std::vector<std::string> wav_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs task(i) for i in [0, n) on up to `jobs` threads. The first exception
// thrown by any task is rethrown after all workers finish.
template <typename Task>
void parallel_for(std::size_t n, unsigned jobs, Task&& task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- synth ----------------------------------------------------------------

struct SynthOptions {
  std::string spec;
  std::string preset = "identity";
  int pairs = 1;
  double duration_s = 0.064;
  std::string source = "tone-mix";
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

void apply_synth_json(const json& j, SynthOptions& o) {
  if (j.contains("preset")) o.preset = j["preset"].get<std::string>();
  if (j.contains("pairs")) o.pairs = j["pairs"].get<int>();
  if (j.contains("duration_s")) o.duration_s = j["duration_s"].get<double>();
  if (j.contains("source")) o.source = j["source"].get<std::string>();
  if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
}

void setup_synth(CLI::App& app, SynthOptions& o) {
  auto* cmd = app.add_subcommand("synth", "Generate a paired clean/degraded corpus and its manifest");
  cmd->add_option("--spec", o.spec, "JSON spec file, or a preset name (same as --preset)");
  cmd->add_option("--preset", o.preset, "Degradation preset")->check(CLI::IsMember([] {
    std::vector<std::string> names;
    for (const auto& p : level_presets()) names.push_back(p.name);
    return names;
  }()));
  cmd->add_option("--pairs", o.pairs, "Number of pairs")->check(CLI::PositiveNumber);
  cmd->add_option("--duration", o.duration_s, "Seconds per signal (times 16000 must be an integer >= 16)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--source", o.source, "Clean source kind")->check(CLI::IsMember({"tone-mix", "chirp", "noise-bursts"}));
  cmd->add_option("--seed", o.seed, "Corpus seed");
  cmd->add_option("--config", o.config, "JSON file with preset/pairs/duration_s/source/seed; flags take precedence");
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->final_callback([cmd, &o] {
    SynthOptions merged;
    if (!o.config.empty()) apply_synth_json(read_json_file(o.config), merged);
    if (!o.spec.empty()) {
      if (fs::is_regular_file(o.spec))
        apply_synth_json(read_json_file(o.spec), merged);
      else
        merged.preset = find_preset(o.spec).name;
    }
    for (const char* flag : {"--preset", "--pairs", "--duration", "--source", "--seed"}) {
      if (cmd->count(flag) == 0) continue;
      const std::string f = flag;
      if (f == "--preset") merged.preset = o.preset;
      if (f == "--pairs") merged.pairs = o.pairs;
      if (f == "--duration") merged.duration_s = o.duration_s;
      if (f == "--source") merged.source = o.source;
      if (f == "--seed") merged.seed = o.seed;
    }
    const SynthSpec spec{merged.pairs, merged.duration_s, source_kind_from_string(merged.source), merged.preset, merged.seed};
    const Manifest m = synthesize_corpus(spec, o.out);
    std::cerr << "synth: wrote " << m.entries.size() << " pairs (" << spec.level_profile << ", "
              << to_string(spec.source_kind) << ", seed " << spec.seed << ")\n";
    std::cout << m.path.string() << "\n";
  });
}

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string phi = "log";
  std::string out;
  std::string config;
  int epochs = 100;
  int patience = 10;
  double lr = 1e-3;
  int batch_size = 16;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  long long padded_length = 0;
  double log_epsilon = 1e-8;
};

void apply_train_json(const json& j, PipelineConfig& c) {
  if (j.contains("phi")) {
    const auto phi = j["phi"].get<std::string>();
    if (phi != "id" && phi != "log") throw DomainError("config phi must be 'id' or 'log'");
    c.phi = phi == "log" ? PhiKind::log(c.phi.epsilon) : PhiKind::identity();
  }
  if (j.contains("log_epsilon")) c.phi.epsilon = j["log_epsilon"].get<double>();
  if (j.contains("padded_length_m")) c.padded_length_m = j["padded_length_m"].get<Eigen::Index>();
  auto& t = c.training;
  if (j.contains("epochs")) t.max_epochs = j["epochs"].get<int>();
  if (j.contains("patience")) t.patience = j["patience"].get<int>();
  if (j.contains("lr")) t.lr = j["lr"].get<double>();
  if (j.contains("batch_size")) t.batch_size = j["batch_size"].get<int>();
  if (j.contains("val_fraction")) t.val_fraction = j["val_fraction"].get<double>();
  if (j.contains("seed")) t.seed = j["seed"].get<std::uint64_t>();
}

void setup_train(CLI::App& app, TrainOptions& o) {
  auto* cmd = app.add_subcommand("train", "Train a magnitude model on a corpus manifest");
  cmd->add_option("--data", o.data, "Corpus manifest (manifest.jsonl)")->required();
  cmd->add_option("--phi", o.phi, "Magnitude transform: id or log")->check(CLI::IsMember({"id", "log"}));
  cmd->add_option("--out", o.out, "Output model file")->required();
  cmd->add_option("--config", o.config,
                  "JSON file with phi/log_epsilon/padded_length_m/epochs/patience/lr/batch_size/val_fraction/seed; "
                  "flags take precedence");
  cmd->add_option("--epochs", o.epochs, "Maximum epochs (0 writes the initialized model)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--patience", o.patience, "Early-stopping patience in epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch-size", o.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--val-fraction", o.val_fraction, "Held-out validation fraction in (0, 1)")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.seed, "Seed for initialization, split and batch order");
  cmd->add_option("--padded-length", o.padded_length, "Spectrum length m (power of two); 0 picks the smallest that fits")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--log-epsilon", o.log_epsilon, "Floor inside the log transform")->check(CLI::PositiveNumber);
  cmd->final_callback([cmd, &o] {
    PipelineConfig config;
    if (!o.config.empty()) apply_train_json(read_json_file(o.config), config);
    auto& t = config.training;
    if (cmd->count("--phi")) config.phi = o.phi == "log" ? PhiKind::log(config.phi.epsilon) : PhiKind::identity();
    if (cmd->count("--log-epsilon")) config.phi.epsilon = o.log_epsilon;
    if (cmd->count("--padded-length")) config.padded_length_m = o.padded_length;
    if (cmd->count("--epochs")) t.max_epochs = o.epochs;
    if (cmd->count("--patience")) t.patience = o.patience;
    if (cmd->count("--lr")) t.lr = o.lr;
    if (cmd->count("--batch-size")) t.batch_size = o.batch_size;
    if (cmd->count("--val-fraction")) t.val_fraction = o.val_fraction;
    if (cmd->count("--seed")) t.seed = o.seed;
    const bool patience_given = cmd->count("--patience") || (!o.config.empty() && read_json_file(o.config).contains("patience"));
    if (!patience_given && t.max_epochs > 0 && t.patience > t.max_epochs) {
      std::cerr << "train: patience lowered to " << t.max_epochs << " to fit --epochs\n";
      t.patience = t.max_epochs;
    }
    validate(config);

    const PairedDataset dataset = load_dataset(load_manifest(o.data));
    std::cerr << "train: " << dataset.pairs.size() << " pairs, level " << dataset.level_tag << ", phi "
              << (config.phi.tag == PhiKind::Tag::Log ? "log" : "id") << ", seed " << t.seed << "\n";
    const ConvAEModel model = train(dataset, config, [](const EpochLog& e) {
      std::cerr << "epoch " << e.epoch << "  train " << e.train_loss << "  val " << e.val_loss << "\n";
    });
    save_model(model, o.out);
    std::cerr << "train: best epoch " << model.best_epoch << ", m = " << model.config.padded_length_m << ", wrote "
              << o.out << "\n";
  });
}

// ---- enhance --------------------------------------------------------------

struct EnhanceOptions {
  std::string model;
  std::string in;
  std::string out;
  std::string timing;
  unsigned jobs = default_jobs();
};

json config_summary(const PipelineConfig& c) {
  return {{"phi", c.phi.tag == PhiKind::Tag::Log ? "log" : "id"},
          {"log_epsilon", c.phi.epsilon},
          {"padded_length_m", c.padded_length_m},
          {"sample_rate_hz", c.sample_rate_hz},
          {"seed", c.training.seed}};
}

void setup_enhance(CLI::App& app, EnhanceOptions& o) {
  auto* cmd = app.add_subcommand("enhance", "Enhance a WAV file or every WAV in a directory");
  cmd->add_option("--model", o.model, "Trained model file")->required();
  cmd->add_option("--in", o.in, "Input WAV file or directory")->required();
  cmd->add_option("--out", o.out, "Output WAV file or directory")->required();
  cmd->add_option("--timing", o.timing, "Timing JSON path (default: <out>.timing.json, or <out>/timing.json for directories)");
  cmd->add_option("--jobs", o.jobs, "Worker threads for directory mode")->check(CLI::PositiveNumber);
  cmd->final_callback([&o] {
    const ConvAEModel model = load_model(o.model);
    const bool dir_mode = fs::is_directory(o.in);
    std::vector<fs::path> inputs, outputs;
    if (dir_mode) {
      for (const auto& name : wav_names(o.in)) {
        inputs.push_back(fs::path(o.in) / name);
        outputs.push_back(fs::path(o.out) / name);
      }
      if (inputs.empty()) throw DataError("no .wav files in " + o.in);
    } else {
      inputs.push_back(o.in);
      outputs.push_back(o.out);
    }

    // Read and check everything first so a bad file leaves no outputs behind.
    std::vector<AudioSignal> signals;
    for (const auto& p : inputs) {
      AudioSignal s = read_wav(p);
      if (s.sample_rate_hz != model.config.sample_rate_hz)
        throw RateError(p.string() + " is " + std::to_string(s.sample_rate_hz) + " Hz, model expects " +
                        std::to_string(model.config.sample_rate_hz) + " Hz");
      if (s.samples.empty() || static_cast<Eigen::Index>(s.samples.size()) > model.config.padded_length_m)
        throw LengthError(p.string() + " has " + std::to_string(s.samples.size()) + " samples; model supports 1.." +
                          std::to_string(model.config.padded_length_m));
      signals.push_back(std::move(s));
    }

    std::vector<AudioSignal> enhanced(signals.size());
    std::vector<double> seconds(signals.size());
    std::vector<std::size_t> clamped(signals.size());
    const auto wall_start = std::chrono::steady_clock::now();
    parallel_for(signals.size(), o.jobs, [&](std::size_t i) {
      const auto t0 = std::chrono::steady_clock::now();
      EnhanceResult r = enhance_detailed(model, signals[i]);
      seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      enhanced[i] = std::move(r.audio);
      clamped[i] = r.clamped;
    });
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

    if (dir_mode) fs::create_directories(o.out);
    for (std::size_t i = 0; i < outputs.size(); ++i) write_wav(enhanced[i], outputs[i]);

    json files = json::array();
    double processing = 0, audio = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      processing += seconds[i];
      audio += signals[i].duration_s();
      files.push_back({{"name", inputs[i].filename().string()},
                       {"processing_s", seconds[i]},
                       {"audio_s", signals[i].duration_s()},
                       {"clamped_samples", clamped[i]}});
    }
    const RtfResult total = rtf(processing, audio);
    const json timing{{"files", files},
                      {"total", {{"processing_s", total.processing_s}, {"audio_s", total.audio_s}, {"rtf", total.rtf}}},
                      {"wall_s", wall},
                      {"jobs", o.jobs},
                      {"model", o.model},
                      {"config", config_summary(model.config)}};
    const fs::path timing_path = !o.timing.empty() ? fs::path(o.timing)
                                 : dir_mode        ? fs::path(o.out) / "timing.json"
                                                   : fs::path(o.out + ".timing.json");
    write_json_file(timing_path, timing);
    std::cerr << "enhance: " << inputs.size() << " file(s), RTF " << total.rtf << ", timing in " << timing_path.string()
              << "\n";
  });
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
  std::string clean, degraded, enhanced;
  std::string ref_txt, hyp_txt, hyp_degraded_txt;
  std::string timing;
  std::string out;
};

void setup_eval(CLI::App& app, EvalOptions& o) {
  auto* cmd = app.add_subcommand("eval", "Compare enhanced and degraded audio against clean references");
  cmd->add_option("--clean", o.clean, "Directory of clean WAVs")->required();
  cmd->add_option("--degraded", o.degraded, "Directory of degraded WAVs")->required();
  cmd->add_option("--enhanced", o.enhanced, "Directory of enhanced WAVs")->required();
  cmd->add_option("--ref-txt", o.ref_txt, "Directory of reference transcripts <name>.txt");
  cmd->add_option("--hyp-txt", o.hyp_txt, "Directory of transcripts of the enhanced audio <name>.txt");
  cmd->add_option("--hyp-degraded-txt", o.hyp_degraded_txt, "Directory of transcripts of the degraded audio <name>.txt");
  cmd->add_option("--timing", o.timing, "Timing JSON written by enhance, for the RTF row");
  cmd->add_option("--out", o.out, "Report JSON path; the text table goes next to it with a .txt extension")->required();
  cmd->final_callback([&o] {
    const auto clean = wav_names(o.clean), degraded = wav_names(o.degraded), enhanced = wav_names(o.enhanced);
    std::vector<std::string> missing;
    for (const auto& n : clean) {
      if (!std::binary_search(degraded.begin(), degraded.end(), n)) missing.push_back(o.degraded + "/" + n);
      if (!std::binary_search(enhanced.begin(), enhanced.end(), n)) missing.push_back(o.enhanced + "/" + n);
    }
    for (const auto* other : {&degraded, &enhanced})
      for (const auto& n : *other)
        if (!std::binary_search(clean.begin(), clean.end(), n)) missing.push_back(o.clean + "/" + n);
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += "\n  " + m;
      throw DataError("file sets differ; missing:" + list);
    }
    if (clean.empty()) throw DataError("no .wav files in " + o.clean);

    auto transcript = [](const std::string& dir, const std::string& wav) -> std::optional<std::string> {
      if (dir.empty()) return std::nullopt;
      const fs::path p = fs::path(dir) / (fs::path(wav).stem().string() + ".txt");
      if (!fs::exists(p)) throw DataError("missing transcript " + p.string());
      return read_text(p);
    };
    std::vector<EvalInput> inputs;
    for (const auto& n : clean)
      inputs.push_back({fs::path(n).stem().string(), read_wav(fs::path(o.clean) / n), read_wav(fs::path(o.degraded) / n),
                        read_wav(fs::path(o.enhanced) / n), transcript(o.ref_txt, n), transcript(o.hyp_degraded_txt, n),
                        transcript(o.hyp_txt, n)});

    std::optional<RtfResult> timing;
    if (!o.timing.empty()) {
      const json t = read_json_file(o.timing);
      try {
        timing = rtf(t.at("total").at("processing_s").get<double>(), t.at("total").at("audio_s").get<double>());
      } catch (const json::exception& e) {
        throw DataError(o.timing + ": " + e.what());
      }
    }
    const EvalReport report = batch_report(inputs, timing);
    json j = json::parse(report_json(report));
    j["config"] = {{"clean", o.clean}, {"degraded", o.degraded}, {"enhanced", o.enhanced}, {"timing", o.timing}};
    write_json_file(o.out, j);
    const std::string table = report_table(report);
    write_file_atomic(fs::path(o.out).replace_extension(".txt"), table);
    std::cerr << table;
  });
}

// ---- rtf ------------------------------------------------------------------

struct RtfOptions {
  double processing_s = 0;
  double audio_s = 0;
  std::string timing;
};

void setup_rtf(CLI::App& app, RtfOptions& o) {
  auto* cmd = app.add_subcommand("rtf", "Real-time factor from explicit times or an enhance timing file");
  auto* proc = cmd->add_option("--processing", o.processing_s, "Processing time in seconds");
  auto* audio = cmd->add_option("--audio", o.audio_s, "Audio length in seconds");
  auto* timing = cmd->add_option("--timing", o.timing, "Timing JSON written by enhance");
  proc->needs(audio);
  audio->needs(proc);
  timing->excludes(proc)->excludes(audio);
  cmd->final_callback([cmd, &o] {
    if (!cmd->count("--timing") && !cmd->count("--processing")) throw CLI::RequiredError("--processing/--audio or --timing");
    RtfResult r;
    if (!o.timing.empty()) {
      const json t = read_json_file(o.timing);
      try {
        r = rtf(t.at("total").at("processing_s").get<double>(), t.at("total").at("audio_s").get<double>());
      } catch (const json::exception& e) {
        throw DataError(o.timing + ": " + e.what());
      }
    } else {
      r = rtf(o.processing_s, o.audio_s);
    }
    const json out{{"processing_s", r.processing_s},
                   {"audio_s", r.audio_s},
                   {"rtf", r.rtf},
                   {"rtf_rounded", std::round(r.rtf * 100.0) / 100.0}};
    std::cout << out.dump() << "\n";
  });
}

// ---- spectrogram ----------------------------------------------------------

struct SpectrogramOptions {
  std::string in;
  std::vector<std::string> out;
  long long window = 512;
  long long hop = 128;
  std::string window_kind = "hann";
  double range_db = 80.0;
};

void setup_spectrogram(CLI::App& app, SpectrogramOptions& o) {
  auto* cmd = app.add_subcommand("spectrogram", "Write an STFT magnitude spectrogram as PGM and/or CSV");
  cmd->add_option("--in", o.in, "Input WAV")->required();
  cmd->add_option("--out", o.out, "Output path(s); the format follows the .pgm or .csv extension")->required();
  cmd->add_option("--window", o.window, "Window length (power of two)")->check(CLI::PositiveNumber);
  cmd->add_option("--hop", o.hop, "Hop size in samples")->check(CLI::PositiveNumber);
  cmd->add_option("--window-kind", o.window_kind, "Window shape")->check(CLI::IsMember({"hann", "rect"}));
  cmd->add_option("--range-db", o.range_db, "Dynamic range mapped onto the PGM grey levels")->check(CLI::PositiveNumber);
  cmd->final_callback([&o] {
    for (const auto& p : o.out) {
      const auto ext = fs::path(p).extension();
      if (ext != ".pgm" && ext != ".csv") throw CLI::ValidationError("--out", p + " must end in .pgm or .csv");
    }
    const StftParams params{o.window, o.hop, o.window_kind == "hann" ? WindowKind::Hann : WindowKind::Rect};
    const Eigen::MatrixXd mags = stft(to_normalized(read_wav(o.in)), params);
    for (const auto& p : o.out) {
      if (fs::path(p).extension() == ".pgm")
        write_file_atomic(p, encode_pgm(mags, params, o.range_db));
      else
        write_file_atomic(p, encode_csv(mags, params));
    }
    std::cerr << "spectrogram: " << mags.rows() << " bins x " << mags.cols() << " frames\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FFT-domain convolutional autoencoder toolkit for degraded audio"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthOptions synth;
  TrainOptions train_opts;
  EnhanceOptions enhance_opts;
  EvalOptions eval_opts;
  RtfOptions rtf_opts;
  SpectrogramOptions spec_opts;
  setup_synth(app, synth);
  setup_train(app, train_opts);
  setup_enhance(app, enhance_opts);
  setup_eval(app, eval_opts);
  setup_rtf(app, rtf_opts);
  setup_spectrogram(app, spec_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    const CLI::App* scope = &app;
    for (const CLI::App* sub : app.get_subcommands()) scope = sub;
    std::cerr << "\n" << scope->help();
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
