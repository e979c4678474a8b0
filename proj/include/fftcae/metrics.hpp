#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fftcae/audio_io.hpp"
#include "fftcae/spectral.hpp"

namespace fftcae {

struct CerResult {
  std::size_t edits = 0;
  std::size_t ref_len = 0;
  double cer = 0.0;
};

/// Lowercase, keep [a-z0-9 '] and whitespace, collapse whitespace runs, trim.
std::string normalize_transcript(std::string_view text);

/// Character-level Levenshtein distance with unit costs.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// edits / ref_len over the (optionally normalized) strings. Not clamped to 1.
CerResult cer(std::string_view hypothesis, std::string_view reference, bool normalize = true);

struct RtfResult {
  double processing_s = 0.0;
  double audio_s = 0.0;
  double rtf = 0.0;
};

RtfResult rtf(double processing_s, double audio_s);

/// 10 log10(sum ref^2 / sum (ref - test)^2); +infinity when test == ref.
double snr_db(const NormalizedSignal& reference, const NormalizedSignal& test);

/// Squared circular correlation of the two phase-angle sequences, over bins
/// where both magnitudes are nonzero. Invariant to a common rotation.
double phase_r2(const Spectrum& a, const Spectrum& b);

struct EvalInput {
  std::string name;
  AudioSignal clean;
  AudioSignal degraded;
  AudioSignal enhanced;
  std::optional<std::string> reference_text;
  std::optional<std::string> degraded_text;
  std::optional<std::string> enhanced_text;
};

struct FileReport {
  std::string name;
  double snr_in_db = 0.0;
  double snr_out_db = 0.0;
  double delta_db = 0.0;
  std::optional<double> cer_in;
  std::optional<double> cer_out;
};

struct EvalReport {
  std::vector<FileReport> files;
  double mean_snr_in_db = 0.0;
  double mean_snr_out_db = 0.0;
  double mean_delta_db = 0.0;
  double median_delta_db = 0.0;
  std::optional<double> mean_cer_in;
  std::optional<double> mean_cer;
  std::optional<RtfResult> rtf;
};

/// Per-file SNR before and after enhancement against the clean reference,
/// plus aggregates. `timing` supplies the total enhance time and audio length.
EvalReport batch_report(std::span<const EvalInput> inputs, std::optional<RtfResult> timing = std::nullopt);

/// JSON with infinite values written as the strings "+inf" / "-inf".
std::string report_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace fftcae
