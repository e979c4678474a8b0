#include "fftcae/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fftcae/errors.hpp"

namespace fftcae {

std::string normalize_transcript(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    const char lower = static_cast<char>(std::tolower(c));
    if (!((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') || lower == '\'')) continue;
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(lower);
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

CerResult cer(std::string_view hypothesis, std::string_view reference, bool normalize) {
  const std::string hyp = normalize ? normalize_transcript(hypothesis) : std::string(hypothesis);
  const std::string ref = normalize ? normalize_transcript(reference) : std::string(reference);
  if (ref.empty()) throw DomainError("reference transcript is empty after normalization");
  CerResult r;
  r.edits = edit_distance(hyp, ref);
  r.ref_len = ref.size();
  r.cer = static_cast<double>(r.edits) / static_cast<double>(r.ref_len);
  return r;
}

RtfResult rtf(double processing_s, double audio_s) {
  if (!(audio_s > 0)) throw DomainError("audio length must be positive");
  if (!(processing_s >= 0)) throw DomainError("processing time must be non-negative");
  return {processing_s, audio_s, processing_s / audio_s};
}

double snr_db(const NormalizedSignal& reference, const NormalizedSignal& test) {
  if (reference.size() != test.size())
    throw ShapeError("SNR needs equal lengths, got " + std::to_string(reference.size()) + " and " +
                     std::to_string(test.size()));
  const double signal = reference.samples.squaredNorm();
  if (signal == 0) throw DomainError("SNR reference is all zeros");
  const double error = (reference.samples - test.samples).squaredNorm();
  if (error == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / error);
}

double phase_r2(const Spectrum& a, const Spectrum& b) {
  if (a.size() != b.size())
    throw ShapeError("phase_r2 needs equal lengths, got " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  std::vector<double> alpha, beta;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a.coeffs[j] == 0.0 || b.coeffs[j] == 0.0) continue;
    alpha.push_back(std::arg(a.coeffs[j]));
    beta.push_back(std::arg(b.coeffs[j]));
  }
  if (alpha.size() < 2) throw DomainError("phase_r2 needs at least 2 bins with nonzero magnitude in both spectra");

  auto circular_mean = [](const std::vector<double>& v) {
    double s = 0, c = 0;
    for (double x : v) {
      s += std::sin(x);
      c += std::cos(x);
    }
    return std::atan2(s, c);
  };
  const double ma = circular_mean(alpha), mb = circular_mean(beta);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double da = std::sin(alpha[i] - ma), db = std::sin(beta[i] - mb);
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) throw DomainError("phase_r2 is undefined when either phase sequence has no spread");
  const double r = sab / std::sqrt(saa * sbb);
  return r * r;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json number(double x) {
  if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
  if (std::isnan(x)) return nullptr;
  return x;
}

std::string fmt(double x, int precision = 2) {
  if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
  return buf;
}

}  // namespace

EvalReport batch_report(std::span<const EvalInput> inputs, std::optional<RtfResult> timing) {
  if (inputs.empty()) throw DataError("evaluation needs at least one file");
  EvalReport report;
  std::vector<double> snr_in, snr_out, delta, cer_in, cer_out;
  for (const auto& in : inputs) {
    const NormalizedSignal clean = to_normalized(in.clean);
    FileReport f;
    f.name = in.name;
    f.snr_in_db = snr_db(clean, to_normalized(in.degraded));
    f.snr_out_db = snr_db(clean, to_normalized(in.enhanced));
    f.delta_db = std::isinf(f.snr_in_db) && std::isinf(f.snr_out_db) ? 0.0 : f.snr_out_db - f.snr_in_db;
    if (in.reference_text) {
      if (in.degraded_text) f.cer_in = cer(*in.degraded_text, *in.reference_text).cer;
      if (in.enhanced_text) f.cer_out = cer(*in.enhanced_text, *in.reference_text).cer;
    }
    snr_in.push_back(f.snr_in_db);
    snr_out.push_back(f.snr_out_db);
    delta.push_back(f.delta_db);
    if (f.cer_in) cer_in.push_back(*f.cer_in);
    if (f.cer_out) cer_out.push_back(*f.cer_out);
    report.files.push_back(std::move(f));
  }
  report.mean_snr_in_db = mean_of(snr_in);
  report.mean_snr_out_db = mean_of(snr_out);
  report.mean_delta_db = mean_of(delta);
  report.median_delta_db = median_of(delta);
  if (!cer_in.empty()) report.mean_cer_in = mean_of(cer_in);
  if (!cer_out.empty()) report.mean_cer = mean_of(cer_out);
  report.rtf = timing;
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  j["files"] = nlohmann::json::array();
  for (const auto& f : report.files) {
    nlohmann::json e{{"name", f.name},
                     {"snr_in_db", number(f.snr_in_db)},
                     {"snr_out_db", number(f.snr_out_db)},
                     {"delta_db", number(f.delta_db)}};
    if (f.cer_in) e["cer_in"] = *f.cer_in;
    if (f.cer_out) e["cer_out"] = *f.cer_out;
    j["files"].push_back(e);
  }
  auto& agg = j["aggregate"];
  agg["mean_snr_in_db"] = number(report.mean_snr_in_db);
  agg["mean_snr_out_db"] = number(report.mean_snr_out_db);
  agg["mean_delta_db"] = number(report.mean_delta_db);
  agg["median_delta_db"] = number(report.median_delta_db);
  if (report.mean_cer_in) agg["mean_cer_in"] = *report.mean_cer_in;
  if (report.mean_cer) agg["mean_cer"] = *report.mean_cer;
  if (report.rtf) {
    agg["rtf"] = report.rtf->rtf;
    agg["processing_s"] = report.rtf->processing_s;
    agg["audio_s"] = report.rtf->audio_s;
  } else {
    agg["rtf"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& report) {
  const bool has_cer_in = report.mean_cer_in.has_value();
  const bool has_cer = report.mean_cer.has_value();
  std::size_t name_w = 4;
  for (const auto& f : report.files) name_w = std::max(name_w, f.name.size());

  std::ostringstream out;
  char line[512];
  auto row = [&](const std::string& name, const std::string& a, const std::string& b, const std::string& c,
                 const std::string& d, const std::string& e) {
    std::snprintf(line, sizeof(line), "%-*s  %10s  %10s  %9s", static_cast<int>(name_w), name.c_str(), a.c_str(),
                  b.c_str(), c.c_str());
    out << line;
    if (has_cer_in) {
      std::snprintf(line, sizeof(line), "  %7s", d.c_str());
      out << line;
    }
    if (has_cer) {
      std::snprintf(line, sizeof(line), "  %7s", e.c_str());
      out << line;
    }
    out << '\n';
  };
  row("file", "SNR in dB", "SNR out dB", "delta dB", "CER in", "CER out");
  for (const auto& f : report.files)
    row(f.name, fmt(f.snr_in_db), fmt(f.snr_out_db), fmt(f.delta_db), f.cer_in ? fmt(*f.cer_in, 3) : "-",
        f.cer_out ? fmt(*f.cer_out, 3) : "-");
  row("mean", fmt(report.mean_snr_in_db), fmt(report.mean_snr_out_db), fmt(report.mean_delta_db),
      report.mean_cer_in ? fmt(*report.mean_cer_in, 3) : "-", report.mean_cer ? fmt(*report.mean_cer, 3) : "-");
  row("median", "", "", fmt(report.median_delta_db), "", "");
  out << '\n';
  std::snprintf(line, sizeof(line), "%-18s  %-14s  %s\n", "processing time", "audio length", "RTF");
  out << line;
  if (report.rtf) {
    std::snprintf(line, sizeof(line), "%-18s  %-14s  %.2f\n", (fmt(report.rtf->processing_s, 3) + " s").c_str(),
                  (fmt(report.rtf->audio_s, 3) + " s").c_str(), report.rtf->rtf);
  } else {
    std::snprintf(line, sizeof(line), "%-18s  %-14s  %s\n", "-", "-", "-");
  }
  out << line;
  return out.str();
}

}  // namespace fftcae
