#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fftcae/errors.hpp"
#include "fftcae/metrics.hpp"
#include "oracles.hpp"

using namespace fftcae;

namespace {

std::string random_string(std::mt19937_64& rng, std::size_t max_len, const std::string& alphabet = "abcd ") {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

NormalizedSignal vec_signal(const Eigen::VectorXd& v) { return NormalizedSignal{v, 16000}; }

AudioSignal constant_audio(std::int16_t value, std::size_t n = 100) {
  return AudioSignal{std::vector<std::int16_t>(n, value), 16000};
}

Spectrum spectrum_of(const Eigen::VectorXcd& c) { return Spectrum{c, c.size(), 16000}; }

Eigen::VectorXcd random_phasors(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> mag(0.1, 2.0);
  Eigen::VectorXcd out(n);
  for (auto& z : out) z = std::polar(mag(rng), angle(rng));
  return out;
}

}  // namespace

TEST(Cer, Examples) {
  EXPECT_EQ(cer("abc", "abc").cer, 0.0);
  const CerResult missing = cer("", "abc");
  EXPECT_EQ(missing.edits, 3u);
  EXPECT_EQ(missing.cer, 1.0);
  const CerResult sub = cer("axc", "abc");
  EXPECT_EQ(sub.edits, 1u);
  EXPECT_DOUBLE_EQ(sub.cer, 1.0 / 3.0);
}

TEST(Cer, NotClampedToOne) {
  const CerResult r = cer("abcdef", "a");
  EXPECT_EQ(r.edits, 5u);
  EXPECT_EQ(r.cer, 5.0);
}

TEST(Cer, EmptyReferenceIsDomainError) {
  EXPECT_THROW(cer("abc", ""), DomainError);
  EXPECT_THROW(cer("abc", " ?!. "), DomainError);
  EXPECT_NO_THROW(cer("abc", " ?!. ", false));
}

TEST(Cer, Normalization) {
  EXPECT_EQ(normalize_transcript("  Hello,   World!\tIt's 42.  "), "hello world it's 42");
  EXPECT_EQ(normalize_transcript("A - B"), "a b");
  EXPECT_EQ(normalize_transcript(""), "");
  EXPECT_EQ(cer("HELLO world", "hello, world.").cer, 0.0);
  EXPECT_GT(cer("HELLO world", "hello, world.", false).cer, 0.0);
}

TEST(Cer, MatchesBruteForceOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const std::string a = random_string(rng, 40), b = random_string(rng, 40);
    ASSERT_EQ(edit_distance(a, b), oracle::brute_edit_distance(a, b)) << a << " | " << b;
  }
}

TEST(Cer, EditDistanceIsAMetric) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const std::string x = random_string(rng, 20), y = random_string(rng, 20), z = random_string(rng, 20);
    EXPECT_EQ(edit_distance(x, x), 0u);
    EXPECT_EQ(edit_distance(x, y), edit_distance(y, x));
    EXPECT_LE(edit_distance(x, z), edit_distance(x, y) + edit_distance(y, z));
  }
}

TEST(Cer, ZeroIffNormalizedEqual) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const std::string h = random_string(rng, 8, "aAb ,"), r = "x" + random_string(rng, 8, "aAb ,");
    EXPECT_EQ(cer(h, r).cer == 0.0, normalize_transcript(h) == normalize_transcript(r));
  }
}

TEST(Rtf, TableValues) {
  const RtfResult a = rtf(73, 2400);
  EXPECT_NEAR(a.rtf, 0.0304166, 1e-6);
  EXPECT_EQ(std::round(a.rtf * 100) / 100, 0.03);
  const RtfResult b = rtf(63, 1120);
  EXPECT_DOUBLE_EQ(b.rtf, 0.05625);
  EXPECT_EQ(std::round(b.rtf * 100) / 100, 0.06);
  EXPECT_EQ(rtf(0, 10).rtf, 0.0);
}

TEST(Rtf, Exactness) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), a = u(rng) + 1e-3;
    EXPECT_NEAR(rtf(p, a).rtf * a, p, 4 * std::numeric_limits<double>::epsilon() * p);
  }
}

TEST(Rtf, Errors) {
  EXPECT_THROW(rtf(1, 0), DomainError);
  EXPECT_THROW(rtf(1, -2), DomainError);
  EXPECT_THROW(rtf(-1, 2), DomainError);
}

TEST(Snr, IdenticalIsInfinite) {
  const NormalizedSignal s = vec_signal(Eigen::VectorXd::LinSpaced(50, -0.5, 0.5));
  EXPECT_EQ(snr_db(s, s), std::numeric_limits<double>::infinity());
}

TEST(Snr, ZeroTestIsZeroDb) {
  const NormalizedSignal s = vec_signal(Eigen::VectorXd::LinSpaced(50, -0.5, 0.7));
  EXPECT_NEAR(snr_db(s, vec_signal(Eigen::VectorXd::Zero(50))), 0.0, 1e-12);
}

TEST(Snr, SineWithTenthPowerNoiseIsTwentyDb) {
  const Eigen::Index n = 16000;
  Eigen::VectorXd ref(n), noise(n);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    ref[i] = std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(i) / 16000.0);
    noise[i] = g(rng);
  }
  EXPECT_NEAR(snr_db(vec_signal(ref), vec_signal(ref + 0.1 * noise)), 20.0, 0.5);
}

TEST(Snr, Errors) {
  EXPECT_THROW(snr_db(vec_signal(Eigen::VectorXd::Ones(3)), vec_signal(Eigen::VectorXd::Ones(4))), ShapeError);
  EXPECT_THROW(snr_db(vec_signal(Eigen::VectorXd::Zero(3)), vec_signal(Eigen::VectorXd::Ones(3))), DomainError);
}

TEST(PhaseR2, IdentityAndConjugate) {
  std::mt19937_64 rng(12);
  const Eigen::VectorXcd a = random_phasors(rng, 256);
  EXPECT_NEAR(phase_r2(spectrum_of(a), spectrum_of(a)), 1.0, 1e-12);
  EXPECT_NEAR(phase_r2(spectrum_of(a), spectrum_of(a.conjugate())), 1.0, 1e-12);
}

TEST(PhaseR2, IndependentPhasesAreUncorrelated) {
  std::mt19937_64 rng(13);
  const Eigen::VectorXcd a = random_phasors(rng, 4096), b = random_phasors(rng, 4096);
  EXPECT_LT(phase_r2(spectrum_of(a), spectrum_of(b)), 0.01);
}

TEST(PhaseR2, InvariantUnderCommonRotation) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXcd a = random_phasors(rng, 128);
    Eigen::VectorXcd b = a;
    // Partially correlated: perturb half the bins.
    for (Eigen::Index j = 0; j < b.size(); j += 2) b[j] *= std::polar(1.0, angle(rng));
    const std::complex<double> rot = std::polar(1.0, angle(rng));
    const double base = phase_r2(spectrum_of(a), spectrum_of(b));
    EXPECT_NEAR(phase_r2(spectrum_of(a * rot), spectrum_of(b * rot)), base, 1e-9);
  }
}

TEST(PhaseR2, ZeroBinsExcluded) {
  std::mt19937_64 rng(15);
  Eigen::VectorXcd a = random_phasors(rng, 64), b = a;
  b[3] = 0.0;
  a[7] = 0.0;
  EXPECT_NEAR(phase_r2(spectrum_of(a), spectrum_of(b)), 1.0, 1e-12);
}

TEST(PhaseR2, Errors) {
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(8);
  a[1] = {1.0, 1.0};
  EXPECT_THROW(phase_r2(spectrum_of(a), spectrum_of(a)), DomainError);
  EXPECT_THROW(phase_r2(spectrum_of(a), spectrum_of(Eigen::VectorXcd::Ones(4))), ShapeError);
}

TEST(BatchReport, IdentityTripleIsInfinite) {
  const std::vector<EvalInput> inputs{{"a", constant_audio(1000), constant_audio(900), constant_audio(1000), {}, {}, {}}};
  const EvalReport r = batch_report(inputs);
  EXPECT_TRUE(std::isinf(r.files[0].snr_out_db));
  EXPECT_GT(r.files[0].delta_db, 0.0);
  const auto j = nlohmann::json::parse(report_json(r));
  EXPECT_EQ(j["files"][0]["snr_out_db"], "+inf");
  EXPECT_EQ(j["aggregate"]["mean_delta_db"], "+inf");
}

TEST(BatchReport, EmptyIsDataError) { EXPECT_THROW(batch_report(std::vector<EvalInput>{}), DataError); }

TEST(BatchReport, HandComputedAggregates) {
  // Scaling the clean signal by 0.9 gives exactly 20 dB; by 0.99, 40 dB; zero, 0 dB.
  const std::vector<EvalInput> inputs{
      {"one", constant_audio(10000), constant_audio(9000), constant_audio(9900), "abcd", "abxd", "abcd"},
      {"two", constant_audio(10000), constant_audio(9000), constant_audio(9000), "abcd", "abcd", "axyd"},
      {"three", constant_audio(10000), constant_audio(0), constant_audio(9000), "abcd", "", "abcd"},
  };
  const EvalReport r = batch_report(inputs, rtf(3.0, 12.0));
  ASSERT_EQ(r.files.size(), 3u);
  EXPECT_NEAR(r.files[0].snr_in_db, 20.0, 1e-9);
  EXPECT_NEAR(r.files[0].snr_out_db, 40.0, 1e-9);
  EXPECT_NEAR(r.files[2].snr_in_db, 0.0, 1e-9);
  EXPECT_NEAR(r.mean_delta_db, (20.0 + 0.0 + 20.0) / 3.0, 1e-9);
  EXPECT_NEAR(r.median_delta_db, 20.0, 1e-9);
  EXPECT_NEAR(r.mean_snr_in_db, 40.0 / 3.0, 1e-9);
  ASSERT_TRUE(r.mean_cer.has_value());
  EXPECT_NEAR(*r.mean_cer, (0.0 + 0.5 + 0.0) / 3.0, 1e-12);
  EXPECT_NEAR(*r.mean_cer_in, (0.25 + 0.0 + 1.0) / 3.0, 1e-12);
  EXPECT_EQ(r.rtf->rtf, 0.25);

  const auto j = nlohmann::json::parse(report_json(r));
  EXPECT_EQ(j["files"].size(), 3u);
  EXPECT_NEAR(j["aggregate"]["mean_cer"].get<double>(), 0.5 / 3.0, 1e-12);
  EXPECT_EQ(j["aggregate"]["rtf"].get<double>(), 0.25);
  EXPECT_EQ(j["files"][1]["cer_out"].get<double>(), 0.5);

  const std::string table = report_table(r);
  EXPECT_NE(table.find("CER out"), std::string::npos);
  EXPECT_NE(table.find("RTF"), std::string::npos);
  EXPECT_NE(table.find("0.25"), std::string::npos);
}

TEST(BatchReport, NoTranscriptsNoCerColumns) {
  const std::vector<EvalInput> inputs{{"a", constant_audio(1000), constant_audio(900), constant_audio(950), {}, {}, {}}};
  const EvalReport r = batch_report(inputs);
  EXPECT_FALSE(r.mean_cer.has_value());
  EXPECT_EQ(report_table(r).find("CER"), std::string::npos);
  EXPECT_FALSE(nlohmann::json::parse(report_json(r))["files"][0].contains("cer_out"));
}
