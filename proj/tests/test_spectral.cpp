#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fftcae/errors.hpp"
#include "fftcae/spectral.hpp"
#include "oracles.hpp"

using namespace fftcae;
using cd = std::complex<double>;

namespace {

NormalizedSignal make_signal(std::initializer_list<double> v) {
  NormalizedSignal s;
  s.samples = Eigen::VectorXd(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) s.samples[i++] = x;
  return s;
}

NormalizedSignal random_signal(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  NormalizedSignal s;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] = dist(rng);
  return s;
}

}  // namespace

TEST(PadToPow2, PadsToNextPowerOfTwo) {
  const auto p = pad_to_pow2(make_signal({1, 2, 3, 4, 5}));
  ASSERT_EQ(p.signal.size(), 8);
  EXPECT_EQ(p.original_length, 5);
  EXPECT_EQ(p.signal.samples.tail(3), Eigen::VectorXd::Zero(3));
  EXPECT_EQ(p.signal.samples[4], 5.0);
}

TEST(PadToPow2, PowerOfTwoIsUnchanged) {
  const auto s = make_signal({1, 2, 3, 4, 5, 6, 7, 8});
  const auto p = pad_to_pow2(s);
  EXPECT_EQ(p.signal.samples, s.samples);
}

TEST(PadToPow2, ExplicitTarget) {
  const auto p = pad_to_pow2(make_signal({1, 2, 3}), 16);
  ASSERT_EQ(p.signal.size(), 16);
  EXPECT_EQ(p.signal.samples.tail(13), Eigen::VectorXd::Zero(13));
  EXPECT_EQ(p.original_length, 3);
}

TEST(PadToPow2, RejectsShortOrNonPow2Target) {
  EXPECT_THROW(pad_to_pow2(make_signal({1, 2, 3}), 2), LengthError);
  EXPECT_THROW(pad_to_pow2(make_signal({1, 2, 3}), 6), LengthError);
}

TEST(Fft, UnitImpulseAndDc) {
  const auto impulse = fft(make_signal({1, 0, 0, 0}));
  const auto dc = fft(make_signal({1, 1, 1, 1}));
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(std::abs(impulse.coeffs[k] - cd(1, 0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(dc.coeffs[k] - cd(k == 0 ? 4 : 0, 0)), 0.0, 1e-12);
  }
}

TEST(Fft, RejectsNonPow2) { EXPECT_THROW(fft(make_signal({1, 2, 3})), LengthError); }

TEST(Fft, MatchesNaiveDftOnAllSmallLengths) {
  std::mt19937_64 rng(20240101);
  for (Eigen::Index n : {2, 4, 8, 16, 32}) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = random_signal(rng, n);
      const auto got = fft(x);
      const auto want = oracle::naive_dft(std::vector<double>(x.samples.data(), x.samples.data() + n));
      for (Eigen::Index k = 0; k < n; ++k) worst = std::max(worst, std::abs(got.coeffs[k] - want[k]));
    }
    EXPECT_LT(worst, 1e-10) << "n = " << n;
  }
}

TEST(Ifft, InverseOfDcSpectrum) {
  Spectrum s;
  s.coeffs = Eigen::VectorXcd::Zero(4);
  s.coeffs[0] = 4.0;
  s.original_length = 4;
  const auto r = ifft(s);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.signal.samples[i], 1.0, 1e-12);
  EXPECT_LT(r.imag_residue, 1e-12);
}

TEST(Ifft, RoundTripAndTruncation) {
  std::mt19937_64 rng(3);
  const auto x = random_signal(rng, 16);
  const auto back = ifft(fft(x));
  EXPECT_LT((back.signal.samples - x.samples).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(back.imag_residue, 1e-6);

  const auto short_x = random_signal(rng, 11);
  const auto back2 = ifft(fft(pad_to_pow2(short_x)));
  ASSERT_EQ(back2.signal.size(), 11);
  EXPECT_LT((back2.signal.samples - short_x.samples).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Ifft, FftOfIfftIsIdentity) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Spectrum s;
  s.coeffs.resize(32);
  for (auto& c : s.coeffs) c = cd(g(rng), g(rng));
  s.original_length = 32;
  const Eigen::VectorXcd back = fft_complex(fft_complex(s.coeffs, true), false);
  EXPECT_LT((back - s.coeffs).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Ifft, ReportsImaginaryResidueForNonHermitianInput) {
  Spectrum s;
  s.coeffs = Eigen::VectorXcd::Zero(8);
  s.coeffs[1] = 1.0;
  s.original_length = 8;
  EXPECT_GT(ifft(s).imag_residue, 0.01);
}

TEST(Spectral, LinearityParsevalHermitian) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_signal(rng, 64);
    const auto y = random_signal(rng, 64);
    const double a = coef(rng), b = coef(rng);
    NormalizedSignal combo;
    combo.samples = a * x.samples + b * y.samples;
    const Eigen::VectorXcd lhs = fft(combo).coeffs;
    const Eigen::VectorXcd rhs = a * fft(x).coeffs + b * fft(y).coeffs;
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);

    const auto X = fft(x).coeffs;
    const double time_energy = x.samples.squaredNorm();
    const double freq_energy = X.squaredNorm() / 64.0;
    EXPECT_NEAR(freq_energy / time_energy, 1.0, 1e-6);

    const double scale = X.cwiseAbs().maxCoeff();
    for (int k = 1; k < 64; ++k) EXPECT_LE(std::abs(X[k] - std::conj(X[64 - k])), 1e-9 * scale);
  }
}

TEST(Decompose, PolarSplit) {
  Spectrum s;
  s.coeffs = Eigen::VectorXcd{{cd(3, 4), cd(0, 0), cd(-2, 0)}};
  const auto mp = decompose(s);
  EXPECT_DOUBLE_EQ(mp.magnitudes[0], 5.0);
  EXPECT_NEAR(std::abs(mp.phases[0] - cd(0.6, 0.8)), 0.0, 1e-15);
  EXPECT_EQ(mp.magnitudes[1], 0.0);
  EXPECT_EQ(mp.phases[1], cd(1, 0));
  EXPECT_DOUBLE_EQ(mp.magnitudes[2], 2.0);
  EXPECT_EQ(mp.phases[2], cd(-1, 0));
}

TEST(Recombine, InverseOfDecompose) {
  const auto r = recombine(Eigen::VectorXd{{5.0}}, Eigen::VectorXcd{{cd(0.6, 0.8)}});
  EXPECT_NEAR(std::abs(r.coeffs[0] - cd(3, 4)), 0.0, 1e-15);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Spectrum s;
  s.coeffs.resize(64);
  for (auto& c : s.coeffs) c = cd(g(rng), g(rng));
  const auto mp = decompose(s);
  for (Eigen::Index j = 0; j < 64; ++j) EXPECT_NEAR(std::abs(mp.phases[j]), 1.0, 1e-12);
  EXPECT_LT((recombine(mp.magnitudes, mp.phases).coeffs - s.coeffs).cwiseAbs().maxCoeff(), 1e-12);

  const auto zero = recombine(Eigen::VectorXd::Zero(64), mp.phases);
  EXPECT_EQ(zero.coeffs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Recombine, Errors) {
  EXPECT_THROW(recombine(Eigen::VectorXd::Ones(2), Eigen::VectorXcd::Ones(3)), LengthError);
  EXPECT_THROW(recombine(Eigen::VectorXd{{-1.0}}, Eigen::VectorXcd{{cd(1, 0)}}), DomainError);
}

TEST(Phi, ApplyAndInvert) {
  EXPECT_EQ(phi_apply(PhiKind::identity(), Eigen::VectorXd{{2.5}})[0], 2.5);
  EXPECT_EQ(phi_apply(PhiKind::log(1e-8), Eigen::VectorXd{{1.0}})[0], 0.0);
  EXPECT_NEAR(phi_apply(PhiKind::log(1e-8), Eigen::VectorXd{{0.0}})[0], -18.420680743952367, 1e-12);
  EXPECT_EQ(phi_invert(PhiKind::identity(), Eigen::VectorXd{{-0.3}})[0], 0.0);
  EXPECT_EQ(phi_invert(PhiKind::log(), Eigen::VectorXd{{0.0}})[0], 1.0);
}

TEST(Phi, LogRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(std::log(1e-6), std::log(10.0));
  Eigen::VectorXd t(1000);
  for (auto& v : t) v = std::exp(dist(rng));
  const auto back = phi_invert(PhiKind::log(), phi_apply(PhiKind::log(), t));
  EXPECT_LT(((back - t).array() / t.array()).abs().maxCoeff(), 1e-9);
}

TEST(Stft, BinCenteredSinusoidConcentratesInOneBin) {
  const Eigen::Index n = 256, window = 64;
  const int bin = 5;
  NormalizedSignal s;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    s.samples[i] = 0.7 * std::sin(2.0 * std::numbers::pi * bin * static_cast<double>(i) / window + 0.3);
  const auto grid = stft(s, {window, 16, WindowKind::Rect});
  ASSERT_EQ(grid.rows(), window / 2 + 1);
  ASSERT_EQ(grid.cols(), 1 + (n - window) / 16);
  for (Eigen::Index t = 0; t < grid.cols(); ++t) {
    const double total = grid.col(t).squaredNorm();
    EXPECT_GE(grid(bin, t) * grid(bin, t), 0.99 * total) << "frame " << t;
  }
}

TEST(Stft, SilenceGivesZeroGrid) {
  NormalizedSignal s;
  s.samples = Eigen::VectorXd::Zero(1000);
  EXPECT_EQ(stft(s, {}).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stft, SingleFrameMatchesFft) {
  std::mt19937_64 rng(13);
  const auto x = random_signal(rng, 64);
  const auto grid = stft(x, {64, 64, WindowKind::Rect});
  ASSERT_EQ(grid.cols(), 1);
  const Eigen::VectorXd want = fft(x).coeffs.head(33).cwiseAbs();
  EXPECT_LT((grid.col(0) - want).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Stft, WindowLongerThanSignalIsLengthError) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(stft(random_signal(rng, 100), {512, 128, WindowKind::Hann}), LengthError);
}
