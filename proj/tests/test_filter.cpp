#include <gtest/gtest.h>

#include <cmath>

#include "mcaeeg/filter.hpp"
#include "mcaeeg/preprocess.hpp"
#include "support/oracles.hpp"

using namespace mcaeeg;

namespace {

// Expand the cascade into one numerator/denominator polynomial pair.
std::pair<std::vector<double>, std::vector<double>> expand(const FilterCoefficients& f) {
  std::vector<double> b{1.0}, a{1.0};
  for (const auto& s : f.sections) {
    b = oracle::convolve(b, {s.b0, s.b1, s.b2});
    a = oracle::convolve(a, {1.0, s.a1, s.a2});
  }
  return {b, a};
}

double poly_gain_db(const FilterCoefficients& f, double hz, double fs) {
  auto [b, a] = expand(f);
  return 20.0 * std::log10(std::abs(oracle::polynomial_response(b, a, hz, fs)));
}

}  // namespace

TEST(Notch, AttenuatesCentreAndPassesElsewhere) {
  for (double fs : {128.0, 256.0, 512.0}) {
    const auto f = design_notch(50.0, 30.0, fs);
    EXPECT_LE(poly_gain_db(f, 50.0, fs), -30.0);
    EXPECT_NEAR(poly_gain_db(f, 10.0, fs), 0.0, 0.1);
    EXPECT_NEAR(poly_gain_db(f, 40.0, fs), 0.0, 0.5);
  }
}

TEST(Notch, RemovesToneInTimeDomain) {
  const double fs = 512.0;
  const auto f = design_notch(50.0, 30.0, fs);
  const auto x = oracle::sine(50.0, 1.0, fs, 8192);
  const auto y = filter_forward_backward(x, f);
  EXPECT_LT(oracle::tone_amplitude(y, 50.0, fs, 1024), std::pow(10.0, -30.0 / 20.0));
}

TEST(Bandpass, TransferFunctionGrid) {
  const double fs = 512.0;
  const auto f = design_bandpass(4.0, 45.0, 4, fs);
  EXPECT_EQ(f.order(), 8u);
  EXPECT_LE(poly_gain_db(f, 1.0, fs), -12.0);
  EXPECT_LE(poly_gain_db(f, 60.0, fs), -12.0);
  for (double hz : {8.0, 12.0, 16.0, 20.0, 30.0}) EXPECT_NEAR(poly_gain_db(f, hz, fs), 0.0, 0.5) << hz;
  // Butterworth edges sit at -3 dB.
  EXPECT_NEAR(poly_gain_db(f, 4.0, fs), -3.0103, 0.05);
  EXPECT_NEAR(poly_gain_db(f, 45.0, fs), -3.0103, 0.05);
}

TEST(Bandpass, SectionProductMatchesPolynomialResponse) {
  const double fs = 128.0;
  const auto f = design_bandpass(8.0, 13.0, 4, fs);
  auto [b, a] = expand(f);
  for (double hz = 0.5; hz < 64.0; hz += 0.5) {
    const auto want = oracle::polynomial_response(b, a, hz, fs);
    EXPECT_LT(std::abs(f.response(hz, fs) - want), 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST(Bandpass, RejectsBadParameters) {
  EXPECT_THROW(design_bandpass(4.0, 70.0, 4, 128.0), InvalidArgument);
  EXPECT_THROW(design_bandpass(10.0, 5.0, 4, 128.0), InvalidArgument);
  EXPECT_THROW(design_bandpass(4.0, 45.0, 3, 128.0), InvalidArgument);
}

TEST(Bandpass, DcDecaysToZero) {
  const double fs = 128.0;
  const auto f = design_bandpass(4.0, 45.0, 4, fs);
  std::vector<double> x(2048, 1.0);
  const auto y = sosfilt(f, x);
  for (std::size_t i = static_cast<std::size_t>(2 * fs); i < y.size(); ++i) EXPECT_LT(std::abs(y[i]), 1e-6);
}

TEST(ZeroPhase, ImpulseResponseIsSymmetric) {
  const double fs = 128.0;
  const auto f = design_bandpass(4.0, 45.0, 4, fs);
  const std::size_t n = 1025, mid = n / 2;
  std::vector<double> x(n, 0.0);
  x[mid] = 1.0;
  const auto y = filter_forward_backward(x, f);
  for (std::size_t k = 1; k < mid; ++k) EXPECT_NEAR(y[mid - k], y[mid + k], 1e-6);
}

TEST(ZeroPhase, PassbandToneKeepsPhaseAndAmplitude) {
  const double fs = 128.0;
  const auto f = design_bandpass(4.0, 45.0, 4, fs);
  const auto x = oracle::sine(10.0, 1.0, fs, 4096, 0.3);
  const auto y = filter_forward_backward(x, f);
  double max_err = 0.0;
  for (std::size_t i = 512; i < 4096 - 512; ++i) max_err = std::max(max_err, std::abs(y[i] - x[i]));
  EXPECT_LT(max_err, 0.02);
}

TEST(ZeroPhase, TooShortSignalIsRejected) {
  const auto f = design_bandpass(4.0, 45.0, 4, 128.0);
  std::vector<double> x(filtfilt_padlen(f));
  EXPECT_THROW(filter_forward_backward(x, f), InvalidArgument);
  x.push_back(0.0);
  EXPECT_NO_THROW(filter_forward_backward(x, f));
}

TEST(Downsample, KeepsPassbandToneAndRemovesAlias) {
  const double fs = 512.0;
  const std::size_t n = 512 * 8;
  RawRecording rec{fs, Tensor({2, n})};
  const auto pass = oracle::sine(10.0, 1.0, fs, n);
  const auto alias = oracle::sine(100.0, 1.0, fs, n);  // folds to 28 Hz at 128 Hz
  for (std::size_t i = 0; i < n; ++i) {
    rec.samples.at(0, i) = pass[i];
    rec.samples.at(1, i) = alias[i];
  }
  const auto out = downsample(rec, 128.0);
  EXPECT_DOUBLE_EQ(out.sample_rate_hz, 128.0);
  ASSERT_EQ(out.n_samples(), n / 4);
  std::vector<double> a(out.n_samples()), b(out.n_samples());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = out.samples.at(0, i);
    b[i] = out.samples.at(1, i);
  }
  EXPECT_NEAR(oracle::tone_amplitude(a, 10.0, 128.0, 128), 1.0, 0.01);
  EXPECT_LT(oracle::tone_amplitude(b, 28.0, 128.0, 128), 0.01);
}

TEST(Downsample, IdentityAtTargetRateAndRejectsFractionalFactor) {
  RawRecording rec{128.0, Tensor({1, 512}, 1.0)};
  EXPECT_EQ(downsample(rec, 128.0).samples, rec.samples);
  EXPECT_THROW(downsample(rec, 100.0), InvalidArgument);
}
