#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mcaeeg/error.hpp"
#include "mcaeeg/fft.hpp"
#include "mcaeeg/filter.hpp"
#include "mcaeeg/preprocess.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg {

struct Band {
  std::string name;
  double lo_hz;
  double hi_hz;
};

/// The five analysis bands. The order is the band axis of every cube.
struct BandTable {
  std::vector<Band> bands{{"theta", 4.0, 7.0},
                          {"alpha", 8.0, 10.0},
                          {"slow_alpha", 8.0, 13.0},
                          {"beta", 14.0, 29.0},
                          {"gamma", 30.0, 45.0}};

  std::size_t size() const { return bands.size(); }

  void validate() const {
    if (bands.size() != 5) throw ConfigError("BandTable: expected 5 bands");
    for (const auto& b : bands) {
      if (!(b.lo_hz < b.hi_hz)) throw ConfigError("BandTable: band " + b.name + " has lo >= hi");
    }
  }
};

struct FrameSpec {
  double window_s = 2.0;
  double hop_s = 1.0;
  std::size_t frames_per_trial = 60;

  std::size_t window_samples(double fs) const {
    const double w = window_s * fs;
    const auto n = static_cast<std::size_t>(std::llround(w));
    if (std::abs(w - static_cast<double>(n)) > 1e-9 || n == 0 || n % 2 != 0) {
      throw ConfigError("FrameSpec: window of " + std::to_string(window_s) + " s at " +
                        std::to_string(fs) + " Hz is not an even sample count");
    }
    return n;
  }

  std::size_t hop_samples(double fs) const {
    const double h = hop_s * fs;
    const auto n = static_cast<std::size_t>(std::llround(h));
    if (std::abs(h - static_cast<double>(n)) > 1e-9 || n == 0) {
      throw ConfigError("FrameSpec: hop is not a positive whole number of samples");
    }
    return n;
  }
};

struct WelchConfig {
  std::size_t segment_len = 256;
  std::size_t overlap = 128;
  std::size_t nfft = 256;

  /// Segment length of 2 s at fs with 50% overlap.
  static WelchConfig for_window(std::size_t window_samples) {
    std::size_t nfft = 1;
    while (nfft < window_samples) nfft <<= 1;
    return {window_samples, window_samples / 2, nfft};
  }
};

/// One-sided power spectral density.
struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<double> psd;
  std::size_t segments = 0;
  double resolution_hz = 0.0;
};

/// Periodic Hann window of length n.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

/// Gaussian differential entropy 0.5*ln(2*pi*e*var) of one window, in nats,
/// using the unbiased sample variance.
inline double de_per_window(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("de_per_window: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  // Rounding in the mean leaves a residual of order eps*|mean| on constants.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(mean);
  if (!(var > noise * noise)) {
    throw DegenerateWindowError("de_per_window: zero-variance window");
  }
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

/// Welch estimate: per-segment |FFT(w * (x - mean))|^2 / (fs * sum w^2),
/// averaged over segments, one-sided with interior bins doubled.
inline Spectrum welch_psd(std::span<const double> x, double fs, const WelchConfig& cfg) {
  if (cfg.segment_len == 0 || cfg.overlap >= cfg.segment_len || cfg.nfft < cfg.segment_len ||
      !is_power_of_two(cfg.nfft)) {
    throw ConfigError("welch_psd: invalid segment/overlap/nfft configuration");
  }
  if (x.size() < cfg.segment_len) {
    throw InvalidArgument("welch_psd: signal of " + std::to_string(x.size()) +
                          " samples is shorter than one segment (" + std::to_string(cfg.segment_len) + ")");
  }
  const auto window = hann_window(cfg.segment_len);
  double w_norm = 0.0;
  for (double v : window) w_norm += v * v;
  const std::size_t hop = cfg.segment_len - cfg.overlap;
  const std::size_t n_bins = cfg.nfft / 2 + 1;

  Spectrum out;
  out.psd.assign(n_bins, 0.0);
  out.resolution_hz = fs / static_cast<double>(cfg.nfft);
  std::vector<double> buf(cfg.nfft);
  for (std::size_t start = 0; start + cfg.segment_len <= x.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < cfg.segment_len; ++i) mean += x[start + i];
    mean /= static_cast<double>(cfg.segment_len);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < cfg.segment_len; ++i) buf[i] = (x[start + i] - mean) * window[i];
    const auto spectrum = real_fft(buf);
    for (std::size_t k = 0; k < n_bins; ++k) {
      double p = std::norm(spectrum[k]) / (fs * w_norm);
      if (k != 0 && k != cfg.nfft / 2) p *= 2.0;
      out.psd[k] += p;
    }
    ++out.segments;
  }
  for (double& v : out.psd) v /= static_cast<double>(out.segments);
  out.freq_hz.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) out.freq_hz[k] = static_cast<double>(k) * out.resolution_hz;
  return out;
}

/// Mean PSD over bins with lo <= f <= hi.
inline double band_average(const Spectrum& s, double lo_hz, double hi_hz) {
  if (s.freq_hz.empty() || lo_hz < 0.0 || hi_hz > s.freq_hz.back() + 1e-9 || lo_hz > hi_hz) {
    throw InvalidArgument("band_average: band [" + std::to_string(lo_hz) + ", " +
                          std::to_string(hi_hz) + "] Hz outside the spectrum");
  }
  const double tol = 1e-9 * std::max(1.0, hi_hz);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < s.freq_hz.size(); ++k) {
    if (s.freq_hz[k] >= lo_hz - tol && s.freq_hz[k] <= hi_hz + tol) {
      sum += s.psd[k];
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("band_average: no bins inside the band");
  return sum / static_cast<double>(count);
}

enum class FeatureKind { de, psd, fused };

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::de: return "DE";
    case FeatureKind::psd: return "PSD";
    case FeatureKind::fused: return "FUSED";
  }
  return "?";
}

/// [channels x bands x frames] feature tensor.
struct FeatureCube {
  FeatureKind kind = FeatureKind::de;
  Tensor values;

  std::size_t channels() const { return values.dim(0); }
  std::size_t bands() const { return values.dim(1); }
  std::size_t frames() const { return values.dim(2); }
};

namespace detail {

/// x followed by a mirror image of its tail that excludes the last sample.
inline std::vector<double> reflect_pad_end(std::span<const double> x, std::size_t pad) {
  if (pad >= x.size()) throw InvalidArgument("reflect_pad_end: padding longer than signal");
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i) out.push_back(x[x.size() - 2 - i]);
  return out;
}

}  // namespace detail

/// Band-wise DE or PSD over sliding windows of every channel.
///
/// Frame f covers [f*hop, f*hop + window); windows running past the end of
/// the recording read a reflection of its tail. DE band-pass filters the
/// whole channel per band before windowing; PSD runs Welch on the raw window
/// and averages the band's bins.
inline FeatureCube extract_cube(const RawRecording& rec, FeatureKind kind, const BandTable& bands = {},
                                const FrameSpec& frames = {}, int band_filter_order = 4) {
  if (kind == FeatureKind::fused) throw InvalidArgument("extract_cube: FUSED is not an extractable kind");
  bands.validate();
  detail::require_rank(rec.samples, 2, "extract_cube");
  const double fs = rec.sample_rate_hz;
  const std::size_t win = frames.window_samples(fs);
  const std::size_t hop = frames.hop_samples(fs);
  const std::size_t n = rec.n_samples();
  const std::size_t needed = (frames.frames_per_trial - 1) * hop + win;
  const std::size_t pad = needed > n ? needed - n : 0;
  const WelchConfig welch = WelchConfig::for_window(win);

  FeatureCube cube{kind, Tensor({rec.channels(), bands.size(), frames.frames_per_trial})};
  std::vector<FilterCoefficients> band_filters;
  if (kind == FeatureKind::de) {
    for (const auto& b : bands.bands) band_filters.push_back(design_bandpass(b.lo_hz, b.hi_hz, band_filter_order, fs));
  }
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    const auto channel = rec.samples.data().subspan(c * n, n);
    if (kind == FeatureKind::de) {
      for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto filtered = filter_forward_backward(channel, band_filters[b]);
        const auto padded = detail::reflect_pad_end(filtered, pad);
        for (std::size_t f = 0; f < frames.frames_per_trial; ++f) {
          cube.values.at(c, b, f) = de_per_window(std::span<const double>(padded).subspan(f * hop, win));
        }
      }
    } else {
      const auto padded = detail::reflect_pad_end(channel, pad);
      for (std::size_t f = 0; f < frames.frames_per_trial; ++f) {
        const Spectrum s = welch_psd(std::span<const double>(padded).subspan(f * hop, win), fs, welch);
        for (std::size_t b = 0; b < bands.size(); ++b) {
          cube.values.at(c, b, f) = band_average(s, bands.bands[b].lo_hz, bands.bands[b].hi_hz);
        }
      }
    }
  }
  return cube;
}

/// Split the frame axis into consecutive non-overlapping blocks.
inline std::vector<Tensor> segment_cube(const FeatureCube& cube, std::size_t frames_per_segment = 3,
                                        std::size_t expected_frames = 60) {
  detail::require_rank(cube.values, 3, "segment_cube");
  if (cube.frames() != expected_frames || frames_per_segment == 0 ||
      cube.frames() % frames_per_segment != 0) {
    throw ShapeError("segment_cube: cannot split " + shape_str(cube.values.shape()) + " into blocks of " +
                     std::to_string(frames_per_segment) + " frames");
  }
  std::vector<Tensor> out;
  for (std::size_t t = 0; t < cube.frames(); t += frames_per_segment) {
    out.push_back(slice_time(cube.values, t, t + frames_per_segment));
  }
  return out;
}

/// Inverse of segment_cube.
inline Tensor concat_segments(const std::vector<Tensor>& blocks) {
  if (blocks.empty()) throw ShapeError("concat_segments: no blocks");
  const Shape& s0 = blocks.front().shape();
  if (s0.size() != 3) throw ShapeError("concat_segments: blocks must be rank 3");
  const std::size_t step = s0[2];
  Tensor out({s0[0], s0[1], step * blocks.size()});
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].shape() != s0) throw ShapeError("concat_segments: block shapes differ");
    for (std::size_t c = 0; c < s0[0]; ++c)
      for (std::size_t b = 0; b < s0[1]; ++b)
        for (std::size_t t = 0; t < step; ++t) out.at(c, b, i * step + t) = blocks[i].at(c, b, t);
  }
  return out;
}

}  // namespace mcaeeg
