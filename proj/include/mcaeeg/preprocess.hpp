#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mcaeeg/error.hpp"
#include "mcaeeg/filter.hpp"
#include "mcaeeg/ica.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg {

/// Multichannel recording: samples is [channels x n_samples] in microvolts.
struct RawRecording {
  double sample_rate_hz = 128.0;
  Tensor samples;

  std::size_t channels() const { return samples.dim(0); }
  std::size_t n_samples() const { return samples.dim(1); }
  double duration_s() const { return static_cast<double>(n_samples()) / sample_rate_hz; }

  void validate() const {
    detail::require_rank(samples, 2, "RawRecording");
    if (!(sample_rate_hz > 0.0)) throw InvalidArgument("RawRecording: sample rate must be positive");
    if (static_cast<double>(n_samples()) < 2.0 * sample_rate_hz) {
      throw InvalidArgument("RawRecording: need at least 2 s of data, got " +
                            std::to_string(n_samples()) + " samples at " +
                            std::to_string(sample_rate_hz) + " Hz");
    }
    for (double v : samples.data()) {
      if (!std::isfinite(v)) throw InvalidArgument("RawRecording: non-finite sample");
    }
  }
};

/// Zero-phase filtering of every channel.
inline Tensor filter_channels(const Tensor& x, const FilterCoefficients& f) {
  detail::require_rank(x, 2, "filter_channels");
  const std::size_t n = x.dim(1);
  Tensor out(x.shape());
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    const auto y = filter_forward_backward(x.data().subspan(c * n, n), f);
    std::copy(y.begin(), y.end(), out.data().begin() + static_cast<std::ptrdiff_t>(c * n));
  }
  return out;
}

/// Order of the anti-alias low-pass used by downsample.
inline constexpr int kAntiAliasOrder = 8;

/// Integer-factor decimation after a zero-phase low-pass at 0.45 * target.
inline RawRecording downsample(const RawRecording& x, double target_hz) {
  if (!(target_hz > 0.0)) throw InvalidArgument("downsample: target rate must be positive");
  const double ratio = x.sample_rate_hz / target_hz;
  const double factor_r = std::round(ratio);
  if (factor_r < 1.0 || std::abs(ratio - factor_r) > 1e-9) {
    throw InvalidArgument("downsample: " + std::to_string(x.sample_rate_hz) + " Hz -> " +
                          std::to_string(target_hz) + " Hz is not an integer decimation");
  }
  const auto factor = static_cast<std::size_t>(factor_r);
  if (factor == 1) return x;

  const Tensor smooth =
      filter_channels(x.samples, design_lowpass(0.45 * target_hz, kAntiAliasOrder, x.sample_rate_hz));
  const std::size_t n_out = x.n_samples() / factor;
  Tensor out({x.channels(), n_out});
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t i = 0; i < n_out; ++i) out.at(c, i) = smooth.at(c, i * factor);
  return {target_hz, std::move(out)};
}

struct PreprocessOptions {
  bool notch = true;
  bool bandpass = true;
  bool ica = true;
  bool downsample = true;
  double notch_hz = 50.0;
  double notch_q = 30.0;
  double bandpass_lo_hz = 4.0;
  double bandpass_hi_hz = 45.0;
  int bandpass_order = 4;
  double target_hz = 128.0;
  /// Components with |excess kurtosis| above this are removed.
  double ica_kurtosis_threshold = 8.0;
  /// Seeds tried in turn when FastICA fails to converge.
  std::size_t ica_attempts = 3;
  std::uint64_t seed = 0;
};

struct PreprocessReport {
  bool ica_applied = false;
  std::set<std::size_t> rejected;
  std::vector<double> kurtosis;
};

/// Notch -> band-pass -> ICA artifact removal -> downsample.
///
/// When FastICA does not converge for any of the attempted seeds the ICA
/// stage leaves the data unchanged and the report says so.
inline RawRecording preprocess(const RawRecording& raw, const PreprocessOptions& opt,
                               PreprocessReport* report = nullptr) {
  raw.validate();
  RawRecording out = raw;
  if (opt.notch && opt.notch_hz < out.sample_rate_hz / 2.0) {
    out.samples = filter_channels(out.samples, design_notch(opt.notch_hz, opt.notch_q, out.sample_rate_hz));
  }
  if (opt.bandpass) {
    out.samples = filter_channels(
        out.samples,
        design_bandpass(opt.bandpass_lo_hz, opt.bandpass_hi_hz, opt.bandpass_order, out.sample_rate_hz));
  }
  if (opt.ica) {
    for (std::size_t attempt = 0; attempt < opt.ica_attempts; ++attempt) {
      try {
        const IcaModel model = fast_ica(out.samples, out.channels(), opt.seed + attempt);
        const auto rejected = auto_reject(model, opt.ica_kurtosis_threshold);
        if (!rejected.empty()) out.samples = remove_components(out.samples, model, rejected);
        if (report) {
          report->ica_applied = true;
          report->rejected = rejected;
          report->kurtosis = model.component_scores;
        }
        break;
      } catch (const ConvergenceError&) {
      }
    }
  }
  if (opt.downsample && out.sample_rate_hz != opt.target_hz) out = downsample(out, opt.target_hz);
  return out;
}

}  // namespace mcaeeg
