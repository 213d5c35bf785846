#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mcaeeg/eegc.hpp"
#include "mcaeeg/filter.hpp"
#include "mcaeeg/random.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg {

/// Synthetic EEG generator settings.
///
/// Each channel is pink background noise plus four band-limited Gaussian
/// rhythms (theta, alpha, beta, gamma). A high-arousal trial multiplies the
/// beta and gamma power by `power_factor`; a high-valence trial does the
/// same to theta and alpha. Valence and arousal labels are drawn
/// independently and balanced within each subject.
///
/// With `complementary` set, arousal leaves the rhythms alone. Half of the
/// high-arousal trials instead carry a 46 Hz tone, which lies past the last
/// PSD bin but inside the DE gamma filter skirt, and the other half carry a
/// 7.5 Hz tone, which falls between the DE theta and alpha filters but leaks
/// into the PSD alpha bins. Run such sets with the preprocessing band-pass
/// off, or the 46 Hz tone is removed.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_subjects = 1;
  std::size_t trials_per_subject = 40;
  std::size_t channels = 32;
  double sample_rate_hz = 128.0;
  double duration_s = 60.0;
  double power_factor = 2.0;
  double pink_std_uv = 0.5;
  /// Relative spread of per-subject channel gains.
  double channel_gain_spread = 0.2;
  /// When > 0, every trial gets a random broadband gain whose log2 power is
  /// uniform in [-nuisance_log2_power, +nuisance_log2_power].
  double nuisance_log2_power = 0.0;
  bool complementary = false;
  double de_marker_hz = 46.0;
  double de_marker_uv = 6.0;
  double psd_marker_hz = 7.5;
  double psd_marker_uv = 6.0;
  double high_rating = 8.0;
  double low_rating = 2.0;
};

struct SynthRhythm {
  double lo_hz, hi_hz, std_uv;
  bool arousal;  // otherwise valence-modulated
};

inline const std::vector<SynthRhythm>& synth_rhythms() {
  static const std::vector<SynthRhythm> r{
      {4.0, 7.0, 2.0, false}, {8.0, 13.0, 2.5, false}, {14.0, 29.0, 2.0, true}, {30.0, 45.0, 1.2, true}};
  return r;
}

namespace detail {

/// Paul Kellet's economy pink-noise filter applied to a white stream.
inline std::vector<double> pink_noise(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double white = rng.normal();
    b0 = 0.99765 * b0 + white * 0.0990460;
    b1 = 0.96300 * b1 + white * 0.2965164;
    b2 = 0.57000 * b2 + white * 1.0526913;
    out[i] = b0 + b1 + b2 + white * 0.1848;
  }
  return out;
}

inline void scale_to_std(std::vector<double>& x, double target) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(x.size()));
  for (double& v : x) v = (v - mean) * (target / sd);
}

}  // namespace detail

/// Generates the full container. Deterministic in the config.
inline EegContainer synthesize(const SynthConfig& cfg) {
  if (cfg.n_subjects == 0 || cfg.trials_per_subject == 0 || cfg.channels == 0) {
    throw ConfigError("synth: counts must be >= 1");
  }
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate_hz));
  std::vector<FilterCoefficients> filters;
  for (const auto& r : synth_rhythms()) filters.push_back(design_bandpass(r.lo_hz, r.hi_hz, 4, cfg.sample_rate_hz));

  Rng rng(cfg.seed);
  EegContainer out;
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    std::vector<double> gains(cfg.channels);
    for (double& g : gains) g = 1.0 + cfg.channel_gain_spread * rng.uniform(-1.0, 1.0);

    auto balanced = [&] {
      std::vector<int> labels(cfg.trials_per_subject);
      for (std::size_t t = 0; t < labels.size(); ++t) labels[t] = t % 2 == 0 ? 1 : 0;
      rng.shuffle(labels);
      return labels;
    };
    const auto arousal = balanced();
    const auto valence = balanced();

    std::size_t marked = 0;
    for (std::size_t t = 0; t < cfg.trials_per_subject; ++t) {
      double marker_hz = 0.0, marker_uv = 0.0;
      if (cfg.complementary && arousal[t]) {
        const bool de_side = marked++ % 2 == 0;
        marker_hz = de_side ? cfg.de_marker_hz : cfg.psd_marker_hz;
        marker_uv = de_side ? cfg.de_marker_uv : cfg.psd_marker_uv;
      }
      const double nuisance =
          cfg.nuisance_log2_power > 0.0
              ? std::sqrt(std::exp2(rng.uniform(-cfg.nuisance_log2_power, cfg.nuisance_log2_power)))
              : 1.0;
      EegTrial trial;
      trial.subject_id = static_cast<std::uint32_t>(s + 1);
      trial.trial_id = static_cast<std::uint32_t>(t + 1);
      trial.arousal = arousal[t] ? cfg.high_rating : cfg.low_rating;
      trial.valence = valence[t] ? cfg.high_rating : cfg.low_rating;
      trial.recording.sample_rate_hz = cfg.sample_rate_hz;
      trial.recording.samples = Tensor({cfg.channels, n});
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        std::vector<double> x = detail::pink_noise(rng, n);
        detail::scale_to_std(x, cfg.pink_std_uv);
        for (std::size_t r = 0; r < synth_rhythms().size(); ++r) {
          const auto& rh = synth_rhythms()[r];
          std::vector<double> white(n);
          for (double& v : white) v = rng.normal();
          auto band = filter_forward_backward(white, filters[r]);
          const bool high = rh.arousal ? arousal[t] && !cfg.complementary : valence[t];
          detail::scale_to_std(band, rh.std_uv * (high ? std::sqrt(cfg.power_factor) : 1.0));
          for (std::size_t i = 0; i < n; ++i) x[i] += band[i];
        }
        if (marker_uv > 0.0) {
          const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double w = 2.0 * std::numbers::pi * marker_hz / cfg.sample_rate_hz;
          for (std::size_t i = 0; i < n; ++i) x[i] += marker_uv * std::sin(w * static_cast<double>(i) + phase);
        }
        const double g = gains[c] * nuisance;
        for (std::size_t i = 0; i < n; ++i) trial.recording.samples.at(c, i) = g * x[i];
      }
      out.trials.push_back(std::move(trial));
    }
  }
  return out;
}

}  // namespace mcaeeg
