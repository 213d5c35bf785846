#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mcaeeg/error.hpp"

namespace mcaeeg {

/// One second-order section, normalized so that a0 == 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

/// Cascade of second-order sections.
struct FilterCoefficients {
  std::vector<Biquad> sections;

  /// Number of poles in the cascade.
  std::size_t order() const { return 2 * sections.size(); }

  std::complex<double> response(double freq_hz, double fs) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
    std::complex<double> h = 1.0;
    for (const auto& s : sections) h *= s.response(omega);
    return h;
  }

  double gain_db(double freq_hz, double fs) const {
    return 20.0 * std::log10(std::abs(response(freq_hz, fs)));
  }
};

struct FilterSpec {
  enum class Kind { notch, bandpass };
  Kind kind = Kind::bandpass;
  double notch_freq_hz = 50.0;
  double q_factor = 30.0;
  double bandpass_lo_hz = 4.0;
  double bandpass_hi_hz = 45.0;
  int order = 4;
};

namespace detail {

inline void require_nyquist(double f, double fs, const char* op) {
  if (!(fs > 0.0) || !(f > 0.0) || !(f < fs / 2.0)) {
    throw InvalidArgument(std::string(op) + ": frequency " + std::to_string(f) +
                          " Hz outside (0, " + std::to_string(fs / 2.0) + ") Hz");
  }
}

/// Left half-plane poles of the unit-cutoff analog Butterworth prototype
/// with positive imaginary part (order must be even, so none are real).
inline std::vector<std::complex<double>> butterworth_upper_poles(int order) {
  std::vector<std::complex<double>> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    const auto p = std::polar(1.0, theta);
    if (p.imag() > 0.0) poles.push_back(p);
  }
  return poles;
}

inline std::complex<double> bilinear(std::complex<double> s, double fs) {
  const double fs2 = 2.0 * fs;
  return (fs2 + s) / (fs2 - s);
}

inline Biquad section_from_pole(std::complex<double> zpole, double b0, double b1, double b2) {
  Biquad q;
  q.b0 = b0;
  q.b1 = b1;
  q.b2 = b2;
  q.a1 = -2.0 * zpole.real();
  q.a2 = std::norm(zpole);
  return q;
}

inline void normalize_section(Biquad& q, double omega) {
  const double g = std::abs(q.response(omega));
  q.b0 /= g;
  q.b1 /= g;
  q.b2 /= g;
}

}  // namespace detail

/// RBJ-cookbook notch: a null at freq_hz, unity gain far from it.
inline FilterCoefficients design_notch(double freq_hz, double q, double fs) {
  detail::require_nyquist(freq_hz, fs, "design_notch");
  if (!(q > 0.0)) throw InvalidArgument("design_notch: q must be positive");
  const double w0 = 2.0 * std::numbers::pi * freq_hz / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * std::cos(w0) / a0;
  s.a2 = (1.0 - alpha) / a0;
  return {{s}};
}

/// Butterworth band-pass from an order-`order` low-pass prototype; the
/// result has 2*order poles in `order` sections.
inline FilterCoefficients design_bandpass(double lo_hz, double hi_hz, int order, double fs) {
  if (!(lo_hz > 0.0) || !(lo_hz < hi_hz) || !(hi_hz < fs / 2.0)) {
    throw InvalidArgument("design_bandpass: invalid band [" + std::to_string(lo_hz) + ", " +
                          std::to_string(hi_hz) + "] Hz at fs " + std::to_string(fs));
  }
  if (order < 2 || order % 2 != 0) {
    throw InvalidArgument("design_bandpass: order must be even and >= 2, got " +
                          std::to_string(order));
  }
  const double w1 = 2.0 * fs * std::tan(std::numbers::pi * lo_hz / fs);
  const double w2 = 2.0 * fs * std::tan(std::numbers::pi * hi_hz / fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);
  const double center_omega = 2.0 * std::atan(w0 / (2.0 * fs));

  FilterCoefficients out;
  for (const auto& p : detail::butterworth_upper_poles(order)) {
    // Low-pass to band-pass: each prototype pole splits into two.
    const std::complex<double> half = p * bw / 2.0;
    const std::complex<double> root = std::sqrt(half * half - w0 * w0);
    for (const auto& s : {half + root, half - root}) {
      auto z = detail::bilinear(s, fs);
      if (z.imag() < 0.0) z = std::conj(z);
      // One zero at z = 1 (from s = 0) and one at z = -1 (from s = inf).
      out.sections.push_back(detail::section_from_pole(z, 1.0, 0.0, -1.0));
      detail::normalize_section(out.sections.back(), center_omega);
    }
  }
  return out;
}

/// Butterworth low-pass with `order` poles (even), unit gain at DC.
inline FilterCoefficients design_lowpass(double cutoff_hz, int order, double fs) {
  detail::require_nyquist(cutoff_hz, fs, "design_lowpass");
  if (order < 2 || order % 2 != 0) {
    throw InvalidArgument("design_lowpass: order must be even and >= 2");
  }
  const double wc = 2.0 * fs * std::tan(std::numbers::pi * cutoff_hz / fs);
  FilterCoefficients out;
  for (const auto& p : detail::butterworth_upper_poles(order)) {
    const auto z = detail::bilinear(p * wc, fs);
    out.sections.push_back(detail::section_from_pole(z, 1.0, 2.0, 1.0));
    detail::normalize_section(out.sections.back(), 0.0);
  }
  return out;
}

inline FilterCoefficients design(const FilterSpec& spec, double fs) {
  if (spec.kind == FilterSpec::Kind::notch) return design_notch(spec.notch_freq_hz, spec.q_factor, fs);
  return design_bandpass(spec.bandpass_lo_hz, spec.bandpass_hi_hz, spec.order, fs);
}

/// Per-section state giving a steady-state response to a unit step.
inline std::vector<std::array<double, 2>> sosfilt_zi(const FilterCoefficients& f) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : f.sections) {
    const double c0 = s.b1 - s.a1 * s.b0;
    const double c1 = s.b2 - s.a2 * s.b0;
    const double z0 = (c0 + c1) / (1.0 + s.a1 + s.a2);
    const double z1 = c1 - s.a2 * z0;
    zi.push_back({scale * z0, scale * z1});
    scale *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  }
  return zi;
}

/// Causal filtering in transposed direct form II. `state` is updated in place.
inline void sosfilt(const FilterCoefficients& f, std::span<double> x,
                    std::vector<std::array<double, 2>>& state) {
  for (std::size_t k = 0; k < f.sections.size(); ++k) {
    const Biquad& s = f.sections[k];
    double z0 = state[k][0], z1 = state[k][1];
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z0;
      z0 = s.b1 * in - s.a1 * y + z1;
      z1 = s.b2 * in - s.a2 * y;
      v = y;
    }
    state[k] = {z0, z1};
  }
}

inline std::vector<double> sosfilt(const FilterCoefficients& f, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  std::vector<std::array<double, 2>> state(f.sections.size(), {0.0, 0.0});
  sosfilt(f, y, state);
  return y;
}

/// Edge padding used by filter_forward_backward.
inline std::size_t filtfilt_padlen(const FilterCoefficients& f) { return 3 * (f.order() + 1); }

/// Zero-phase filtering: forward pass, then a pass over the reversed
/// output. Edges are odd-extended and both passes start in steady state.
inline std::vector<double> filter_forward_backward(std::span<const double> x,
                                                   const FilterCoefficients& f) {
  const std::size_t n = x.size();
  const std::size_t pad = filtfilt_padlen(f);
  if (n <= pad) {
    throw InvalidArgument("filter_forward_backward: signal of " + std::to_string(n) +
                          " samples is too short for a filter of order " +
                          std::to_string(f.order()) + " (need more than " + std::to_string(pad) + ")");
  }
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  const auto zi = sosfilt_zi(f);
  auto run = [&](std::vector<double>& v) {
    auto state = zi;
    for (auto& s : state) {
      s[0] *= v.front();
      s[1] *= v.front();
    }
    sosfilt(f, v, state);
  };
  run(ext);
  std::reverse(ext.begin(), ext.end());
  run(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace mcaeeg
