#pragma once

// Straightforward reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "mcaeeg/random.hpp"
#include "mcaeeg/tensor.hpp"

namespace oracle {

using mcaeeg::Tensor;

inline Tensor random_tensor(const mcaeeg::Shape& shape, mcaeeg::Rng& rng, double sd = 1.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.normal(0.0, sd);
  return t;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (std::size_t p = 0; p < k; ++p) acc += static_cast<long double>(a.at(i, p)) * b.at(p, j);
      c.at(i, j) = static_cast<double>(acc);
    }
  return c;
}

/// Attention computed row by row with long double accumulation.
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  const std::size_t n = q.dim(0), d = q.dim(1);
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> s(n);
    long double mx = -1e300L;
    for (std::size_t j = 0; j < n; ++j) {
      long double dot = 0.0L;
      for (std::size_t p = 0; p < d; ++p) dot += static_cast<long double>(q.at(i, p)) * k.at(j, p);
      s[j] = dot / std::sqrt(static_cast<long double>(d));
      mx = std::max(mx, s[j]);
    }
    long double z = 0.0L;
    for (auto& e : s) z += (e = std::exp(e - mx));
    for (std::size_t p = 0; p < d; ++p) {
      long double acc = 0.0L;
      for (std::size_t j = 0; j < n; ++j) acc += s[j] / z * v.at(j, p);
      out.at(i, p) = static_cast<double>(acc);
    }
  }
  return out;
}

/// Direct 3-D cross-correlation: out channel, in channel, three output and
/// three kernel coordinates.
inline Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t pad, std::size_t stride) {
  const std::size_t ci = x.dim(0), d = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t co = w.dim(0), k = w.dim(2);
  const std::size_t od = (d + 2 * pad - k) / stride + 1, oh = (h + 2 * pad - k) / stride + 1,
                    ow = (wd + 2 * pad - k) / stride + 1;
  Tensor y({co, od, oh, ow});
  auto xat = [&](std::size_t c, long z, long yy, long xx) -> double {
    if (z < 0 || yy < 0 || xx < 0 || z >= static_cast<long>(d) || yy >= static_cast<long>(h) ||
        xx >= static_cast<long>(wd))
      return 0.0;
    return x[((c * d + static_cast<std::size_t>(z)) * h + static_cast<std::size_t>(yy)) * wd +
             static_cast<std::size_t>(xx)];
  };
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t z = 0; z < od; ++z)
      for (std::size_t yy = 0; yy < oh; ++yy)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          double acc = b[o];
          for (std::size_t c = 0; c < ci; ++c)
            for (std::size_t kd = 0; kd < k; ++kd)
              for (std::size_t kh = 0; kh < k; ++kh)
                for (std::size_t kw = 0; kw < k; ++kw) {
                  const double wv = w[(((o * ci + c) * k + kd) * k + kh) * k + kw];
                  acc += wv * xat(c, static_cast<long>(z * stride + kd) - static_cast<long>(pad),
                                  static_cast<long>(yy * stride + kh) - static_cast<long>(pad),
                                  static_cast<long>(xx * stride + kw) - static_cast<long>(pad));
                }
          y[((o * od + z) * oh + yy) * ow + xx] = acc;
        }
  return y;
}

/// Central difference of f with respect to t[i]; t is restored afterwards.
inline double central_difference(const std::function<double()>& f, Tensor& t, std::size_t i, double h = 1e-5) {
  const double keep = t[i];
  t[i] = keep + h;
  const double fp = f();
  t[i] = keep - h;
  const double fm = f();
  t[i] = keep;
  return (fp - fm) / (2.0 * h);
}

/// |a - n| / max(|a|, |n|), with both sides below `floor` counted as agreement.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Frequency response of a rational transfer function given its numerator
/// and denominator coefficients in powers of z^-1.
inline std::complex<double> polynomial_response(const std::vector<double>& b, const std::vector<double>& a,
                                                double freq_hz, double fs) {
  const double w = 2.0 * std::numbers::pi * freq_hz / fs;
  std::complex<double> num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) num += b[i] * std::polar(1.0, -w * static_cast<double>(i));
  for (std::size_t i = 0; i < a.size(); ++i) den += a[i] * std::polar(1.0, -w * static_cast<double>(i));
  return num / den;
}

inline std::vector<double> convolve(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

/// Amplitude of the best-fit sinusoid at freq over x (least squares on
/// sin/cos), ignoring `skip` samples at each edge.
inline double tone_amplitude(const std::vector<double>& x, double freq, double fs, std::size_t skip = 0) {
  double ss = 0, cc = 0, sc = 0, xs = 0, xc = 0;
  for (std::size_t i = skip; i + skip < x.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    const double s = std::sin(2 * std::numbers::pi * freq * t), c = std::cos(2 * std::numbers::pi * freq * t);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    xs += x[i] * s;
    xc += x[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (xs * cc - xc * sc) / det, b = (xc * ss - xs * sc) / det;
  return std::hypot(a, b);
}

/// One-sided periodogram by direct DFT, Hann-windowed and mean-removed, in
/// the same density scaling as a single-segment Welch estimate.
inline std::vector<double> periodogram(const std::vector<double>& x, double fs) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> w(n);
  double wn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    wn += w[i] * w[i];
  }
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<long double> acc = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k * i % n) /
                              static_cast<long double>(n);
      acc += std::complex<long double>(std::cos(ang), std::sin(ang)) * static_cast<long double>((x[i] - mean) * w[i]);
    }
    p[k] = static_cast<double>(std::norm(acc)) / (fs * wn) * ((k == 0 || k == n / 2) ? 1.0 : 2.0);
  }
  return p;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline std::vector<double> sine(double freq, double amp, double fs, std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  return x;
}

}  // namespace oracle
