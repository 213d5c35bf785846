#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace mcaeeg {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Unscaled forward DFT of a real sequence, bins 0..n/2.
inline std::vector<std::complex<double>> real_fft(const std::vector<double>& x) {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return e;
  }();
  std::vector<std::complex<double>> out;
  engine.fwd(out, x);
  return out;
}

}  // namespace mcaeeg
