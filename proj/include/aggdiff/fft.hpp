#pragma once
// Iterative radix-2 complex FFT and a real linear-convolution helper built on
// it.  Self-contained on purpose: the transform sizes here (a few times the
// mesh size, zero-padded to a power of two) are far below the scale where a
// tuned FFT library would matter.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace aggdiff::fft {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place transform; size must be a power of two.  inverse=true applies the
// conjugate transform and the 1/n normalization.
inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a nonzero power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  static const double pi = 3.14159265358979323846;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::size_t half = len >> 1;
    // per-element polar() keeps twiddle rounding at O(eps) independent of len
    std::vector<std::complex<double>> w(half);
    for (std::size_t k = 0; k < half; ++k) w[k] = std::polar(1.0, ang * static_cast<double>(k));
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + half] * w[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& z : a) z *= inv;
  }
}

// Full linear convolution of two real sequences: out has size |x| + |y| - 1,
// out_k = sum_i x_i y_{k-i}.
inline std::vector<double> convolve_linear(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) return {};
  const std::size_t out_n = x.size() + y.size() - 1;
  const std::size_t p = next_pow2(out_n);
  std::vector<std::complex<double>> fx(p), fy(p);
  for (std::size_t i = 0; i < x.size(); ++i) fx[i] = x[i];
  for (std::size_t i = 0; i < y.size(); ++i) fy[i] = y[i];
  transform(fx, false);
  transform(fy, false);
  for (std::size_t i = 0; i < p; ++i) fx[i] *= fy[i];
  transform(fx, true);
  std::vector<double> out(out_n);
  for (std::size_t i = 0; i < out_n; ++i) out[i] = fx[i].real();
  return out;
}

}  // namespace aggdiff::fft
