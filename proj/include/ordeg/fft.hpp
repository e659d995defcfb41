#pragma once

// Minimal radix-2 FFT and the radially averaged log power spectrum shared
// by the degradation-sensitive features and the spectral round-trip metric.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ordeg/errors.hpp"
#include "ordeg/image.hpp"

namespace ordeg {

inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw shape_mismatch_error("fft length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// 2D power spectrum |F|^2 of a square, power-of-two, mean-removed and
// Hann-windowed plane.
inline Plane power_spectrum(const Plane& p) {
  const int n = p.width;
  if (p.height != n || n == 0 || (n & (n - 1)) != 0) {
    throw shape_mismatch_error("power spectrum needs a square power-of-two plane");
  }
  double mean = 0.0;
  for (double v : p.v) mean += v;
  mean /= static_cast<double>(p.v.size());

  std::vector<double> hann(n);
  for (int i = 0; i < n; ++i) hann[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);

  std::vector<std::vector<std::complex<double>>> rows(n, std::vector<std::complex<double>>(n));
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) rows[y][x] = (p.at(x, y) - mean) * hann[x] * hann[y];
    fft_inplace(rows[y]);
  }
  Plane out(n, n);
  std::vector<std::complex<double>> col(n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) col[y] = rows[y][x];
    fft_inplace(col);
    for (int y = 0; y < n; ++y) out.at(x, y) = std::norm(col[y]);
  }
  return out;
}

// Mean power per radial bin, bins spanning normalized frequency (0, 0.5].
// DC is excluded; bin index = floor(r / 0.5 * nbins) clipped to the top bin.
inline std::vector<double> radial_power_bins(const Plane& spectrum, int nbins) {
  const int n = spectrum.width;
  std::vector<double> sum(nbins, 0.0);
  std::vector<double> cnt(nbins, 0.0);
  for (int y = 0; y < n; ++y) {
    const double fy = (y <= n / 2 ? y : y - n) / static_cast<double>(n);
    for (int x = 0; x < n; ++x) {
      const double fx = (x <= n / 2 ? x : x - n) / static_cast<double>(n);
      const double r = std::sqrt(fx * fx + fy * fy);
      if (r == 0.0) continue;
      int b = static_cast<int>(r / 0.5 * nbins);
      if (b >= nbins) b = nbins - 1;
      sum[b] += spectrum.at(x, y);
      cnt[b] += 1.0;
    }
  }
  for (int b = 0; b < nbins; ++b) sum[b] = cnt[b] > 0.0 ? sum[b] / cnt[b] : 0.0;
  return sum;
}

}  // namespace ordeg
