#pragma once

// Handcrafted degradation-sensitive features over the luminance channel.
// Layout (28 values):
//   [0..15]  radially averaged log power spectrum, low to high frequency
//   [16]     blockiness: 8x8 boundary vs interior gradient energy ratio
//   [17]     noise proxy: median absolute deviation of the Laplacian / 255
//   [18..25] gradient magnitude histogram (mass fractions)
//   [26,27]  luminance mean / 255 and std / 255
//
// Blur empties the high-frequency spectral bins, noise fills them and
// drives the Laplacian MAD, JPEG shows up in the block-grid gradient
// ratio, downsampling truncates the spectrum with aliasing residue.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ordeg/errors.hpp"
#include "ordeg/fft.hpp"
#include "ordeg/image.hpp"

namespace ordeg {

inline constexpr int kFeatureDim = 28;
inline constexpr int kSpectralBins = 16;
inline constexpr int kGradientBins = 8;

using FeatureVector = std::array<double, kFeatureDim>;

namespace featdetail {

inline double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
  }
  return hi;
}

// Boundary-vs-interior gradient energy on the fixed 8x8 grid. Differences
// are cyclic so that translations by whole blocks leave the score
// unchanged.
inline double blockiness(const Plane& lum) {
  const int w = lum.width, h = lum.height;
  double boundary = 0.0, interior = 0.0;
  double nb = 0.0, ni = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = lum.at((x + 1) % w, y) - lum.at(x, y);
      const double gy = lum.at(x, (y + 1) % h) - lum.at(x, y);
      if (x % 8 == 7) {
        boundary += gx * gx;
        nb += 1.0;
      } else {
        interior += gx * gx;
        ni += 1.0;
      }
      if (y % 8 == 7) {
        boundary += gy * gy;
        nb += 1.0;
      } else {
        interior += gy * gy;
        ni += 1.0;
      }
    }
  }
  const double mb = nb > 0.0 ? boundary / nb : 0.0;
  const double mi = ni > 0.0 ? interior / ni : 0.0;
  return mb / (mi + 1e-6);
}

inline double laplacian_mad(const Plane& lum) {
  const int w = lum.width, h = lum.height;
  std::vector<double> resp;
  resp.reserve(static_cast<std::size_t>(w - 2) * (h - 2));
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      resp.push_back(4.0 * lum.at(x, y) - lum.at(x - 1, y) - lum.at(x + 1, y) - lum.at(x, y - 1) -
                     lum.at(x, y + 1));
    }
  }
  const double med = median_inplace(resp);
  for (double& v : resp) v = std::fabs(v - med);
  return median_inplace(resp);
}

// Center crop with the offset snapped down to a multiple of 8 so the JPEG
// block phase is preserved.
inline Plane center_crop_pow2(const Plane& lum) {
  const int n = std::min(lum.width, lum.height) >= 128 ? 128 : 64;
  const int ox = ((lum.width - n) / 2) & ~7;
  const int oy = ((lum.height - n) / 2) & ~7;
  Plane out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) out.at(x, y) = lum.at(ox + x, oy + y);
  }
  return out;
}

}  // namespace featdetail

// 16-bin radially averaged log power spectrum of the image, the same bins
// the round-trip verification compares.
inline std::array<double, kSpectralBins> radial_log_spectrum(const Image& img) {
  const Plane crop = featdetail::center_crop_pow2(luminance(img));
  const Plane spec = power_spectrum(crop);
  const std::vector<double> bins = radial_power_bins(spec, kSpectralBins);
  const double n2 = static_cast<double>(crop.width) * crop.width;
  std::array<double, kSpectralBins> out{};
  for (int i = 0; i < kSpectralBins; ++i) {
    out[i] = std::log10(bins[i] / n2 + 1e-9);
  }
  return out;
}

inline FeatureVector extract_features(const Image& img) {
  if (std::min(img.width, img.height) < 64) throw image_too_small_error("features need >= 64px");
  const Plane lum = luminance(img);

  FeatureVector f{};
  const auto spectral = radial_log_spectrum(img);
  for (int i = 0; i < kSpectralBins; ++i) f[i] = spectral[i];

  f[16] = featdetail::blockiness(lum);
  f[17] = featdetail::laplacian_mad(lum) / 255.0;

  // gradient magnitude histogram, bin edges double from 2 to 128
  static const double edges[kGradientBins - 1] = {2, 4, 8, 16, 32, 64, 128};
  std::array<double, kGradientBins> hist{};
  double total = 0.0;
  for (int y = 0; y < lum.height - 1; ++y) {
    for (int x = 0; x < lum.width - 1; ++x) {
      const double gx = lum.at(x + 1, y) - lum.at(x, y);
      const double gy = lum.at(x, y + 1) - lum.at(x, y);
      const double mag = std::sqrt(gx * gx + gy * gy);
      int b = 0;
      while (b < kGradientBins - 1 && mag >= edges[b]) ++b;
      hist[b] += 1.0;
      total += 1.0;
    }
  }
  for (int i = 0; i < kGradientBins; ++i) f[18 + i] = total > 0.0 ? hist[i] / total : 0.0;

  double mean = 0.0;
  for (double v : lum.v) mean += v;
  mean /= static_cast<double>(lum.v.size());
  double var = 0.0;
  for (double v : lum.v) var += (v - mean) * (v - mean);
  var /= static_cast<double>(lum.v.size());
  f[26] = mean / 255.0;
  f[27] = std::sqrt(var) / 255.0;
  return f;
}

}  // namespace ordeg
