#pragma once

// 8-bit interleaved RGB raster plus the float plane used by filters and
// feature extraction.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "ordeg/errors.hpp"

namespace ordeg {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // RGB, row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0) : width(w), height(h), v(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

inline std::uint8_t clamp_u8(double x) {
  if (x <= 0.0) return 0;
  if (x >= 255.0) return 255;
  return static_cast<std::uint8_t>(x + 0.5);
}

// BT.601 luma on the 0..255 scale.
inline Plane luminance(const Image& img) {
  Plane out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    }
  }
  return out;
}

inline double mse(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw shape_mismatch_error("mse over different image sizes");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

inline int max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw shape_mismatch_error("diff over different image sizes");
  int m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const int d = std::abs(static_cast<int>(a.data[i]) - static_cast<int>(b.data[i]));
    if (d > m) m = d;
  }
  return m;
}

}  // namespace ordeg
