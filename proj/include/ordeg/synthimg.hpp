#pragma once

// Procedural "clean" photographs for demos and the synthetic corpus:
// multi-octave value noise for shading, a handful of hard-edged shapes
// for structure, and a faint fine-scale texture. Deterministic per seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ordeg/image.hpp"
#include "ordeg/rng.hpp"

namespace ordeg {
namespace synthdetail {

struct ValueNoise {
  int cells;
  std::vector<double> grid;  // (cells+1)^2 lattice values in [0, 1]

  ValueNoise(int cells_, Rng& rng) : cells(cells_), grid((cells_ + 1) * (cells_ + 1)) {
    for (double& v : grid) v = rng.next_unit();
  }

  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

  double at(double u, double v) const {
    const double x = u * cells, y = v * cells;
    const int ix = std::min(static_cast<int>(x), cells - 1);
    const int iy = std::min(static_cast<int>(y), cells - 1);
    const double tx = smooth(x - ix), ty = smooth(y - iy);
    const int s = cells + 1;
    const double a = grid[iy * s + ix], b = grid[iy * s + ix + 1];
    const double c = grid[(iy + 1) * s + ix], d = grid[(iy + 1) * s + ix + 1];
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
  }
};

}  // namespace synthdetail

inline Image synthesize_clean_image(int size, std::uint64_t seed) {
  Rng rng = Rng::keyed(seed, 0x636c65616eULL);
  using synthdetail::ValueNoise;
  ValueNoise oct1(4, rng), oct2(8, rng), oct3(16, rng), oct4(32, rng);

  // per-channel tint fields keep the image from being gray
  ValueNoise tintr(3, rng), tintg(3, rng), tintb(3, rng);

  Image img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size, v = (y + 0.5) / size;
      const double base = 90.0 + 80.0 * oct1.at(u, v) + 40.0 * oct2.at(u, v) + 20.0 * oct3.at(u, v) +
                          10.0 * oct4.at(u, v);
      img.at(x, y, 0) = clamp_u8(base * (0.75 + 0.5 * tintr.at(u, v)));
      img.at(x, y, 1) = clamp_u8(base * (0.75 + 0.5 * tintg.at(u, v)));
      img.at(x, y, 2) = clamp_u8(base * (0.75 + 0.5 * tintb.at(u, v)));
    }
  }

  // hard-edged shapes: rectangles and disks with random fill
  const int nshapes = 8 + static_cast<int>(rng.next_below(5));
  for (int s = 0; s < nshapes; ++s) {
    const bool disk = rng.next_below(2) == 0;
    const int cx = static_cast<int>(rng.next_below(size));
    const int cy = static_cast<int>(rng.next_below(size));
    const int rw = size / 16 + static_cast<int>(rng.next_below(size / 4));
    const int rh = size / 16 + static_cast<int>(rng.next_below(size / 4));
    std::uint8_t col[3];
    for (int c = 0; c < 3; ++c) col[c] = static_cast<std::uint8_t>(30 + rng.next_below(200));
    const double alpha = 0.55 + 0.4 * rng.next_unit();
    for (int y = std::max(0, cy - rh); y < std::min(size, cy + rh); ++y) {
      for (int x = std::max(0, cx - rw); x < std::min(size, cx + rw); ++x) {
        if (disk) {
          const double dx = (x - cx) / static_cast<double>(rw);
          const double dy = (y - cy) / static_cast<double>(rh);
          if (dx * dx + dy * dy > 1.0) continue;
        }
        for (int c = 0; c < 3; ++c) {
          img.at(x, y, c) = clamp_u8((1.0 - alpha) * img.at(x, y, c) + alpha * col[c]);
        }
      }
    }
  }

  // faint fine texture (spatially correlated, scale 2)
  ValueNoise fine(size / 2, rng);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double t = 8.0 * (fine.at((x + 0.5) / size, (y + 0.5) / size) - 0.5);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = clamp_u8(img.at(x, y, c) + t);
    }
  }
  return img;
}

}  // namespace ordeg
