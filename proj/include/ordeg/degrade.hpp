#pragma once

// First-order degradation synthesis: blur -> downsample -> noise -> jpeg,
// applied in that fixed order, plus the labeled dataset generator that
// feeds training and evaluation.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ordeg/errors.hpp"
#include "ordeg/image.hpp"
#include "ordeg/jpeg.hpp"
#include "ordeg/rng.hpp"

namespace ordeg {

// Canonical ordering matches the application order of the pipeline.
enum class DegradationType : int { Blur = 0, Downsample = 1, Noisy = 2, JPEG = 3 };

inline constexpr std::array<DegradationType, 4> kAllTypes = {
    DegradationType::Blur, DegradationType::Downsample, DegradationType::Noisy, DegradationType::JPEG};

inline constexpr int type_index(DegradationType t) { return static_cast<int>(t); }

inline const char* type_name(DegradationType t) {
  switch (t) {
    case DegradationType::Blur: return "Blur";
    case DegradationType::Downsample: return "Downsample";
    case DegradationType::Noisy: return "Noisy";
    case DegradationType::JPEG: return "JPEG";
  }
  return "?";
}

inline DegradationType type_from_name(const std::string& name) {
  for (DegradationType t : kAllTypes) {
    if (name == type_name(t)) return t;
  }
  throw out_of_range_error("unknown degradation type: " + name);
}

struct LevelRange {
  DegradationType type;
  double min;
  double max;
  bool severity_decreasing;  // true when a larger raw level means a milder image
};

// Canonical training ranges. JPEG is severity-decreasing: lower quality is
// a worse image.
inline LevelRange level_range(DegradationType t) {
  switch (t) {
    case DegradationType::Blur: return {t, 0.1, 4.0, false};
    case DegradationType::Downsample: return {t, 1.1, 7.0, false};
    case DegradationType::Noisy: return {t, 1.0, 40.0, false};
    case DegradationType::JPEG: return {t, 30.0, 95.0, true};
  }
  throw out_of_range_error("bad type");
}

// Raw level -> normalized severity in [0, 1] with 0 = mild for every type.
inline double normalize_level(DegradationType t, double raw) {
  const LevelRange r = level_range(t);
  if (raw < r.min - 1e-9 || raw > r.max + 1e-9) {
    throw out_of_range_error(std::string(type_name(t)) + " level out of range");
  }
  const double u = (raw - r.min) / (r.max - r.min);
  const double clamped = std::clamp(u, 0.0, 1.0);
  return r.severity_decreasing ? 1.0 - clamped : clamped;
}

inline double denormalize_level(DegradationType t, double severity) {
  const LevelRange r = level_range(t);
  const double u = r.severity_decreasing ? 1.0 - severity : severity;
  return r.min + u * (r.max - r.min);
}

struct DegradationRecipe {
  std::array<std::optional<double>, 4> levels;  // indexed by type_index
  std::uint64_t seed = 0;

  bool has(DegradationType t) const { return levels[type_index(t)].has_value(); }
  double level(DegradationType t) const { return *levels[type_index(t)]; }

  void validate() const {
    bool any = false;
    for (DegradationType t : kAllTypes) {
      if (!has(t)) continue;
      any = true;
      const LevelRange r = level_range(t);
      const double v = level(t);
      if (v < r.min || v > r.max) {
        throw out_of_range_error(std::string(type_name(t)) + " level out of range");
      }
    }
    if (!any) throw empty_input_error("recipe has no degradations");
  }
};

namespace imgdetail {

// Symmetric reflection for out-of-range sample indices.
inline int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Catmull-Rom weights (cubic convolution, a = -0.5).
inline double cubic_weight(double x) {
  x = std::fabs(x);
  if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

// Bicubic resample of an RGB float buffer (channel-major planes).
inline std::vector<Plane> resize_bicubic(const std::vector<Plane>& src, int dst_w, int dst_h) {
  const int sw = src[0].width, sh = src[0].height;
  std::vector<Plane> mid(src.size(), Plane(dst_w, sh));
  const double sx = static_cast<double>(sw) / dst_w;
  for (std::size_t c = 0; c < src.size(); ++c) {
    for (int y = 0; y < sh; ++y) {
      for (int x = 0; x < dst_w; ++x) {
        const double fx = (x + 0.5) * sx - 0.5;
        const int ix = static_cast<int>(std::floor(fx));
        const double t = fx - ix;
        double acc = 0.0;
        for (int k = -1; k <= 2; ++k) {
          acc += cubic_weight(t - k) * src[c].at(reflect(ix + k, sw), y);
        }
        mid[c].at(x, y) = acc;
      }
    }
  }
  std::vector<Plane> out(src.size(), Plane(dst_w, dst_h));
  const double sy = static_cast<double>(sh) / dst_h;
  for (std::size_t c = 0; c < src.size(); ++c) {
    for (int y = 0; y < dst_h; ++y) {
      const double fy = (y + 0.5) * sy - 0.5;
      const int iy = static_cast<int>(std::floor(fy));
      const double t = fy - iy;
      for (int x = 0; x < dst_w; ++x) {
        double acc = 0.0;
        for (int k = -1; k <= 2; ++k) {
          acc += cubic_weight(t - k) * mid[c].at(x, reflect(iy + k, sh));
        }
        out[c].at(x, y) = acc;
      }
    }
  }
  return out;
}

inline std::vector<Plane> to_planes(const Image& img) {
  std::vector<Plane> p(3, Plane(img.width, img.height));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) p[c].at(x, y) = img.at(x, y, c);
    }
  }
  return p;
}

inline Image from_planes(const std::vector<Plane>& p) {
  Image img(p[0].width, p[0].height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = clamp_u8(p[c].at(x, y));
    }
  }
  return img;
}

}  // namespace imgdetail

// Isotropic Gaussian blur, kernel radius ceil(3*sigma), reflect padding.
inline Image apply_blur(const Image& img, double sigma) {
  if (sigma < 0.0) throw out_of_range_error("blur sigma must be >= 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  if (radius == 0) return img;
  const int ksize = 2 * radius + 1;
  if (img.width < ksize || img.height < ksize) throw image_too_small_error("kernel larger than image");

  const std::vector<double> k = imgdetail::gaussian_kernel(sigma);
  auto planes = imgdetail::to_planes(img);
  for (auto& plane : planes) {
    Plane tmp(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
      for (int x = 0; x < plane.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * plane.at(imgdetail::reflect(x + i, plane.width), y);
        }
        tmp.at(x, y) = acc;
      }
    }
    for (int y = 0; y < plane.height; ++y) {
      for (int x = 0; x < plane.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp.at(x, imgdetail::reflect(y + i, plane.height));
        }
        plane.at(x, y) = acc;
      }
    }
  }
  return imgdetail::from_planes(planes);
}

// Bicubic downscale by `scale` followed by bicubic upscale back to the
// original size, so every stage keeps the raster dimensions fixed.
inline Image apply_downsample(const Image& img, double scale) {
  if (scale < 1.0) throw out_of_range_error("downsample scale must be >= 1");
  const int dw = static_cast<int>(std::floor(img.width / scale));
  const int dh = static_cast<int>(std::floor(img.height / scale));
  if (std::min(dw, dh) < 8) throw image_too_small_error("downsampled image below 8px");
  if (dw == img.width && dh == img.height) {
    // still resample once so scale=1.0 exercises the same path
    auto planes = imgdetail::resize_bicubic(imgdetail::to_planes(img), img.width, img.height);
    return imgdetail::from_planes(planes);
  }
  auto down = imgdetail::resize_bicubic(imgdetail::to_planes(img), dw, dh);
  auto up = imgdetail::resize_bicubic(down, img.width, img.height);
  return imgdetail::from_planes(up);
}

// Additive white Gaussian noise with std `level` in 8-bit units.
inline Image apply_noise(const Image& img, double level, Rng& rng) {
  if (level < 0.0) throw out_of_range_error("noise level must be >= 0");
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp_u8(static_cast<double>(img.data[i]) + level * rng.next_gaussian());
  }
  return out;
}

// Baseline JPEG encode/decode round trip at the given quality factor.
inline Image apply_jpeg(const Image& img, int quality) {
  if (quality < 1 || quality > 100) throw invalid_quality_error();
  return decode_jpeg(encode_jpeg(img, quality));
}

// Applies the present recipe entries in the canonical order. The noise
// stage draws from a stream keyed by the recipe seed.
inline Image synthesize(const Image& img, const DegradationRecipe& recipe) {
  recipe.validate();
  Image out = img;
  if (recipe.has(DegradationType::Blur)) {
    out = apply_blur(out, recipe.level(DegradationType::Blur));
  }
  if (recipe.has(DegradationType::Downsample)) {
    out = apply_downsample(out, recipe.level(DegradationType::Downsample));
  }
  if (recipe.has(DegradationType::Noisy)) {
    Rng rng = Rng::keyed(recipe.seed, 0x6e6f6973ULL);  // noise stream
    out = apply_noise(out, recipe.level(DegradationType::Noisy), rng);
  }
  if (recipe.has(DegradationType::JPEG)) {
    out = apply_jpeg(out, static_cast<int>(std::lround(recipe.level(DegradationType::JPEG))));
  }
  return out;
}

struct ManifestRecord {
  std::string lq_path;
  std::string gt_path;
  DegradationRecipe recipe;

  bool conf_gt(DegradationType t) const { return recipe.has(t); }
  double level_gt(DegradationType t) const { return recipe.level(t); }
};

struct DatasetManifest {
  int format_version = 1;
  std::vector<ManifestRecord> records;
  std::string base_dir;  // directory the relative paths resolve against
};

struct DatasetConfig {
  int patch_size = 224;
  int count = 0;
  double mixture = 0.5;  // fraction of records carrying a random nonempty type subset
  std::uint64_t seed = 0;
  // Level grid per type; empty entries default to an evenly spaced grid.
  std::array<std::vector<double>, 4> level_grids;
  int levels_per_type = 21;
};

inline std::vector<double> default_level_grid(DegradationType t, int n) {
  const LevelRange r = level_range(t);
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    double v = n == 1 ? r.min : r.min + (r.max - r.min) * i / (n - 1);
    if (t == DegradationType::JPEG) v = std::lround(v);  // codec takes integer quality
    g[i] = v;
  }
  return g;
}

}  // namespace ordeg
