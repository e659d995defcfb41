#pragma once

// The composition ordinal embedding space: sinusoidal severity encodings,
// frozen per-type anchor directions, learnable per-bin shifts, and the
// slerp-interpolated continuous targets between bin centers.

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ordeg/degrade.hpp"
#include "ordeg/errors.hpp"
#include "ordeg/rng.hpp"
#include "ordeg/vecmath.hpp"

namespace ordeg {

struct OrdinalEncoderSpec {
  int d = 512;
  double f = 10000.0;

  void validate() const {
    if (d < 8 || d % 2 != 0) throw out_of_range_error("embedding dim must be even and >= 8");
    if (!(f > 1.0)) throw out_of_range_error("frequency base must be > 1");
  }
};

// Sinusoidal encoding of normalized severity: component j oscillates at
// frequency f^(-j/d), cosine on even slots and sine on odd slots.
inline RealVector ordinal_embedding(const OrdinalEncoderSpec& spec, double level_norm) {
  spec.validate();
  if (level_norm < 0.0 || level_norm > 1.0) throw out_of_range_error("level_norm outside [0, 1]");
  RealVector o(spec.d);
  for (int j = 0; j < spec.d; ++j) {
    const double freq = std::exp(-static_cast<double>(j) / spec.d * std::log(spec.f));
    const double phase = level_norm * freq;
    o[j] = j % 2 == 0 ? std::cos(phase) : std::sin(phase);
  }
  return o;
}

// Frozen unit anchors, one per degradation type, from a seeded
// Gram-Schmidt orthogonalization of gaussian draws. They stand in for the
// per-type text directions: distinct, fixed, mutually near-orthogonal.
inline std::array<RealVector, 4> make_type_anchors(const OrdinalEncoderSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = Rng::keyed(seed, 0x616e6368ULL);
  std::array<RealVector, 4> anchors;
  for (int t = 0; t < 4; ++t) {
    RealVector v(spec.d);
    for (int j = 0; j < spec.d; ++j) v[j] = rng.next_gaussian();
    for (int p = 0; p < t; ++p) {
      const double proj = dot(v, anchors[p]);
      for (int j = 0; j < spec.d; ++j) v[j] -= proj * anchors[p][j];
    }
    anchors[t] = normalized(v);
  }
  return anchors;
}

// Learnable shift vectors, one per (type, bin).
struct ShiftTable {
  std::array<std::vector<RealVector>, 4> shifts;

  static ShiftTable zeros(int d, int bins_per_type) {
    ShiftTable t;
    for (auto& per_type : t.shifts) {
      per_type.assign(bins_per_type, RealVector(d, 0.0));
    }
    return t;
  }
};

inline int num_bins(double gap) {
  if (!(gap > 0.0) || gap > 100.0) throw invalid_gap_error();
  return static_cast<int>(std::floor(100.0 / gap)) + 1;
}

// anchor + ordinal embedding of the normalized level + shift.
inline RealVector compose_bin(const RealVector& anchor, const OrdinalEncoderSpec& spec, DegradationType type,
                              double level_raw, const RealVector& shift) {
  const double ln = normalize_level(type, level_raw);
  RealVector c = ordinal_embedding(spec, ln);
  if (anchor.size() != c.size() || shift.size() != c.size()) throw length_mismatch_error();
  for (std::size_t j = 0; j < c.size(); ++j) c[j] += anchor[j] + shift[j];
  return c;
}

struct Bin {
  double level;       // raw units
  double level_norm;  // severity in [0, 1]
  RealVector center;
};

struct BinGrid {
  DegradationType type;
  double gap = 5.0;  // spacing on the 0-100 normalized severity scale
  std::vector<Bin> bins;
};

inline std::vector<double> bin_level_norms(double gap) {
  const int n = num_bins(gap);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::min(1.0, i * gap / 100.0);
  return out;
}

inline BinGrid build_bin_grid(DegradationType type, const OrdinalEncoderSpec& spec, const RealVector& anchor,
                              const std::vector<RealVector>& shifts, double gap) {
  const std::vector<double> norms = bin_level_norms(gap);
  if (shifts.size() != norms.size()) throw shape_mismatch_error("one shift per bin required");
  BinGrid grid;
  grid.type = type;
  grid.gap = gap;
  grid.bins.reserve(norms.size());
  for (std::size_t i = 0; i < norms.size(); ++i) {
    Bin b;
    b.level_norm = norms[i];
    b.level = denormalize_level(type, norms[i]);
    b.center = compose_bin(anchor, spec, type, b.level, shifts[i]);
    grid.bins.push_back(std::move(b));
  }
  return grid;
}

// Locates the two bins bracketing level_norm. Returns (lo, hi, t); an
// exact hit gives lo == hi and t == 0.
inline void bracket_bins(const BinGrid& grid, double level_norm, int& lo, int& hi, double& t) {
  const int n = static_cast<int>(grid.bins.size());
  if (level_norm <= grid.bins.front().level_norm) {
    lo = hi = 0;
    t = 0.0;
    return;
  }
  if (level_norm >= grid.bins.back().level_norm) {
    lo = hi = n - 1;
    t = 0.0;
    return;
  }
  int i = 1;
  while (i < n && grid.bins[i].level_norm < level_norm) ++i;
  const double a = grid.bins[i - 1].level_norm;
  const double b = grid.bins[i].level_norm;
  if (level_norm == a) {
    lo = hi = i - 1;
    t = 0.0;
    return;
  }
  lo = i - 1;
  hi = i;
  t = (level_norm - a) / (b - a);
}

// Continuous target embedding for a raw level: slerp between the two
// bracketing bin centers; exact bin hits return that center normalized.
inline RealVector slerp_target(const BinGrid& grid, double level_raw) {
  const double ln = normalize_level(grid.type, level_raw);
  int lo, hi;
  double t;
  bracket_bins(grid, ln, lo, hi, t);
  if (lo == hi) return normalized(grid.bins[lo].center);
  return slerp(grid.bins[lo].center, grid.bins[hi].center, t);
}

// JSON dump of grid geometry for inspection ({type, gap, bins, d, f}).
inline std::string grid_to_json(const BinGrid& grid, const OrdinalEncoderSpec& spec) {
  std::string out = "{\"type\":\"";
  out += type_name(grid.type);
  out += "\",\"gap\":" + std::to_string(grid.gap);
  out += ",\"d\":" + std::to_string(spec.d);
  out += ",\"f\":" + std::to_string(spec.f);
  out += ",\"bins\":[";
  for (std::size_t i = 0; i < grid.bins.size(); ++i) {
    if (i) out += ",";
    out += "{\"level\":" + std::to_string(grid.bins[i].level) +
           ",\"level_norm\":" + std::to_string(grid.bins[i].level_norm) + "}";
  }
  out += "]}";
  return out;
}

// Centers as CSV (one row per bin) for similarity-matrix plots.
inline std::string centers_to_csv(const BinGrid& grid) {
  std::string out = "level,level_norm";
  for (std::size_t j = 0; j < grid.bins.front().center.size(); ++j) out += ",c" + std::to_string(j);
  out += "\n";
  for (const Bin& b : grid.bins) {
    out += std::to_string(b.level) + "," + std::to_string(b.level_norm);
    char buf[32];
    for (double v : b.center) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace ordeg
