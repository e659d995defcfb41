#pragma once

// Shared deterministic vector math: cosine similarity, spherical
// interpolation, projection decomposition, stable softmax, and rank
// statistics. Everything here is a pure function over 64-bit reals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "ordeg/errors.hpp"

namespace ordeg {

using RealVector = std::vector<double>;

// Angle below which slerp switches to a lerp-then-normalize fallback.
inline constexpr double kSlerpFallbackAngle = 1e-6;
// Cosine margin treated as antipodal: cos(theta) <= -1 + kAntipodalEps.
inline constexpr double kAntipodalEps = 1e-6;

inline double dot(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) throw length_mismatch_error();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const RealVector& a) { return std::sqrt(dot(a, a)); }

inline RealVector normalized(const RealVector& a) {
  const double n = norm(a);
  if (n == 0.0) throw zero_norm_error();
  RealVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / n;
  return out;
}

inline double cosine_similarity(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) throw length_mismatch_error();
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw zero_norm_error("cosine of zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// Great-circle interpolation between the directions of p and q. Inputs are
// normalized first, so only their directions matter; the result is unit
// norm. Near theta = 0 the sin(theta) denominator is replaced by a
// normalized linear interpolation, which agrees with the analytic path to
// well below the fallback threshold.
inline RealVector slerp(const RealVector& p, const RealVector& q, double t) {
  const RealVector pu = normalized(p);
  const RealVector qu = normalized(q);
  if (pu.size() != qu.size()) throw length_mismatch_error();
  const double c = std::clamp(dot(pu, qu), -1.0, 1.0);
  if (c <= -1.0 + kAntipodalEps) {
    throw antipodal_inputs_error();
  }
  const double theta = std::acos(c);
  RealVector out(pu.size());
  if (theta < kSlerpFallbackAngle) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * pu[i] + t * qu[i];
    return normalized(out);
  }
  const double s = std::sin(theta);
  const double wp = std::sin((1.0 - t) * theta) / s;
  const double wq = std::sin(t * theta) / s;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = wp * pu[i] + wq * qu[i];
  return out;
}

struct Decomposition {
  RealVector par;
  RealVector perp;
};

// Splits d into its component along b and the remainder: par = (d.b/|b|^2) b,
// perp = d - par. The sum reconstructs d and perp is orthogonal to b.
inline Decomposition project_decompose(const RealVector& d, const RealVector& b) {
  if (d.size() != b.size()) throw length_mismatch_error();
  const double bb = dot(b, b);
  if (bb == 0.0) throw zero_norm_error("projection baseline has zero norm");
  const double scale = dot(d, b) / bb;
  Decomposition out;
  out.par.resize(d.size());
  out.perp.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.par[i] = scale * b[i];
    out.perp[i] = d[i] - out.par[i];
  }
  return out;
}

// Max-subtracted softmax over xs / tau.
inline std::vector<double> softmax(const std::vector<double>& xs, double tau) {
  if (xs.empty()) throw empty_input_error("softmax of empty sequence");
  if (!(tau > 0.0)) throw non_positive_temperature_error();
  const double hi = *std::max_element(xs.begin(), xs.end());
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = std::exp((xs[i] - hi) / tau);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// Ranks with ties replaced by the average rank of the tied block (1-based).
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw length_mismatch_error();
  if (xs.size() < 2) throw empty_input_error("pearson needs at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw constant_input_error();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Spearman rank correlation: pearson on average ranks.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw length_mismatch_error();
  if (xs.size() < 2) throw empty_input_error("spearman needs at least two points");
  return pearson(average_ranks(xs), average_ranks(ys));
}

}  // namespace ordeg
