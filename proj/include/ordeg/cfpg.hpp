#pragma once

// Projection-based guidance rectification over four noise estimates, plus
// a two-dimensional analytic diffusion world that exercises it inside a
// real sampling loop.
//
// Rectification: the semantic and degradation estimates are interpreted as
// deviations from their textual baselines, split into components parallel
// and orthogonal to the baseline, re-scaled separately, and recombined
// through the usual positive/negative extrapolation.

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ordeg/errors.hpp"
#include "ordeg/rng.hpp"
#include "ordeg/vecmath.hpp"

namespace ordeg {

struct GuidanceBundle {
  RealVector eps_txt_pos;
  RealVector eps_txt_neg;
  RealVector eps_sem;
  RealVector eps_deg;

  void validate() const {
    const std::size_t n = eps_txt_pos.size();
    if (n == 0) throw empty_input_error("empty guidance bundle");
    if (eps_txt_neg.size() != n || eps_sem.size() != n || eps_deg.size() != n) {
      throw length_mismatch_error("guidance bundle fields differ in length");
    }
    for (const RealVector* v : {&eps_txt_pos, &eps_txt_neg, &eps_sem, &eps_deg}) {
      for (double x : *v) {
        if (!std::isfinite(x)) throw out_of_range_error("non-finite noise estimate");
      }
    }
  }
};

struct CfpgParams {
  double eta_par = 1.0;
  double eta_perp = 0.6;
  double w = 5.5;  // guidance scale
};

// eta_par = eta_perp = 0 collapses to the textual baseline pair;
// eta_par = eta_perp = 1 reconstructs the raw sem/deg estimates;
// equal etas reduce to plain linear guidance at that mixing weight.
inline RealVector rectify(const GuidanceBundle& bundle, const CfpgParams& params) {
  bundle.validate();
  const std::size_t n = bundle.eps_txt_pos.size();

  auto rectify_branch = [&](const RealVector& eps_vis, const RealVector& baseline) {
    RealVector dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = eps_vis[i] - baseline[i];
    const Decomposition dec = project_decompose(dev, baseline);
    RealVector out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = baseline[i] + params.eta_par * dec.par[i] + params.eta_perp * dec.perp[i];
    }
    return out;
  };

  const RealVector pos = rectify_branch(bundle.eps_sem, bundle.eps_txt_pos);
  const RealVector neg = rectify_branch(bundle.eps_deg, bundle.eps_txt_neg);
  RealVector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = neg[i] + params.w * (pos[i] - neg[i]);
  return out;
}

// Plain per-branch linear guidance at mix weight gamma, then the same
// positive/negative extrapolation. Matches rectify exactly when
// eta_par = eta_perp = gamma.
inline RealVector linear_cfg(const GuidanceBundle& bundle, double gamma, double w) {
  bundle.validate();
  const std::size_t n = bundle.eps_txt_pos.size();
  RealVector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = bundle.eps_txt_pos[i] + gamma * (bundle.eps_sem[i] - bundle.eps_txt_pos[i]);
    const double neg = bundle.eps_txt_neg[i] + gamma * (bundle.eps_deg[i] - bundle.eps_txt_neg[i]);
    out[i] = neg + w * (pos - neg);
  }
  return out;
}

// --- analytic toy diffusion -------------------------------------------

enum class Condition : int { TxtPos = 0, TxtNeg = 1, Sem = 2, Deg = 3 };

using Vec2 = std::array<double, 2>;

struct ToyDiffusionSpec {
  std::array<Vec2, 4> mu{};                          // target mean per condition
  std::vector<std::pair<double, double>> schedule;   // (alpha_t, sigma_t), noise increasing
  int steps = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (steps < 0) throw out_of_range_error("steps must be >= 0");
    if (static_cast<int>(schedule.size()) != steps) throw shape_mismatch_error("schedule length != steps");
    double prev_alpha = 2.0;
    for (const auto& [a, s] : schedule) {
      if (!(a > 0.0) || s < 0.0) throw out_of_range_error("bad schedule entry");
      if (std::fabs(a * a + s * s - 1.0) > 1e-9) throw out_of_range_error("schedule not variance preserving");
      if (a >= prev_alpha) throw out_of_range_error("schedule alphas must decrease");
      prev_alpha = a;
    }
  }
};

// Cosine-style variance-preserving schedule; index 0 is the least noisy.
inline std::vector<std::pair<double, double>> make_vp_schedule(int steps) {
  std::vector<std::pair<double, double>> out(steps);
  for (int i = 0; i < steps; ++i) {
    const double a = std::cos(0.5 * M_PI * (i + 1) / (steps + 1));
    out[i] = {a, std::sqrt(1.0 - a * a)};
  }
  return out;
}

// Optimal noise prediction for a unit-variance gaussian target under a
// variance-preserving schedule. With z_t = a x0 + s eps, x0 ~ N(mu, I):
//   z_t ~ N(a mu, (a^2 + s^2) I) = N(a mu, I),
//   E[eps | z_t] = Cov(eps, z) Var(z)^-1 (z - a mu) = s (z - a mu),
// which also equals -s * grad log q_t(z).
inline Vec2 analytic_eps(const ToyDiffusionSpec& spec, const Vec2& z, int t_index, Condition cond) {
  if (t_index < 0 || t_index >= static_cast<int>(spec.schedule.size())) {
    throw index_out_of_range_error("schedule index");
  }
  const int ci = static_cast<int>(cond);
  if (ci < 0 || ci > 3) throw index_out_of_range_error("condition index");
  const auto* entry = spec.schedule.data() + t_index;
  const double alpha = entry->first, sigma = entry->second;
  return {sigma * (z[0] - alpha * spec.mu[ci][0]), sigma * (z[1] - alpha * spec.mu[ci][1])};
}

enum class GuidanceMode { Cfpg, LinearCfg };

// Ancestral sampling with the guided estimate: estimate x0 with the
// rectified noise, re-noise to the next (less noisy) level with fresh
// seeded noise. In LinearCfg mode the mix weight is eta_par (callers use
// equal etas when comparing the two modes).
inline std::vector<Vec2> sample(const ToyDiffusionSpec& spec, const CfpgParams& params, GuidanceMode mode) {
  spec.validate();
  Rng rng = Rng::keyed(spec.seed, 0x746f7964ULL);
  std::vector<Vec2> traj;
  traj.reserve(spec.steps + 1);
  Vec2 z = {rng.next_gaussian(), rng.next_gaussian()};
  traj.push_back(z);

  for (int i = spec.steps - 1; i >= 0; --i) {
    const auto [alpha, sigma] = spec.schedule[i];
    GuidanceBundle bundle;
    auto eps = [&](Condition c) {
      const Vec2 e = analytic_eps(spec, z, i, c);
      return RealVector{e[0], e[1]};
    };
    bundle.eps_txt_pos = eps(Condition::TxtPos);
    bundle.eps_txt_neg = eps(Condition::TxtNeg);
    bundle.eps_sem = eps(Condition::Sem);
    bundle.eps_deg = eps(Condition::Deg);

    const RealVector guided = mode == GuidanceMode::Cfpg ? rectify(bundle, params)
                                                         : linear_cfg(bundle, params.eta_par, params.w);
    const Vec2 x0 = {(z[0] - sigma * guided[0]) / alpha, (z[1] - sigma * guided[1]) / alpha};
    if (i > 0) {
      const auto [alpha_next, sigma_next] = spec.schedule[i - 1];
      z = {alpha_next * x0[0] + sigma_next * rng.next_gaussian(),
           alpha_next * x0[1] + sigma_next * rng.next_gaussian()};
    } else {
      z = x0;
    }
    traj.push_back(z);
  }
  return traj;
}

}  // namespace ordeg
