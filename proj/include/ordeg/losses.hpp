#pragma once

// The three training losses: presence confidence (per-sample euclidean
// over the four types), level regression (L1 on the normalized scale,
// summed over active types), and the slerp contrastive loss with
// ordinal-distance weighted negatives.

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "ordeg/degrade.hpp"
#include "ordeg/errors.hpp"
#include "ordeg/vecmath.hpp"

namespace ordeg {

// Single-sample confidence loss: ||pred - gt||_2 over the 4-vector.
inline double conf_loss_sample(const std::array<double, 4>& pred, const std::array<double, 4>& gt) {
  double s = 0.0;
  for (int t = 0; t < 4; ++t) {
    const double d = pred[t] - gt[t];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double loss_conf(const std::map<DegradationType, double>& preds,
                        const std::map<DegradationType, double>& gts) {
  if (preds.size() != 4 || gts.size() != 4) throw key_mismatch_error("confidence maps need all four types");
  std::array<double, 4> p{}, g{};
  for (const auto& [t, v] : preds) p[type_index(t)] = v;
  for (const auto& [t, v] : gts) g[type_index(t)] = v;
  return conf_loss_sample(p, g);
}

// Level loss over the masked (active) types, on the normalized scale.
inline double loss_level(const std::map<DegradationType, double>& pred,
                         const std::map<DegradationType, double>& gt,
                         const std::vector<DegradationType>& mask) {
  double s = 0.0;
  for (DegradationType t : mask) {
    const auto ip = pred.find(t);
    const auto ig = gt.find(t);
    if (ip == pred.end() || ig == gt.end()) throw key_mismatch_error("masked type missing from level maps");
    s += std::fabs(ip->second - ig->second);
  }
  return s;
}

struct SclItem {
  RealVector z;     // image embedding (per-type head output)
  RealVector w;     // slerp target
  double level_gt;  // normalized severity
};

struct SclBatch {
  std::vector<SclItem> items;
  double tau = 0.07;
};

// Negative weights: per anchor, ordinal distances max-normalized to [0, 1].
inline std::vector<std::vector<double>> scl_lambda(const std::vector<double>& levels) {
  const std::size_t m = levels.size();
  std::vector<std::vector<double>> lam(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    double hi = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) hi = std::max(hi, std::fabs(levels[i] - levels[j]));
    }
    if (hi == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) lam[i][j] = std::fabs(levels[i] - levels[j]) / hi;
    }
  }
  return lam;
}

inline double loss_scl(const SclBatch& batch) {
  const std::size_t m = batch.items.size();
  if (m == 0) throw empty_input_error("scl batch is empty");
  if (!(batch.tau > 0.0)) throw non_positive_temperature_error();

  std::vector<double> levels(m);
  for (std::size_t i = 0; i < m; ++i) levels[i] = batch.items[i].level_gt;
  const auto lam = scl_lambda(levels);

  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double fii = std::exp(cosine_similarity(batch.items[i].z, batch.items[i].w) / batch.tau);
    double den = fii;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || lam[i][j] == 0.0) continue;
      den += lam[i][j] * std::exp(cosine_similarity(batch.items[i].z, batch.items[j].w) / batch.tau);
    }
    loss += -std::log(fii / den);
  }
  return loss / static_cast<double>(m);
}

struct LossBreakdown {
  double conf = 0.0;
  double level = 0.0;
  double scl = 0.0;
  double total = 0.0;
};

}  // namespace ordeg
