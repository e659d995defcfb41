#pragma once

// Inference over a trained checkpoint: presence detection, continuous
// level prediction by top-k local interpolation, the evaluation metrics
// (type accuracy, MAE, SROCC, PCC), and the round-trip re-synthesis check.

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "ordeg/checkpoint.hpp"
#include "ordeg/dataset.hpp"
#include "ordeg/features.hpp"
#include "ordeg/train.hpp"
#include "ordeg/vecmath.hpp"

namespace ordeg {

struct RegressionConfig {
  int k = 2;
  double conf_threshold = 0.5;
  double tau_w = 0.05;

  void validate() const {
    if (k < 1) throw out_of_range_error("top-k must be >= 1");
    if (!(conf_threshold > 0.0) || !(conf_threshold < 1.0)) throw out_of_range_error("conf threshold in (0,1)");
    if (!(tau_w > 0.0)) throw non_positive_temperature_error();
  }
};

struct TypePrediction {
  bool present = false;
  double conf = 0.0;
  double level_norm = 0.0;  // meaningful when present
  double level_raw = 0.0;
};

struct LevelPrediction {
  std::array<TypePrediction, 4> per_type;
};

namespace inferdetail {

// Level regression for every type regardless of the presence decision;
// evaluation scores levels on the ground-truth active set.
inline std::array<LevelRegression, 4> regress_all(const EncoderOutput& out, const std::array<BinGrid, 4>& grids,
                                                  const RegressionConfig& cfg) {
  std::array<LevelRegression, 4> reg;
  for (int t = 0; t < 4; ++t) reg[t] = regress_level(out.emb[t], grids[t], cfg.k, cfg.tau_w);
  return reg;
}

}  // namespace inferdetail

inline LevelPrediction predict_from_features(const Checkpoint& ckpt, const std::array<BinGrid, 4>& grids,
                                             const RealVector& feat, const RegressionConfig& cfg) {
  cfg.validate();
  const EncoderOutput out = forward(ckpt.params, feat);
  const auto reg = inferdetail::regress_all(out, grids, cfg);
  LevelPrediction pred;
  for (DegradationType t : kAllTypes) {
    const int ti = type_index(t);
    TypePrediction& tp = pred.per_type[ti];
    tp.conf = out.conf[ti];
    tp.present = out.conf[ti] >= cfg.conf_threshold;
    if (tp.present) {
      tp.level_norm = reg[ti].level_norm;
      tp.level_raw = denormalize_level(t, tp.level_norm);
    }
  }
  return pred;
}

inline LevelPrediction predict(const Checkpoint& ckpt, const Image& img, const RegressionConfig& cfg) {
  const FeatureVector fv = extract_features(img);
  return predict_from_features(ckpt, ckpt.build_grids(), RealVector(fv.begin(), fv.end()), cfg);
}

struct TypeMetrics {
  int count = 0;
  double mae_raw = 0.0;
  double mae_norm = 0.0;
  double srocc = 0.0;
  double pcc = 0.0;
  bool correlations_defined = false;
};

struct MetricsReport {
  double type_acc_pct = 0.0;
  double mae_raw_macro = 0.0;
  double mae_norm_macro = 0.0;
  double srocc_macro = 0.0;
  double pcc_macro = 0.0;
  int record_count = 0;
  std::array<TypeMetrics, 4> per_type;
};

inline MetricsReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest,
                              const RegressionConfig& cfg) {
  cfg.validate();
  if (manifest.records.empty()) throw empty_dataset_error();
  const std::array<BinGrid, 4> grids = ckpt.build_grids();

  std::array<std::vector<double>, 4> gt_norm, pred_norm;
  int exact_sets = 0;

  for (const ManifestRecord& rec : manifest.records) {
    const Image lq = load_png(resolve_path(manifest, rec.lq_path));
    const FeatureVector fv = extract_features(lq);
    const RealVector feat(fv.begin(), fv.end());
    const EncoderOutput out = forward(ckpt.params, feat);
    const auto reg = inferdetail::regress_all(out, grids, cfg);

    bool all_match = true;
    for (DegradationType t : kAllTypes) {
      const int ti = type_index(t);
      const bool present = out.conf[ti] >= cfg.conf_threshold;
      if (present != rec.recipe.has(t)) all_match = false;
      if (rec.recipe.has(t)) {
        gt_norm[ti].push_back(normalize_level(t, rec.recipe.level(t)));
        pred_norm[ti].push_back(reg[ti].level_norm);
      }
    }
    if (all_match) ++exact_sets;
  }

  MetricsReport rep;
  rep.record_count = static_cast<int>(manifest.records.size());
  rep.type_acc_pct = 100.0 * exact_sets / rep.record_count;

  int types_with_data = 0, types_with_corr = 0;
  for (DegradationType t : kAllTypes) {
    const int ti = type_index(t);
    TypeMetrics& tm = rep.per_type[ti];
    tm.count = static_cast<int>(gt_norm[ti].size());
    if (tm.count == 0) continue;
    const LevelRange r = level_range(t);
    const double span = r.max - r.min;
    double sn = 0.0;
    for (int i = 0; i < tm.count; ++i) sn += std::fabs(pred_norm[ti][i] - gt_norm[ti][i]);
    tm.mae_norm = sn / tm.count;
    tm.mae_raw = tm.mae_norm * span;  // normalization is affine per type
    ++types_with_data;
    rep.mae_norm_macro += tm.mae_norm;
    rep.mae_raw_macro += tm.mae_raw;
    if (tm.count >= 2) {
      try {
        tm.srocc = spearman(pred_norm[ti], gt_norm[ti]);
        tm.pcc = pearson(pred_norm[ti], gt_norm[ti]);
        tm.correlations_defined = true;
        rep.srocc_macro += tm.srocc;
        rep.pcc_macro += tm.pcc;
        ++types_with_corr;
      } catch (const constant_input_error&) {
        tm.correlations_defined = false;
      }
    }
  }
  if (types_with_data > 0) {
    rep.mae_norm_macro /= types_with_data;
    rep.mae_raw_macro /= types_with_data;
  }
  if (types_with_corr > 0) {
    rep.srocc_macro /= types_with_corr;
    rep.pcc_macro /= types_with_corr;
  }
  return rep;
}

inline nlohmann::json report_to_json(const MetricsReport& rep) {
  nlohmann::json per;
  for (DegradationType t : kAllTypes) {
    const TypeMetrics& tm = rep.per_type[type_index(t)];
    per[type_name(t)] = {{"count", tm.count},         {"mae_raw", tm.mae_raw},
                         {"mae_norm", tm.mae_norm},   {"srocc", tm.srocc},
                         {"pcc", tm.pcc},             {"correlations_defined", tm.correlations_defined}};
  }
  return {{"type_acc_pct", rep.type_acc_pct},
          {"mae_raw_macro", rep.mae_raw_macro},
          {"mae_norm_macro", rep.mae_norm_macro},
          {"srocc_macro", rep.srocc_macro},
          {"pcc_macro", rep.pcc_macro},
          {"record_count", rep.record_count},
          {"per_type", per}};
}

inline std::string report_to_csv(const MetricsReport& rep) {
  std::string out = "scope,count,mae_raw,mae_norm,srocc,pcc,type_acc_pct\n";
  char line[256];
  std::snprintf(line, sizeof(line), "macro,%d,%.6f,%.6f,%.6f,%.6f,%.4f\n", rep.record_count, rep.mae_raw_macro,
                rep.mae_norm_macro, rep.srocc_macro, rep.pcc_macro, rep.type_acc_pct);
  out += line;
  for (DegradationType t : kAllTypes) {
    const TypeMetrics& tm = rep.per_type[type_index(t)];
    std::snprintf(line, sizeof(line), "%s,%d,%.6f,%.6f,%.6f,%.6f,\n", type_name(t), tm.count, tm.mae_raw,
                  tm.mae_norm, tm.srocc, tm.pcc);
    out += line;
  }
  return out;
}

struct RoundTripResult {
  Image resynth;
  DegradationRecipe recipe;
  bool any_detected = false;
  double spectral_distance = 0.0;
};

inline double spectral_distance(const Image& a, const Image& b) {
  const auto sa = radial_log_spectrum(a);
  const auto sb = radial_log_spectrum(b);
  double s = 0.0;
  for (int i = 0; i < kSpectralBins; ++i) {
    const double d = sa[i] - sb[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Predicts a recipe from the LQ image, re-applies it to the clean pair,
// and scores how close the re-synthesis lands in spectrum space.
inline RoundTripResult roundtrip(const Checkpoint& ckpt, const Image& lq, const Image& clean,
                                 const RegressionConfig& cfg, std::uint64_t resynth_seed = 1) {
  const LevelPrediction pred = predict(ckpt, lq, cfg);
  RoundTripResult rt;
  rt.recipe.seed = resynth_seed;
  for (DegradationType t : kAllTypes) {
    const TypePrediction& tp = pred.per_type[type_index(t)];
    if (tp.present) {
      rt.recipe.levels[type_index(t)] = tp.level_raw;
      rt.any_detected = true;
    }
  }
  rt.resynth = rt.any_detected ? synthesize(clean, rt.recipe) : clean;
  rt.spectral_distance = spectral_distance(lq, rt.resynth);
  return rt;
}

}  // namespace ordeg
