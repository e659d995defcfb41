#pragma once

// The epoch loop: per-type batches drawn from records where that type is
// active, one optimizer step per batch, grids rebuilt after every step
// because the shifts moved. Fully reproducible from the config seed.

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ordeg/checkpoint.hpp"
#include "ordeg/dataset.hpp"
#include "ordeg/features.hpp"
#include "ordeg/train.hpp"

namespace ordeg {

struct EpochLog {
  int epoch = 0;
  LossBreakdown mean;  // averaged over the epoch's steps
};

inline void save_loss_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_failure_error("cannot write loss log: " + path);
  f << "epoch,conf,level,scl,total\n";
  char line[160];
  for (const EpochLog& e : log) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g,%.10g\n", e.epoch, e.mean.conf, e.mean.level,
                  e.mean.scl, e.mean.total);
    f << line;
  }
}

inline TrainSample sample_from_record(const ManifestRecord& rec, const DatasetManifest& manifest) {
  TrainSample s;
  const Image lq = load_png(resolve_path(manifest, rec.lq_path));
  const FeatureVector fv = extract_features(lq);
  s.feat.assign(fv.begin(), fv.end());
  for (DegradationType t : kAllTypes) {
    const int ti = type_index(t);
    s.active[ti] = rec.recipe.has(t);
    s.conf_gt[ti] = s.active[ti] ? 1.0 : 0.0;
    if (s.active[ti]) s.level_norm[ti] = normalize_level(t, rec.recipe.level(t));
  }
  return s;
}

// Trains encoder and shifts on the manifest. Appends one entry per epoch
// to `log` when given.
inline Checkpoint train(const TrainConfig& cfg, const DatasetManifest& manifest,
                        std::vector<EpochLog>* log = nullptr) {
  cfg.validate();
  if (manifest.records.empty()) throw empty_dataset_error();

  std::vector<TrainSample> samples;
  samples.reserve(manifest.records.size());
  for (const ManifestRecord& rec : manifest.records) {
    samples.push_back(sample_from_record(rec, manifest));
  }

  std::array<std::vector<int>, 4> actives;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (int t = 0; t < 4; ++t) {
      if (samples[i].active[t]) actives[t].push_back(static_cast<int>(i));
    }
  }

  Trainables tr;
  tr.enc = init_params(cfg.seed, cfg.arch);
  const std::array<RealVector, 4> anchors = make_type_anchors(cfg.spec, cfg.seed);
  tr.shifts = ShiftTable::zeros(cfg.spec.d, num_bins(cfg.gap));

  GradBuffers gb;
  gb.params = ParamGrads::zeros_like(tr.enc);
  gb.shifts = ShiftGrads::zeros_like(tr.shifts);
  const std::vector<TensorRef> tensors = collect_tensors(tr, gb);

  AdamW opt(cfg.lr, cfg.weight_decay);

  auto build_all = [&] {
    std::array<BinGrid, 4> grids;
    for (DegradationType t : kAllTypes) {
      const int ti = type_index(t);
      grids[ti] = build_bin_grid(t, cfg.spec, anchors[ti], tr.shifts.shifts[ti], cfg.gap);
    }
    return grids;
  };
  std::array<BinGrid, 4> grids = build_all();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossBreakdown epoch_sum;
    int steps = 0;
    for (DegradationType t : kAllTypes) {
      const int ti = type_index(t);
      std::vector<int> order = actives[ti];
      if (order.empty()) continue;
      Rng rng = Rng::keyed(cfg.seed, 0x73687566ULL + 1000003ULL * epoch + 17ULL * ti);
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.next_below(i)]);
      }
      for (std::size_t off = 0; off < order.size(); off += cfg.batch_per_type) {
        const std::size_t end = std::min(order.size(), off + cfg.batch_per_type);
        std::vector<TrainSample> batch;
        batch.reserve(end - off);
        for (std::size_t i = off; i < end; ++i) batch.push_back(samples[order[i]]);

        for (const TensorRef& ref : tensors) std::fill(ref.grad->begin(), ref.grad->end(), 0.0);
        LossBreakdown loss;
        try {
          loss = batch_loss_and_grad(tr, grids, batch, t, cfg, gb);
        } catch (const non_finite_loss_error&) {
          throw non_finite_loss_error("non-finite loss at epoch " + std::to_string(epoch) + " type " +
                                      type_name(t) + " batch " + std::to_string(off / cfg.batch_per_type));
        }
        opt.step(tensors);
        grids = build_all();

        epoch_sum.conf += loss.conf;
        epoch_sum.level += loss.level;
        epoch_sum.scl += loss.scl;
        epoch_sum.total += loss.total;
        ++steps;
      }
    }
    if (log) {
      EpochLog e;
      e.epoch = epoch;
      if (steps > 0) {
        e.mean.conf = epoch_sum.conf / steps;
        e.mean.level = epoch_sum.level / steps;
        e.mean.scl = epoch_sum.scl / steps;
        e.mean.total = epoch_sum.total / steps;
      }
      log->push_back(e);
    }
  }

  Checkpoint ckpt;
  ckpt.seed = cfg.seed;
  ckpt.spec = cfg.spec;
  ckpt.gap = cfg.gap;
  ckpt.params = tr.enc;
  ckpt.anchors = anchors;
  ckpt.shifts = tr.shifts;
  return ckpt;
}

}  // namespace ordeg
