#pragma once

// Checkpoint carrying everything inference needs: encoder weights, the
// frozen anchors, the learned shift tables and the ordinal-space
// hyperparameters. Stored as JSON with flattened weight arrays.

#include <json.hpp>

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ordeg/encoder.hpp"
#include "ordeg/errors.hpp"
#include "ordeg/ordspace.hpp"

namespace ordeg {

struct Checkpoint {
  int format_version = 1;
  std::uint64_t seed = 0;
  OrdinalEncoderSpec spec;
  double gap = 5.0;
  EncoderParams params;
  std::array<RealVector, 4> anchors;
  ShiftTable shifts;

  std::array<BinGrid, 4> build_grids() const {
    std::array<BinGrid, 4> grids;
    for (DegradationType t : kAllTypes) {
      const int ti = type_index(t);
      grids[ti] = build_bin_grid(t, spec, anchors[ti], shifts.shifts[ti], gap);
    }
    return grids;
  }
};

namespace ckptdetail {

inline nlohmann::json layer_to_json(const LinearLayer& l) {
  return {{"rows", l.w.rows}, {"cols", l.w.cols}, {"w", l.w.a}, {"b", l.b}};
}

inline LinearLayer layer_from_json(const nlohmann::json& j) {
  LinearLayer l(j.at("rows").get<int>(), j.at("cols").get<int>());
  const auto w = j.at("w").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (w.size() != l.w.a.size() || b.size() != l.b.size()) {
    throw invalid_checkpoint_error("layer size mismatch");
  }
  l.w.a = w;
  l.b = b;
  return l;
}

}  // namespace ckptdetail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = ckpt.format_version;
  j["seed"] = ckpt.seed;
  j["spec"] = {{"d", ckpt.spec.d}, {"f", ckpt.spec.f}};
  j["gap"] = ckpt.gap;
  j["arch"] = {{"feat_dim", ckpt.params.arch.feat_dim},
               {"hidden", ckpt.params.arch.hidden},
               {"emb_dim", ckpt.params.arch.emb_dim}};
  j["layers"] = {{"l1", ckptdetail::layer_to_json(ckpt.params.l1)},
                 {"l2", ckptdetail::layer_to_json(ckpt.params.l2)},
                 {"l3", ckptdetail::layer_to_json(ckpt.params.l3)}};
  for (DegradationType t : kAllTypes) {
    j["layers"][std::string("head_") + type_name(t)] = ckptdetail::layer_to_json(ckpt.params.heads[type_index(t)]);
    j["anchors"][type_name(t)] = ckpt.anchors[type_index(t)];
    j["shifts"][type_name(t)] = ckpt.shifts.shifts[type_index(t)];
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_failure_error("cannot write checkpoint: " + path);
  f << j.dump();
  if (!f) throw io_failure_error("short checkpoint write: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_failure_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception&) {
    throw invalid_checkpoint_error("checkpoint is not valid json");
  }
  Checkpoint ckpt;
  try {
    ckpt.format_version = j.at("format_version").get<int>();
    if (ckpt.format_version != 1) throw invalid_checkpoint_error("unsupported checkpoint version");
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.spec.d = j.at("spec").at("d").get<int>();
    ckpt.spec.f = j.at("spec").at("f").get<double>();
    ckpt.gap = j.at("gap").get<double>();
    ckpt.params.arch.feat_dim = j.at("arch").at("feat_dim").get<int>();
    ckpt.params.arch.hidden = j.at("arch").at("hidden").get<int>();
    ckpt.params.arch.emb_dim = j.at("arch").at("emb_dim").get<int>();
    ckpt.params.l1 = ckptdetail::layer_from_json(j.at("layers").at("l1"));
    ckpt.params.l2 = ckptdetail::layer_from_json(j.at("layers").at("l2"));
    ckpt.params.l3 = ckptdetail::layer_from_json(j.at("layers").at("l3"));
    for (DegradationType t : kAllTypes) {
      const int ti = type_index(t);
      ckpt.params.heads[ti] = ckptdetail::layer_from_json(j.at("layers").at(std::string("head_") + type_name(t)));
      ckpt.anchors[ti] = j.at("anchors").at(type_name(t)).get<RealVector>();
      ckpt.shifts.shifts[ti] = j.at("shifts").at(type_name(t)).get<std::vector<RealVector>>();
    }
  } catch (const nlohmann::json::exception&) {
    throw invalid_checkpoint_error("checkpoint missing required fields");
  }

  // structural validation: shapes consistent, expected parameter count
  ckpt.spec.validate();
  const EncoderArch& a = ckpt.params.arch;
  a.validate();
  if (ckpt.params.l1.w.rows != a.hidden || ckpt.params.l1.w.cols != a.feat_dim ||
      ckpt.params.l2.w.rows != a.hidden || ckpt.params.l2.w.cols != a.hidden ||
      ckpt.params.l3.w.rows != a.emb_dim || ckpt.params.l3.w.cols != a.hidden) {
    throw invalid_checkpoint_error("trunk shape mismatch");
  }
  for (int t = 0; t < 4; ++t) {
    if (ckpt.params.heads[t].w.rows != a.emb_dim + 1 || ckpt.params.heads[t].w.cols != a.emb_dim) {
      throw invalid_checkpoint_error("head shape mismatch");
    }
    if (static_cast<int>(ckpt.anchors[t].size()) != ckpt.spec.d) {
      throw invalid_checkpoint_error("anchor dim mismatch");
    }
    if (static_cast<int>(ckpt.shifts.shifts[t].size()) != num_bins(ckpt.gap)) {
      throw invalid_checkpoint_error("shift table bin count mismatch");
    }
    for (const RealVector& s : ckpt.shifts.shifts[t]) {
      if (static_cast<int>(s.size()) != ckpt.spec.d) throw invalid_checkpoint_error("shift dim mismatch");
    }
  }
  if (ckpt.params.param_count() != a.param_count()) {
    throw invalid_checkpoint_error("parameter count mismatch");
  }
  for (const LinearLayer* l :
       {&ckpt.params.l1, &ckpt.params.l2, &ckpt.params.l3, &ckpt.params.heads[0], &ckpt.params.heads[1],
        &ckpt.params.heads[2], &ckpt.params.heads[3]}) {
    for (double v : l->w.a) {
      if (!std::isfinite(v)) throw invalid_checkpoint_error("non-finite weight");
    }
    for (double v : l->b) {
      if (!std::isfinite(v)) throw invalid_checkpoint_error("non-finite bias");
    }
  }
  return ckpt;
}

}  // namespace ordeg
