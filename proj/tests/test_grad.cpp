#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ordeg/losses.hpp"
#include "ordeg/rng.hpp"
#include "ordeg/train.hpp"

using namespace ordeg;

namespace {

struct Instance {
  TrainConfig cfg;
  Trainables tr;
  std::array<RealVector, 4> anchors;
  std::vector<TrainSample> batch;
  DegradationType batch_type;
};

Instance make_instance(std::uint64_t seed, bool use_level, bool use_scl, int top_k, double gap, int M) {
  Instance inst;
  Rng rng(seed);

  inst.cfg.spec = OrdinalEncoderSpec{8, 50.0};
  inst.cfg.arch = EncoderArch{4, 6, 8};
  inst.cfg.use_level = use_level;
  inst.cfg.use_scl = use_scl;
  inst.cfg.top_k = top_k;
  inst.cfg.gap = gap;
  inst.cfg.tau_scl = 0.4;
  inst.cfg.tau_w = 0.15;

  inst.tr.enc = init_params(seed, inst.cfg.arch);
  inst.anchors = make_type_anchors(inst.cfg.spec, seed);
  inst.tr.shifts = ShiftTable::zeros(inst.cfg.spec.d, num_bins(gap));
  for (auto& per_type : inst.tr.shifts.shifts) {
    for (auto& s : per_type) {
      for (double& v : s) v = 0.05 * rng.next_gaussian();
    }
  }

  inst.batch_type = kAllTypes[rng.next_below(4)];
  for (int i = 0; i < M; ++i) {
    TrainSample s;
    s.feat.resize(4);
    for (double& v : s.feat) v = rng.next_gaussian();
    s.active[type_index(inst.batch_type)] = true;
    for (int t = 0; t < 4; ++t) {
      if (t != type_index(inst.batch_type) && rng.next_unit() < 0.4) s.active[t] = true;
      s.conf_gt[t] = s.active[t] ? 1.0 : 0.0;
      if (s.active[t]) s.level_norm[t] = 0.05 + 0.9 * rng.next_unit();
    }
    inst.batch.push_back(std::move(s));
  }
  return inst;
}

std::array<BinGrid, 4> grids_of(const Instance& inst) {
  std::array<BinGrid, 4> grids;
  for (DegradationType t : kAllTypes) {
    const int ti = type_index(t);
    grids[ti] = build_bin_grid(t, inst.cfg.spec, inst.anchors[ti], inst.tr.shifts.shifts[ti], inst.cfg.gap);
  }
  return grids;
}

double eval_total(Instance& inst) {
  GradBuffers scratch;
  scratch.params = ParamGrads::zeros_like(inst.tr.enc);
  scratch.shifts = ShiftGrads::zeros_like(inst.tr.shifts);
  return batch_loss_and_grad(inst.tr, grids_of(inst), inst.batch, inst.batch_type, inst.cfg, scratch).total;
}

// Central finite differences vs analytic gradients over every trainable.
double max_rel_error(Instance& inst, double h) {
  GradBuffers gb;
  gb.params = ParamGrads::zeros_like(inst.tr.enc);
  gb.shifts = ShiftGrads::zeros_like(inst.tr.shifts);
  batch_loss_and_grad(inst.tr, grids_of(inst), inst.batch, inst.batch_type, inst.cfg, gb);

  const std::vector<TensorRef> tensors = collect_tensors(inst.tr, gb);
  double worst = 0.0;
  for (const TensorRef& ref : tensors) {
    for (std::size_t j = 0; j < ref.value->size(); ++j) {
      const double keep = (*ref.value)[j];
      (*ref.value)[j] = keep + h;
      const double up = eval_total(inst);
      (*ref.value)[j] = keep - h;
      const double down = eval_total(inst);
      (*ref.value)[j] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double an = (*ref.grad)[j];
      const double rel = std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-4});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  int id = 0;
  for (const auto& [use_level, use_scl] :
       std::vector<std::pair<bool, bool>>{{true, true}, {true, false}, {false, true}}) {
    for (int top_k : {1, 2}) {
      Instance inst = make_instance(100 + id, use_level, use_scl, top_k, 25.0, 3);
      CHECK(max_rel_error(inst, 1e-5) < 1e-4);
      ++id;
    }
  }
}

TEST_CASE("loss components add up exactly") {
  Instance inst = make_instance(7, true, true, 2, 20.0, 4);
  GradBuffers gb;
  gb.params = ParamGrads::zeros_like(inst.tr.enc);
  gb.shifts = ShiftGrads::zeros_like(inst.tr.shifts);
  const LossBreakdown loss = batch_loss_and_grad(inst.tr, grids_of(inst), inst.batch, inst.batch_type,
                                                 inst.cfg, gb);
  CHECK(loss.total == loss.conf + loss.level + loss.scl);
  CHECK(loss.conf >= 0.0);
  CHECK(loss.level >= 0.0);
  CHECK(loss.scl >= 0.0);

  inst.cfg.use_level = false;
  inst.cfg.use_scl = false;
  const LossBreakdown conf_only = batch_loss_and_grad(inst.tr, grids_of(inst), inst.batch, inst.batch_type,
                                                      inst.cfg, gb);
  CHECK(conf_only.total == conf_only.conf);
  CHECK(conf_only.level == 0.0);
  CHECK(conf_only.scl == 0.0);
  CHECK(conf_only.conf == Catch::Approx(loss.conf));
}

TEST_CASE("trainer losses agree with the standalone loss functions") {
  Instance inst = make_instance(21, true, true, 2, 25.0, 3);
  const auto grids = grids_of(inst);
  GradBuffers gb;
  gb.params = ParamGrads::zeros_like(inst.tr.enc);
  gb.shifts = ShiftGrads::zeros_like(inst.tr.shifts);
  const LossBreakdown got = batch_loss_and_grad(inst.tr, grids, inst.batch, inst.batch_type, inst.cfg, gb);

  double conf = 0.0, level = 0.0;
  SclBatch scl;
  scl.tau = inst.cfg.tau_scl;
  for (const TrainSample& s : inst.batch) {
    const EncoderOutput out = forward(inst.tr.enc, s.feat);
    conf += conf_loss_sample(out.conf, s.conf_gt);
    for (int a = 0; a < 4; ++a) {
      if (!s.active[a]) continue;
      const LevelRegression reg = regress_level(out.emb[a], grids[a], inst.cfg.top_k, inst.cfg.tau_w);
      level += std::fabs(reg.level_norm - s.level_norm[a]);
    }
    const int bt = type_index(inst.batch_type);
    scl.items.push_back({out.emb[bt],
                         slerp_target(grids[bt], denormalize_level(inst.batch_type, s.level_norm[bt])),
                         s.level_norm[bt]});
  }
  conf /= inst.batch.size();
  level /= inst.batch.size();
  CHECK(got.conf == Catch::Approx(conf).epsilon(1e-12));
  CHECK(got.level == Catch::Approx(level).epsilon(1e-12));
  CHECK(got.scl == Catch::Approx(loss_scl(scl)).epsilon(1e-10));
}

TEST_CASE("duplicating the batch leaves per-sample-loss gradients unchanged") {
  // The contrastive term couples samples through its negatives, so this
  // holds for the decomposable losses (conf + level).
  Instance inst = make_instance(33, true, false, 2, 25.0, 3);
  GradBuffers g1;
  g1.params = ParamGrads::zeros_like(inst.tr.enc);
  g1.shifts = ShiftGrads::zeros_like(inst.tr.shifts);
  batch_loss_and_grad(inst.tr, grids_of(inst), inst.batch, inst.batch_type, inst.cfg, g1);

  Instance dup = inst;
  dup.batch.insert(dup.batch.end(), inst.batch.begin(), inst.batch.end());
  GradBuffers g2;
  g2.params = ParamGrads::zeros_like(dup.tr.enc);
  g2.shifts = ShiftGrads::zeros_like(dup.tr.shifts);
  batch_loss_and_grad(dup.tr, grids_of(dup), dup.batch, dup.batch_type, dup.cfg, g2);

  for (std::size_t i = 0; i < g1.params.l1.w.a.size(); ++i) {
    CHECK(std::fabs(g1.params.l1.w.a[i] - g2.params.l1.w.a[i]) < 1e-12);
  }
  for (int t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < g1.params.heads[t].w.a.size(); ++i) {
      CHECK(std::fabs(g1.params.heads[t].w.a[i] - g2.params.heads[t].w.a[i]) < 1e-12);
    }
  }
}

TEST_CASE("single-item scl contributes zero gradient") {
  Instance inst = make_instance(55, false, true, 1, 50.0, 1);
  GradBuffers gb;
  gb.params = ParamGrads::zeros_like(inst.tr.enc);
  gb.shifts = ShiftGrads::zeros_like(inst.tr.shifts);
  const LossBreakdown loss = batch_loss_and_grad(inst.tr, grids_of(inst), inst.batch, inst.batch_type,
                                                 inst.cfg, gb);
  CHECK(loss.scl == Catch::Approx(0.0).margin(1e-15));
  for (const auto& per_type : gb.shifts.g) {
    for (const RealVector& s : per_type) {
      for (double v : s) CHECK(std::fabs(v) < 1e-15);
    }
  }
}

TEST_CASE("adamw single step from zero moments follows the sign direction") {
  Trainables tr;
  tr.enc = init_params(1, EncoderArch{2, 2, 8});
  tr.shifts = ShiftTable::zeros(8, 2);
  GradBuffers gb;
  gb.params = ParamGrads::zeros_like(tr.enc);
  gb.shifts = ShiftGrads::zeros_like(tr.shifts);
  const std::vector<TensorRef> tensors = collect_tensors(tr, gb);

  // zero gradient, zero decay: parameters unchanged
  std::vector<double> before = *tensors[0].value;
  AdamW opt_nodecay(0.01, 0.0);
  opt_nodecay.step(tensors);
  CHECK(*tensors[0].value == before);

  // one step: update = -lr * g / (|g| + eps) elementwise
  before = *tensors[0].value;
  for (std::size_t j = 0; j < tensors[0].grad->size(); ++j) {
    (*tensors[0].grad)[j] = (j % 2 == 0 ? 1.0 : -1.0) * (0.5 + j);
  }
  AdamW opt(0.01, 0.0);
  opt.step(tensors);
  for (std::size_t j = 0; j < before.size(); ++j) {
    const double g = (*tensors[0].grad)[j];
    const double expect = before[j] - 0.01 * g / (std::fabs(g) + 1e-8);
    CHECK((*tensors[0].value)[j] == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("adamw steps are deterministic") {
  auto run = [] {
    Trainables tr;
    tr.enc = init_params(2, EncoderArch{2, 2, 8});
    tr.shifts = ShiftTable::zeros(8, 2);
    GradBuffers gb;
    gb.params = ParamGrads::zeros_like(tr.enc);
    gb.shifts = ShiftGrads::zeros_like(tr.shifts);
    const auto tensors = collect_tensors(tr, gb);
    Rng rng(5);
    for (const TensorRef& ref : tensors) {
      for (double& g : *ref.grad) g = rng.next_gaussian();
    }
    AdamW opt(2e-4, 0.01);
    for (int i = 0; i < 3; ++i) opt.step(tensors);
    return tr.enc.l1.w.a;
  };
  CHECK(run() == run());
}
