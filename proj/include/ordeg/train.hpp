#pragma once

// Joint training of the encoder and the per-bin shift embeddings with the
// three-part objective. Gradients are exact reverse accumulation, written
// out by hand for the fixed computation graph:
//
//   features -> trunk -> heads -> { conf loss,
//                                   top-k interpolation -> level loss,
//                                   cosine vs slerp targets -> scl loss }
//
// and, through the targets and bin centers, into the shift tables.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ordeg/degrade.hpp"
#include "ordeg/encoder.hpp"
#include "ordeg/errors.hpp"
#include "ordeg/linalg.hpp"
#include "ordeg/losses.hpp"
#include "ordeg/ordspace.hpp"
#include "ordeg/rng.hpp"
#include "ordeg/vecmath.hpp"

namespace ordeg {

struct TrainConfig {
  double lr = 2e-4;
  int epochs = 200;
  int batch_per_type = 64;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  bool use_level = true;  // toggles reproduce the four loss configurations
  bool use_scl = true;
  int top_k = 2;
  double gap = 5.0;
  double tau_scl = 0.07;  // contrastive temperature
  double tau_w = 0.05;    // interpolation weight temperature
  OrdinalEncoderSpec spec{512, 10000.0};
  EncoderArch arch{};

  void validate() const {
    if (!(lr > 0.0)) throw out_of_range_error("lr must be > 0");
    if (epochs < 0 || batch_per_type < 1) throw out_of_range_error("bad epoch/batch config");
    if (top_k < 1) throw out_of_range_error("top_k must be >= 1");
    if (!(tau_scl > 0.0) || !(tau_w > 0.0)) throw non_positive_temperature_error();
    spec.validate();
    arch.validate();
  }

  // Loss ablations: A = neither extra loss, B = level only, C = scl only,
  // D = both.
  void apply_ablation(char which) {
    switch (which) {
      case 'A': use_level = false; use_scl = false; break;
      case 'B': use_level = true; use_scl = false; break;
      case 'C': use_level = false; use_scl = true; break;
      case 'D': use_level = true; use_scl = true; break;
      default: throw out_of_range_error("ablation must be A, B, C or D");
    }
  }
};

struct TrainSample {
  RealVector feat;
  std::array<double, 4> conf_gt{};
  std::array<bool, 4> active{};
  std::array<double, 4> level_norm{};  // meaningful where active
};

struct Trainables {
  EncoderParams enc;
  ShiftTable shifts;
};

struct ShiftGrads {
  std::array<std::vector<RealVector>, 4> g;

  static ShiftGrads zeros_like(const ShiftTable& t) {
    ShiftGrads out;
    for (int i = 0; i < 4; ++i) {
      out.g[i].assign(t.shifts[i].size(), RealVector(t.shifts[i].empty() ? 0 : t.shifts[i][0].size(), 0.0));
    }
    return out;
  }
};

struct ParamGrads {
  LinearLayer l1, l2, l3;
  std::array<LinearLayer, 4> heads;

  static ParamGrads zeros_like(const EncoderParams& p) {
    ParamGrads g;
    g.l1 = LinearLayer(p.l1.w.rows, p.l1.w.cols);
    g.l2 = LinearLayer(p.l2.w.rows, p.l2.w.cols);
    g.l3 = LinearLayer(p.l3.w.rows, p.l3.w.cols);
    for (int t = 0; t < 4; ++t) g.heads[t] = LinearLayer(p.heads[t].w.rows, p.heads[t].w.cols);
    return g;
  }
};

struct GradBuffers {
  ParamGrads params;
  ShiftGrads shifts;
};

// Flat view over every trainable tensor; the order here fixes the
// optimizer state layout.
struct TensorRef {
  std::vector<double>* value;
  std::vector<double>* grad;
  const char* name;
};

inline std::vector<TensorRef> collect_tensors(Trainables& tr, GradBuffers& gb) {
  std::vector<TensorRef> out;
  out.push_back({&tr.enc.l1.w.a, &gb.params.l1.w.a, "l1.w"});
  out.push_back({&tr.enc.l1.b, &gb.params.l1.b, "l1.b"});
  out.push_back({&tr.enc.l2.w.a, &gb.params.l2.w.a, "l2.w"});
  out.push_back({&tr.enc.l2.b, &gb.params.l2.b, "l2.b"});
  out.push_back({&tr.enc.l3.w.a, &gb.params.l3.w.a, "l3.w"});
  out.push_back({&tr.enc.l3.b, &gb.params.l3.b, "l3.b"});
  static const char* head_names[4] = {"head0.w", "head1.w", "head2.w", "head3.w"};
  static const char* head_bias_names[4] = {"head0.b", "head1.b", "head2.b", "head3.b"};
  for (int t = 0; t < 4; ++t) {
    out.push_back({&tr.enc.heads[t].w.a, &gb.params.heads[t].w.a, head_names[t]});
    out.push_back({&tr.enc.heads[t].b, &gb.params.heads[t].b, head_bias_names[t]});
  }
  for (int t = 0; t < 4; ++t) {
    for (std::size_t b = 0; b < tr.shifts.shifts[t].size(); ++b) {
      out.push_back({&tr.shifts.shifts[t][b], &gb.shifts.g[t][b], "shift"});
    }
  }
  return out;
}

namespace traindetail {

// d cos(a, b) / d a accumulated into ga with weight g.
inline void add_cos_grad(const RealVector& a, const RealVector& b, double na, double nb, double cosv,
                         double g, RealVector& ga) {
  const double inv = 1.0 / (na * nb);
  const double sa = cosv / (na * na);
  for (std::size_t i = 0; i < a.size(); ++i) ga[i] += g * (b[i] * inv - sa * a[i]);
}

// Forward tape for one slerp target so the backward pass can reuse the
// intermediate quantities.
struct SlerpTape {
  int lo = 0, hi = 0;
  double t = 0.0;
  bool exact = false;     // single-bin case: plain normalization
  bool fallback = false;  // near-parallel endpoints
  RealVector pu, qu, out;
  double np = 0.0, nq = 0.0, u = 0.0, theta = 0.0;
};

inline SlerpTape slerp_target_forward(const BinGrid& grid, double level_norm) {
  SlerpTape tape;
  bracket_bins(grid, level_norm, tape.lo, tape.hi, tape.t);
  const RealVector& p = grid.bins[tape.lo].center;
  tape.np = norm(p);
  if (tape.np == 0.0) throw zero_norm_error("degenerate bin center");
  tape.pu.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) tape.pu[i] = p[i] / tape.np;
  if (tape.lo == tape.hi) {
    tape.exact = true;
    tape.out = tape.pu;
    return tape;
  }
  const RealVector& q = grid.bins[tape.hi].center;
  tape.nq = norm(q);
  if (tape.nq == 0.0) throw zero_norm_error("degenerate bin center");
  tape.qu.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) tape.qu[i] = q[i] / tape.nq;
  tape.u = std::clamp(dot(tape.pu, tape.qu), -1.0, 1.0);
  if (tape.u <= -1.0 + kAntipodalEps) throw antipodal_inputs_error();
  tape.theta = std::acos(tape.u);
  tape.out.resize(p.size());
  if (tape.theta < kSlerpFallbackAngle) {
    tape.fallback = true;
    for (std::size_t i = 0; i < p.size(); ++i) tape.out[i] = (1.0 - tape.t) * tape.pu[i] + tape.t * tape.qu[i];
    const double nv = norm(tape.out);
    for (double& v : tape.out) v /= nv;
    return tape;
  }
  const double s = std::sin(tape.theta);
  const double wp = std::sin((1.0 - tape.t) * tape.theta) / s;
  const double wq = std::sin(tape.t * tape.theta) / s;
  for (std::size_t i = 0; i < p.size(); ++i) tape.out[i] = wp * tape.pu[i] + wq * tape.qu[i];
  return tape;
}

// Backward through the unit-normalization x -> x/|x|: given the gradient
// at the unit vector xu, returns the gradient at x.
inline void normalize_backward(const RealVector& xu, double nx, const RealVector& gu, RealVector& gx) {
  const double proj = dot(gu, xu);
  gx.resize(xu.size());
  for (std::size_t i = 0; i < xu.size(); ++i) gx[i] = (gu[i] - proj * xu[i]) / nx;
}

// Distributes d loss / d target into the two bracketing shift vectors.
inline void slerp_target_backward(const SlerpTape& tape, const RealVector& gout, DegradationType type,
                                  ShiftGrads& sg) {
  const int ti = type_index(type);
  RealVector gp;
  if (tape.exact) {
    normalize_backward(tape.pu, tape.np, gout, gp);
    for (std::size_t i = 0; i < gp.size(); ++i) sg.g[ti][tape.lo][i] += gp[i];
    return;
  }
  RealVector gpu(tape.pu.size(), 0.0), gqu(tape.qu.size(), 0.0);
  if (tape.fallback) {
    // out = v / |v| with v = (1-t) pu + t qu; |v| recoverable from out
    // only via the tape, so recompute it.
    RealVector v(tape.pu.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - tape.t) * tape.pu[i] + tape.t * tape.qu[i];
    const double nv = norm(v);
    RealVector gv;
    normalize_backward(tape.out, nv, gout, gv);
    for (std::size_t i = 0; i < v.size(); ++i) {
      gpu[i] = (1.0 - tape.t) * gv[i];
      gqu[i] = tape.t * gv[i];
    }
  } else {
    const double s = std::sin(tape.theta);
    const double ct = std::cos(tape.theta);
    const double sp = std::sin((1.0 - tape.t) * tape.theta);
    const double sq = std::sin(tape.t * tape.theta);
    const double wp = sp / s;
    const double wq = sq / s;
    double dwp = 0.0, dwq = 0.0;
    for (std::size_t i = 0; i < gout.size(); ++i) {
      dwp += gout[i] * tape.pu[i];
      dwq += gout[i] * tape.qu[i];
      gpu[i] += wp * gout[i];
      gqu[i] += wq * gout[i];
    }
    const double dwp_dtheta = ((1.0 - tape.t) * std::cos((1.0 - tape.t) * tape.theta) * s - sp * ct) / (s * s);
    const double dwq_dtheta = (tape.t * std::cos(tape.t * tape.theta) * s - sq * ct) / (s * s);
    const double dtheta = dwp * dwp_dtheta + dwq * dwq_dtheta;
    const double du = -dtheta / std::sqrt(std::max(1.0 - tape.u * tape.u, 1e-300));
    for (std::size_t i = 0; i < gpu.size(); ++i) {
      gpu[i] += du * tape.qu[i];
      gqu[i] += du * tape.pu[i];
    }
  }
  RealVector gq;
  normalize_backward(tape.pu, tape.np, gpu, gp);
  normalize_backward(tape.qu, tape.nq, gqu, gq);
  for (std::size_t i = 0; i < gp.size(); ++i) {
    sg.g[ti][tape.lo][i] += gp[i];
    sg.g[ti][tape.hi][i] += gq[i];
  }
}

inline void affine_batch(const LinearLayer& l, const Mat& x, Mat& out) {
  matmul_nt(x, l.w, out);
  for (int m = 0; m < out.rows; ++m) {
    double* r = out.row(m);
    for (int c = 0; c < out.cols; ++c) r[c] += l.b[c];
  }
}

inline void colsum_acc(const Mat& m, std::vector<double>& out) {
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    for (int c = 0; c < m.cols; ++c) out[c] += row[c];
  }
}

}  // namespace traindetail

// Level regression forward shared with inference: similarity against all
// bin centers, softmax over the top-k, weighted sum of bin severities.
struct LevelRegression {
  std::vector<int> top;       // selected bin indices, best first
  std::vector<double> sims;   // similarities of the selected bins
  std::vector<double> weights;
  double level_norm = 0.0;
};

inline LevelRegression regress_level(const RealVector& emb, const BinGrid& grid, int k, double tau_w) {
  const int nb = static_cast<int>(grid.bins.size());
  if (k < 1) throw out_of_range_error("top-k must be >= 1");
  k = std::min(k, nb);
  std::vector<double> sims(nb);
  for (int j = 0; j < nb; ++j) sims[j] = cosine_similarity(emb, grid.bins[j].center);
  std::vector<int> idx(nb);
  for (int j = 0; j < nb; ++j) idx[j] = j;
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](int a, int b) { return sims[a] > sims[b]; });
  LevelRegression out;
  out.top.assign(idx.begin(), idx.begin() + k);
  out.sims.resize(k);
  for (int m = 0; m < k; ++m) out.sims[m] = sims[out.top[m]];
  out.weights = softmax(out.sims, tau_w);
  for (int m = 0; m < k; ++m) out.level_norm += out.weights[m] * grid.bins[out.top[m]].level_norm;
  return out;
}

// One batch of a single degradation type: forward, loss, exact gradients.
// Gradients are accumulated into `gb` (caller zeroes them).
inline LossBreakdown batch_loss_and_grad(const Trainables& tr, const std::array<BinGrid, 4>& grids,
                                         const std::vector<TrainSample>& batch, DegradationType batch_type,
                                         const TrainConfig& cfg, GradBuffers& gb) {
  const int M = static_cast<int>(batch.size());
  if (M == 0) throw empty_input_error("empty batch");
  const EncoderParams& p = tr.enc;
  const int F = p.arch.feat_dim, D = p.arch.emb_dim;
  const double invM = 1.0 / M;

  Mat X(M, F);
  for (int i = 0; i < M; ++i) {
    if (static_cast<int>(batch[i].feat.size()) != F) throw shape_mismatch_error("feature size");
    std::copy(batch[i].feat.begin(), batch[i].feat.end(), X.row(i));
  }

  using traindetail::affine_batch;
  Mat P1, P2, E;
  affine_batch(p.l1, X, P1);
  Mat H1 = P1;
  for (double& v : H1.a) v = v > 0.0 ? v : 0.0;
  affine_batch(p.l2, H1, P2);
  Mat H2 = P2;
  for (double& v : H2.a) v = v > 0.0 ? v : 0.0;
  affine_batch(p.l3, H2, E);

  std::array<Mat, 4> U;
  for (int t = 0; t < 4; ++t) affine_batch(p.heads[t], E, U[t]);

  // per-sample embeddings and confidences
  std::array<Mat, 4> dU;
  for (int t = 0; t < 4; ++t) dU[t] = Mat(M, D + 1);

  LossBreakdown loss;

  // --- confidence loss ---
  for (int i = 0; i < M; ++i) {
    std::array<double, 4> conf{}, dlogit{};
    double n2 = 0.0;
    for (int t = 0; t < 4; ++t) {
      conf[t] = sigmoid(U[t].at(i, D));
      const double d = conf[t] - batch[i].conf_gt[t];
      n2 += d * d;
    }
    const double n = std::sqrt(n2);
    loss.conf += n * invM;
    if (n > 0.0) {
      for (int t = 0; t < 4; ++t) {
        const double d = conf[t] - batch[i].conf_gt[t];
        dlogit[t] = (d / n) * conf[t] * (1.0 - conf[t]) * invM;
        dU[t].at(i, D) += dlogit[t];
      }
    }
  }

  // --- level regression loss over each sample's active types ---
  std::array<std::vector<double>, 4> center_norms;
  for (int t = 0; t < 4; ++t) {
    center_norms[t].resize(grids[t].bins.size());
    for (std::size_t j = 0; j < grids[t].bins.size(); ++j) center_norms[t][j] = norm(grids[t].bins[j].center);
  }

  if (cfg.use_level) {
    RealVector z(D), gz(D);
    for (int i = 0; i < M; ++i) {
      for (int a = 0; a < 4; ++a) {
        if (!batch[i].active[a]) continue;
        const BinGrid& grid = grids[a];
        for (int j = 0; j < D; ++j) z[j] = U[a].at(i, j);
        const LevelRegression reg = regress_level(z, grid, cfg.top_k, cfg.tau_w);
        const double diff = reg.level_norm - batch[i].level_norm[a];
        loss.level += std::fabs(diff) * invM;
        const double gl = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) * invM;
        if (gl == 0.0) continue;
        std::fill(gz.begin(), gz.end(), 0.0);
        const double nz = norm(z);
        const int k = static_cast<int>(reg.top.size());
        for (int m = 0; m < k; ++m) {
          const int j = reg.top[m];
          // d level / d sim_m through the softmax weights
          const double gs = gl * (reg.weights[m] / cfg.tau_w) * (grid.bins[j].level_norm - reg.level_norm);
          if (gs == 0.0) continue;
          const double cosv = reg.sims[m];
          traindetail::add_cos_grad(z, grid.bins[j].center, nz, center_norms[a][j], cosv, gs, gz);
          // center = anchor + ordinal + shift, so the center gradient is
          // the shift gradient
          traindetail::add_cos_grad(grid.bins[j].center, z, center_norms[a][j], nz, cosv, gs,
                                    gb.shifts.g[a][j]);
        }
        for (int j = 0; j < D; ++j) dU[a].at(i, j) += gz[j];
      }
    }
  }

  // --- slerp contrastive loss on the batch type ---
  if (cfg.use_scl) {
    const int bt = type_index(batch_type);
    const BinGrid& grid = grids[bt];
    std::vector<traindetail::SlerpTape> tapes(M);
    std::vector<RealVector> W(M);
    std::vector<double> levels(M);
    for (int i = 0; i < M; ++i) {
      if (!batch[i].active[bt]) throw key_mismatch_error("batch sample lacks the batch type");
      levels[i] = batch[i].level_norm[bt];
      tapes[i] = traindetail::slerp_target_forward(grid, levels[i]);
      W[i] = tapes[i].out;
    }
    const auto lam = scl_lambda(levels);

    std::vector<RealVector> Z(M, RealVector(D));
    std::vector<double> zn(M);
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < D; ++j) Z[i][j] = U[bt].at(i, j);
      zn[i] = norm(Z[i]);
      if (zn[i] == 0.0) throw zero_norm_error("degenerate image embedding");
    }
    // cos matrix; target vectors are unit norm by construction
    Mat S(M, M);
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < M; ++j) S.at(i, j) = dot(Z[i], W[j]) / zn[i];
    }
    std::vector<double> den(M);
    for (int i = 0; i < M; ++i) {
      double d = std::exp(S.at(i, i) / cfg.tau_scl);
      for (int j = 0; j < M; ++j) {
        if (j != i && lam[i][j] != 0.0) d += lam[i][j] * std::exp(S.at(i, j) / cfg.tau_scl);
      }
      den[i] = d;
      loss.scl += -std::log(std::exp(S.at(i, i) / cfg.tau_scl) / d) * invM;
    }
    std::vector<RealVector> gW(M, RealVector(D, 0.0));
    RealVector gzi(D);
    for (int i = 0; i < M; ++i) {
      std::fill(gzi.begin(), gzi.end(), 0.0);
      for (int j = 0; j < M; ++j) {
        double gs;
        const double fij = std::exp(S.at(i, j) / cfg.tau_scl);
        if (j == i) {
          gs = (fij / den[i] - 1.0) / cfg.tau_scl * invM;
        } else {
          if (lam[i][j] == 0.0) continue;
          gs = (lam[i][j] * fij / den[i]) / cfg.tau_scl * invM;
        }
        if (gs == 0.0) continue;
        traindetail::add_cos_grad(Z[i], W[j], zn[i], 1.0, S.at(i, j), gs, gzi);
        traindetail::add_cos_grad(W[j], Z[i], 1.0, zn[i], S.at(i, j), gs, gW[j]);
      }
      for (int j = 0; j < D; ++j) dU[bt].at(i, j) += gzi[j];
    }
    for (int j = 0; j < M; ++j) {
      traindetail::slerp_target_backward(tapes[j], gW[j], batch_type, gb.shifts);
    }
  }

  loss.total = loss.conf + (cfg.use_level ? loss.level : 0.0) + (cfg.use_scl ? loss.scl : 0.0);
  if (!std::isfinite(loss.total)) throw non_finite_loss_error();

  // --- backward through heads and trunk ---
  Mat dE(M, D);
  for (int t = 0; t < 4; ++t) {
    Mat dE_t;
    matmul_nn(dU[t], p.heads[t].w, dE_t);
    for (std::size_t i = 0; i < dE.a.size(); ++i) dE.a[i] += dE_t.a[i];
    matmul_tn_acc(dU[t], E, gb.params.heads[t].w);
    traindetail::colsum_acc(dU[t], gb.params.heads[t].b);
  }

  Mat dH2;
  matmul_nn(dE, p.l3.w, dH2);
  for (std::size_t i = 0; i < dH2.a.size(); ++i) {
    if (P2.a[i] <= 0.0) dH2.a[i] = 0.0;
  }
  matmul_tn_acc(dE, H2, gb.params.l3.w);
  traindetail::colsum_acc(dE, gb.params.l3.b);

  Mat dH1;
  matmul_nn(dH2, p.l2.w, dH1);
  for (std::size_t i = 0; i < dH1.a.size(); ++i) {
    if (P1.a[i] <= 0.0) dH1.a[i] = 0.0;
  }
  matmul_tn_acc(dH2, H1, gb.params.l2.w);
  traindetail::colsum_acc(dH2, gb.params.l2.b);

  matmul_tn_acc(dH1, X, gb.params.l1.w);
  traindetail::colsum_acc(dH1, gb.params.l1.b);

  return loss;
}

// Decoupled-weight-decay adaptive optimizer over the tensor registry.
// State layout follows the registry order, which is fixed by
// collect_tensors.
class AdamW {
 public:
  AdamW(double lr, double weight_decay) : lr_(lr), weight_decay_(weight_decay) {}

  void step(const std::vector<TensorRef>& tensors) {
    if (m_.empty()) {
      m_.resize(tensors.size());
      v_.resize(tensors.size());
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        m_[i].assign(tensors[i].value->size(), 0.0);
        v_[i].assign(tensors[i].value->size(), 0.0);
      }
    }
    if (m_.size() != tensors.size()) throw shape_mismatch_error("optimizer state mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      std::vector<double>& theta = *tensors[i].value;
      const std::vector<double>& g = *tensors[i].grad;
      if (theta.size() != g.size() || theta.size() != m_[i].size()) {
        throw shape_mismatch_error("gradient shape mismatch");
      }
      for (std::size_t j = 0; j < theta.size(); ++j) {
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        theta[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * theta[j]);
      }
    }
  }

  std::int64_t steps_taken() const { return t_; }

 private:
  double lr_;
  double weight_decay_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace ordeg
