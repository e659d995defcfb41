#pragma once

// Toy degradation encoder: a fully connected trunk over the handcrafted
// features producing the shared image embedding, plus four per-type heads
// emitting a d-dim embedding and a presence confidence each.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ordeg/errors.hpp"
#include "ordeg/features.hpp"
#include "ordeg/linalg.hpp"
#include "ordeg/rng.hpp"
#include "ordeg/vecmath.hpp"

namespace ordeg {

struct EncoderArch {
  int feat_dim = kFeatureDim;
  int hidden = 256;
  int emb_dim = 512;

  void validate() const {
    if (feat_dim < 1 || hidden < 1 || emb_dim < 1) throw shape_mismatch_error("bad arch dims");
  }

  // trunk feat->hidden->hidden->emb, four heads emb->emb+1
  std::int64_t param_count() const {
    const std::int64_t trunk = static_cast<std::int64_t>(feat_dim) * hidden + hidden +
                               static_cast<std::int64_t>(hidden) * hidden + hidden +
                               static_cast<std::int64_t>(hidden) * emb_dim + emb_dim;
    const std::int64_t heads = 4LL * (static_cast<std::int64_t>(emb_dim) * (emb_dim + 1) + emb_dim + 1);
    return trunk + heads;
  }
};

struct LinearLayer {
  Mat w;                  // out x in
  std::vector<double> b;  // out

  LinearLayer() = default;
  LinearLayer(int out, int in) : w(out, in), b(out, 0.0) {}
};

struct EncoderParams {
  EncoderArch arch;
  LinearLayer l1, l2, l3;
  std::array<LinearLayer, 4> heads;

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const LinearLayer* l : {&l1, &l2, &l3, &heads[0], &heads[1], &heads[2], &heads[3]}) {
      n += static_cast<std::int64_t>(l->w.a.size()) + static_cast<std::int64_t>(l->b.size());
    }
    return n;
  }
};

// Fan-in scaled uniform weights, zero biases.
inline EncoderParams init_params(std::uint64_t seed, const EncoderArch& arch = {}) {
  arch.validate();
  EncoderParams p;
  p.arch = arch;
  p.l1 = LinearLayer(arch.hidden, arch.feat_dim);
  p.l2 = LinearLayer(arch.hidden, arch.hidden);
  p.l3 = LinearLayer(arch.emb_dim, arch.hidden);
  for (int t = 0; t < 4; ++t) p.heads[t] = LinearLayer(arch.emb_dim + 1, arch.emb_dim);

  Rng rng = Rng::keyed(seed, 0x696e6974ULL);
  auto fill = [&rng](LinearLayer& l) {
    const double s = std::sqrt(1.0 / l.w.cols);
    for (double& v : l.w.a) v = rng.next_uniform(-s, s);
  };
  fill(p.l1);
  fill(p.l2);
  fill(p.l3);
  for (auto& h : p.heads) fill(h);
  return p;
}

struct EncoderOutput {
  RealVector shared;                  // trunk output e_img
  std::array<RealVector, 4> emb;     // per-type embeddings
  std::array<double, 4> conf;        // squashed into (0, 1)
  std::array<double, 4> conf_logit;  // pre-squash, used by training
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void affine(const LinearLayer& l, const RealVector& x, RealVector& out) {
  if (static_cast<int>(x.size()) != l.w.cols) throw shape_mismatch_error("affine input size");
  out.assign(l.b.begin(), l.b.end());
  for (int r = 0; r < l.w.rows; ++r) {
    const double* wr = l.w.row(r);
    double s = 0.0;
    for (int c = 0; c < l.w.cols; ++c) s += wr[c] * x[c];
    out[r] += s;
  }
}

inline EncoderOutput forward(const EncoderParams& p, const RealVector& feat) {
  if (static_cast<int>(feat.size()) != p.arch.feat_dim) throw shape_mismatch_error("feature size");
  const RealVector& x = feat;
  RealVector h1, h2;
  affine(p.l1, x, h1);
  for (double& v : h1) v = v > 0.0 ? v : 0.0;
  affine(p.l2, h1, h2);
  for (double& v : h2) v = v > 0.0 ? v : 0.0;

  EncoderOutput out;
  affine(p.l3, h2, out.shared);
  for (int t = 0; t < 4; ++t) {
    RealVector u;
    affine(p.heads[t], out.shared, u);
    out.emb[t].assign(u.begin(), u.begin() + p.arch.emb_dim);
    out.conf_logit[t] = u[p.arch.emb_dim];
    out.conf[t] = sigmoid(u[p.arch.emb_dim]);
  }
  return out;
}

inline EncoderOutput forward(const EncoderParams& p, const FeatureVector& feat) {
  return forward(p, RealVector(feat.begin(), feat.end()));
}

}  // namespace ordeg
