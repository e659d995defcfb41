#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ordeg/cfpg.hpp"

using namespace ordeg;

namespace {

GuidanceBundle random_bundle(Rng& rng, int n) {
  GuidanceBundle b;
  b.eps_txt_pos.resize(n);
  b.eps_txt_neg.resize(n);
  b.eps_sem.resize(n);
  b.eps_deg.resize(n);
  for (int i = 0; i < n; ++i) {
    b.eps_txt_pos[i] = rng.next_gaussian();
    b.eps_txt_neg[i] = rng.next_gaussian();
    b.eps_sem[i] = rng.next_gaussian();
    b.eps_deg[i] = rng.next_gaussian();
  }
  return b;
}

double linf(const RealVector& a, const RealVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("rectify limit cases") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const GuidanceBundle b = random_bundle(rng, 64);
    const double w = 5.5;

    // both etas zero: plain text-only guidance
    RealVector expect(64);
    for (int i = 0; i < 64; ++i) {
      expect[i] = b.eps_txt_neg[i] + w * (b.eps_txt_pos[i] - b.eps_txt_neg[i]);
    }
    CHECK(linf(rectify(b, {0.0, 0.0, w}), expect) < 1e-12);

    // both etas one: raw sem/deg pair
    for (int i = 0; i < 64; ++i) {
      expect[i] = b.eps_deg[i] + w * (b.eps_sem[i] - b.eps_deg[i]);
    }
    CHECK(linf(rectify(b, {1.0, 1.0, w}), expect) < 1e-12);

    // equal etas: identical to per-branch linear mixing
    const double gamma = 0.37;
    CHECK(linf(rectify(b, {gamma, gamma, w}), linear_cfg(b, gamma, w)) < 1e-12);
  }
}

TEST_CASE("orthogonal-only rectification stays orthogonal to the baseline") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const GuidanceBundle b = random_bundle(rng, 48);
    // w = 1 exposes the positive branch, w = 0 the negative branch
    const RealVector pos = rectify(b, {0.0, 1.0, 1.0});
    const RealVector neg = rectify(b, {0.0, 1.0, 0.0});
    double dot_pos = 0.0, dot_neg = 0.0, nb_pos = 0.0, nb_neg = 0.0;
    for (int i = 0; i < 48; ++i) {
      dot_pos += (pos[i] - b.eps_txt_pos[i]) * b.eps_txt_pos[i];
      dot_neg += (neg[i] - b.eps_txt_neg[i]) * b.eps_txt_neg[i];
      nb_pos += b.eps_txt_pos[i] * b.eps_txt_pos[i];
      nb_neg += b.eps_txt_neg[i] * b.eps_txt_neg[i];
    }
    CHECK(std::fabs(dot_pos) < 1e-10 * nb_pos);
    CHECK(std::fabs(dot_neg) < 1e-10 * nb_neg);
  }
}

TEST_CASE("rectify is affine in the sem/deg estimates for fixed baselines") {
  Rng rng(4);
  const CfpgParams params{0.7, 0.3, 4.0};
  for (int trial = 0; trial < 20; ++trial) {
    GuidanceBundle b0 = random_bundle(rng, 32);
    GuidanceBundle b1 = b0;
    for (int i = 0; i < 32; ++i) {
      b1.eps_sem[i] = rng.next_gaussian();
      b1.eps_deg[i] = rng.next_gaussian();
    }
    GuidanceBundle mid = b0;
    for (int i = 0; i < 32; ++i) {
      mid.eps_sem[i] = 0.5 * (b0.eps_sem[i] + b1.eps_sem[i]);
      mid.eps_deg[i] = 0.5 * (b0.eps_deg[i] + b1.eps_deg[i]);
    }
    const RealVector r0 = rectify(b0, params);
    const RealVector r1 = rectify(b1, params);
    const RealVector rm = rectify(mid, params);
    for (int i = 0; i < 32; ++i) {
      CHECK(std::fabs(rm[i] - 0.5 * (r0[i] + r1[i])) < 1e-12);
    }
  }
}

TEST_CASE("rectify validates its inputs") {
  GuidanceBundle b;
  b.eps_txt_pos = {1.0, 0.0};
  b.eps_txt_neg = {0.0, 0.0};  // zero-norm baseline
  b.eps_sem = {1.0, 1.0};
  b.eps_deg = {0.5, 0.5};
  CHECK_THROWS_AS(rectify(b, {1.0, 0.6, 5.5}), zero_norm_error);

  b.eps_txt_neg = {1.0};
  CHECK_THROWS_AS(rectify(b, {1.0, 0.6, 5.5}), length_mismatch_error);
}

TEST_CASE("analytic noise prediction matches a finite-difference score oracle") {
  ToyDiffusionSpec spec;
  spec.mu = {{{1.0, -0.5}, {-1.0, 0.25}, {2.0, 1.0}, {0.3, -2.0}}};
  spec.steps = 10;
  spec.schedule = make_vp_schedule(10);
  spec.validate();

  // independent oracle: eps* = -sigma * grad log q_t(z) with
  // q_t = N(alpha mu, I), differentiated numerically
  auto log_q = [&](const Vec2& z, int t, Condition c) {
    const auto [alpha, sigma] = spec.schedule[t];
    (void)sigma;
    const auto& mu = spec.mu[static_cast<int>(c)];
    const double dx = z[0] - alpha * mu[0];
    const double dy = z[1] - alpha * mu[1];
    return -0.5 * (dx * dx + dy * dy);
  };
  Rng rng(8);
  const double h = 1e-6;
  for (int trial = 0; trial < 30; ++trial) {
    const Vec2 z = {rng.next_gaussian(), rng.next_gaussian()};
    const int t = static_cast<int>(rng.next_below(10));
    const auto c = static_cast<Condition>(rng.next_below(4));
    const double sigma = spec.schedule[t].second;
    const double sx = (log_q({z[0] + h, z[1]}, t, c) - log_q({z[0] - h, z[1]}, t, c)) / (2 * h);
    const double sy = (log_q({z[0], z[1] + h}, t, c) - log_q({z[0], z[1] - h}, t, c)) / (2 * h);
    const Vec2 eps = analytic_eps(spec, z, t, c);
    CHECK(eps[0] == Catch::Approx(-sigma * sx).margin(1e-6));
    CHECK(eps[1] == Catch::Approx(-sigma * sy).margin(1e-6));
  }
}

TEST_CASE("analytic noise prediction special cases") {
  ToyDiffusionSpec spec;
  spec.mu = {{{0.0, 0.0}, {1.0, 2.0}, {1.0, 2.0}, {-1.0, 0.5}}};
  spec.steps = 5;
  spec.schedule = make_vp_schedule(5);

  // zero-mean condition: prediction proportional to z
  const Vec2 z = {0.7, -1.3};
  const Vec2 e0 = analytic_eps(spec, z, 2, Condition::TxtPos);
  const double sigma = spec.schedule[2].second;
  CHECK(e0[0] == Catch::Approx(sigma * z[0]));
  CHECK(e0[1] == Catch::Approx(sigma * z[1]));

  // equal means give identical predictions
  const Vec2 e1 = analytic_eps(spec, z, 3, Condition::TxtNeg);
  const Vec2 e2 = analytic_eps(spec, z, 3, Condition::Sem);
  CHECK(e1 == e2);

  // z at the scaled mean: zero prediction
  const auto [alpha, s] = spec.schedule[1];
  (void)s;
  const Vec2 zm = {alpha * spec.mu[3][0], alpha * spec.mu[3][1]};
  const Vec2 e3 = analytic_eps(spec, zm, 1, Condition::Deg);
  CHECK(e3[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(e3[1] == Catch::Approx(0.0).margin(1e-15));

  CHECK_THROWS_AS(analytic_eps(spec, z, 5, Condition::Deg), index_out_of_range_error);
}

TEST_CASE("vp schedule is monotone and variance preserving") {
  const auto sched = make_vp_schedule(40);
  double prev = 2.0;
  for (const auto& [a, s] : sched) {
    CHECK(a * a + s * s == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(a < prev);
    CHECK(a > 0.0);
    prev = a;
  }
}

TEST_CASE("sampling trajectories") {
  ToyDiffusionSpec spec;
  spec.mu = {{{1.5, 0.6}, {-1.0, -0.4}, {2.0, 1.4}, {-1.6, -1.2}}};
  spec.seed = 4;

  SECTION("zero steps yield only the seeded initial state") {
    spec.steps = 0;
    spec.schedule.clear();
    const auto traj = sample(spec, {1.0, 0.6, 5.5}, GuidanceMode::Cfpg);
    REQUIRE(traj.size() == 1);
    const auto again = sample(spec, {1.0, 0.6, 5.5}, GuidanceMode::LinearCfg);
    CHECK(traj == again);
  }

  SECTION("equal etas make cfpg and linear cfg coincide per step") {
    spec.steps = 50;
    spec.schedule = make_vp_schedule(50);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      spec.seed = seed;
      const auto a = sample(spec, {0.37, 0.37, 5.5}, GuidanceMode::Cfpg);
      const auto b = sample(spec, {0.37, 0.37, 5.5}, GuidanceMode::LinearCfg);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::fabs(a[i][0] - b[i][0]) < 1e-10);
        CHECK(std::fabs(a[i][1] - b[i][1]) < 1e-10);
      }
    }
  }

  SECTION("w=1 with unit etas is plain conditional sampling toward sem") {
    spec.steps = 20;
    spec.schedule = make_vp_schedule(20);
    const auto got = sample(spec, {1.0, 1.0, 1.0}, GuidanceMode::Cfpg);

    // reference loop: identical sampler driven by the sem condition only
    Rng rng = Rng::keyed(spec.seed, 0x746f7964ULL);
    Vec2 z = {rng.next_gaussian(), rng.next_gaussian()};
    std::vector<Vec2> expect{z};
    for (int i = spec.steps - 1; i >= 0; --i) {
      const auto [alpha, sigma] = spec.schedule[i];
      const Vec2 eps = analytic_eps(spec, z, i, Condition::Sem);
      const Vec2 x0 = {(z[0] - sigma * eps[0]) / alpha, (z[1] - sigma * eps[1]) / alpha};
      if (i > 0) {
        const auto [an, sn] = spec.schedule[i - 1];
        z = {an * x0[0] + sn * rng.next_gaussian(), an * x0[1] + sn * rng.next_gaussian()};
      } else {
        z = x0;
      }
      expect.push_back(z);
    }
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i][0] == Catch::Approx(expect[i][0]).margin(1e-12));
      CHECK(got[i][1] == Catch::Approx(expect[i][1]).margin(1e-12));
    }
  }

  SECTION("spec validation rejects malformed schedules") {
    spec.steps = 3;
    spec.schedule = {{0.9, std::sqrt(1 - 0.81)}, {0.5, std::sqrt(0.75)}, {0.2, 0.5}};
    CHECK_THROWS_AS(spec.validate(), out_of_range_error);  // not variance preserving
    spec.schedule = make_vp_schedule(2);
    CHECK_THROWS_AS(spec.validate(), shape_mismatch_error);  // wrong length
  }
}
