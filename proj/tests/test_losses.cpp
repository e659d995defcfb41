#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ordeg/losses.hpp"
#include "ordeg/rng.hpp"

using namespace ordeg;

namespace {

std::map<DegradationType, double> all4(double blur, double down, double noisy, double jpeg) {
  return {{DegradationType::Blur, blur},
          {DegradationType::Downsample, down},
          {DegradationType::Noisy, noisy},
          {DegradationType::JPEG, jpeg}};
}

RealVector unit(int n, int axis) {
  RealVector v(n, 0.0);
  v[axis] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("confidence loss examples") {
  CHECK(loss_conf(all4(1, 0, 0, 0), all4(1, 0, 0, 0)) == Catch::Approx(0.0).margin(1e-15));
  CHECK(loss_conf(all4(0.5, 0.5, 0.5, 0.5), all4(1, 0, 0, 0)) == Catch::Approx(1.0));

  // permuting the types consistently leaves the loss unchanged
  CHECK(loss_conf(all4(0.2, 0.9, 0.4, 0.7), all4(0, 1, 0, 1)) ==
        Catch::Approx(loss_conf(all4(0.9, 0.2, 0.7, 0.4), all4(1, 0, 1, 0))));

  std::map<DegradationType, double> missing = {{DegradationType::Blur, 1.0}};
  CHECK_THROWS_AS(loss_conf(missing, all4(1, 0, 0, 0)), key_mismatch_error);
}

TEST_CASE("level loss examples") {
  const auto pred = all4(0.8, 0.1, 0.4, 0.9);
  auto gt = all4(0.5, 0.2, 0.2, 0.9);
  CHECK(loss_level(pred, gt, {DegradationType::Blur}) == Catch::Approx(0.3));
  CHECK(loss_level(pred, pred, {DegradationType::Blur, DegradationType::JPEG}) ==
        Catch::Approx(0.0).margin(1e-15));
  CHECK(loss_level(pred, gt, {DegradationType::Downsample, DegradationType::Noisy}) == Catch::Approx(0.3));

  std::map<DegradationType, double> sparse = {{DegradationType::Blur, 0.8}};
  CHECK_THROWS_AS(loss_level(sparse, gt, {DegradationType::Noisy}), key_mismatch_error);
}

TEST_CASE("scl loss with a single item is zero") {
  SclBatch batch;
  batch.items.push_back({unit(4, 0), unit(4, 0), 0.5});
  batch.tau = 1.0;
  CHECK(loss_scl(batch) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("scl two-item hand computation") {
  // z1 = w1, z2 = w2, the pairs mutually orthogonal, tau = 1:
  // each term is -log(e / (e + 1)) = log(1 + 1/e).
  SclBatch batch;
  batch.tau = 1.0;
  batch.items.push_back({unit(4, 0), unit(4, 0), 0.0});
  batch.items.push_back({unit(4, 1), unit(4, 1), 1.0});
  const double expect = std::log(1.0 + std::exp(-1.0));
  CHECK(loss_scl(batch) == Catch::Approx(expect));
}

TEST_CASE("scl with degenerate distances collapses to zero") {
  SclBatch batch;
  batch.tau = 0.5;
  for (int i = 0; i < 3; ++i) batch.items.push_back({unit(4, i), unit(4, (i + 1) % 4), 0.7});
  CHECK(loss_scl(batch) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("scl stays nonnegative for random batches") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    SclBatch batch;
    batch.tau = rng.next_uniform(0.05, 1.0);
    const int m = 2 + static_cast<int>(rng.next_below(5));
    for (int i = 0; i < m; ++i) {
      SclItem item;
      item.z.resize(8);
      item.w.resize(8);
      for (int j = 0; j < 8; ++j) {
        item.z[j] = rng.next_gaussian();
        item.w[j] = rng.next_gaussian();
      }
      item.level_gt = rng.next_unit();
      batch.items.push_back(std::move(item));
    }
    CHECK(loss_scl(batch) >= 0.0);
  }
}

TEST_CASE("scl lambda weights are max-normalized per anchor") {
  const auto lam = scl_lambda({0.0, 0.2, 1.0});
  CHECK(lam[0][1] == Catch::Approx(0.2));
  CHECK(lam[0][2] == Catch::Approx(1.0));
  CHECK(lam[1][0] == Catch::Approx(0.25));
  CHECK(lam[1][2] == Catch::Approx(1.0));
  CHECK(lam[2][0] == Catch::Approx(1.0));
  CHECK(lam[2][1] == Catch::Approx(0.8));
  for (int i = 0; i < 3; ++i) CHECK(lam[i][i] == 0.0);

  CHECK_THROWS_AS(loss_scl(SclBatch{}), empty_input_error);
  SclBatch bad;
  bad.items.push_back({unit(4, 0), unit(4, 0), 0.5});
  bad.tau = 0.0;
  CHECK_THROWS_AS(loss_scl(bad), non_positive_temperature_error);
}
