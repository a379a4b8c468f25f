#include <doctest.h>

#include <cmath>
#include <memory>

#include "signvr/errors.hpp"
#include "signvr/optimizers.hpp"
#include "signvr/sign_ops.hpp"
#include "signvr/verify.hpp"

using namespace signvr;

namespace {

std::shared_ptr<NoisyQuadratic> identity_quadratic(std::size_t d, double sigma = 0.0,
                                                   std::optional<DenseVector> start = {}) {
  return std::make_shared<NoisyQuadratic>(DenseVector(d, 1.0), DenseVector::zeros(d), sigma,
                                          NoiseKind::gaussian, std::move(start));
}

}  // namespace

TEST_CASE("storm_update with beta = 1 is the fresh batch gradient") {
  const auto q = make_noisy_quadratic(4, 5.0, 1.0, 2);
  StormState s{DenseVector{9.0, 9.0, 9.0, 9.0}, DenseVector::zeros(4), 1};
  const DenseVector x_new{0.5, -0.5, 1.0, 2.0};
  RngStream a(7), b(7);
  const StormState next = storm_update(s, x_new, *q, 3, 1.0, a);
  // Reproduce the fresh batch by hand with the same stream.
  DenseVector g = DenseVector::zeros(4);
  for (int k = 0; k < 3; ++k) g += q->grad(x_new, q->draw(b));
  g *= 1.0 / 3.0;
  CHECK(norm_linf(next.v - g) <= 1e-15);
  CHECK(next.x_prev == x_new);
  CHECK(next.t == 2);
}

TEST_CASE("storm_update single hand step") {
  const auto q = identity_quadratic(2);
  StormState s{DenseVector{1.0, 0.0}, DenseVector{1.0, 0.0}, 1};
  RngStream rng(1);
  const StormState next = storm_update(s, DenseVector{0.9, 0.0}, *q, 1, 0.5, rng);
  CHECK(next.v[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(next.v[1] == 0.0);
}

TEST_CASE("storm_update uses the same samples at both points") {
  // With additive noise g(x; xi) = grad f(x) + xi, sharing xi between the
  // two evaluations leaves exactly beta * xi of noise in the new estimate.
  const auto q = make_noisy_quadratic(3, 4.0, 2.0, 5);
  RngStream rng(9), replay(9);
  const DenseVector x_prev{0.1, 0.2, 0.3};
  const DenseVector x_new{-0.4, 0.0, 1.0};
  const DenseVector v_prev{1.0, 2.0, 3.0};
  const StormState next = storm_update({v_prev, x_prev, 1}, x_new, *q, 1, 0.25, rng);
  const Sample xi = q->draw(replay);
  const DenseVector noise = q->grad(x_new, xi) - q->grad_true(x_new);
  const DenseVector expected =
      q->grad_true(x_new) + 0.75 * (v_prev - q->grad_true(x_prev)) + 0.25 * noise;
  CHECK(norm_linf(next.v - expected) <= 1e-12);
  CHECK_THROWS_AS(storm_update({v_prev, x_prev, 1}, DenseVector{1.0}, *q, 1, 0.5, rng), InvalidInput);
  CHECK_THROWS_AS(storm_update({v_prev, x_prev, 1}, x_new, *q, 0, 0.5, rng), InvalidInput);
}

TEST_CASE("noiseless SSVR tracks the true gradient exactly") {
  const auto q = make_noisy_quadratic(20, 10.0, 0.0, 3);
  SsvrConfig cfg;
  cfg.T = 1000;
  cfg.eta = 1e-3;
  cfg.beta = 0.1;
  cfg.seed = 4;
  const RunResult r = ssvr_run(*q, cfg);
  CHECK(r.summary.max_est_err_linf <= 1e-10);
  CHECK(r.rows.size() == 1000);
}

TEST_CASE("SSVR with T = 1") {
  const auto q = identity_quadratic(3, 0.0, DenseVector{1.0, -2.0, 0.0});
  SsvrConfig cfg;
  cfg.T = 1;
  cfg.eta = 0.1;
  const RunResult r = ssvr_run(*q, cfg);
  CHECK(r.tau_out == 1);
  CHECK(r.x_out == DenseVector{1.0, -2.0, 0.0});
  CHECK(r.x_final[0] == doctest::Approx(0.9));
  CHECK(r.x_final[1] == doctest::Approx(-1.9));
  CHECK(r.x_final[2] == 0.0);  // sign(0) = 0: no motion
}

TEST_CASE("1-D noiseless SSVR moves by exactly eta toward the minimizer") {
  const auto q = identity_quadratic(1, 0.0, DenseVector{5.0});
  SsvrConfig cfg;
  cfg.T = 10;
  cfg.eta = 0.1;
  cfg.beta = 0.5;
  cfg.metrics_every = 1;
  const RunResult r = ssvr_run(*q, cfg);
  for (const auto& row : r.rows) {
    const double x = 5.0 - 0.1 * static_cast<double>(row.t - 1);
    CHECK(row.grad_l1 == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(r.x_final[0] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("update geometry and determinism") {
  const auto q = make_noisy_quadratic(12, 10.0, 1.0, 6);
  SsvrConfig cfg;
  cfg.T = 2000;
  cfg.eta = 0.01;
  cfg.beta = 0.05;
  cfg.B0 = 8;
  cfg.seed = 10;
  const RunResult a = ssvr_run(*q, cfg);
  CHECK(a.summary.max_step_linf <= cfg.eta * (1.0 + 1e-12));
  CHECK(a.summary.max_step_l2_sq <= cfg.eta * cfg.eta * 12 * (1.0 + 1e-12));
  const RunResult b = ssvr_run(*q, cfg);
  CHECK(a.rows == b.rows);
  CHECK(a.x_out == b.x_out);
  CHECK(a.tau_out == b.tau_out);
  CHECK(a.summary.sample_grad_evals == 8 + 2 * (cfg.T - 1));
}

TEST_CASE("output index stream does not perturb the trajectory") {
  const auto q = make_noisy_quadratic(5, 3.0, 1.0, 6);
  SsvrConfig cfg;
  cfg.T = 300;
  cfg.eta = 0.01;
  cfg.beta = 0.1;
  cfg.seed = 2;
  const RunResult longer = ssvr_run(*q, cfg);
  cfg.T = 200;
  const RunResult shorter = ssvr_run(*q, cfg);
  for (std::size_t i = 0; i < shorter.rows.size(); ++i) CHECK(shorter.rows[i] == longer.rows[i]);
  CHECK(shorter.tau_out >= 1);
  CHECK(shorter.tau_out <= 200);
}

TEST_CASE("metrics stride keeps rows where t is a multiple") {
  const auto q = make_noisy_quadratic(3, 3.0, 1.0, 6);
  SsvrConfig cfg;
  cfg.T = 100;
  cfg.eta = 0.01;
  cfg.metrics_every = 25;
  const RunResult r = ssvr_run(*q, cfg);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].t == 25);
  CHECK(r.rows[3].t == 100);
  cfg.metrics_every = 100;
  CHECK(ssvr_run(*q, cfg).rows.size() == 1);
}

TEST_CASE("config validation") {
  const auto q = identity_quadratic(2);
  SsvrConfig bad;
  bad.beta = 0.0;
  CHECK_THROWS_AS(ssvr_run(*q, bad), ConfigError);
  bad.beta = 1.5;
  CHECK_THROWS_AS(ssvr_run(*q, bad), ConfigError);
  SsvrConfig zero_t;
  zero_t.T = 0;
  CHECK_THROWS_AS(ssvr_run(*q, zero_t), ConfigError);
  SsvrFsConfig fs;
  fs.I = 0;
  CHECK_THROWS_AS(ssvr_fs_run(*make_finite_sum_quadratic(2, 2, 1), fs), ConfigError);
  BaselineConfig sgd;
  sgd.momentum = 0.5;
  CHECK_THROWS_AS(sgd_run(*q, sgd), ConfigError);
}

TEST_CASE("divergence guard") {
  const auto q = identity_quadratic(1, 0.0, DenseVector{1.0});
  BaselineConfig cfg;
  cfg.T = 10;
  cfg.eta = 3.0;  // eta L > 2 diverges geometrically for SGD
  cfg.T = 200;
  try {
    sgd_run(*q, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() > 1);
    CHECK(e.iteration() < 200);
  }
}

TEST_CASE("fs estimator: SVRG equivalence, snapshot point, errors") {
  RngStream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(10);
    const std::size_t m = 1 + rng.uniform_index(8);
    const auto p = make_finite_sum_quadratic(d, m, rng());
    DenseVector x(d), xp(d), s(d), v(d);
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = rng.normal();
      xp[k] = rng.normal();
      s[k] = rng.normal();
      v[k] = rng.normal();
    }
    const std::size_t i = rng.uniform_index(m);
    const DenseVector got = fs_estimator_update(v, x, xp, s, p->full_grad(s), i, *p, 1.0);
    CHECK(norm_linf(got - verify::svrg_reference_estimator(*p, x, s, i)) <= 1e-12);
    const DenseVector at_snap = fs_estimator_update(v, s, xp, s, p->full_grad(s), i, *p, 1.0);
    CHECK(norm_linf(at_snap - p->full_grad(s)) <= 1e-12);
  }
  const auto p = make_finite_sum_quadratic(2, 3, 1);
  const DenseVector z = DenseVector::zeros(2);
  CHECK_THROWS_AS(fs_estimator_update(z, z, z, z, z, 3, *p, 0.5), InvalidInput);
  CHECK_THROWS_AS(fs_estimator_update(z, DenseVector::zeros(3), z, z, z, 0, *p, 0.5), InvalidInput);
}

TEST_CASE("SSVR-FS with m = 1 is exact-gradient sign descent") {
  const auto p = make_nonconvex_logistic(5, 1, 0.1, 4);
  SsvrFsConfig cfg;
  cfg.T = 500;
  cfg.eta = 0.01;
  cfg.beta = 0.3;
  cfg.I = 7;
  const RunResult r = ssvr_fs_run(*p, cfg);
  CHECK(r.summary.max_est_err_linf == 0.0);

  DenseVector x = p->initial_point();
  for (std::uint64_t t = 1; t <= cfg.T; ++t) {
    const SignVector s = sign(p->full_grad(x));
    for (std::size_t k = 0; k < x.dim(); ++k) x[k] -= cfg.eta * s[k];
  }
  CHECK(r.x_final == x);
}

TEST_CASE("SSVR-FS with I = 1 and beta = 1 is exact-gradient sign descent") {
  const auto p = make_finite_sum_quadratic(4, 6, 2);
  SsvrFsConfig cfg;
  cfg.T = 100;
  cfg.eta = 0.01;
  cfg.beta = 1.0;
  cfg.I = 1;
  const RunResult r = ssvr_fs_run(*p, cfg);
  CHECK(r.summary.max_est_err_linf <= 1e-12);
  CHECK(r.summary.full_grad_evals == 100);
}

TEST_CASE("SSVR-FS full gradient count") {
  for (std::uint64_t m : {1u, 3u, 8u, 16u}) {
    const auto p = make_finite_sum_quadratic(3, m, 1);
    for (std::uint64_t T : {1u, 2u, 7u, 10u, 33u}) {
      SsvrFsConfig cfg;
      cfg.T = T * m;
      cfg.I = m;
      cfg.eta = 1e-3;
      cfg.beta = 1.0 / static_cast<double>(m);
      const RunResult r = ssvr_fs_run(*p, cfg);
      const std::uint64_t snapshots = 1 + (cfg.T - 1) / m;
      CHECK(r.summary.full_grad_evals == snapshots);
      CHECK(r.summary.component_grad_evals == snapshots * m + 3 * (cfg.T - 1));
    }
  }
}

TEST_CASE("signSGD on a noiseless 1-D quadratic") {
  const auto q = identity_quadratic(1, 0.0, DenseVector{1.05});
  BaselineConfig cfg;
  cfg.T = 40;
  cfg.eta = 0.1;
  const RunResult r = signsgd_run(*q, cfg);
  // Ten exact steps of eta reach 0.05, then the iterate oscillates within eta.
  for (const auto& row : r.rows) {
    if (row.t <= 11) {
      CHECK(row.grad_l1 == doctest::Approx(1.05 - 0.1 * static_cast<double>(row.t - 1)));
    } else {
      CHECK(row.grad_l1 <= 0.1 + 1e-12);
    }
  }
}

TEST_CASE("Signum with momentum 0 equals signSGD") {
  const auto q = make_noisy_quadratic(6, 4.0, 1.0, 2);
  BaselineConfig cfg;
  cfg.T = 500;
  cfg.eta = 0.01;
  cfg.seed = 5;
  cfg.batch = 2;
  const RunResult a = signsgd_run(*q, cfg);
  const RunResult b = signum_run(*q, cfg);
  CHECK(a.rows == b.rows);
  CHECK(a.x_final == b.x_final);
  cfg.momentum = 0.9;
  CHECK_FALSE(signum_run(*q, cfg).rows == a.rows);
}

TEST_CASE("SGD with eta L < 2 decreases the loss monotonically") {
  const auto q = make_noisy_quadratic(8, 10.0, 0.0, 1);
  BaselineConfig cfg;
  cfg.T = 300;
  cfg.eta = 1.9 / q->smoothness();
  const RunResult r = sgd_run(*q, cfg);
  for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].loss <= r.rows[i - 1].loss);
  CHECK(r.rows.back().loss < 1e-3 * r.rows.front().loss);
}

TEST_CASE("presets") {
  const SsvrConfig t1 = preset_ssvr("theorem1", 1000, 100);
  CHECK(t1.beta == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(t1.eta == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(t1.B0 == 10);
  CHECK(t1.B1 == 1);

  const SsvrFsConfig t2 = preset_ssvr_fs("theorem2", 10000, 4, 16);
  CHECK(t2.beta == doctest::Approx(0.0625));
  CHECK(t2.I == 16);
  CHECK(t2.eta == doctest::Approx(0.0025).epsilon(1e-12));

  const SsvrConfig t5 = preset_ssvr("theorem5", 1000, 8);
  CHECK(t5.beta == doctest::Approx(2.0 / 100.0));
  CHECK(t5.eta == doctest::Approx(1.0 / (std::sqrt(2.0) * 100.0)));
  CHECK(t5.B0 == 1);
  CHECK(t5.B1 == 8);

  const SsvrFsConfig t6 = preset_ssvr_fs("theorem6", 10000, 4, 16);
  CHECK(t6.eta == doctest::Approx(1.0 / 64.0 < 0.0025 ? 1.0 / 64.0 : 0.0025));
  CHECK(t6.eta == doctest::Approx(0.0025));

  const SsvrConfig scaled = preset_ssvr("theorem1", 1000, 100, {2.0, 0.5, 3.0});
  CHECK(scaled.eta == doctest::Approx(0.002));
  CHECK(scaled.beta == doctest::Approx(0.005));
  CHECK(scaled.B0 == 30);

  CHECK(std::get<SsvrConfig>(preset("theorem1", {1000, 100})).B0 == 10);
  CHECK(std::get<SsvrFsConfig>(preset("theorem2", {10000, 4, 16})).I == 16);
  CHECK_THROWS_AS(preset("theorem2", {10000, 4}), ConfigError);
  CHECK_THROWS_AS(preset("theorem9", {10, 1}), ConfigError);
  CHECK_THROWS_AS(preset_ssvr("theorem1", 1, 1, {1.0, 2.0, 1.0}), ConfigError);
}

TEST_CASE("ceil_count ignores rounding noise") {
  CHECK(ceil_count(10.000000000001) == 10);
  CHECK(ceil_count(10.1) == 11);
  CHECK(ceil_count(0.2) == 1);
  CHECK(ceil_count(std::cbrt(1000.0)) == 10);
}
