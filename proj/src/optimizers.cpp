// SPDX-License-Identifier: Apache-2.0

#include "signvr/optimizers.hpp"

#include <cmath>
#include <string>

#include "signvr/errors.hpp"
#include "signvr/sign_ops.hpp"

namespace signvr {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ConfigError(message);
}

void check_divergence(const DenseVector& x, std::uint64_t t) {
  for (std::size_t k = 0; k < x.dim(); ++k) {
    if (!std::isfinite(x[k]) || std::abs(x[k]) > kDivergenceBound) {
      throw DivergenceError("iterate coordinate " + std::to_string(k) + " = " +
                                std::to_string(x[k]) + " left the finite range at t = " +
                                std::to_string(t),
                            t);
    }
  }
}

DenseVector starting_point(std::optional<DenseVector> x1, DenseVector fallback) {
  DenseVector x = x1 ? std::move(*x1) : std::move(fallback);
  if (!x.all_finite()) throw InvalidInput("initial point must be finite");
  return x;
}

// x <- x - eta * sign(v)
void sign_step(DenseVector& x, const DenseVector& v, double eta) {
  const SignVector s = sign(v);
  for (std::size_t k = 0; k < x.dim(); ++k) x[k] -= eta * s[k];
}

// Metrics at x_t for estimator v_t; `truth` is the instrumentation gradient.
MetricsRow measure(std::uint64_t t, double loss, const DenseVector& truth, const DenseVector& v,
                   double& err_linf) {
  MetricsRow row;
  row.t = t;
  row.loss = loss;
  row.grad_l1 = norm_l1(truth);
  row.grad_l2 = norm_l2(truth);
  const DenseVector err = v - truth;
  const double e2 = norm_l2(err);
  row.est_err_sq = e2 * e2;
  err_linf = norm_linf(err);
  return row;
}

// Picks tau uniformly from {1..T} on a dedicated stream so that the
// trajectory randomness does not depend on T.
std::uint64_t draw_output_index(const RngStream& root, std::uint64_t T) {
  RngStream output = root.fork("output");
  return 1 + output.uniform_index(T);
}

}  // namespace

void SsvrConfig::validate() const {
  require(T >= 1, "SSVR: T must be >= 1");
  require(eta > 0.0 && std::isfinite(eta), "SSVR: eta must be > 0");
  require(beta > 0.0 && beta <= 1.0, "SSVR: beta must lie in (0, 1]");
  require(B0 >= 1 && B1 >= 1, "SSVR: batch sizes must be >= 1");
  require(metrics_every >= 1, "SSVR: metrics_every must be >= 1");
}

void SsvrFsConfig::validate() const {
  require(T >= 1, "SSVR-FS: T must be >= 1");
  require(eta > 0.0 && std::isfinite(eta), "SSVR-FS: eta must be > 0");
  require(beta > 0.0 && beta <= 1.0, "SSVR-FS: beta must lie in (0, 1]");
  require(I >= 1, "SSVR-FS: snapshot period I must be >= 1");
  require(metrics_every >= 1, "SSVR-FS: metrics_every must be >= 1");
}

void BaselineConfig::validate() const {
  require(T >= 1, "baseline: T must be >= 1");
  require(eta > 0.0 && std::isfinite(eta), "baseline: eta must be > 0");
  require(batch >= 1, "baseline: batch must be >= 1");
  require(momentum >= 0.0 && momentum < 1.0, "baseline: momentum must lie in [0, 1)");
  require(metrics_every >= 1, "baseline: metrics_every must be >= 1");
}

DenseVector batch_gradient(const StochasticGradOracle& oracle, const DenseVector& x,
                           std::uint64_t batch, RngStream& rng) {
  if (batch == 0) throw InvalidInput("batch_gradient: batch must be >= 1");
  DenseVector g = oracle.grad(x, oracle.draw(rng));
  for (std::uint64_t k = 1; k < batch; ++k) g += oracle.grad(x, oracle.draw(rng));
  if (batch > 1) g *= 1.0 / static_cast<double>(batch);
  return g;
}

StormState storm_update(const StormState& state, const DenseVector& x_new,
                        const StochasticGradOracle& oracle, std::uint64_t B1, double beta,
                        RngStream& rng) {
  require_same_dim(state.v, x_new, "storm_update");
  require_same_dim(state.x_prev, x_new, "storm_update");
  if (B1 == 0) throw InvalidInput("storm_update: B1 must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("storm_update: beta must lie in (0, 1]");

  DenseVector g_new = DenseVector::zeros(x_new.dim());
  DenseVector g_old = DenseVector::zeros(x_new.dim());
  for (std::uint64_t k = 0; k < B1; ++k) {
    const Sample xi = oracle.draw(rng);
    g_new += oracle.grad(x_new, xi);
    g_old += oracle.grad(state.x_prev, xi);
  }
  if (B1 > 1) {
    const double inv = 1.0 / static_cast<double>(B1);
    g_new *= inv;
    g_old *= inv;
  }
  StormState next;
  next.v = std::move(g_new);
  next.v.axpy(1.0 - beta, state.v - g_old);
  next.x_prev = x_new;
  next.t = state.t + 1;
  return next;
}

RunResult ssvr_run(const StochasticGradOracle& oracle, const SsvrConfig& cfg,
                   std::optional<DenseVector> x1) {
  cfg.validate();
  const RngStream root = RngStream(cfg.seed).fork("ssvr");
  RngStream samples = root.fork("samples");
  const std::uint64_t tau = draw_output_index(root, cfg.T);

  DenseVector x = starting_point(std::move(x1), oracle.initial_point());
  require_same_dim(x, oracle.initial_point(), "ssvr_run");

  MetricsRecorder recorder(cfg.metrics_every);
  RunResult result;
  StormState state;
  for (std::uint64_t t = 1; t <= cfg.T; ++t) {
    if (t == 1) {
      state.v = batch_gradient(oracle, x, cfg.B0, samples);
      state.x_prev = x;
      state.t = 1;
      recorder.summary().sample_grad_evals += cfg.B0;
    } else {
      state = storm_update(state, x, oracle, cfg.B1, cfg.beta, samples);
      recorder.summary().sample_grad_evals += 2 * cfg.B1;
    }
    double err_linf = 0.0;
    recorder.observe(measure(t, oracle.loss(x), oracle.grad_true(x), state.v, err_linf), err_linf);
    if (t == tau) result.x_out = x;

    const DenseVector before = x;
    sign_step(x, state.v, cfg.eta);
    check_divergence(x, t);
    recorder.observe_step(before, x);
  }
  result.tau_out = tau;
  result.x_final = std::move(x);
  recorder.finish(result);
  return result;
}

DenseVector fs_estimator_update(const DenseVector& v_prev, const DenseVector& x_t,
                                const DenseVector& x_prev, const DenseVector& snapshot_x,
                                const DenseVector& snapshot_full_grad, std::size_t i_t,
                                const FiniteSumProblem& problem, double beta) {
  require_same_dim(v_prev, x_t, "fs_estimator_update");
  require_same_dim(x_prev, x_t, "fs_estimator_update");
  require_same_dim(snapshot_x, x_t, "fs_estimator_update");
  require_same_dim(snapshot_full_grad, x_t, "fs_estimator_update");
  if (i_t >= problem.num_components()) {
    throw InvalidInput("fs_estimator_update: component index out of range");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw InvalidInput("fs_estimator_update: beta must lie in (0, 1]");
  }
  const DenseVector g_now = problem.component_grad(i_t, x_t);
  const DenseVector g_prev = problem.component_grad(i_t, x_prev);
  const DenseVector g_snap = problem.component_grad(i_t, snapshot_x);

  DenseVector v(x_t.dim());
  for (std::size_t k = 0; k < v.dim(); ++k) {
    v[k] = g_now[k] + (1.0 - beta) * (v_prev[k] - g_prev[k]) -
           beta * (g_snap[k] - snapshot_full_grad[k]);
  }
  return v;
}

RunResult ssvr_fs_run(const FiniteSumProblem& problem, const SsvrFsConfig& cfg,
                      std::optional<DenseVector> x1) {
  cfg.validate();
  const RngStream root = RngStream(cfg.seed).fork("ssvr_fs");
  RngStream indices = root.fork("indices");
  const std::uint64_t tau = draw_output_index(root, cfg.T);

  DenseVector x = starting_point(std::move(x1), problem.initial_point());
  if (x.dim() != problem.dim()) throw InvalidInput("ssvr_fs_run: initial point dimension mismatch");

  MetricsRecorder recorder(cfg.metrics_every);
  RunResult result;
  DenseVector v;
  DenseVector x_prev;
  DenseVector snapshot_x;
  DenseVector snapshot_grad;
  for (std::uint64_t t = 1; t <= cfg.T; ++t) {
    if ((t - 1) % cfg.I == 0) {
      snapshot_x = x;
      snapshot_grad = problem.full_grad(x);
      ++recorder.summary().full_grad_evals;
      recorder.summary().component_grad_evals += problem.num_components();
    }
    if (t == 1) {
      v = snapshot_grad;
    } else {
      const auto i_t = static_cast<std::size_t>(indices.uniform_index(problem.num_components()));
      v = fs_estimator_update(v, x, x_prev, snapshot_x, snapshot_grad, i_t, problem, cfg.beta);
      recorder.summary().component_grad_evals += 3;
    }
    double err_linf = 0.0;
    recorder.observe(measure(t, problem.loss(x), problem.full_grad(x), v, err_linf), err_linf);
    if (t == tau) result.x_out = x;

    x_prev = x;
    sign_step(x, v, cfg.eta);
    check_divergence(x, t);
    recorder.observe_step(x_prev, x);
  }
  result.tau_out = tau;
  result.x_final = std::move(x);
  recorder.finish(result);
  return result;
}

namespace {

enum class BaselineKind { signsgd, signum, sgd };

RunResult run_baseline(BaselineKind kind, const StochasticGradOracle& oracle,
                       const BaselineConfig& cfg, std::optional<DenseVector> x1) {
  cfg.validate();
  if (kind != BaselineKind::signum && cfg.momentum != 0.0) {
    throw ConfigError("momentum is only meaningful for signum");
  }
  const RngStream root = RngStream(cfg.seed).fork("baseline");
  RngStream samples = root.fork("samples");
  const std::uint64_t tau = draw_output_index(root, cfg.T);

  DenseVector x = starting_point(std::move(x1), oracle.initial_point());
  require_same_dim(x, oracle.initial_point(), "baseline run");

  MetricsRecorder recorder(cfg.metrics_every);
  RunResult result;
  DenseVector momentum = DenseVector::zeros(x.dim());
  for (std::uint64_t t = 1; t <= cfg.T; ++t) {
    DenseVector g = batch_gradient(oracle, x, cfg.batch, samples);
    recorder.summary().sample_grad_evals += cfg.batch;
    const DenseVector* direction = &g;
    if (kind == BaselineKind::signum) {
      momentum *= cfg.momentum;
      momentum.axpy(1.0 - cfg.momentum, g);
      direction = &momentum;
    }
    double err_linf = 0.0;
    recorder.observe(measure(t, oracle.loss(x), oracle.grad_true(x), *direction, err_linf),
                     err_linf);
    if (t == tau) result.x_out = x;

    const DenseVector before = x;
    if (kind == BaselineKind::sgd) {
      x.axpy(-cfg.eta, g);
    } else {
      sign_step(x, *direction, cfg.eta);
    }
    check_divergence(x, t);
    recorder.observe_step(before, x);
  }
  result.tau_out = tau;
  result.x_final = std::move(x);
  recorder.finish(result);
  return result;
}

}  // namespace

RunResult signsgd_run(const StochasticGradOracle& oracle, const BaselineConfig& cfg,
                      std::optional<DenseVector> x1) {
  return run_baseline(BaselineKind::signsgd, oracle, cfg, std::move(x1));
}

RunResult signum_run(const StochasticGradOracle& oracle, const BaselineConfig& cfg,
                     std::optional<DenseVector> x1) {
  return run_baseline(BaselineKind::signum, oracle, cfg, std::move(x1));
}

RunResult sgd_run(const StochasticGradOracle& oracle, const BaselineConfig& cfg,
                  std::optional<DenseVector> x1) {
  return run_baseline(BaselineKind::sgd, oracle, cfg, std::move(x1));
}

}  // namespace signvr
