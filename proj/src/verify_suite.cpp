// SPDX-License-Identifier: Apache-2.0
//
// The oracle suite run by `signvr verify`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "signvr/optimizers.hpp"
#include "signvr/sign_ops.hpp"
#include "signvr/verify.hpp"

namespace signvr::verify {

namespace {

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

DenseVector random_point(std::size_t d, double scale, RngStream& rng) {
  DenseVector x(d);
  for (std::size_t k = 0; k < d; ++k) x[k] = scale * (2.0 * rng.uniform() - 1.0);
  return x;
}

double max_abs_diff(const DenseVector& a, const DenseVector& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// ||fd - g||_2 / max(||g||_2, 1): relative away from stationary points,
// absolute near them where the relative error is meaningless.
double fd_error(const std::function<double(const DenseVector&)>& loss,
                const std::function<DenseVector(const DenseVector&)>& grad, const DenseVector& x) {
  double linf = 0.0;
  for (double v : x) linf = std::max(linf, std::abs(v));
  const DenseVector fd = finite_diff_grad(loss, x, 1e-6 * (1.0 + linf));
  const DenseVector g = grad(x);
  double diff = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < x.dim(); ++k) {
    diff += (fd[k] - g[k]) * (fd[k] - g[k]);
    norm += g[k] * g[k];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1.0);
}

CheckResult fd_check(const std::string& name,
                     const std::function<double(const DenseVector&)>& loss,
                     const std::function<DenseVector(const DenseVector&)>& grad, std::size_t d,
                     RngStream& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    worst = std::max(worst, fd_error(loss, grad, random_point(d, 2.0, rng)));
  }
  return {name, worst <= 1e-5, fmt("max relative error %.3g (limit 1e-5)", worst)};
}

CheckResult mean_of_components_check(const std::string& name, const FiniteSumProblem& p,
                                     RngStream& rng) {
  double worst = 0.0;
  const std::size_t m = p.num_components();
  for (int trial = 0; trial < 100; ++trial) {
    const DenseVector x = random_point(p.dim(), 2.0, rng);
    std::vector<std::vector<double>> cols(p.dim(), std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const DenseVector g = p.component_grad(i, x);
      for (std::size_t k = 0; k < p.dim(); ++k) cols[k][i] = g[k];
    }
    const DenseVector full = p.full_grad(x);
    double diff = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) {
      const double mean = pairwise_sum(cols[k]) / static_cast<double>(m);
      diff = std::max(diff, std::abs(mean - full[k]));
      norm = std::max(norm, std::abs(mean));
    }
    worst = std::max(worst, diff / std::max(norm, 1e-300));
  }
  return {name, worst <= 1e-12, fmt("max relative error %.3g (limit 1e-12)", worst)};
}

}  // namespace

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const RngStream root(seed, fnv1a64("verify"));

  // Gradients against central differences of the loss.
  {
    RngStream rng = root.fork("fd");
    const auto q = make_noisy_quadratic(8, 10.0, 1.0, seed);
    out.push_back(fd_check(
        "noisy_quadratic gradient vs finite differences",
        [&](const DenseVector& x) { return q->loss(x); },
        [&](const DenseVector& x) { return q->grad_true(x); }, 8, rng));
    const auto fs = make_finite_sum_quadratic(6, 5, seed);
    out.push_back(fd_check(
        "finite_sum_quadratic gradient vs finite differences",
        [&](const DenseVector& x) { return fs->loss(x); },
        [&](const DenseVector& x) { return fs->full_grad(x); }, 6, rng));
    const auto lg = make_nonconvex_logistic(7, 40, 0.1, seed);
    out.push_back(fd_check(
        "nonconvex_logistic gradient vs finite differences",
        [&](const DenseVector& x) { return lg->loss(x); },
        [&](const DenseVector& x) { return lg->full_grad(x); }, 7, rng));

    out.push_back(mean_of_components_check("finite_sum_quadratic full_grad = mean of components",
                                           *fs, rng));
    out.push_back(mean_of_components_check("nonconvex_logistic full_grad = mean of components",
                                           *lg, rng));

    // d/dx x^2/(1+x^2) = 2x/(1+x^2)^2 = 0.5 at x = 1.
    const auto reg = [](const DenseVector& x) { return x[0] * x[0] / (1.0 + x[0] * x[0]); };
    const double fd = finite_diff_grad(reg, DenseVector{1.0}, 1e-6)[0];
    NonconvexLogistic flat({DenseVector{0.0}}, {1.0}, 1.0);
    const double analytic = flat.full_grad(DenseVector{1.0})[0];
    const double err = std::max(std::abs(fd - 0.5), std::abs(analytic - 0.5));
    out.push_back({"regularizer derivative at 1 equals 0.5", err <= 1e-6,
                   fmt("finite difference %.12g, analytic %.12g", fd, analytic)});
  }

  // S_R unbiasedness.
  {
    RngStream rng = root.fork("stochastic_sign");
    const DenseVector v{0.5, -0.25, 0.0};
    constexpr std::size_t N = 200000;
    const McEstimate est = mc_expectation(
        [&](RngStream& r) { return stochastic_sign(v, 1.0, r).to_dense(); }, N, rng);
    double worst = 0.0;
    for (std::size_t k = 0; k < v.dim(); ++k) {
      const double bound = 4.0 * std::sqrt((1.0 - v[k] * v[k]) / static_cast<double>(N));
      worst = std::max(worst, std::abs(est.mean[k] - v[k]) / bound);
    }
    out.push_back({"stochastic sign is unbiased (4 sigma)", worst <= 1.0,
                   fmt("worst deviation %.3f of the 4-sigma bound", worst)});
  }

  // Enumeration oracle.
  {
    const VoteDistribution golden =
        enumerate_vote_distribution({{0.9}, {0.8}, {0.3}}, 1, TieMode::ternary);
    const double p = golden.coordinates[0].p_plus;
    out.push_back({"enumeration golden P(+1) = 0.798", std::abs(p - 0.798) <= 1e-12,
                   fmt("P(+1) = %.17g", p)});

    RngStream rng = root.fork("enumeration");
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(kMaxEnumeratedNodes / 2);
      const std::size_t d = 1 + rng.uniform_index(3);
      std::vector<std::vector<double>> table(n, std::vector<double>(d));
      for (auto& row : table) {
        for (double& q : row) q = rng.uniform();
      }
      const int option = 1 + static_cast<int>(rng.uniform_index(2));
      const auto dist = enumerate_vote_distribution(
          table, option, rng.bernoulli(0.5) ? TieMode::ternary : TieMode::plus_one);
      for (const auto& law : dist.coordinates) {
        worst = std::max(worst, std::abs(law.p_minus + law.p_zero + law.p_plus - 1.0));
      }
    }
    out.push_back({"enumerated laws sum to 1", worst <= 1e-12, fmt("max |sum - 1| = %.3g", worst)});
  }

  // server_aggregate against the enumeration.
  {
    RngStream rng = root.fork("server");
    double worst = 0.0;
    int cases = 0;
    for (int option = 1; option <= 2; ++option) {
      for (TieMode tie : {TieMode::ternary, TieMode::plus_one}) {
        if (option == 2 && tie == TieMode::plus_one) continue;
        for (int trial = 0; trial < 12; ++trial) {
          const std::size_t n = 1 + rng.uniform_index(4);
          const std::size_t d = 1 + rng.uniform_index(3);
          std::vector<std::vector<double>> table(n, std::vector<double>(d));
          for (auto& row : table) {
            for (double& q : row) q = rng.uniform();
          }
          RngStream case_rng = rng.fork(static_cast<std::uint64_t>(cases));
          worst = std::max(worst, server_vs_enumeration(table, option, tie, 20000, case_rng).max_z);
          ++cases;
        }
      }
    }
    out.push_back({"server_aggregate matches enumeration (4 sigma)", worst <= 4.0,
                   fmt("%.0f tables, max z = %.3f", cases, worst)});
  }

  // SVRG equivalence of the finite-sum estimator at beta = 1.
  {
    RngStream rng = root.fork("svrg");
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t d = 1 + rng.uniform_index(10);
      const std::size_t m = 1 + rng.uniform_index(8);
      const auto p = make_finite_sum_quadratic(d, m, rng());
      const DenseVector x_t = random_point(d, 2.0, rng);
      const DenseVector x_prev = random_point(d, 2.0, rng);
      const DenseVector snap = random_point(d, 2.0, rng);
      const DenseVector v_prev = random_point(d, 5.0, rng);
      const std::size_t i = rng.uniform_index(m);
      const DenseVector got =
          fs_estimator_update(v_prev, x_t, x_prev, snap, p->full_grad(snap), i, *p, 1.0);
      worst = std::max(worst, max_abs_diff(got, svrg_reference_estimator(*p, x_t, snap, i)));
    }
    out.push_back({"finite-sum estimator at beta = 1 equals SVRG", worst <= 1e-12,
                   fmt("1000 instances, max abs diff %.3g", worst)});
  }

  // Option 2: E[broadcast] = (1/(nG)) sum_j P_G(v^j).
  {
    RngStream rng = root.fork("option2");
    constexpr std::size_t n = 3;
    constexpr std::size_t d = 3;
    constexpr double G = 1.5;
    std::vector<NodeState> nodes(n);
    DenseVector expected = DenseVector::zeros(d);
    for (std::size_t j = 0; j < n; ++j) {
      nodes[j].node_id = static_cast<std::uint32_t>(j);
      nodes[j].v = random_point(d, 2.0, rng);  // some land outside the ball
      double norm = 0.0;
      for (double a : nodes[j].v) norm += a * a;
      norm = std::sqrt(norm);
      const double shrink = norm > G ? G / norm : 1.0;
      for (std::size_t k = 0; k < d; ++k) expected[k] += shrink * nodes[j].v[k] / (n * G);
    }
    RngStream server_rng = rng.fork("server");
    std::uint64_t round = 0;
    const McEstimate est = mc_expectation(
        [&](RngStream& r) {
          ++round;
          std::vector<WorkerMessage> inbox;
          for (const auto& node : nodes) inbox.push_back(worker_encode_option2(node, round, G, r));
          return server_aggregate(inbox, n, 2, TieMode::ternary, server_rng).direction.to_dense();
        },
        100000, rng);
    double worst = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      worst = std::max(worst, std::abs(est.mean[k] - expected[k]) / est.std_error[k]);
    }
    out.push_back({"option 2 broadcast is unbiased for the projected mean (4 sigma)", worst <= 4.0,
                   fmt("max z = %.3f", worst)});
  }

  return out;
}

}  // namespace signvr::verify
