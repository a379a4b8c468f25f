// SPDX-License-Identifier: Apache-2.0
//
// Synthetic objectives with analytic gradients.
//
// Every problem here certifies its own constants (smoothness L, noise level
// sigma, gradient bound G) by construction, so tests can check algorithms
// against known quantities instead of assumed ones.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "signvr/rng.hpp"
#include "signvr/vector.hpp"

namespace signvr {

/// One stochastic sample xi. A problem uses whichever fields it needs: the
/// quadratic uses `noise`, sampled finite sums use `index`.
struct Sample {
  std::size_t index = 0;
  std::vector<double> noise;
};

enum class NoiseKind {
  gaussian,    ///< N(0, sigma^2/d) per coordinate
  rademacher,  ///< +-sigma/sqrt(d) per coordinate; bounded, same variance
};

/// Stochastic first-order oracle for f(x) = E[f(x; xi)].
///
/// Drawing a sample and evaluating it are separate so an estimator can
/// evaluate the same xi at two points, as the recursive momentum estimators
/// require.
class StochasticGradOracle {
public:
  virtual ~StochasticGradOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual double loss(const DenseVector& x) const = 0;
  virtual Sample draw(RngStream& rng) const = 0;
  /// grad f(x; xi) for a previously drawn xi.
  virtual DenseVector grad(const DenseVector& x, const Sample& xi) const = 0;
  /// Exact grad f(x). Instrumentation only; algorithms never call this.
  virtual DenseVector grad_true(const DenseVector& x) const = 0;
  /// Certified bound on E||grad f(x;xi) - grad f(x)||^2 (as sigma), if known.
  virtual std::optional<double> noise_sigma() const = 0;
  virtual double smoothness() const = 0;
  virtual DenseVector initial_point() const { return DenseVector::zeros(dim()); }

  DenseVector grad_sample(const DenseVector& x, RngStream& rng) const {
    return grad(x, draw(rng));
  }
};

/// f(x) = (1/m) sum_i f_i(x).
class FiniteSumProblem {
public:
  virtual ~FiniteSumProblem() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t num_components() const = 0;
  virtual double loss(const DenseVector& x) const = 0;
  virtual DenseVector component_grad(std::size_t i, const DenseVector& x) const = 0;
  virtual DenseVector full_grad(const DenseVector& x) const = 0;
  /// Max over components of the Lipschitz constant of grad f_i.
  virtual double smoothness() const = 0;
  virtual DenseVector initial_point() const { return DenseVector::zeros(dim()); }

protected:
  void check_component(std::size_t i, const DenseVector& x) const;
};

/// f(x) = 1/2 (x - x*)^T A (x - x*) with A diagonal, plus additive noise.
class NoisyQuadratic final : public StochasticGradOracle {
public:
  NoisyQuadratic(DenseVector curvature, DenseVector minimizer, double sigma,
                 NoiseKind noise = NoiseKind::gaussian,
                 std::optional<DenseVector> start = std::nullopt);

  std::size_t dim() const override { return minimizer_.dim(); }
  double loss(const DenseVector& x) const override;
  Sample draw(RngStream& rng) const override;
  DenseVector grad(const DenseVector& x, const Sample& xi) const override;
  DenseVector grad_true(const DenseVector& x) const override;
  std::optional<double> noise_sigma() const override { return sigma_; }
  double smoothness() const override { return max_curvature_; }
  DenseVector initial_point() const override;

  const DenseVector& curvature() const noexcept { return curvature_; }
  const DenseVector& minimizer() const noexcept { return minimizer_; }
  NoiseKind noise_kind() const noexcept { return noise_; }
  /// sup over xi of ||noise||_inf; infinite for Gaussian noise with sigma > 0.
  double noise_linf_bound() const;

private:
  DenseVector curvature_;
  DenseVector minimizer_;
  double sigma_;
  NoiseKind noise_;
  std::optional<DenseVector> start_;
  double max_curvature_;
};

/// f_i(x) = 1/2 ||B_i x - c_i||^2. The full gradient uses the averaged
/// normal equations H x - b with H = mean(B_i^T B_i), b = mean(B_i^T c_i).
class FiniteSumQuadratic final : public FiniteSumProblem {
public:
  FiniteSumQuadratic(std::vector<std::vector<double>> matrices, std::vector<DenseVector> targets,
                     std::size_t dim);

  std::size_t dim() const override { return dim_; }
  std::size_t num_components() const override { return targets_.size(); }
  double loss(const DenseVector& x) const override;
  DenseVector component_grad(std::size_t i, const DenseVector& x) const override;
  DenseVector full_grad(const DenseVector& x) const override;
  double smoothness() const override { return smoothness_; }

private:
  std::size_t dim_;
  std::size_t rows_;
  std::vector<std::vector<double>> matrices_;  // row-major rows_ x dim_
  std::vector<DenseVector> targets_;
  std::vector<double> hessian_;  // dim_ x dim_
  DenseVector linear_;
  double smoothness_;
};

/// f_i(x) = log(1 + exp(-y_i a_i^T x)) + lambda * sum_k x_k^2 / (1 + x_k^2).
class NonconvexLogistic final : public FiniteSumProblem {
public:
  NonconvexLogistic(std::vector<DenseVector> features, std::vector<double> labels,
                    double reg_lambda);

  std::size_t dim() const override { return features_.front().dim(); }
  std::size_t num_components() const override { return features_.size(); }
  double loss(const DenseVector& x) const override;
  DenseVector component_grad(std::size_t i, const DenseVector& x) const override;
  DenseVector full_grad(const DenseVector& x) const override;
  double smoothness() const override { return smoothness_; }

  double reg_lambda() const noexcept { return reg_lambda_; }

private:
  std::vector<DenseVector> features_;
  std::vector<double> labels_;
  double reg_lambda_;
  double smoothness_;
};

/// Views a finite sum as a stochastic oracle with xi = uniform component index.
class FiniteSumSampler final : public StochasticGradOracle {
public:
  explicit FiniteSumSampler(std::shared_ptr<const FiniteSumProblem> problem);

  std::size_t dim() const override { return problem_->dim(); }
  double loss(const DenseVector& x) const override { return problem_->loss(x); }
  Sample draw(RngStream& rng) const override;
  DenseVector grad(const DenseVector& x, const Sample& xi) const override {
    return problem_->component_grad(xi.index, x);
  }
  DenseVector grad_true(const DenseVector& x) const override { return problem_->full_grad(x); }
  std::optional<double> noise_sigma() const override { return std::nullopt; }
  double smoothness() const override { return problem_->smoothness(); }
  DenseVector initial_point() const override { return problem_->initial_point(); }

  const FiniteSumProblem& problem() const noexcept { return *problem_; }

private:
  std::shared_ptr<const FiniteSumProblem> problem_;
};

/// n node objectives f_j with global objective f = (1/n) sum_j f_j, plus the
/// gradient bounds certified on the envelope ball ||x - center|| <= radius.
class NodePartition {
public:
  NodePartition(std::vector<std::shared_ptr<const NoisyQuadratic>> nodes, DenseVector center,
                double envelope_radius, DenseVector start);

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t dim() const noexcept { return center_.dim(); }
  const StochasticGradOracle& node_oracle(std::size_t j) const { return *nodes_.at(j); }
  const NoisyQuadratic& node(std::size_t j) const { return *nodes_.at(j); }

  double global_loss(const DenseVector& x) const;
  DenseVector global_grad_true(const DenseVector& x) const;

  /// Bound on ||grad f_j(x; xi)||_inf over every node, sample, and envelope
  /// point. Infinite when a node has Gaussian noise.
  double bound_g_linf_sample() const noexcept { return g_linf_sample_; }
  /// Bound on ||grad f_j(x)||_2 over every node and envelope point.
  double bound_g_l2_true() const noexcept { return g_l2_true_; }

  const DenseVector& envelope_center() const noexcept { return center_; }
  double envelope_radius() const noexcept { return radius_; }
  bool in_envelope(const DenseVector& x) const;
  const DenseVector& initial_point() const noexcept { return start_; }

private:
  std::vector<std::shared_ptr<const NoisyQuadratic>> nodes_;
  DenseVector center_;
  double radius_;
  DenseVector start_;
  double g_linf_sample_ = 0.0;
  double g_l2_true_ = 0.0;
};

std::shared_ptr<NoisyQuadratic> make_noisy_quadratic(std::size_t d, double condition_number,
                                                     double sigma, std::uint64_t seed,
                                                     NoiseKind noise = NoiseKind::gaussian);

std::shared_ptr<FiniteSumQuadratic> make_finite_sum_quadratic(std::size_t d, std::size_t m,
                                                              std::uint64_t seed);

std::shared_ptr<NonconvexLogistic> make_nonconvex_logistic(std::size_t d, std::size_t n_samples,
                                                           double reg_lambda, std::uint64_t seed);

/// Shared curvature and noise for every node of a heterogeneous partition.
struct QuadraticFamily {
  std::size_t d = 10;
  double condition_number = 1.0;
  double sigma = 0.0;
  NoiseKind noise = NoiseKind::gaussian;
  double envelope_radius = 1.0;
};

/// Node minimizers x*_j = center + heterogeneity * u_j, with the u_j
/// centred so that `center` is exactly the global minimizer. heterogeneity
/// = 0 gives n identical node objectives.
NodePartition partition_heterogeneous(const QuadraticFamily& family, std::size_t n,
                                      double heterogeneity, std::uint64_t seed);

/// Partition with explicitly given node minimizers and identity curvature
/// scaled by `curvature`. The envelope is centred at the mean minimizer.
NodePartition make_partition(const std::vector<DenseVector>& minimizers, double curvature,
                             double sigma, NoiseKind noise, double envelope_radius,
                             const DenseVector& start);

/// Two nodes with minimizers +e1 and -e1 and A = I: the global minimizer is
/// 0 but the node gradients disagree in sign on coordinate 1 inside (-1, 1).
NodePartition make_sign_conflict(std::size_t d, double sigma, NoiseKind noise,
                                 double envelope_radius, const DenseVector& start);

NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseKind kind);

}  // namespace signvr
