// SPDX-License-Identifier: Apache-2.0

#include "signvr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "signvr/errors.hpp"

namespace signvr {

namespace {

// Numerically stable log(1 + exp(t)).
double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

// Logistic sigmoid 1 / (1 + exp(-t)).
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

DenseVector log_spaced_curvature(std::size_t d, double condition_number) {
  DenseVector a(d, 1.0);
  if (d == 1) return a;
  const double log_kappa = std::log(condition_number);
  for (std::size_t k = 0; k < d; ++k) {
    a[k] = std::exp(log_kappa * static_cast<double>(k) / static_cast<double>(d - 1));
  }
  a[d - 1] = condition_number;
  return a;
}

DenseVector gaussian_vector(std::size_t d, double scale, RngStream& rng) {
  DenseVector v(d);
  for (std::size_t k = 0; k < d; ++k) v[k] = scale * rng.normal();
  return v;
}

}  // namespace

void FiniteSumProblem::check_component(std::size_t i, const DenseVector& x) const {
  if (i >= num_components()) {
    throw InvalidInput("component index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(num_components()) + ")");
  }
  if (x.dim() != dim()) throw InvalidInput("component_grad: dimension mismatch");
}

// ---------------------------------------------------------------------------
// NoisyQuadratic

NoisyQuadratic::NoisyQuadratic(DenseVector curvature, DenseVector minimizer, double sigma,
                               NoiseKind noise, std::optional<DenseVector> start)
    : curvature_(std::move(curvature)),
      minimizer_(std::move(minimizer)),
      sigma_(sigma),
      noise_(noise),
      start_(std::move(start)),
      max_curvature_(norm_linf(curvature_)) {
  require_same_dim(curvature_, minimizer_, "NoisyQuadratic");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidInput("NoisyQuadratic: sigma must be finite and >= 0");
  }
  for (double a : curvature_) {
    if (!(a > 0.0)) throw InvalidInput("NoisyQuadratic: curvature must be positive");
  }
  if (start_) require_same_dim(*start_, minimizer_, "NoisyQuadratic start");
}

double NoisyQuadratic::loss(const DenseVector& x) const {
  require_same_dim(x, minimizer_, "NoisyQuadratic::loss");
  double s = 0.0;
  for (std::size_t k = 0; k < x.dim(); ++k) {
    const double r = x[k] - minimizer_[k];
    s += curvature_[k] * r * r;
  }
  return 0.5 * s;
}

Sample NoisyQuadratic::draw(RngStream& rng) const {
  Sample xi;
  if (sigma_ == 0.0) return xi;
  const double per_coord = sigma_ / std::sqrt(static_cast<double>(dim()));
  xi.noise.resize(dim());
  for (double& z : xi.noise) {
    z = noise_ == NoiseKind::gaussian ? per_coord * rng.normal()
                                      : (rng.bernoulli(0.5) ? per_coord : -per_coord);
  }
  return xi;
}

DenseVector NoisyQuadratic::grad(const DenseVector& x, const Sample& xi) const {
  DenseVector g = grad_true(x);
  if (!xi.noise.empty()) {
    if (xi.noise.size() != g.dim()) throw InvalidInput("NoisyQuadratic: sample dimension mismatch");
    for (std::size_t k = 0; k < g.dim(); ++k) g[k] += xi.noise[k];
  }
  return g;
}

DenseVector NoisyQuadratic::grad_true(const DenseVector& x) const {
  require_same_dim(x, minimizer_, "NoisyQuadratic::grad_true");
  DenseVector g(x.dim());
  for (std::size_t k = 0; k < x.dim(); ++k) g[k] = curvature_[k] * (x[k] - minimizer_[k]);
  return g;
}

DenseVector NoisyQuadratic::initial_point() const {
  return start_ ? *start_ : DenseVector::zeros(dim());
}

double NoisyQuadratic::noise_linf_bound() const {
  if (sigma_ == 0.0) return 0.0;
  if (noise_ == NoiseKind::gaussian) return std::numeric_limits<double>::infinity();
  return sigma_ / std::sqrt(static_cast<double>(dim()));
}

// ---------------------------------------------------------------------------
// FiniteSumQuadratic

FiniteSumQuadratic::FiniteSumQuadratic(std::vector<std::vector<double>> matrices,
                                       std::vector<DenseVector> targets, std::size_t dim)
    : dim_(dim), matrices_(std::move(matrices)), targets_(std::move(targets)) {
  if (dim_ == 0 || targets_.empty() || matrices_.size() != targets_.size()) {
    throw InvalidInput("FiniteSumQuadratic: need m >= 1 matching matrices and targets");
  }
  rows_ = targets_.front().dim();
  const std::size_t m = targets_.size();
  hessian_.assign(dim_ * dim_, 0.0);
  linear_ = DenseVector::zeros(dim_);
  smoothness_ = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& b = matrices_[i];
    if (b.size() != rows_ * dim_ || targets_[i].dim() != rows_) {
      throw InvalidInput("FiniteSumQuadratic: inconsistent component shapes");
    }
    double frob_sq = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double* row = &b[r * dim_];
      for (std::size_t p = 0; p < dim_; ++p) {
        frob_sq += row[p] * row[p];
        linear_[p] += row[p] * targets_[i][r];
        for (std::size_t q = 0; q < dim_; ++q) hessian_[p * dim_ + q] += row[p] * row[q];
      }
    }
    // ||B||_F^2 >= lambda_max(B^T B): a certified Lipschitz constant.
    smoothness_ = std::max(smoothness_, frob_sq);
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  for (double& h : hessian_) h *= inv_m;
  linear_ *= inv_m;
}

double FiniteSumQuadratic::loss(const DenseVector& x) const {
  if (x.dim() != dim_) throw InvalidInput("FiniteSumQuadratic::loss: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    const auto& b = matrices_[i];
    for (std::size_t r = 0; r < rows_; ++r) {
      double res = -targets_[i][r];
      for (std::size_t p = 0; p < dim_; ++p) res += b[r * dim_ + p] * x[p];
      total += 0.5 * res * res;
    }
  }
  return total / static_cast<double>(targets_.size());
}

DenseVector FiniteSumQuadratic::component_grad(std::size_t i, const DenseVector& x) const {
  check_component(i, x);
  const auto& b = matrices_[i];
  DenseVector g = DenseVector::zeros(dim_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* row = &b[r * dim_];
    double res = -targets_[i][r];
    for (std::size_t p = 0; p < dim_; ++p) res += row[p] * x[p];
    for (std::size_t p = 0; p < dim_; ++p) g[p] += row[p] * res;
  }
  return g;
}

DenseVector FiniteSumQuadratic::full_grad(const DenseVector& x) const {
  if (x.dim() != dim_) throw InvalidInput("FiniteSumQuadratic::full_grad: dimension mismatch");
  DenseVector g(dim_);
  for (std::size_t p = 0; p < dim_; ++p) {
    double s = -linear_[p];
    for (std::size_t q = 0; q < dim_; ++q) s += hessian_[p * dim_ + q] * x[q];
    g[p] = s;
  }
  return g;
}

// ---------------------------------------------------------------------------
// NonconvexLogistic

NonconvexLogistic::NonconvexLogistic(std::vector<DenseVector> features,
                                     std::vector<double> labels, double reg_lambda)
    : features_(std::move(features)), labels_(std::move(labels)), reg_lambda_(reg_lambda) {
  if (features_.empty() || features_.size() != labels_.size()) {
    throw InvalidInput("NonconvexLogistic: need n_samples >= 1 features with matching labels");
  }
  if (!(reg_lambda >= 0.0) || !std::isfinite(reg_lambda)) {
    throw InvalidInput("NonconvexLogistic: reg_lambda must be finite and >= 0");
  }
  double max_sq = 0.0;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    require_same_dim(features_[i], features_.front(), "NonconvexLogistic features");
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      throw InvalidInput("NonconvexLogistic: labels must be +-1");
    }
    const double n2 = norm_l2(features_[i]);
    max_sq = std::max(max_sq, n2 * n2);
  }
  // sigmoid' <= 1/4; (x^2/(1+x^2))'' = (2 - 6x^2)/(1+x^2)^3 lies in [-1/2, 2].
  smoothness_ = 0.25 * max_sq + 2.0 * reg_lambda_;
}

double NonconvexLogistic::loss(const DenseVector& x) const {
  require_same_dim(x, features_.front(), "NonconvexLogistic::loss");
  double data = 0.0;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    data += softplus(-labels_[i] * dot(features_[i], x));
  }
  double reg = 0.0;
  for (double xk : x) reg += xk * xk / (1.0 + xk * xk);
  return data / static_cast<double>(features_.size()) + reg_lambda_ * reg;
}

DenseVector NonconvexLogistic::component_grad(std::size_t i, const DenseVector& x) const {
  check_component(i, x);
  const auto& a = features_[i];
  const double y = labels_[i];
  const double coef = -y * sigmoid(-y * dot(a, x));
  DenseVector g(x.dim());
  for (std::size_t k = 0; k < x.dim(); ++k) {
    const double q = 1.0 + x[k] * x[k];
    g[k] = coef * a[k] + reg_lambda_ * 2.0 * x[k] / (q * q);
  }
  return g;
}

DenseVector NonconvexLogistic::full_grad(const DenseVector& x) const {
  require_same_dim(x, features_.front(), "NonconvexLogistic::full_grad");
  const std::size_t d = x.dim();
  std::vector<double> acc(d, 0.0);
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& a = features_[i];
    const double y = labels_[i];
    const double coef = -y * sigmoid(-y * dot(a, x));
    for (std::size_t k = 0; k < d; ++k) acc[k] += coef * a[k];
  }
  const double m = static_cast<double>(features_.size());
  DenseVector g(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double q = 1.0 + x[k] * x[k];
    g[k] = acc[k] / m + reg_lambda_ * 2.0 * x[k] / (q * q);
  }
  return g;
}

// ---------------------------------------------------------------------------
// FiniteSumSampler

FiniteSumSampler::FiniteSumSampler(std::shared_ptr<const FiniteSumProblem> problem)
    : problem_(std::move(problem)) {
  if (!problem_) throw InvalidInput("FiniteSumSampler: null problem");
}

Sample FiniteSumSampler::draw(RngStream& rng) const {
  Sample xi;
  xi.index = static_cast<std::size_t>(rng.uniform_index(problem_->num_components()));
  return xi;
}

// ---------------------------------------------------------------------------
// NodePartition

NodePartition::NodePartition(std::vector<std::shared_ptr<const NoisyQuadratic>> nodes,
                             DenseVector center_hint, double envelope_radius, DenseVector start)
    : nodes_(std::move(nodes)), radius_(envelope_radius), start_(std::move(start)) {
  if (nodes_.empty()) throw InvalidInput("NodePartition: need at least one node");
  if (!(envelope_radius > 0.0)) throw InvalidInput("NodePartition: envelope radius must be > 0");
  const std::size_t d = nodes_.front()->dim();
  require_same_dim(center_hint, nodes_.front()->minimizer(), "NodePartition center");
  require_same_dim(start_, center_hint, "NodePartition start");

  // Global minimizer of (1/n) sum_j 1/2 (x - x*_j)^T A_j (x - x*_j) for diagonal A_j.
  center_ = DenseVector::zeros(d);
  for (std::size_t k = 0; k < d; ++k) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& node : nodes_) {
      num += node->curvature()[k] * node->minimizer()[k];
      den += node->curvature()[k];
    }
    center_[k] = num / den;
  }
  // The exact centre can differ from the hint by rounding; keep the hint if
  // it is that close so callers can pass a clean value like 0.
  if (squared_distance(center_, center_hint) <= 1e-24 * (1.0 + dot(center_hint, center_hint))) {
    center_ = std::move(center_hint);
  }

  for (const auto& node : nodes_) {
    require_same_dim(node->minimizer(), center_, "NodePartition node");
    const DenseVector offset = center_ - node->minimizer();
    const double lambda_max = node->smoothness();
    g_l2_true_ = std::max(g_l2_true_, lambda_max * (radius_ + norm_l2(offset)));
    // |a_k (x_k - x*_jk)| <= a_k (|x_k - c_k| + |c_k - x*_jk|) and |x_k - c_k| <= rho.
    double linf = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      linf = std::max(linf, node->curvature()[k] * (radius_ + std::abs(offset[k])));
    }
    g_linf_sample_ = std::max(g_linf_sample_, linf + node->noise_linf_bound());
  }
}

double NodePartition::global_loss(const DenseVector& x) const {
  double s = 0.0;
  for (const auto& node : nodes_) s += node->loss(x);
  return s / static_cast<double>(nodes_.size());
}

DenseVector NodePartition::global_grad_true(const DenseVector& x) const {
  DenseVector g = DenseVector::zeros(dim());
  for (const auto& node : nodes_) g += node->grad_true(x);
  g *= 1.0 / static_cast<double>(nodes_.size());
  return g;
}

bool NodePartition::in_envelope(const DenseVector& x) const {
  return squared_distance(x, center_) <= radius_ * radius_;
}

// ---------------------------------------------------------------------------
// Constructors

std::shared_ptr<NoisyQuadratic> make_noisy_quadratic(std::size_t d, double condition_number,
                                                     double sigma, std::uint64_t seed,
                                                     NoiseKind noise) {
  if (d < 1) throw InvalidInput("make_noisy_quadratic: d must be >= 1");
  if (!(condition_number >= 1.0) || !std::isfinite(condition_number)) {
    throw InvalidInput("make_noisy_quadratic: condition_number must be >= 1");
  }
  if (!(sigma >= 0.0)) throw InvalidInput("make_noisy_quadratic: sigma must be >= 0");
  RngStream rng = RngStream(seed).fork("noisy_quadratic/minimizer");
  return std::make_shared<NoisyQuadratic>(log_spaced_curvature(d, condition_number),
                                          gaussian_vector(d, 1.0, rng), sigma, noise);
}

std::shared_ptr<FiniteSumQuadratic> make_finite_sum_quadratic(std::size_t d, std::size_t m,
                                                              std::uint64_t seed) {
  if (d < 1 || m < 1) throw InvalidInput("make_finite_sum_quadratic: d and m must be >= 1");
  RngStream rng = RngStream(seed).fork("finite_sum_quadratic");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<std::vector<double>> matrices(m, std::vector<double>(d * d));
  std::vector<DenseVector> targets;
  targets.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (double& b : matrices[i]) b = scale * rng.normal();
    targets.push_back(gaussian_vector(d, 1.0, rng));
  }
  return std::make_shared<FiniteSumQuadratic>(std::move(matrices), std::move(targets), d);
}

std::shared_ptr<NonconvexLogistic> make_nonconvex_logistic(std::size_t d, std::size_t n_samples,
                                                           double reg_lambda, std::uint64_t seed) {
  if (d < 1 || n_samples < 1) {
    throw InvalidInput("make_nonconvex_logistic: d and n_samples must be >= 1");
  }
  if (!(reg_lambda >= 0.0)) throw InvalidInput("make_nonconvex_logistic: reg_lambda must be >= 0");
  RngStream rng = RngStream(seed).fork("nonconvex_logistic");
  const DenseVector teacher = gaussian_vector(d, 1.0, rng);
  std::vector<DenseVector> features;
  std::vector<double> labels;
  features.reserve(n_samples);
  labels.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    DenseVector a = gaussian_vector(d, 1.0, rng);
    double y = dot(a, teacher) >= 0.0 ? 1.0 : -1.0;
    // 10% label noise keeps the data non-separable so a finite minimizer exists.
    if (rng.bernoulli(0.1)) y = -y;
    features.push_back(std::move(a));
    labels.push_back(y);
  }
  return std::make_shared<NonconvexLogistic>(std::move(features), std::move(labels), reg_lambda);
}

NodePartition make_partition(const std::vector<DenseVector>& minimizers, double curvature,
                             double sigma, NoiseKind noise, double envelope_radius,
                             const DenseVector& start) {
  if (minimizers.empty()) throw InvalidInput("make_partition: need at least one node");
  if (!(curvature > 0.0)) throw InvalidInput("make_partition: curvature must be > 0");
  const std::size_t d = minimizers.front().dim();
  std::vector<std::shared_ptr<const NoisyQuadratic>> nodes;
  DenseVector mean = DenseVector::zeros(d);
  for (const auto& xs : minimizers) {
    nodes.push_back(std::make_shared<NoisyQuadratic>(DenseVector(d, curvature), xs, sigma, noise));
    mean += xs;
  }
  mean *= 1.0 / static_cast<double>(minimizers.size());
  return NodePartition(std::move(nodes), std::move(mean), envelope_radius, start);
}

NodePartition partition_heterogeneous(const QuadraticFamily& family, std::size_t n,
                                      double heterogeneity, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("partition_heterogeneous: n must be >= 1");
  if (!(heterogeneity >= 0.0) || !std::isfinite(heterogeneity)) {
    throw InvalidInput("partition_heterogeneous: heterogeneity must be finite and >= 0");
  }
  if (family.d < 1 || !(family.condition_number >= 1.0) || !(family.sigma >= 0.0)) {
    throw InvalidInput("partition_heterogeneous: invalid quadratic family");
  }
  const std::size_t d = family.d;
  RngStream root = RngStream(seed).fork("partition_heterogeneous");
  RngStream center_rng = root.fork("center");
  const DenseVector center = gaussian_vector(d, 1.0, center_rng);

  std::vector<DenseVector> spread;
  DenseVector mean_spread = DenseVector::zeros(d);
  for (std::size_t j = 0; j < n; ++j) {
    RngStream node_rng = root.fork(j);
    spread.push_back(gaussian_vector(d, 1.0, node_rng));
    mean_spread += spread.back();
  }
  mean_spread *= 1.0 / static_cast<double>(n);

  const DenseVector curvature = log_spaced_curvature(d, family.condition_number);
  std::vector<std::shared_ptr<const NoisyQuadratic>> nodes;
  for (std::size_t j = 0; j < n; ++j) {
    DenseVector xs = center;
    if (heterogeneity > 0.0) xs.axpy(heterogeneity, spread[j] - mean_spread);
    nodes.push_back(std::make_shared<NoisyQuadratic>(curvature, std::move(xs), family.sigma,
                                                     family.noise));
  }
  DenseVector start = center;
  for (std::size_t k = 0; k < d; ++k) {
    start[k] += 0.5 * family.envelope_radius / std::sqrt(static_cast<double>(d));
  }
  return NodePartition(std::move(nodes), center, family.envelope_radius, std::move(start));
}

NodePartition make_sign_conflict(std::size_t d, double sigma, NoiseKind noise,
                                 double envelope_radius, const DenseVector& start) {
  if (d < 1) throw InvalidInput("make_sign_conflict: d must be >= 1");
  DenseVector e1 = DenseVector::unit(d, 0);
  return make_partition({e1, -1.0 * e1}, 1.0, sigma, noise, envelope_radius, start);
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "rademacher") return NoiseKind::rademacher;
  throw InvalidInput("unknown noise kind '" + name + "'");
}

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::gaussian ? "gaussian" : "rademacher";
}

}  // namespace signvr
