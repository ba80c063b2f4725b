#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pvrisk/errors.hpp"
#include "pvrisk/gpr/gpr.hpp"
#include "pvrisk/simd/kernels.hpp"

namespace pvrisk::gpr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kMaxJitter = 1e-4;

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// Cholesky of K + (noise + jitter) I, escalating jitter x10 up to 1e-4.
Factorization factorize(const Eigen::MatrixXd& k, const KernelConfig& cfg) {
  double jitter = cfg.jitter;
  while (true) {
    Eigen::MatrixXd c = k;
    c.diagonal().array() += cfg.noise_variance + jitter;
    Factorization f{Eigen::LLT<Eigen::MatrixXd>(c), jitter};
    if (f.llt.info() == Eigen::Success) {
      const Eigen::VectorXd d = Eigen::MatrixXd(f.llt.matrixL()).diagonal();
      if ((d.array() > 0.0).all() && d.allFinite()) return f;
    }
    if (jitter >= kMaxJitter) throw NumericalError("gpr: covariance not positive definite after jitter escalation");
    jitter = jitter > 0.0 ? std::min(jitter * 10.0, kMaxJitter) : 1e-6;
  }
}

Eigen::MatrixXd kernel_from(const Eigen::MatrixXd& sqdist, const KernelConfig& cfg) {
  return sqdist.unaryExpr([&](double d2) { return kernel_from_sqdist(cfg, d2); });
}

double evidence_from(const Factorization& f, const Eigen::VectorXd& y, Eigen::VectorXd* alpha_out) {
  const Eigen::VectorXd alpha = f.llt.solve(y);
  const Eigen::MatrixXd l = f.llt.matrixL();
  const double half_logdet = l.diagonal().array().log().sum();
  const double n = static_cast<double>(y.size());
  if (alpha_out) *alpha_out = alpha;
  return -0.5 * y.dot(alpha) - half_logdet - 0.5 * n * kLog2Pi;
}

}  // namespace

double log_evidence(const Eigen::MatrixXd& sqdist, const Eigen::VectorXd& targets, const KernelConfig& cfg) {
  cfg.validate();
  const Factorization f = factorize(kernel_from(sqdist, cfg), cfg);
  const double v = evidence_from(f, targets, nullptr);
  if (!std::isfinite(v)) throw NumericalError("gpr: non-finite log evidence");
  return v;
}

EvidenceGradient log_evidence_gradient(const Eigen::MatrixXd& sqdist, const Eigen::VectorXd& targets,
                                       const KernelConfig& cfg) {
  cfg.validate();
  const auto n = sqdist.rows();
  Eigen::MatrixXd k(n, n), dk_l(n, n), dk_a(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const KernelDerivatives kd = kernel_derivatives(cfg, sqdist(i, j));
      k(i, j) = kd.value;
      dk_l(i, j) = kd.d_log_length;
      dk_a(i, j) = kd.d_log_alpha;
    }
  }
  const Factorization f = factorize(k, cfg);
  Eigen::VectorXd alpha;
  EvidenceGradient out;
  out.log_likelihood = evidence_from(f, targets, &alpha);
  if (!std::isfinite(out.log_likelihood)) throw NumericalError("gpr: non-finite log evidence");

  // d/dtheta log p(y) = 0.5 * tr((alpha alpha^T - C^-1) dC/dtheta)
  const Eigen::MatrixXd inv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd inner = alpha * alpha.transpose() - inv;
  out.gradient(0) = 0.5 * inner.cwiseProduct(dk_l).sum();
  out.gradient(1) = cfg.kind == KernelKind::RQ ? 0.5 * inner.cwiseProduct(dk_a).sum() : 0.0;
  out.gradient(2) = 0.5 * cfg.noise_variance * inner.trace();
  return out;
}

Standardization Standardization::fit(std::span<const double> values) {
  Standardization s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / n);
  s.scale = sd > 1e-12 ? sd : 1.0;
  return s;
}

GprModel GprModel::condition(std::vector<Vec2> inputs, std::vector<double> targets, const KernelConfig& kernel,
                             const Standardization& standardization) {
  kernel.validate();
  if (inputs.size() != targets.size()) throw InputError("gpr: inputs and targets differ in length");
  if (inputs.empty()) throw InputError("gpr: no training points");
  for (double t : targets)
    if (!std::isfinite(t)) throw InputError("gpr: non-finite target");

  GprModel m;
  m.kernel_ = kernel;
  m.standardization_ = standardization;
  m.inputs_ = std::move(inputs);
  m.targets_ = std::move(targets);
  m.points_ = PointSet(m.inputs_);

  const Eigen::MatrixXd k = kernel_matrix(kernel, m.points_);
  const Factorization f = factorize(k, kernel);
  m.kernel_.jitter = f.jitter;
  m.chol_ = f.llt.matrixL();

  Eigen::VectorXd y(static_cast<Eigen::Index>(m.targets_.size()));
  for (std::size_t i = 0; i < m.targets_.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = (m.targets_[i] - standardization.mean) / standardization.scale;
  m.alpha_ = f.llt.solve(y);
  m.log_det_half_ = m.chol_.diagonal().array().log().sum();
  return m;
}

double GprModel::log_marginal_likelihood() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(targets_.size()));
  for (std::size_t i = 0; i < targets_.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = (targets_[i] - standardization_.mean) / standardization_.scale;
  const double n = static_cast<double>(targets_.size());
  return -0.5 * y.dot(alpha_) - log_det_half_ - 0.5 * n * kLog2Pi;
}

double GprModel::predict_mean(Vec2 q) const {
  std::vector<double> k(points_.size());
  points_.squared_distances(q, k);
  for (double& v : k) v = kernel_from_sqdist(kernel_, v);
  const double m = simd::dot(k, std::span<const double>(alpha_.data(), points_.size()));
  return standardization_.mean + standardization_.scale * m;
}

Prediction GprModel::predict(Vec2 q) const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::VectorXd k(n);
  points_.squared_distances(q, std::span<double>(k.data(), points_.size()));
  for (Eigen::Index i = 0; i < n; ++i) k(i) = kernel_from_sqdist(kernel_, k(i));

  const double mean_std = simd::dot(std::span<const double>(k.data(), points_.size()),
                                    std::span<const double>(alpha_.data(), points_.size()));
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  double var_std = 1.0 - v.squaredNorm() + kernel_.noise_variance;
  var_std = std::max(0.0, var_std);

  const double s = standardization_.scale;
  return {standardization_.mean + s * mean_std, s * s * var_std};
}

double median_pairwise_distance(std::span<const Vec2> pts, std::size_t subsample, std::uint64_t seed) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (idx.size() > subsample) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < subsample; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(subsample);
  }
  std::vector<double> d;
  d.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j) d.push_back(distance(pts[idx[i]], pts[idx[j]]));
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

GprModel fit_gpr(std::vector<Vec2> inputs, std::vector<double> targets, KernelKind kind,
                 const OptimizerSettings& opt) {
  if (inputs.size() < 2) throw InputError("fit_gpr: need at least two training points");
  if (inputs.size() != targets.size()) throw InputError("fit_gpr: inputs and targets differ in length");
  for (double t : targets)
    if (!std::isfinite(t)) throw InputError("fit_gpr: non-finite target");

  const Standardization standardization = Standardization::fit(targets);
  const PointSet points(inputs);
  const Eigen::MatrixXd sqdist = squared_distance_matrix(points);
  Eigen::VectorXd y(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < targets.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = (targets[i] - standardization.mean) / standardization.scale;

  // theta = (log l, log a, log noise); bounds keep the factorization sane.
  const Eigen::Vector3d lower(std::log(1e-3), std::log(1e-3), std::log(1e-8));
  const Eigen::Vector3d upper(std::log(1e4), std::log(1e4), std::log(1e2));
  Eigen::Vector3d theta(std::log(median_pairwise_distance(inputs, opt.length_scale_subsample, opt.seed)),
                        std::log(opt.initial_alpha), std::log(opt.initial_noise));
  theta = theta.cwiseMax(lower).cwiseMin(upper);

  const auto config_of = [&](const Eigen::Vector3d& th) {
    KernelConfig c;
    c.kind = kind;
    c.length_scale = std::exp(th(0));
    c.rq_alpha = std::exp(th(1));
    c.noise_variance = std::exp(th(2));
    c.jitter = opt.jitter;
    return c;
  };

  Eigen::Vector3d m1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d m2 = Eigen::Vector3d::Zero();
  std::vector<double> trace;
  double best_loss = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_theta = theta;

  for (int it = 0; it < std::max(opt.iterations, 0); ++it) {
    const EvidenceGradient eg = log_evidence_gradient(sqdist, y, config_of(theta));
    const double loss = -eg.log_likelihood;
    trace.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best_theta = theta;
    }
    const int w = opt.early_stop_window;
    if (w > 0 && static_cast<int>(trace.size()) > w &&
        trace[trace.size() - 1 - static_cast<std::size_t>(w)] - loss < opt.early_stop_tolerance)
      break;

    Eigen::Vector3d grad = -eg.gradient;
    if (kind == KernelKind::RBF) grad(1) = 0.0;
    const double t = static_cast<double>(it + 1);
    m1 = opt.beta1 * m1 + (1.0 - opt.beta1) * grad;
    m2 = opt.beta2 * m2 + (1.0 - opt.beta2) * grad.cwiseProduct(grad);
    const Eigen::Vector3d mhat = m1 / (1.0 - std::pow(opt.beta1, t));
    const Eigen::Vector3d vhat = m2 / (1.0 - std::pow(opt.beta2, t));
    theta -= opt.learning_rate * mhat.cwiseQuotient((vhat.array().sqrt() + opt.epsilon).matrix());
    theta = theta.cwiseMax(lower).cwiseMin(upper);
  }
  if (trace.empty()) best_theta = theta;

  GprModel model = GprModel::condition(std::move(inputs), std::move(targets), config_of(best_theta), standardization);
  if (!std::isfinite(model.log_marginal_likelihood())) throw NumericalError("fit_gpr: non-finite final loss");
  model.set_loss_trace(std::move(trace));
  return model;
}

}  // namespace pvrisk::gpr
