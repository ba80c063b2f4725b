#include <cmath>

#include "pvrisk/errors.hpp"
#include "pvrisk/gpr/gpr.hpp"
#include "pvrisk/simd/kernels.hpp"

namespace pvrisk::gpr {

std::string_view to_string(KernelKind k) { return k == KernelKind::RBF ? "rbf" : "rq"; }

std::optional<KernelKind> parse_kernel_kind(std::string_view s) {
  if (s == "rbf" || s == "RBF") return KernelKind::RBF;
  if (s == "rq" || s == "RQ") return KernelKind::RQ;
  return std::nullopt;
}

void KernelConfig::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) throw InputError("kernel: length_scale must be > 0");
  if (kind == KernelKind::RQ && (!(rq_alpha > 0.0) || !std::isfinite(rq_alpha)))
    throw InputError("kernel: rq_alpha must be > 0");
  if (!(noise_variance >= 0.0)) throw InputError("kernel: noise_variance must be >= 0");
  if (!(jitter >= 0.0)) throw InputError("kernel: jitter must be >= 0");
}

double kernel_from_sqdist(const KernelConfig& cfg, double d2) {
  const double l2 = cfg.length_scale * cfg.length_scale;
  if (cfg.kind == KernelKind::RBF) return std::exp(-0.5 * d2 / l2);
  const double r = d2 / (2.0 * cfg.rq_alpha * l2);
  return std::exp(-cfg.rq_alpha * std::log1p(r));
}

double kernel_eval(const KernelConfig& cfg, Vec2 a, Vec2 b) { return kernel_from_sqdist(cfg, (a - b).squared_norm()); }

KernelDerivatives kernel_derivatives(const KernelConfig& cfg, double d2) {
  KernelDerivatives out;
  const double l2 = cfg.length_scale * cfg.length_scale;
  const double s = d2 / l2;
  if (cfg.kind == KernelKind::RBF) {
    out.value = std::exp(-0.5 * s);
    out.d_log_length = out.value * s;
    return out;
  }
  const double a = cfg.rq_alpha;
  const double r = s / (2.0 * a);
  const double log1p_r = std::log1p(r);
  out.value = std::exp(-a * log1p_r);
  out.d_log_length = out.value * s / (1.0 + r);
  out.d_log_alpha = out.value * a * (r / (1.0 + r) - log1p_r);
  return out;
}

PointSet::PointSet(std::span<const Vec2> pts) {
  xs.reserve(pts.size());
  ys.reserve(pts.size());
  for (const Vec2& p : pts) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
}

void PointSet::squared_distances(Vec2 q, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  simd::add_squared_diff(xs, q.x, out);
  simd::add_squared_diff(ys, q.y, out);
}

Eigen::MatrixXd squared_distance_matrix(const PointSet& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd d2(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    pts.squared_distances(pts[static_cast<std::size_t>(j)], std::span<double>(d2.col(j).data(), pts.size()));
  return d2;
}

Eigen::MatrixXd kernel_matrix(const KernelConfig& cfg, const PointSet& pts) {
  Eigen::MatrixXd k = squared_distance_matrix(pts);
  return k.unaryExpr([&](double d2) { return kernel_from_sqdist(cfg, d2); });
}

}  // namespace pvrisk::gpr
