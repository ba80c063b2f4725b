#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include "pvrisk/core/dataset.hpp"
#include "pvrisk/core/path.hpp"
#include "pvrisk/core/types.hpp"

namespace pvrisk::gpr {

enum class KernelKind { RBF, RQ };

std::string_view to_string(KernelKind k);
std::optional<KernelKind> parse_kernel_kind(std::string_view s);

/// Unit-amplitude stationary kernel over 2-D positions plus observation
/// noise. RBF: exp(-d^2 / (2 l^2)); RQ: (1 + d^2 / (2 a l^2))^(-a).
struct KernelConfig {
  KernelKind kind = KernelKind::RQ;
  double length_scale = 1.0;    // m
  double rq_alpha = 1.0;        // RQ only
  double noise_variance = 0.1;  // in standardized target units
  double jitter = 1e-6;

  /// Throws InputError on non-positive scale/alpha or negative noise.
  void validate() const;
};

double kernel_from_sqdist(const KernelConfig& cfg, double d2);
double kernel_eval(const KernelConfig& cfg, Vec2 a, Vec2 b);

/// Kernel value and its derivatives with respect to log(length_scale) and
/// log(rq_alpha) (zero for RBF).
struct KernelDerivatives {
  double value = 0.0;
  double d_log_length = 0.0;
  double d_log_alpha = 0.0;
};
KernelDerivatives kernel_derivatives(const KernelConfig& cfg, double d2);

/// Structure-of-arrays point set; rows feed the SIMD distance kernels.
struct PointSet {
  std::vector<double> xs;
  std::vector<double> ys;

  PointSet() = default;
  explicit PointSet(std::span<const Vec2> pts);
  std::size_t size() const { return xs.size(); }
  Vec2 operator[](std::size_t i) const { return {xs[i], ys[i]}; }

  /// out[i] = |p_i - q|^2
  void squared_distances(Vec2 q, std::span<double> out) const;
};

Eigen::MatrixXd squared_distance_matrix(const PointSet& pts);

/// Kernel matrix without noise or jitter.
Eigen::MatrixXd kernel_matrix(const KernelConfig& cfg, const PointSet& pts);

/// Log evidence and its gradient with respect to
/// (log length_scale, log rq_alpha, log noise_variance).
struct EvidenceGradient {
  double log_likelihood = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};

/// Closed-form Gaussian log evidence of targets under K + (noise+jitter) I.
/// Throws NumericalError if the covariance is not positive definite.
double log_evidence(const Eigen::MatrixXd& sqdist, const Eigen::VectorXd& targets, const KernelConfig& cfg);
EvidenceGradient log_evidence_gradient(const Eigen::MatrixXd& sqdist, const Eigen::VectorXd& targets,
                                       const KernelConfig& cfg);

/// Affine target normalization; the GP works on (y - mean) / scale.
struct Standardization {
  double mean = 0.0;
  double scale = 1.0;

  static Standardization fit(std::span<const double> values);
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct OptimizerSettings {
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int iterations = 200;
  double early_stop_tolerance = 1e-4;  // loss improvement over the window
  int early_stop_window = 10;
  double jitter = 1e-6;
  double initial_noise = 0.1;
  double initial_alpha = 1.0;
  std::size_t length_scale_subsample = 200;
  std::uint64_t seed = 0;  // median-distance subsample
};

/// Exact GP posterior over one velocity component.
class GprModel {
 public:
  /// Conditions on the data with fixed hyperparameters. Jitter is escalated
  /// by factors of 10 up to 1e-4 if the factorization fails.
  static GprModel condition(std::vector<Vec2> inputs, std::vector<double> targets, const KernelConfig& kernel,
                            const Standardization& standardization);

  const KernelConfig& kernel() const { return kernel_; }
  const Standardization& standardization() const { return standardization_; }
  const std::vector<Vec2>& train_inputs() const { return inputs_; }
  const std::vector<double>& train_targets() const { return targets_; }
  const Eigen::MatrixXd& chol_factor() const { return chol_; }
  const Eigen::VectorXd& alpha_vector() const { return alpha_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }
  std::size_t size() const { return inputs_.size(); }

  /// Log evidence of the standardized targets.
  double log_marginal_likelihood() const;

  /// Predictive mean and variance (observation noise included), in target
  /// units.
  Prediction predict(Vec2 q) const;
  double predict_mean(Vec2 q) const;

  void set_loss_trace(std::vector<double> trace) { loss_trace_ = std::move(trace); }

 private:
  KernelConfig kernel_;
  Standardization standardization_;
  std::vector<Vec2> inputs_;
  std::vector<double> targets_;
  PointSet points_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double log_det_half_ = 0.0;
  std::vector<double> loss_trace_;
};

/// Median pairwise distance of a seeded subsample (at most `subsample`
/// points).
double median_pairwise_distance(std::span<const Vec2> pts, std::size_t subsample, std::uint64_t seed);

/// Adam on (log l, log a, log noise) minimizing the negative log evidence.
/// Returns the model at the lowest loss seen; loss_trace holds one entry per
/// iteration.
GprModel fit_gpr(std::vector<Vec2> inputs, std::vector<double> targets, KernelKind kind,
                 const OptimizerSettings& opt = {});

struct GprModelPair {
  GprModel gp_x;
  GprModel gp_y;
  Direction direction = Direction::North;
  Maneuver maneuver = Maneuver::Straight;
};

enum class RolloutMode { PosteriorMean, Sample };

struct RolloutConfig {
  double dt = 0.1;
  int steps = 30;
  RolloutMode mode = RolloutMode::PosteriorMean;
  std::uint64_t seed = 0;
};

/// Euler integration of the velocity field: v_j from the GP pair at p_j,
/// p_{j+1} = p_j + v_j dt.
PredictedPath rollout(const GprModelPair& pair, Vec2 start, const RolloutConfig& cfg);

/// Twelve cells indexed by (entering direction, maneuver); absent when no
/// training data.
class ClusterModels {
 public:
  static constexpr std::size_t kCells = 12;
  static std::size_t cell(Direction d, Maneuver m) { return static_cast<std::size_t>(index_of(d) * 3 + index_of(m)); }

  const GprModelPair* get(Direction d, Maneuver m) const;
  void set(GprModelPair pair);
  std::size_t present() const;
  const std::array<std::optional<GprModelPair>, kCells>& cells() const { return pairs_; }

 private:
  std::array<std::optional<GprModelPair>, kCells> pairs_;
};

struct ClusterTrainingOptions {
  KernelKind kind = KernelKind::RQ;
  std::size_t max_points = 2000;
  std::uint64_t seed = 0;
  OptimizerSettings optimizer;
};

/// Training points of one cluster: valid positions with observed velocities,
/// uniformly subsampled to `max_points` with a fixed seed.
struct ClusterData {
  std::vector<Vec2> positions;
  std::vector<double> vx;
  std::vector<double> vy;
};
ClusterData collect_cluster_data(const std::vector<const Trajectory*>& vehicles, Direction d, Maneuver m,
                                 std::size_t max_points, std::uint64_t seed);

ClusterModels train_cluster_models(const std::vector<const Trajectory*>& vehicles, const ClusterTrainingOptions& opt);
ClusterModels train_cluster_models(const Dataset& dataset, const ClusterTrainingOptions& opt);

}  // namespace pvrisk::gpr
