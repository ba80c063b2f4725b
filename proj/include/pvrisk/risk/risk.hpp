#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "pvrisk/core/path.hpp"
#include "pvrisk/core/types.hpp"
#include "pvrisk/gpr/gpr.hpp"
#include "pvrisk/maneuver/maneuver.hpp"

namespace pvrisk::risk {

struct KinematicState {
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  double ax = 0.0, ay = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
  bool finite() const;
};

/// State at `index` (a valid point). Acceleration is the backward difference
/// of velocity against the previous valid point, zero if there is none.
KinematicState state_at(const Trajectory& traj, std::size_t index);

/// points[j] = p0 + v * j dt
PredictedPath predict_pedestrian(const KinematicState& s, double dt, int steps);

/// points[j] = p0 + v t + a t^2 / 2 with t = j dt
PredictedPath dynamic_model_predict(const KinematicState& s, double dt, int steps);

struct ConflictPoint {
  Vec2 point;
  double t_vehicle = 0.0;
  double t_pedestrian = 0.0;
  std::size_t vehicle_index = 0;
  std::size_t pedestrian_index = 0;
};

/// Among index pairs (j, k) closer than `radius`, the one with the smallest
/// |j - k|, then smallest j, then smallest k. Throws InputError if the paths
/// differ in dt or length.
std::optional<ConflictPoint> find_conflict_point(const PredictedPath& vehicle, const PredictedPath& pedestrian,
                                                 double radius);

double maneuver_risk(double t_vehicle, double t_pedestrian);
double maneuver_risk(const std::optional<ConflictPoint>& conflict);

struct ConflictAssessment {
  Maneuver maneuver = Maneuver::Straight;
  std::optional<Vec2> conflict_point;
  double t_vehicle = 0.0;
  double t_pedestrian = 0.0;
  double risk = 0.0;
  bool model_missing = false;
};

struct RiskProfile {
  double t = 0.0;
  std::array<ConflictAssessment, 3> assessments{};
  maneuver::ManeuverDistribution maneuver_probs;
  double risk = 0.0;
  std::optional<double> ttc_baseline;
};

/// sum_i risks[i] * p_i in left, right, straight order.
double mix_risk(const std::array<double, 3>& risks, const maneuver::ManeuverDistribution& probs);

struct RiskConfig {
  gpr::RolloutConfig rollout;
  double radius = 1.0;
  maneuver::FeatureLayout layout;
};

/// Everything about a vehicle frame that does not depend on the pedestrian:
/// one rollout per maneuver with a model, and the maneuver probabilities.
struct VehicleOutlook {
  double t = 0.0;
  std::array<std::optional<PredictedPath>, 3> paths;
  maneuver::ManeuverDistribution probs;
};

/// Throws InputError if no cluster model exists for the entering direction.
VehicleOutlook vehicle_outlook(const TrackPoint& vehicle, Direction entering, const gpr::ClusterModels& models,
                               const maneuver::ForestModel& forest, const RiskConfig& cfg);

RiskProfile assess(const VehicleOutlook& outlook, const KinematicState& pedestrian, const RiskConfig& cfg);

/// Throws InputError when the forest is missing or untrained.
RiskProfile estimate_risk(const TrackPoint& vehicle, Direction entering, const KinematicState& pedestrian,
                          const gpr::ClusterModels& models, const maneuver::ForestModel* forest,
                          const RiskConfig& cfg);

struct PredictionError {
  std::vector<double> distances;
  double mean = 0.0;
  double std = 0.0;  // population
};

PredictionError trajectory_error(std::span<const Vec2> predicted, std::span<const Vec2> actual);

}  // namespace pvrisk::risk
