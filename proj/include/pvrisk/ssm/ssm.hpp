#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pvrisk/core/dataset.hpp"
#include "pvrisk/risk/risk.hpp"

namespace pvrisk::ssm {

/// Smallest t >= 0 at which the constant-velocity extrapolations come within
/// `radius`; 0 if already within it; nullopt if they never do.
std::optional<double> compute_ttc(const risk::KinematicState& vehicle, const risk::KinematicState& pedestrian,
                                  double radius);

struct ZoneOccupancy {
  double enter = 0.0;
  double exit = 0.0;
};

/// First entry into and last exit from the disc, interpolated linearly along
/// the valid points; nullopt if the path never touches the disc.
std::optional<ZoneOccupancy> zone_occupancy(const Trajectory& traj, Vec2 center, double radius);

/// Closest approach between the two valid-point polylines.
struct ClosestApproach {
  Vec2 on_a;
  Vec2 on_b;
  double distance = 0.0;
};
std::optional<ClosestApproach> closest_approach(const Trajectory& a, const Trajectory& b);

struct ConflictEvent {
  std::string vehicle_id;
  std::string pedestrian_id;
  double window_start = 0.0;  // first agent leaves the zone
  double window_end = 0.0;    // second agent enters the zone
  double pet = 0.0;
  Vec2 zone_center;
  bool vehicle_first = true;
};

/// The zone is a disc around the midpoint of the closest approach. PET is the
/// time from the first agent's exit to the second agent's entry, or 0 when
/// the two occupancies overlap.
std::optional<ConflictEvent> compute_pet(const Trajectory& vehicle, const Trajectory& pedestrian,
                                         double zone_radius = 1.0);

bool co_present(const Trajectory& a, const Trajectory& b);

/// Ground-truth conflicts among co-present vehicle-pedestrian pairs, sorted by
/// (vehicle id, pedestrian id).
std::vector<ConflictEvent> identify_conflicts_pet(const Dataset& dataset, double threshold = 3.0,
                                                  double zone_radius = 1.0);

struct PairStream {
  std::string vehicle_id;
  std::string pedestrian_id;
  std::vector<double> risks;
};

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct DetectionReport {
  double sensitivity = 0.0;
  double false_alarm_rate = 0.0;
  double auc = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_negatives = 0;
  bool sensitivity_undefined = false;
  bool false_alarm_rate_undefined = false;
  bool auc_undefined = false;
  std::vector<RocPoint> roc;
};

/// One sample per pair scored by its maximum risk; predicted positive at
/// score > 0. Pairs without a truth event are negatives. Throws InputError if
/// a truth pair has no stream.
DetectionReport evaluate_detection(const std::vector<PairStream>& streams, const std::vector<ConflictEvent>& truth);

/// Same, from precomputed scores and labels.
DetectionReport evaluate_scores(const std::vector<double>& scores, const std::vector<bool>& positive);

}  // namespace pvrisk::ssm
