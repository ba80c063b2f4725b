#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvrisk/core/dataset.hpp"

namespace pvrisk::synth {

struct SpeedProfile {
  double cruise_min = 11.0;  // m/s
  double cruise_max = 13.0;
  double left_turn_speed = 6.0;
  double right_turn_speed = 5.0;
  double turn_deceleration = 2.0;  // m/s^2
  double turn_acceleration = 1.5;
};

/// Canonical four-leg intersection centred on the origin, right-hand traffic,
/// 7 m road half-width and crosswalks 10 m from the centre.
struct ScenarioSpec {
  std::uint64_t seed = 0;
  std::array<std::array<int, 3>, 4> n_vehicles{};  // [direction][maneuver]
  std::array<int, 4> n_pedestrians{};              // per crosswalk, by approach
  int n_engineered_conflicts = 0;
  double pet_min = 0.5;  // s, requested range for engineered conflicts
  double pet_max = 2.0;
  double pet_zone_radius = 1.0;
  double position_noise = 0.1;  // m
  double velocity_noise = 0.1;  // m/s
  SpeedProfile speeds;
  double pedestrian_speed_min = 1.2;
  double pedestrian_speed_max = 1.6;
  double frame_interval = 0.1;
  double approach_distance = 35.0;  // where vehicles appear and vanish
  double vehicle_phase = 20.0;      // s of vehicle arrivals per cycle
  int vehicles_per_cycle = 12;
  double fragment_probability = 0.0;
  int n_fast_pedestrians = 0;
  double fast_pedestrian_speed = 4.0;

  /// Throws InputError on negative counts or noise and on an infeasible
  /// conflict timing request.
  void validate() const;
};

struct EngineeredConflict {
  std::string vehicle_id;
  std::string pedestrian_id;
  double requested_pet = 0.0;
  bool vehicle_first = true;
  Vec2 conflict_point;
};

struct VehicleTruth {
  Direction direction = Direction::South;
  Maneuver maneuver = Maneuver::Straight;
};

struct GroundTruth {
  std::map<std::string, VehicleTruth> vehicles;
  std::vector<EngineeredConflict> conflicts;
  std::array<Vec2, 8> endpoints{};
  std::vector<std::string> fast_pedestrians;
};

struct Scenario {
  Dataset dataset;
  GroundTruth truth;
};

/// Crosswalk endpoints in IntersectionGeometry order.
std::array<Vec2, 8> canonical_endpoints();

/// Deterministic in the seed. Background agents are scheduled in cycles
/// (pedestrians arrive and wait, vehicles pass, pedestrians cross); each
/// engineered conflict gets its own window with one turning vehicle and one
/// crossing pedestrian.
Scenario generate_scenario(const ScenarioSpec& spec);

nlohmann::json to_json(const GroundTruth& truth);

}  // namespace pvrisk::synth
