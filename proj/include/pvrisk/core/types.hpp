#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pvrisk/vec2.hpp"

namespace pvrisk {

enum class ObjectClass : std::uint8_t { Vehicle, Pedestrian, Cyclist, Misc };

/// Compass approach. The integer values are the feature encoding used by the
/// maneuver classifier.
enum class Direction : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

/// Vehicle movement through the intersection, in the order left, right,
/// straight used throughout the risk mixture.
enum class Maneuver : std::uint8_t { LeftTurn = 0, RightTurn = 1, Straight = 2 };

inline constexpr std::array<Direction, 4> kDirections = {Direction::North, Direction::East,
                                                         Direction::South, Direction::West};
inline constexpr std::array<Maneuver, 3> kManeuvers = {Maneuver::LeftTurn, Maneuver::RightTurn,
                                                       Maneuver::Straight};

inline constexpr int index_of(Direction d) { return static_cast<int>(d); }
inline constexpr int index_of(Maneuver m) { return static_cast<int>(m); }

std::string_view to_string(ObjectClass c);
std::string_view to_string(Direction d);
std::string_view to_string(Maneuver m);

/// Case-insensitive; accepts a few common aliases ("car", "ped", "bike").
std::optional<ObjectClass> parse_object_class(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);
std::optional<Maneuver> parse_maneuver(std::string_view s);

Direction opposite(Direction d);

/// One timestamped observation of one tracked object.
struct TrackPoint {
  double t = 0.0;         // s
  double x = 0.0;         // m
  double y = 0.0;         // m
  double vx = 0.0;        // m/s
  double vy = 0.0;        // m/s
  double yaw_rate = 0.0;  // rad/s
  bool valid = true;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
  double speed() const { return velocity().norm(); }
};

/// True iff all of x, y, vx, vy are finite.
bool kinematics_finite(const TrackPoint& p);

struct Trajectory {
  std::string id;
  ObjectClass object_class = ObjectClass::Misc;
  std::vector<TrackPoint> points;
  std::optional<Direction> entering_direction;
  std::optional<Maneuver> maneuver;

  double start_time() const { return points.front().t; }
  double end_time() const { return points.back().t; }
  double duration() const { return end_time() - start_time(); }
  std::vector<TrackPoint> valid_points() const;
  std::size_t valid_count() const;
};

/// Label with the highest count; ties go to the label that appears first.
/// Throws InputError on an empty list.
ObjectClass majority_vote_label(const std::vector<ObjectClass>& per_frame_labels);

}  // namespace pvrisk
