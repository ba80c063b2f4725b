#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pvrisk/core/dataset.hpp"
#include "pvrisk/core/types.hpp"
#include "pvrisk/preprocess/geometry.hpp"

namespace pvrisk::preprocess {

/// Per-cell pedestrian visit counts; a trajectory adds at most one visit to
/// any cell.
struct DensityGrid {
  double cell_size = 0.5;
  Vec2 origin;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<std::uint32_t> counts;  // row-major, rows along y

  std::uint32_t at(std::size_t col, std::size_t row) const { return counts[row * cols + col]; }
  Vec2 cell_center(std::size_t col, std::size_t row) const;
  std::optional<std::pair<std::size_t, std::size_t>> cell_of(Vec2 p) const;
};

DensityGrid build_density_grid(const std::vector<const Trajectory*>& pedestrians, double cell_size);

/// Columns `col,row,x,y,count` (cell centers); zero cells omitted.
void write_density_grid(std::ostream& out, const DensityGrid& grid);

struct CrosswalkEstimate {
  IntersectionGeometry geometry;
  DensityGrid grid;
};

/// One search box per endpoint, in IntersectionGeometry endpoint order. Inside
/// each box the maximal cell is flood-filled (4-neighbour) over cells holding
/// at least `cluster_fraction` of the box maximum; the endpoint is the
/// count-weighted centroid of that cluster.
CrosswalkEstimate estimate_crosswalk_endpoints(const std::vector<const Trajectory*>& pedestrians,
                                               double cell_size, const std::array<Box, 8>& search_regions,
                                               double cluster_fraction = 0.9);

/// Quadrant of the first valid point. Throws InputError without valid points.
Direction classify_entering_direction(const Trajectory& traj, const IntersectionGeometry& geom);

/// Quadrants visited by the valid points, consecutive repeats collapsed.
std::vector<Direction> quadrant_sequence(const Trajectory& traj, const IntersectionGeometry& geom);

/// Maps a collapsed quadrant sequence to a maneuver for right-hand traffic:
/// last quadrant opposite the first is straight, the quadrant clockwise of
/// the entry (S -> W) is a left turn, counterclockwise (S -> E) a right turn.
/// Sequences that never leave or return to the entry quadrant are unsupported
/// (nullopt).
std::optional<Maneuver> movement_from_sequence(const std::vector<Direction>& sequence);

std::optional<Maneuver> classify_movement(const Trajectory& traj, const IntersectionGeometry& geom);

struct MergeCriteria {
  double max_time_gap = 0.2;          // s
  double max_distance_gap = 1.0;      // m
  double max_heading_diff = 90.0;     // deg
  double max_traj_angle_diff = 120.0; // deg
};

/// Gaps between the end of `a` and the start of `b`; nullopt if `b` does
/// not satisfy every criterion.
struct MergeGaps {
  double time_gap = 0.0;
  double distance = 0.0;
  double heading_diff = 0.0;  // deg
  double chord_diff = 0.0;    // deg
};
std::optional<MergeGaps> merge_candidate(const Trajectory& a, const Trajectory& b, const MergeCriteria& criteria);

/// Greedy linking in order of start time. Each trajectory picks, repeatedly,
/// the qualifying successor with the lexicographically smallest
/// (time gap, distance, heading difference). The merged trajectory keeps the
/// id of its first piece.
std::vector<Trajectory> merge_pedestrian_trajectories(const std::vector<Trajectory>& trajs,
                                                      const MergeCriteria& criteria = {});

enum class FilterRule { TooShort, MostlyInvalid, TooFast, OffCrosswalk };
std::string_view to_string(FilterRule r);

struct PedestrianFilterConfig {
  double min_duration = 1.0;        // removed when duration <= this
  double min_path_length = 5.0;     // removed when path length <= this
  double max_invalid_fraction = 0.5;// removed when invalid share >= this
  double fast_speed = 3.0;          // m/s
  std::size_t fast_run = 10;        // consecutive points at >= fast_speed
};

/// Regions for the crosswalk / roadway rule.
struct WalkRegions {
  std::vector<Polygon> crosswalks;
  Polygon roadway;
};

/// Corridors from the endpoint pairs inflated by `margin`; roadway is the
/// convex hull of the eight endpoints.
WalkRegions default_walk_regions(const IntersectionGeometry& geom, double margin = 2.0);

struct FilterOutcome {
  std::vector<Trajectory> kept;
  std::vector<std::pair<std::string, std::vector<FilterRule>>> removed;
};

std::vector<FilterRule> violated_rules(const Trajectory& traj, const WalkRegions& regions,
                                       const PedestrianFilterConfig& cfg = {});

FilterOutcome filter_pedestrian_trajectories(const std::vector<Trajectory>& trajs, const WalkRegions& regions,
                                             const PedestrianFilterConfig& cfg = {});

struct PreprocessConfig {
  double cell_size = 0.5;
  double cluster_fraction = 0.9;
  std::optional<std::array<Box, 8>> search_regions;
  std::optional<std::array<Vec2, 8>> endpoints;  // bypasses estimation
  MergeCriteria merge;
  PedestrianFilterConfig filter;
  double region_margin = 2.0;
  std::vector<Polygon> crosswalk_polygons;  // empty: derived from endpoints
  Polygon roadway_polygon;                  // empty: derived from endpoints
};

struct PreprocessReport {
  std::size_t input_trajectories = 0;
  std::map<std::string, std::size_t> input_by_class;
  std::size_t vehicles_retained = 0;
  std::size_t vehicles_unsupported = 0;
  std::size_t vehicles_without_valid_points = 0;
  std::size_t pedestrians_before_merge = 0;
  std::size_t pedestrians_after_merge = 0;
  std::size_t pedestrians_retained = 0;
  std::map<std::string, std::size_t> removed_by_rule;
  std::size_t other_classes_dropped = 0;
  std::array<std::array<std::size_t, 3>, 4> cluster_counts{};  // [direction][maneuver]
  std::vector<std::pair<std::string, std::vector<FilterRule>>> removed_pedestrians;
};

struct PreprocessResult {
  Dataset labeled;
  PreprocessReport report;
  std::optional<DensityGrid> grid;
};

/// Full cleaning pass: geometry (given or estimated), vehicle direction and
/// maneuver labels, pedestrian merging and selection. Cyclists and misc
/// objects are dropped.
PreprocessResult run_preprocess(const Dataset& input, const PreprocessConfig& cfg);

}  // namespace pvrisk::preprocess
