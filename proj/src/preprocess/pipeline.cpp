#include "pvrisk/errors.hpp"
#include "pvrisk/preprocess/preprocess.hpp"

namespace pvrisk::preprocess {

PreprocessResult run_preprocess(const Dataset& input, const PreprocessConfig& cfg) {
  if (input.trajectories.empty()) throw InputError("preprocess: empty dataset");

  PreprocessResult result;
  PreprocessReport& rep = result.report;
  rep.input_trajectories = input.trajectories.size();
  for (const auto& t : input.trajectories) ++rep.input_by_class[std::string(to_string(t.object_class))];

  const auto pedestrians = input.of_class(ObjectClass::Pedestrian);

  std::optional<IntersectionGeometry> geom;
  if (cfg.endpoints) {
    geom.emplace(*cfg.endpoints);
  } else if (input.geometry) {
    geom = input.geometry;
  } else {
    if (!cfg.search_regions)
      throw InputError("preprocess: neither crosswalk endpoints nor search regions configured");
    auto est = estimate_crosswalk_endpoints(pedestrians, cfg.cell_size, *cfg.search_regions, cfg.cluster_fraction);
    geom = est.geometry;
    result.grid = std::move(est.grid);
  }
  if (!result.grid && !pedestrians.empty()) result.grid = build_density_grid(pedestrians, cfg.cell_size);

  Dataset& out = result.labeled;
  out.geometry = geom;
  out.frame_interval = input.frame_interval;

  for (const auto& t : input.trajectories) {
    if (t.object_class != ObjectClass::Vehicle) continue;
    if (t.valid_count() == 0) {
      ++rep.vehicles_without_valid_points;
      continue;
    }
    Trajectory labeled = t;
    labeled.entering_direction = classify_entering_direction(t, *geom);
    labeled.maneuver = classify_movement(t, *geom);
    if (!labeled.maneuver) {
      ++rep.vehicles_unsupported;
      continue;
    }
    ++rep.cluster_counts[index_of(*labeled.entering_direction)][index_of(*labeled.maneuver)];
    ++rep.vehicles_retained;
    out.trajectories.push_back(std::move(labeled));
  }

  std::vector<Trajectory> peds;
  for (const Trajectory* p : pedestrians) {
    Trajectory copy = *p;
    copy.entering_direction.reset();
    copy.maneuver.reset();
    peds.push_back(std::move(copy));
  }
  rep.pedestrians_before_merge = peds.size();
  auto merged = merge_pedestrian_trajectories(peds, cfg.merge);
  rep.pedestrians_after_merge = merged.size();

  WalkRegions regions = default_walk_regions(*geom, cfg.region_margin);
  if (!cfg.crosswalk_polygons.empty()) regions.crosswalks = cfg.crosswalk_polygons;
  if (!cfg.roadway_polygon.empty()) regions.roadway = cfg.roadway_polygon;

  auto filtered = filter_pedestrian_trajectories(merged, regions, cfg.filter);
  rep.pedestrians_retained = filtered.kept.size();
  for (const auto& [id, rules] : filtered.removed)
    for (FilterRule r : rules) ++rep.removed_by_rule[std::string(to_string(r))];
  rep.removed_pedestrians = std::move(filtered.removed);
  for (auto& p : filtered.kept) out.trajectories.push_back(std::move(p));

  for (const auto& t : input.trajectories)
    if (t.object_class == ObjectClass::Cyclist || t.object_class == ObjectClass::Misc) ++rep.other_classes_dropped;

  return result;
}

}  // namespace pvrisk::preprocess
