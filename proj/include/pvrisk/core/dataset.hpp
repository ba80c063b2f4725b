#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pvrisk/core/types.hpp"
#include "pvrisk/preprocess/geometry.hpp"

namespace pvrisk {

/// Maps the logical columns onto header names of a delimited file.
struct CsvSchema {
  std::string t = "t";
  std::string id = "id";
  std::string object_class = "class";
  std::string x = "x";
  std::string y = "y";
  std::string vx = "vx";
  std::string vy = "vy";
  std::string yaw_rate = "yaw_rate";
  // Optional label columns written by the preprocessing stage.
  std::string direction = "direction";
  std::string maneuver = "maneuver";
  bool yaw_rate_in_degrees = false;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::optional<IntersectionGeometry> geometry;
  double frame_interval = 0.1;

  const Trajectory* find(const std::string& id) const;
  std::vector<const Trajectory*> of_class(ObjectClass c) const;
};

struct LoadStats {
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::size_t duplicate_frames = 0;
};

/// One trajectory per object id in order of first appearance, frames sorted
/// by time, duplicate (id, t) frames dropped keeping the first. The object
/// class is the majority vote over the per-frame labels.
Dataset load_dataset(std::istream& in, const CsvSchema& schema = {}, LoadStats* stats = nullptr);
Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema = {},
                     LoadStats* stats = nullptr);

/// Writes `t,id,class,x,y,vx,vy,yaw_rate,direction,maneuver` with shortest
/// round-trip number formatting. Yaw rate is written in rad/s.
void save_dataset(std::ostream& out, const Dataset& dataset);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace pvrisk
