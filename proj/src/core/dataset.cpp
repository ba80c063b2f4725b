#include "pvrisk/core/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "pvrisk/core/csv.hpp"
#include "pvrisk/errors.hpp"

namespace pvrisk {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Vehicle: return "vehicle";
    case ObjectClass::Pedestrian: return "pedestrian";
    case ObjectClass::Cyclist: return "cyclist";
    case ObjectClass::Misc: return "misc";
  }
  return "misc";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::North: return "N";
    case Direction::East: return "E";
    case Direction::South: return "S";
    case Direction::West: return "W";
  }
  return "?";
}

std::string_view to_string(Maneuver m) {
  switch (m) {
    case Maneuver::LeftTurn: return "left";
    case Maneuver::RightTurn: return "right";
    case Maneuver::Straight: return "straight";
  }
  return "?";
}

std::optional<ObjectClass> parse_object_class(std::string_view s) {
  const std::string l = lower(csv::trim(s));
  if (l == "vehicle" || l == "veh" || l == "car" || l == "truck" || l == "bus") return ObjectClass::Vehicle;
  if (l == "pedestrian" || l == "ped") return ObjectClass::Pedestrian;
  if (l == "cyclist" || l == "bike" || l == "bicycle") return ObjectClass::Cyclist;
  if (l == "misc" || l == "miscellaneous" || l == "unknown") return ObjectClass::Misc;
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
  const std::string l = lower(csv::trim(s));
  if (l == "n" || l == "north") return Direction::North;
  if (l == "e" || l == "east") return Direction::East;
  if (l == "s" || l == "south") return Direction::South;
  if (l == "w" || l == "west") return Direction::West;
  return std::nullopt;
}

std::optional<Maneuver> parse_maneuver(std::string_view s) {
  const std::string l = lower(csv::trim(s));
  if (l == "left" || l == "leftturn" || l == "left_turn") return Maneuver::LeftTurn;
  if (l == "right" || l == "rightturn" || l == "right_turn") return Maneuver::RightTurn;
  if (l == "straight" || l == "through") return Maneuver::Straight;
  return std::nullopt;
}

Direction opposite(Direction d) { return static_cast<Direction>((index_of(d) + 2) % 4); }

bool kinematics_finite(const TrackPoint& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.vx) && std::isfinite(p.vy);
}

std::vector<TrackPoint> Trajectory::valid_points() const {
  std::vector<TrackPoint> out;
  out.reserve(points.size());
  for (const auto& p : points)
    if (p.valid) out.push_back(p);
  return out;
}

std::size_t Trajectory::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const TrackPoint& p) { return p.valid; }));
}

ObjectClass majority_vote_label(const std::vector<ObjectClass>& labels) {
  if (labels.empty()) throw InputError("majority_vote_label: empty label list");
  std::array<std::size_t, 4> counts{};
  std::array<std::size_t, 4> first_seen{};
  first_seen.fill(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    ++counts[k];
    if (first_seen[k] == labels.size()) first_seen[k] = i;
  }
  std::size_t best = static_cast<std::size_t>(labels.front());
  for (std::size_t k = 0; k < 4; ++k) {
    if (counts[k] > counts[best] || (counts[k] == counts[best] && counts[k] > 0 && first_seen[k] < first_seen[best]))
      best = k;
  }
  return static_cast<ObjectClass>(best);
}

const Trajectory* Dataset::find(const std::string& id) const {
  for (const auto& t : trajectories)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<const Trajectory*> Dataset::of_class(ObjectClass c) const {
  std::vector<const Trajectory*> out;
  for (const auto& t : trajectories)
    if (t.object_class == c) out.push_back(&t);
  return out;
}

Dataset load_dataset(std::istream& in, const CsvSchema& schema, LoadStats* stats) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("dataset: missing header row");
  const auto header = csv::split(line);
  std::map<std::string, std::size_t, std::less<>> columns;
  for (std::size_t i = 0; i < header.size(); ++i) columns.emplace(std::string(csv::trim(header[i])), i);

  const auto require = [&](const std::string& name) -> std::size_t {
    const auto it = columns.find(name);
    if (it == columns.end()) throw InputError("dataset: missing required column '" + name + "'");
    return it->second;
  };
  const auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  };

  const std::size_t c_t = require(schema.t);
  const std::size_t c_id = require(schema.id);
  const std::size_t c_class = require(schema.object_class);
  const std::size_t c_x = require(schema.x);
  const std::size_t c_y = require(schema.y);
  const std::size_t c_vx = require(schema.vx);
  const std::size_t c_vy = require(schema.vy);
  const std::size_t c_yaw = require(schema.yaw_rate);
  const auto c_dir = optional_col(schema.direction);
  const auto c_man = optional_col(schema.maneuver);

  struct Pending {
    std::vector<TrackPoint> points;
    std::vector<ObjectClass> labels;
    std::optional<Direction> direction;
    std::optional<Maneuver> maneuver;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> by_id;
  LoadStats local;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (csv::trim(line).empty()) continue;
    ++local.rows_read;
    const auto fields = csv::split(line);
    const auto field = [&](std::size_t c) -> std::string_view {
      return c < fields.size() ? csv::trim(fields[c]) : std::string_view{};
    };

    const std::string_view id = field(c_id);
    double t = 0.0;
    if (id.empty() || !csv::parse_double(field(c_t), t) || !std::isfinite(t)) {
      ++local.rows_skipped;
      continue;
    }
    const auto cls = parse_object_class(field(c_class));
    if (!cls) {
      ++local.rows_skipped;
      continue;
    }

    TrackPoint p;
    p.t = t;
    const auto number = [&](std::size_t c, const char* name) {
      double v = 0.0;
      if (!csv::parse_double(field(c), v))
        throw InputError("dataset: row " + std::to_string(row) + ": cannot parse " + name + " '" +
                         std::string(field(c)) + "'");
      return v;
    };
    p.x = number(c_x, "x");
    p.y = number(c_y, "y");
    p.vx = number(c_vx, "vx");
    p.vy = number(c_vy, "vy");
    p.yaw_rate = number(c_yaw, "yaw_rate");
    if (schema.yaw_rate_in_degrees) p.yaw_rate = deg_to_rad(p.yaw_rate);
    p.valid = kinematics_finite(p);

    auto [it, inserted] = by_id.try_emplace(std::string(id));
    if (inserted) order.emplace_back(id);
    it->second.points.push_back(p);
    it->second.labels.push_back(*cls);
    if (c_dir && !it->second.direction) it->second.direction = parse_direction(field(*c_dir));
    if (c_man && !it->second.maneuver) it->second.maneuver = parse_maneuver(field(*c_man));
  }

  if (order.empty()) throw InputError("dataset: zero usable rows");

  Dataset ds;
  ds.trajectories.reserve(order.size());
  for (const auto& id : order) {
    Pending& pend = by_id.at(id);
    std::vector<std::size_t> idx(pend.points.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return pend.points[a].t < pend.points[b].t; });
    Trajectory tr;
    tr.id = id;
    tr.object_class = majority_vote_label(pend.labels);
    for (std::size_t i : idx) {
      if (!tr.points.empty() && tr.points.back().t == pend.points[i].t) {
        ++local.duplicate_frames;
        continue;
      }
      tr.points.push_back(pend.points[i]);
    }
    if (tr.object_class == ObjectClass::Vehicle) {
      tr.entering_direction = pend.direction;
      tr.maneuver = pend.maneuver;
    }
    ds.trajectories.push_back(std::move(tr));
  }
  if (stats) *stats = local;
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw InputError("dataset: cannot open '" + path.string() + "'");
  return load_dataset(in, schema, stats);
}

void save_dataset(std::ostream& out, const Dataset& dataset) {
  out << "t,id,class,x,y,vx,vy,yaw_rate,direction,maneuver\n";
  for (const auto& tr : dataset.trajectories) {
    const std::string dir = tr.entering_direction ? std::string(to_string(*tr.entering_direction)) : "";
    const std::string man = tr.maneuver ? std::string(to_string(*tr.maneuver)) : "";
    for (const auto& p : tr.points) {
      out << csv::format_double(p.t) << ',' << tr.id << ',' << to_string(tr.object_class) << ','
          << csv::format_double(p.x) << ',' << csv::format_double(p.y) << ',' << csv::format_double(p.vx)
          << ',' << csv::format_double(p.vy) << ',' << csv::format_double(p.yaw_rate) << ',' << dir << ','
          << man << '\n';
    }
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw InputError("dataset: cannot write '" + path.string() + "'");
  save_dataset(out, dataset);
}

}  // namespace pvrisk
