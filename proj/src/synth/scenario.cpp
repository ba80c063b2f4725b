#include "pvrisk/synth/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "pvrisk/errors.hpp"

namespace pvrisk::synth {

namespace {

constexpr double kCrosswalkOffset = 10.0;
constexpr double kCrosswalkHalfLength = 9.0;
constexpr double kSidewalkLeg = 4.0;
constexpr double kCrossingSpread = 0.75;  // lateral offset at mid-crossing
constexpr double kInnerLane = 1.75;
constexpr double kOuterLane = 5.25;
constexpr double kThroughLane = 3.5;
constexpr double kLeftRadius = 10.0;
constexpr double kRightRadius = 6.0;

// Quarter turns counterclockwise that carry the south approach onto `d`.
int quarter_turns(Direction d) {
  switch (d) {
    case Direction::South: return 0;
    case Direction::East: return 1;
    case Direction::North: return 2;
    case Direction::West: return 3;
  }
  return 0;
}

Vec2 turn(Vec2 p, int k) {
  switch (k & 3) {
    case 1: return {-p.y, p.x};
    case 2: return {-p.x, -p.y};
    case 3: return {p.y, -p.x};
    default: return p;
  }
}

struct Primitive {
  bool arc = false;
  Vec2 start;
  Vec2 dir;  // straight only
  double length = 0.0;
  Vec2 center;
  double radius = 0.0;
  double start_angle = 0.0;
  double sign = 1.0;  // +1 counterclockwise
};

Primitive line(Vec2 start, Vec2 dir, double length) {
  Primitive p;
  p.start = start;
  p.dir = dir;
  p.length = length;
  return p;
}

Primitive arc(Vec2 center, double radius, double start_angle, double sign) {
  Primitive p;
  p.arc = true;
  p.center = center;
  p.radius = radius;
  p.start_angle = start_angle;
  p.sign = sign;
  p.length = radius * kPi / 2;
  return p;
}

struct Phase {
  double s0, t0, v0, a, length, duration;
};

struct Sample {
  Vec2 p;
  Vec2 v;
  double yaw_rate = 0.0;
};

class VehicleMotion {
 public:
  VehicleMotion(Direction d, Maneuver m, double approach, double cruise, const SpeedProfile& sp) {
    const int k = quarter_turns(d);
    std::vector<Primitive> canon;
    double turn_speed = cruise;
    if (m == Maneuver::Straight) {
      canon.push_back(line({kThroughLane, -approach}, {0, 1}, 2 * approach));
    } else if (m == Maneuver::LeftTurn) {
      const double c = -(kLeftRadius - kInnerLane);
      canon.push_back(line({kInnerLane, -approach}, {0, 1}, approach + c));
      canon.push_back(arc({c, c}, kLeftRadius, 0.0, 1.0));
      canon.push_back(line({c, kInnerLane}, {-1, 0}, approach + c));
      turn_speed = sp.left_turn_speed;
    } else {
      const double c = kOuterLane + kRightRadius;
      canon.push_back(line({kOuterLane, -approach}, {0, 1}, approach - c));
      canon.push_back(arc({c, -c}, kRightRadius, kPi, -1.0));
      canon.push_back(line({c, -kOuterLane}, {1, 0}, approach - c));
      turn_speed = sp.right_turn_speed;
    }
    for (Primitive p : canon) {
      p.start = turn(p.start, k);
      p.dir = turn(p.dir, k);
      p.center = turn(p.center, k);
      p.start_angle += k * kPi / 2;
      path_.push_back(p);
    }

    const auto add = [&](double v0, double a, double len) {
      if (len <= 0.0) return;
      const double s0 = phases_.empty() ? 0.0 : phases_.back().s0 + phases_.back().length;
      const double t0 = phases_.empty() ? 0.0 : phases_.back().t0 + phases_.back().duration;
      const double dur = a == 0.0 ? len / v0 : (std::sqrt(std::max(0.0, v0 * v0 + 2 * a * len)) - v0) / a;
      phases_.push_back({s0, t0, v0, a, len, dur});
    };
    if (m == Maneuver::Straight || turn_speed >= cruise) {
      for (const Primitive& p : path_) add(cruise, 0.0, p.length);
    } else {
      const double l1 = path_[0].length, la = path_[1].length, l2 = path_[2].length;
      const double dec = sp.turn_deceleration, acc = sp.turn_acceleration;
      const double d_dec = (cruise * cruise - turn_speed * turn_speed) / (2 * dec);
      if (d_dec <= l1) {
        add(cruise, 0.0, l1 - d_dec);
        add(cruise, -dec, d_dec);
      } else {
        add(std::sqrt(turn_speed * turn_speed + 2 * dec * l1), -dec, l1);
      }
      add(turn_speed, 0.0, la);
      const double d_acc = (cruise * cruise - turn_speed * turn_speed) / (2 * acc);
      if (d_acc <= l2) {
        add(turn_speed, acc, d_acc);
        add(cruise, 0.0, l2 - d_acc);
      } else {
        add(turn_speed, acc, l2);
      }
    }
  }

  double duration() const { return phases_.back().t0 + phases_.back().duration; }

  Sample at(double t) const {
    t = std::clamp(t, 0.0, duration());
    const Phase* ph = &phases_.back();
    for (const Phase& p : phases_)
      if (t <= p.t0 + p.duration) {
        ph = &p;
        break;
      }
    const double tau = t - ph->t0;
    const double s = std::min(ph->s0 + ph->v0 * tau + 0.5 * ph->a * tau * tau, ph->s0 + ph->length);
    const double v = ph->v0 + ph->a * tau;

    double u = s;
    const Primitive* prim = &path_.back();
    for (const Primitive& p : path_) {
      if (u <= p.length) {
        prim = &p;
        break;
      }
      u -= p.length;
    }
    u = std::min(u, prim->length);
    if (!prim->arc) return {prim->start + prim->dir * u, prim->dir * v, 0.0};
    const double ang = prim->start_angle + prim->sign * u / prim->radius;
    const Vec2 radial{std::cos(ang), std::sin(ang)};
    const Vec2 tangent = Vec2{-radial.y, radial.x} * prim->sign;
    return {prim->center + radial * prim->radius, tangent * v, prim->sign * v / prim->radius};
  }

 private:
  std::vector<Primitive> path_;
  std::vector<Phase> phases_;
};

struct Waypoint {
  double t;
  Vec2 p;
};

Sample walk_at(const std::vector<Waypoint>& w, double t) {
  if (t <= w.front().t) return {w.front().p, {}, 0.0};
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (t > w[i + 1].t) continue;
    const double span = w[i + 1].t - w[i].t;
    if (span <= 0.0) return {w[i + 1].p, {}, 0.0};
    const Vec2 v = (w[i + 1].p - w[i].p) / span;
    return {w[i].p + v * (t - w[i].t), v, 0.0};
  }
  return {w.back().p, {}, 0.0};
}

// Endpoints of the crosswalk across the south approach: east end, west end,
// and the two sidewalk directions leading away from each.
struct CrosswalkFrame {
  std::array<Vec2, 2> ends;
  std::array<std::array<Vec2, 2>, 2> outward;  // [end][along road, along crosswalk]
};

CrosswalkFrame crosswalk_frame(Direction d) {
  const int k = quarter_turns(d);
  CrosswalkFrame f;
  f.ends = {turn({kCrosswalkHalfLength, -kCrosswalkOffset}, k), turn({-kCrosswalkHalfLength, -kCrosswalkOffset}, k)};
  f.outward[0] = {turn({0, -1}, k), turn({1, 0}, k)};
  f.outward[1] = {turn({0, -1}, k), turn({-1, 0}, k)};
  return f;
}

Direction exit_direction(Direction entry, Maneuver m) {
  // Clockwise order N, E, S, W: a left turn from S leaves through W.
  const int e = index_of(entry);
  const int shift = m == Maneuver::LeftTurn ? 1 : (m == Maneuver::RightTurn ? 3 : 2);
  return static_cast<Direction>((e + shift) % 4);
}

std::string make_id(char prefix, int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%04d", prefix, n);
  return buf;
}

class Builder {
 public:
  explicit Builder(const ScenarioSpec& spec) : spec_(spec), rng_(spec.seed) {}

  double uniform(double a, double b) { return a == b ? a : std::uniform_real_distribution<double>(a, b)(rng_); }
  double noise(double sd) { return sd > 0.0 ? std::normal_distribution<double>(0.0, sd)(rng_) : 0.0; }

  template <typename F>
  Trajectory sample(const std::string& id, ObjectClass cls, double start, double end, F&& state) {
    Trajectory tr;
    tr.id = id;
    tr.object_class = cls;
    const double dt = spec_.frame_interval;
    const auto k0 = static_cast<long long>(std::ceil(start / dt - 1e-9));
    const auto k1 = static_cast<long long>(std::floor(end / dt + 1e-9));
    const double rate = std::round(1.0 / dt);
    const bool integral_rate = std::abs(rate * dt - 1.0) < 1e-12;
    for (long long k = k0; k <= k1; ++k) {
      const double t = integral_rate ? static_cast<double>(k) / rate : static_cast<double>(k) * dt;
      const Sample s = state(t);
      TrackPoint p;
      p.t = t;
      p.x = s.p.x + noise(spec_.position_noise);
      p.y = s.p.y + noise(spec_.position_noise);
      p.vx = s.v.x + noise(spec_.velocity_noise);
      p.vy = s.v.y + noise(spec_.velocity_noise);
      p.yaw_rate = s.yaw_rate;
      tr.points.push_back(p);
    }
    return tr;
  }

  void add_pedestrian(Trajectory tr) {
    if (spec_.fragment_probability > 0.0 && tr.points.size() >= 30 && uniform(0.0, 1.0) < spec_.fragment_probability) {
      const std::size_t n = tr.points.size();
      const auto cut = static_cast<std::size_t>(uniform(static_cast<double>(n) / 3, 2.0 * static_cast<double>(n) / 3));
      Trajectory tail;
      tail.id = tr.id + "b";
      tail.object_class = tr.object_class;
      tail.points.assign(tr.points.begin() + static_cast<std::ptrdiff_t>(cut) + 1, tr.points.end());
      tr.points.resize(cut);
      out_.dataset.trajectories.push_back(std::move(tr));
      out_.dataset.trajectories.push_back(std::move(tail));
      return;
    }
    out_.dataset.trajectories.push_back(std::move(tr));
  }

  // Away from the crosswalk end, fanned between the road direction and 45
  // degrees towards the crosswalk extension.
  Vec2 sidewalk_direction(const CrosswalkFrame& f, std::size_t end) {
    const double a = uniform(0.0, kPi / 4.0);
    return f.outward[end][0] * std::cos(a) + f.outward[end][1] * std::sin(a);
  }

  std::string next_vehicle_id() { return make_id('V', ++n_vehicle_ids_); }
  std::string next_pedestrian_id() { return make_id('P', ++n_pedestrian_ids_); }

  Scenario build();

 private:
  double run_cycle(double t0, const std::vector<std::pair<Direction, Maneuver>>& vehicles,
                   const std::vector<Direction>& pedestrians, int fast);
  double run_conflict(double t0, int index);

  const ScenarioSpec& spec_;
  std::mt19937_64 rng_;
  Scenario out_;
  int n_vehicle_ids_ = 0;
  int n_pedestrian_ids_ = 0;
};

double Builder::run_cycle(double t0, const std::vector<std::pair<Direction, Maneuver>>& vehicles,
                          const std::vector<Direction>& pedestrians, int fast) {
  struct Walker {
    std::vector<Waypoint> plan;
    CrosswalkFrame frame;
    int start_end;
    double speed;
    std::string id;
  };
  // Pedestrians reach their waiting spot before any vehicle appears.
  std::vector<Walker> walkers;
  for (Direction d : pedestrians) {
    Walker w;
    w.frame = crosswalk_frame(d);
    w.start_end = uniform(0.0, 1.0) < 0.5 ? 0 : 1;
    w.speed = uniform(spec_.pedestrian_speed_min, spec_.pedestrian_speed_max);
    const double start = t0 + uniform(0.0, 1.0);
    const Vec2 end = w.frame.ends[static_cast<std::size_t>(w.start_end)];
    w.plan.push_back({start, end + sidewalk_direction(w.frame, static_cast<std::size_t>(w.start_end)) * kSidewalkLeg});
    w.plan.push_back({start + kSidewalkLeg / w.speed, end});
    w.id = next_pedestrian_id();
    walkers.push_back(std::move(w));
  }

  double vehicles_gone = t0 + 5.0;
  struct Pending {
    double appear;
    Direction d;
    Maneuver m;
  };
  std::vector<Pending> pending;
  for (const auto& [d, m] : vehicles) pending.push_back({t0 + 5.0 + uniform(0.0, spec_.vehicle_phase), d, m});
  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) { return a.appear < b.appear; });
  for (const Pending& p : pending) {
    const VehicleMotion motion(p.d, p.m, spec_.approach_distance,
                               uniform(spec_.speeds.cruise_min, spec_.speeds.cruise_max), spec_.speeds);
    const std::string id = next_vehicle_id();
    out_.dataset.trajectories.push_back(sample(id, ObjectClass::Vehicle, p.appear, p.appear + motion.duration(),
                                               [&](double t) { return motion.at(t - p.appear); }));
    out_.truth.vehicles[id] = {p.d, p.m};
    vehicles_gone = std::max(vehicles_gone, p.appear + motion.duration());
  }

  // Crossing starts once every vehicle has left the scene.
  double cycle_end = vehicles_gone;
  for (Walker& w : walkers) {
    const double cross = vehicles_gone + 1.5 + uniform(0.0, 1.0);
    const auto other = static_cast<std::size_t>(1 - w.start_end);
    const Vec2 far = w.frame.ends[other];
    const Vec2 near = w.plan.back().p;
    const Vec2 mid = (near + far) * 0.5 + w.frame.outward[0][0] * uniform(-kCrossingSpread, kCrossingSpread);
    const double first_half = distance(near, mid);
    const double span = first_half + distance(mid, far);
    w.plan.push_back({cross, near});
    w.plan.push_back({cross + first_half / w.speed, mid});
    w.plan.push_back({cross + span / w.speed, far});
    w.plan.push_back({cross + (span + kSidewalkLeg) / w.speed, far + sidewalk_direction(w.frame, other) * kSidewalkLeg});
    const double end = w.plan.back().t;
    add_pedestrian(sample(w.id, ObjectClass::Pedestrian, w.plan.front().t, end,
                          [&](double t) { return walk_at(w.plan, t); }));
    cycle_end = std::max(cycle_end, end);
  }

  for (int i = 0; i < fast; ++i) {
    const auto d = static_cast<Direction>(i % 4);
    const CrosswalkFrame f = crosswalk_frame(d);
    const double start = vehicles_gone + 1.5 + uniform(0.0, 1.0);
    const double speed = spec_.fast_pedestrian_speed;
    const double span = distance(f.ends[0], f.ends[1]);
    std::vector<Waypoint> plan{{start, f.ends[0] + f.outward[0][0] * kSidewalkLeg},
                               {start + kSidewalkLeg / speed, f.ends[0]},
                               {start + (kSidewalkLeg + span) / speed, f.ends[1]},
                               {start + (2 * kSidewalkLeg + span) / speed, f.ends[1] + f.outward[1][0] * kSidewalkLeg}};
    const std::string id = next_pedestrian_id();
    out_.truth.fast_pedestrians.push_back(id);
    out_.dataset.trajectories.push_back(
        sample(id, ObjectClass::Pedestrian, plan.front().t, plan.back().t, [&](double t) { return walk_at(plan, t); }));
    cycle_end = std::max(cycle_end, plan.back().t);
  }
  return cycle_end;
}

double Builder::run_conflict(double t0, int index) {
  const Maneuver m = index % 2 == 0 ? Maneuver::LeftTurn : Maneuver::RightTurn;
  const bool vehicle_first = (index / 2) % 2 == 0;
  const Direction entry = kDirections[static_cast<std::size_t>((index / 4) % 4)];
  const double pet = uniform(spec_.pet_min, spec_.pet_max);

  const VehicleMotion motion(entry, m, spec_.approach_distance,
                             uniform(spec_.speeds.cruise_min, spec_.speeds.cruise_max), spec_.speeds);
  const Direction exit = exit_direction(entry, m);

  // Locate the crossing numerically: the point of the vehicle path on the
  // exit crosswalk line.
  const CrosswalkFrame f = crosswalk_frame(exit);
  const Vec2 a = f.ends[0], b = f.ends[1];
  const Vec2 ab = b - a;
  double lo = 0.0, hi = motion.duration();
  const auto side = [&](double t) { return ab.cross(motion.at(t).p - a); };
  double t_prev = 0.0;
  double s_prev = side(0.0);
  for (double t = 0.01; t <= motion.duration(); t += 0.01) {
    const double s = side(t);
    if ((s_prev < 0.0) != (s < 0.0)) {
      lo = t_prev;
      hi = t;
      break;
    }
    t_prev = t;
    s_prev = s;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((side(mid) < 0.0) == (side(lo) < 0.0) ? lo : hi) = mid;
  }
  const Vec2 c = motion.at(0.5 * (lo + hi)).p;

  // Vehicle occupancy of the zone, at millisecond resolution.
  const double r = spec_.pet_zone_radius;
  double v_enter = -1.0, v_exit = -1.0;
  for (double t = 0.0; t <= motion.duration(); t += 1e-3) {
    if (distance(motion.at(t).p, c) <= r) {
      if (v_enter < 0.0) v_enter = t;
      v_exit = t;
    }
  }

  const int start_end = uniform(0.0, 1.0) < 0.5 ? 0 : 1;
  const auto other = static_cast<std::size_t>(1 - start_end);
  const Vec2 from = f.ends[static_cast<std::size_t>(start_end)];
  const Vec2 to = f.ends[other];
  const double speed = uniform(spec_.pedestrian_speed_min, spec_.pedestrian_speed_max);
  const double dc = distance(from, c);
  const double cross = vehicle_first ? v_exit + pet - (dc - r) / speed : v_enter - pet - (dc + r) / speed;
  const Vec2 approach_leg = f.outward[static_cast<std::size_t>(start_end)][1];
  const double span = distance(from, to);
  std::vector<Waypoint> plan{{cross - kSidewalkLeg / speed, from + approach_leg * kSidewalkLeg},
                             {cross, from},
                             {cross + span / speed, to},
                             {cross + (span + kSidewalkLeg) / speed, to + f.outward[other][0] * kSidewalkLeg}};
  const double shift = t0 - std::min(0.0, plan.front().t);
  for (Waypoint& w : plan) w.t += shift;

  const std::string vid = next_vehicle_id();
  const std::string pid = next_pedestrian_id();
  out_.dataset.trajectories.push_back(sample(vid, ObjectClass::Vehicle, shift, shift + motion.duration(),
                                             [&](double t) { return motion.at(t - shift); }));
  out_.truth.vehicles[vid] = {entry, m};
  out_.dataset.trajectories.push_back(sample(pid, ObjectClass::Pedestrian, plan.front().t, plan.back().t,
                                             [&](double t) { return walk_at(plan, t); }));
  out_.truth.conflicts.push_back({vid, pid, pet, vehicle_first, c});
  return std::max(shift + motion.duration(), plan.back().t);
}

Scenario Builder::build() {
  out_.dataset.frame_interval = spec_.frame_interval;
  out_.truth.endpoints = canonical_endpoints();

  std::vector<std::pair<Direction, Maneuver>> vehicles;
  for (Direction d : kDirections)
    for (Maneuver m : kManeuvers)
      for (int i = 0; i < spec_.n_vehicles[static_cast<std::size_t>(index_of(d))][static_cast<std::size_t>(index_of(m))]; ++i)
        vehicles.emplace_back(d, m);
  std::shuffle(vehicles.begin(), vehicles.end(), rng_);

  const int per_cycle = std::max(1, spec_.vehicles_per_cycle);
  const int n_cycles = std::max({1, spec_.n_engineered_conflicts,
                                 (static_cast<int>(vehicles.size()) + per_cycle - 1) / per_cycle});
  std::vector<std::vector<std::pair<Direction, Maneuver>>> cycle_vehicles(static_cast<std::size_t>(n_cycles));
  for (std::size_t i = 0; i < vehicles.size(); ++i) cycle_vehicles[i % static_cast<std::size_t>(n_cycles)].push_back(vehicles[i]);
  std::vector<std::vector<Direction>> cycle_peds(static_cast<std::size_t>(n_cycles));
  for (Direction d : kDirections)
    for (int i = 0; i < spec_.n_pedestrians[static_cast<std::size_t>(index_of(d))]; ++i)
      cycle_peds[static_cast<std::size_t>(i % n_cycles)].push_back(d);

  double t = 0.0;
  for (int c = 0; c < n_cycles; ++c) {
    const int fast = spec_.n_fast_pedestrians / n_cycles + (c < spec_.n_fast_pedestrians % n_cycles ? 1 : 0);
    t = run_cycle(t, cycle_vehicles[static_cast<std::size_t>(c)], cycle_peds[static_cast<std::size_t>(c)], fast) + 2.0;
    if (c < spec_.n_engineered_conflicts) t = run_conflict(t, c) + 2.0;
  }
  return std::move(out_);
}

}  // namespace

std::array<Vec2, 8> canonical_endpoints() {
  const double a = kCrosswalkHalfLength, b = kCrosswalkOffset;
  return {Vec2{-a, b}, Vec2{a, b}, Vec2{b, a}, Vec2{b, -a}, Vec2{a, -b}, Vec2{-a, -b}, Vec2{-b, -a}, Vec2{-b, a}};
}

void ScenarioSpec::validate() const {
  for (const auto& row : n_vehicles)
    for (int n : row)
      if (n < 0) throw InputError("scenario: negative vehicle count");
  for (int n : n_pedestrians)
    if (n < 0) throw InputError("scenario: negative pedestrian count");
  if (n_engineered_conflicts < 0 || n_fast_pedestrians < 0) throw InputError("scenario: negative count");
  if (position_noise < 0.0 || velocity_noise < 0.0) throw InputError("scenario: negative noise");
  if (!(frame_interval > 0.0)) throw InputError("scenario: frame_interval must be positive");
  if (!(pet_zone_radius > 0.0)) throw InputError("scenario: pet_zone_radius must be positive");
  if (pet_min < 0.0 || pet_max < pet_min)
    throw InputError("scenario: infeasible conflict timing (need 0 <= pet_min <= pet_max)");
  if (!(pedestrian_speed_min > 0.0) || pedestrian_speed_max < pedestrian_speed_min)
    throw InputError("scenario: bad pedestrian speed range");
  if (!(speeds.cruise_min > 0.0) || speeds.cruise_max < speeds.cruise_min || !(speeds.left_turn_speed > 0.0) ||
      !(speeds.right_turn_speed > 0.0) || !(speeds.turn_deceleration > 0.0) || !(speeds.turn_acceleration > 0.0))
    throw InputError("scenario: bad speed profile");
  if (approach_distance < kCrosswalkOffset + kRightRadius + kOuterLane)
    throw InputError("scenario: approach_distance too short for the turn geometry");
  if (fragment_probability < 0.0 || fragment_probability > 1.0)
    throw InputError("scenario: fragment_probability outside [0, 1]");
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  return Builder(spec).build();
}

nlohmann::json to_json(const GroundTruth& truth) {
  nlohmann::json vehicles = nlohmann::json::object();
  for (const auto& [id, v] : truth.vehicles)
    vehicles[id] = {{"direction", std::string(to_string(v.direction))}, {"maneuver", std::string(to_string(v.maneuver))}};
  nlohmann::json conflicts = nlohmann::json::array();
  for (const EngineeredConflict& c : truth.conflicts)
    conflicts.push_back({{"vehicle_id", c.vehicle_id},
                         {"pedestrian_id", c.pedestrian_id},
                         {"requested_pet", c.requested_pet},
                         {"vehicle_first", c.vehicle_first},
                         {"conflict_point", {c.conflict_point.x, c.conflict_point.y}}});
  nlohmann::json endpoints = nlohmann::json::array();
  for (const Vec2& p : truth.endpoints) endpoints.push_back({p.x, p.y});
  return {{"vehicles", std::move(vehicles)},
          {"conflicts", std::move(conflicts)},
          {"endpoints", std::move(endpoints)},
          {"fast_pedestrians", truth.fast_pedestrians}};
}

}  // namespace pvrisk::synth
