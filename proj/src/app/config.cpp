#include "pvrisk/app/config.hpp"

#include <fstream>
#include <set>

#include "pvrisk/errors.hpp"

namespace pvrisk::app {

namespace {

using nlohmann::json;

// Value codecs. Every overload is declared before the generic ones use it.
json encode(double v) { return v; }
json encode(int v) { return v; }
json encode(bool v) { return v; }
json encode(std::size_t v) { return v; }
json encode(const std::string& v) { return v; }
json encode(gpr::KernelKind v) { return std::string(gpr::to_string(v)); }
json encode(gpr::RolloutMode v) { return v == gpr::RolloutMode::PosteriorMean ? "posterior_mean" : "sample"; }
json encode(maneuver::VelocityFeatures v) {
  return v == maneuver::VelocityFeatures::Magnitude ? "magnitude" : "components";
}
json encode(Vec2 v) { return json::array({v.x, v.y}); }
json encode(const Box& b) { return json::array({b.min.x, b.min.y, b.max.x, b.max.y}); }
template <typename T>
json encode(const std::optional<T>& v);
template <typename T, std::size_t N>
json encode(const std::array<T, N>& v);
template <typename T>
json encode(const std::vector<T>& v);

template <typename T>
json encode(const std::optional<T>& v) {
  return v ? encode(*v) : json(nullptr);
}
template <typename T, std::size_t N>
json encode(const std::array<T, N>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(encode(x));
  return a;
}
template <typename T>
json encode(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(encode(x));
  return a;
}

template <typename T>
  requires std::is_arithmetic_v<T>
void decode(const json& j, T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw InputError("expected a boolean");
  } else {
    if (!j.is_number()) throw InputError("expected a number");
    if constexpr (std::is_integral_v<T>)
      if (!j.is_number_integer()) throw InputError("expected an integer");
    if constexpr (std::is_unsigned_v<T>)
      if (j.is_number_integer() && j.get<long long>() < 0 && !j.is_number_unsigned())
        throw InputError("expected a non-negative integer");
  }
  v = j.get<T>();
}
void decode(const json& j, std::string& v) {
  if (!j.is_string()) throw InputError("expected a string");
  v = j.get<std::string>();
}
void decode(const json& j, gpr::KernelKind& v) {
  std::string s;
  decode(j, s);
  const auto k = gpr::parse_kernel_kind(s);
  if (!k) throw InputError("unknown kernel '" + s + "' (RBF or RQ)");
  v = *k;
}
void decode(const json& j, gpr::RolloutMode& v) {
  std::string s;
  decode(j, s);
  if (s == "posterior_mean") v = gpr::RolloutMode::PosteriorMean;
  else if (s == "sample") v = gpr::RolloutMode::Sample;
  else throw InputError("unknown rollout mode '" + s + "' (posterior_mean or sample)");
}
void decode(const json& j, maneuver::VelocityFeatures& v) {
  std::string s;
  decode(j, s);
  if (s == "magnitude") v = maneuver::VelocityFeatures::Magnitude;
  else if (s == "components") v = maneuver::VelocityFeatures::Components;
  else throw InputError("unknown velocity_features '" + s + "' (magnitude or components)");
}
void decode(const json& j, Vec2& v) {
  if (!j.is_array() || j.size() != 2) throw InputError("expected [x, y]");
  decode(j[0], v.x);
  decode(j[1], v.y);
}
void decode(const json& j, Box& b) {
  if (!j.is_array() || j.size() != 4) throw InputError("expected [xmin, ymin, xmax, ymax]");
  decode(j[0], b.min.x);
  decode(j[1], b.min.y);
  decode(j[2], b.max.x);
  decode(j[3], b.max.y);
  if (b.min.x > b.max.x || b.min.y > b.max.y) throw InputError("box minimum exceeds maximum");
}
template <typename T>
void decode(const json& j, std::optional<T>& v);
template <typename T, std::size_t N>
void decode(const json& j, std::array<T, N>& v);
template <typename T>
void decode(const json& j, std::vector<T>& v);

template <typename T>
void decode(const json& j, std::optional<T>& v) {
  if (j.is_null()) {
    v.reset();
    return;
  }
  T x{};
  decode(j, x);
  v = std::move(x);
}
template <typename T, std::size_t N>
void decode(const json& j, std::array<T, N>& v) {
  if (!j.is_array() || j.size() != N) throw InputError("expected an array of " + std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) decode(j[i], v[i]);
}
template <typename T>
void decode(const json& j, std::vector<T>& v) {
  if (!j.is_array()) throw InputError("expected an array");
  v.clear();
  for (const json& x : j) {
    T item{};
    decode(x, item);
    v.push_back(std::move(item));
  }
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError("config: '" + display() + "' must be an object");
  }

  template <typename T>
  void field(const char* key, T& v) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      decode(j_.at(key), v);
    } catch (const InputError& e) {
      throw InputError("config: bad value for '" + path_ + key + "': " + e.what());
    } catch (const json::exception& e) {
      throw InputError("config: bad value for '" + path_ + key + "': " + e.what());
    }
  }

  template <typename F>
  void section(const char* key, F&& body) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    Reader sub(j_.at(key), path_ + key + ".");
    body(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.contains(item.key())) throw InputError("config: unknown key '" + path_ + item.key() + "'");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_.substr(0, path_.size() - 1); }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  template <typename T>
  void field(const char* key, const T& v) {
    j_[key] = encode(v);
  }

  template <typename F>
  void section(const char* key, F&& body) {
    Writer sub;
    body(sub);
    j_[key] = std::move(sub.j_);
  }

  json take() { return std::move(j_); }

 private:
  json j_ = json::object();
};

template <typename IO, typename C>
void visit(IO& io, C& cfg) {
  io.field("seed", cfg.seed);
  io.section("schema", [&](auto& s) {
    s.field("t", cfg.schema.t);
    s.field("id", cfg.schema.id);
    s.field("class", cfg.schema.object_class);
    s.field("x", cfg.schema.x);
    s.field("y", cfg.schema.y);
    s.field("vx", cfg.schema.vx);
    s.field("vy", cfg.schema.vy);
    s.field("yaw_rate", cfg.schema.yaw_rate);
    s.field("direction", cfg.schema.direction);
    s.field("maneuver", cfg.schema.maneuver);
    s.field("yaw_rate_in_degrees", cfg.schema.yaw_rate_in_degrees);
  });
  io.section("synth", [&](auto& s) {
    auto& sp = cfg.synth;
    s.field("n_vehicles", sp.n_vehicles);
    s.field("n_pedestrians", sp.n_pedestrians);
    s.field("n_engineered_conflicts", sp.n_engineered_conflicts);
    s.field("pet_min", sp.pet_min);
    s.field("pet_max", sp.pet_max);
    s.field("pet_zone_radius", sp.pet_zone_radius);
    s.field("position_noise", sp.position_noise);
    s.field("velocity_noise", sp.velocity_noise);
    s.field("pedestrian_speed_min", sp.pedestrian_speed_min);
    s.field("pedestrian_speed_max", sp.pedestrian_speed_max);
    s.field("frame_interval", sp.frame_interval);
    s.field("approach_distance", sp.approach_distance);
    s.field("vehicle_phase", sp.vehicle_phase);
    s.field("vehicles_per_cycle", sp.vehicles_per_cycle);
    s.field("fragment_probability", sp.fragment_probability);
    s.field("n_fast_pedestrians", sp.n_fast_pedestrians);
    s.field("fast_pedestrian_speed", sp.fast_pedestrian_speed);
    s.section("speeds", [&](auto& v) {
      v.field("cruise_min", sp.speeds.cruise_min);
      v.field("cruise_max", sp.speeds.cruise_max);
      v.field("left_turn_speed", sp.speeds.left_turn_speed);
      v.field("right_turn_speed", sp.speeds.right_turn_speed);
      v.field("turn_deceleration", sp.speeds.turn_deceleration);
      v.field("turn_acceleration", sp.speeds.turn_acceleration);
    });
  });
  io.section("preprocess", [&](auto& s) {
    auto& pc = cfg.preprocess;
    s.field("cell_size", pc.cell_size);
    s.field("cluster_fraction", pc.cluster_fraction);
    s.field("search_regions", pc.search_regions);
    s.field("endpoints", pc.endpoints);
    s.field("region_margin", pc.region_margin);
    s.field("crosswalk_polygons", pc.crosswalk_polygons);
    s.field("roadway_polygon", pc.roadway_polygon);
    s.section("merge", [&](auto& m) {
      m.field("max_time_gap", pc.merge.max_time_gap);
      m.field("max_distance_gap", pc.merge.max_distance_gap);
      m.field("max_heading_diff", pc.merge.max_heading_diff);
      m.field("max_traj_angle_diff", pc.merge.max_traj_angle_diff);
    });
    s.section("filter", [&](auto& f) {
      f.field("min_duration", pc.filter.min_duration);
      f.field("min_path_length", pc.filter.min_path_length);
      f.field("max_invalid_fraction", pc.filter.max_invalid_fraction);
      f.field("fast_speed", pc.filter.fast_speed);
      f.field("fast_run", pc.filter.fast_run);
    });
  });
  io.section("gpr", [&](auto& s) {
    auto& g = cfg.gpr;
    s.field("kernel", g.kernel);
    s.field("max_points", g.max_points);
    s.field("learning_rate", g.optimizer.learning_rate);
    s.field("beta1", g.optimizer.beta1);
    s.field("beta2", g.optimizer.beta2);
    s.field("iterations", g.optimizer.iterations);
    s.field("early_stop_tolerance", g.optimizer.early_stop_tolerance);
    s.field("early_stop_window", g.optimizer.early_stop_window);
    s.field("jitter", g.optimizer.jitter);
    s.field("initial_noise", g.optimizer.initial_noise);
    s.field("initial_alpha", g.optimizer.initial_alpha);
    s.field("length_scale_subsample", g.optimizer.length_scale_subsample);
  });
  io.section("forest", [&](auto& s) {
    auto& f = cfg.forest;
    s.field("n_trees", f.grid.n_trees);
    s.field("max_depth", f.grid.max_depth);
    s.field("splits", f.splits);
    s.field("train_fraction", f.train_fraction);
    s.field("validation_fraction", f.validation_fraction);
    s.field("smote_k", f.smote_k);
    s.field("velocity_features", f.layout.velocity);
    s.field("frame_stride", f.frame_stride);
  });
  io.section("risk", [&](auto& s) {
    s.field("dt", cfg.risk.dt);
    s.field("steps", cfg.risk.steps);
    s.field("radius", cfg.risk.radius);
    s.field("rollout_mode", cfg.risk.mode);
    s.field("frame_stride", cfg.risk.frame_stride);
  });
  io.section("ssm", [&](auto& s) {
    s.field("pet_threshold", cfg.ssm.pet_threshold);
    s.field("zone_radius", cfg.ssm.zone_radius);
    s.field("ttc_radius", cfg.ssm.ttc_radius);
  });
  io.section("evaluation", [&](auto& s) {
    s.field("holdout_fraction", cfg.evaluation.holdout_fraction);
    s.field("horizon_steps", cfg.evaluation.study.horizon_steps);
    s.field("starting_points", cfg.evaluation.study.starting_points);
    s.field("horizons", cfg.evaluation.study.horizons);
  });
}

void check(const RunConfig& c) {
  const auto fail = [](const std::string& what) { throw InputError("config: " + what); };
  if (!(c.preprocess.cell_size > 0.0)) fail("preprocess.cell_size must be positive");
  if (!(c.preprocess.cluster_fraction > 0.0) || c.preprocess.cluster_fraction > 1.0)
    fail("preprocess.cluster_fraction must be in (0, 1]");
  if (c.gpr.max_points < 2) fail("gpr.max_points must be at least 2");
  if (c.gpr.optimizer.iterations < 0) fail("gpr.iterations must be non-negative");
  if (!(c.gpr.optimizer.learning_rate > 0.0)) fail("gpr.learning_rate must be positive");
  if (c.forest.grid.n_trees.empty() || c.forest.grid.max_depth.empty()) fail("forest grid must not be empty");
  for (int n : c.forest.grid.n_trees)
    if (n < 1) fail("forest.n_trees entries must be positive");
  for (const auto& d : c.forest.grid.max_depth)
    if (d && *d < 1) fail("forest.max_depth entries must be positive or null");
  if (c.forest.splits < 1) fail("forest.splits must be positive");
  if (!(c.risk.dt > 0.0) || c.risk.steps < 1) fail("risk.dt must be positive and risk.steps at least 1");
  if (c.risk.radius < 0.0 || c.ssm.zone_radius <= 0.0 || c.ssm.ttc_radius < 0.0) fail("radii must be non-negative");
  if (!(c.evaluation.holdout_fraction > 0.0) || c.evaluation.holdout_fraction >= 1.0)
    fail("evaluation.holdout_fraction must be in (0, 1)");
  if (c.evaluation.study.horizon_steps < 1) fail("evaluation.horizon_steps must be positive");
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  for (auto& row : c.synth.n_vehicles) row = {20, 20, 20};
  c.synth.n_pedestrians = {8, 8, 8, 8};
  c.synth.n_engineered_conflicts = 16;
  std::array<Box, 8> regions;
  const auto ends = synth::canonical_endpoints();
  for (std::size_t i = 0; i < 8; ++i) regions[i] = {ends[i] - Vec2{0.75, 0.75}, ends[i] + Vec2{0.75, 0.75}};
  c.preprocess.search_regions = regions;
  return c;
}

RunConfig parse_config(const nlohmann::json& doc) {
  RunConfig cfg = default_config();
  Reader r(doc, "");
  visit(r, cfg);
  r.finish();
  check(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot read '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config: " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json to_json(const RunConfig& cfg) {
  Writer w;
  visit(w, cfg);
  return w.take();
}

}  // namespace pvrisk::app
