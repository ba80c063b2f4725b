#include "pvrisk/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "pvrisk/core/csv.hpp"
#include "pvrisk/errors.hpp"
#include "pvrisk/gpr/persistence.hpp"
#include "pvrisk/maneuver/persistence.hpp"
#include "pvrisk/risk/risk.hpp"

namespace pvrisk::app {

namespace {

using nlohmann::json;

template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(name + ": " + e.what());
  } catch (const json::exception& e) {
    throw InputError(name + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw InputError(name + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

json vec(Vec2 v) { return json::array({v.x, v.y}); }

Dataset load_input(const RunConfig& cfg, const fs::path& path) {
  if (!fs::exists(path)) throw InputError("input '" + path.string() + "' does not exist");
  Dataset d = load_dataset(path, cfg.schema);
  if (d.trajectories.empty()) throw InputError("input '" + path.string() + "' holds no trajectories");
  return d;
}

std::vector<const Trajectory*> labeled_vehicles(const Dataset& d) {
  std::vector<const Trajectory*> out;
  for (const Trajectory* v : d.of_class(ObjectClass::Vehicle))
    if (v->entering_direction && v->maneuver) out.push_back(v);
  return out;
}

json summary(const risk::ErrorSummary& s) { return {{"mean", s.mean}, {"std", s.std}, {"vehicles", s.vehicles}}; }

json study_rows(const std::vector<risk::StudyRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json g = json::object(), d = json::object();
    for (std::size_t i = 0; i < risk::kStudyGroups.size(); ++i) {
      const std::string key(risk::to_string(risk::kStudyGroups[i]));
      g[key] = summary(row.gpr[i]);
      d[key] = summary(row.dynamic[i]);
    }
    out.push_back({{"parameter", row.parameter}, {"gpr", g}, {"dynamic", d}});
  }
  return out;
}

std::string study_table(const risk::TrajectoryStudy& study) {
  std::ostringstream out;
  out << "table,parameter,group,model,mean,std,vehicles\n";
  const auto emit = [&](const char* table, const std::vector<risk::StudyRow>& rows) {
    for (const auto& row : rows)
      for (std::size_t i = 0; i < risk::kStudyGroups.size(); ++i) {
        const auto g = risk::to_string(risk::kStudyGroups[i]);
        out << table << ',' << row.parameter << ',' << g << ",gpr," << fmt(row.gpr[i].mean) << ','
            << fmt(row.gpr[i].std) << ',' << row.gpr[i].vehicles << '\n';
        out << table << ',' << row.parameter << ',' << g << ",dynamic," << fmt(row.dynamic[i].mean) << ','
            << fmt(row.dynamic[i].std) << ',' << row.dynamic[i].vehicles << '\n';
      }
  };
  emit("starting_point", study.by_starting_point);
  emit("horizon", study.by_horizon);
  return out.str();
}

json params_json(const maneuver::ForestParams& p) {
  return {{"n_trees", p.n_trees}, {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)}};
}

json metric(const maneuver::MetricSummary& m) { return {{"mean", m.mean}, {"std", m.std}}; }

json geometry_json(const IntersectionGeometry& g) {
  json ends = json::array();
  for (Vec2 p : g.endpoints()) ends.push_back(vec(p));
  json crosswalks = json::object();
  for (Direction d : kDirections) {
    const auto cw = g.crosswalk(d);
    crosswalks[std::string(to_string(d))] = json::array({vec(cw[0]), vec(cw[1])});
  }
  return {{"endpoints", ends},
          {"center", vec(g.center())},
          {"corners", {{"ne", vec(g.corner_ne())}, {"nw", vec(g.corner_nw())},
                       {"sw", vec(g.corner_sw())}, {"se", vec(g.corner_se())}}},
          {"crosswalks", crosswalks}};
}

// Frame number and point index of every valid point.
using FrameList = std::vector<std::pair<long long, std::size_t>>;

FrameList frames_of(const Trajectory& traj, double dt) {
  FrameList out;
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const TrackPoint& p = traj.points[i];
    if (p.valid && kinematics_finite(p)) out.emplace_back(std::llround(p.t / dt), i);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out.erase(std::unique(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
            out.end());
  return out;
}

struct SeriesRow {
  double t = 0.0;
  std::size_t pair = 0;
  maneuver::ManeuverDistribution probs;
  std::array<double, 3> risks{};
  double risk = 0.0;
  std::optional<double> ttc;
  double vehicle_speed = 0.0;
};

}  // namespace

json to_json(const preprocess::PreprocessReport& r) {
  json removed = json::array();
  for (const auto& [id, rules] : r.removed_pedestrians) {
    json names = json::array();
    for (auto rule : rules) names.push_back(std::string(preprocess::to_string(rule)));
    removed.push_back({{"id", id}, {"rules", names}});
  }
  json clusters = json::object();
  for (Direction d : kDirections) {
    json row = json::object();
    for (Maneuver m : kManeuvers) row[std::string(to_string(m))] = r.cluster_counts[index_of(d)][index_of(m)];
    clusters[std::string(to_string(d))] = row;
  }
  return {{"input_trajectories", r.input_trajectories},
          {"input_by_class", r.input_by_class},
          {"vehicles_retained", r.vehicles_retained},
          {"vehicles_unsupported", r.vehicles_unsupported},
          {"vehicles_without_valid_points", r.vehicles_without_valid_points},
          {"other_classes_dropped", r.other_classes_dropped},
          {"pedestrians_before_merge", r.pedestrians_before_merge},
          {"pedestrians_after_merge", r.pedestrians_after_merge},
          {"pedestrians_retained", r.pedestrians_retained},
          {"removed_by_rule", r.removed_by_rule},
          {"cluster_counts", clusters},
          {"removed_pedestrians", removed}};
}

json to_json(const risk::TrajectoryStudy& study) {
  return {{"by_starting_point", study_rows(study.by_starting_point)}, {"by_horizon", study_rows(study.by_horizon)}};
}

json to_json(const maneuver::ClassificationReport& r) {
  json per_class = json::object();
  for (Maneuver m : kManeuvers) {
    const auto& c = r.per_class[index_of(m)];
    per_class[std::string(to_string(m))] = {{"precision", c.precision},
                                            {"recall", c.recall},
                                            {"f1", c.f1},
                                            {"support", c.support},
                                            {"precision_undefined", c.precision_undefined},
                                            {"recall_undefined", c.recall_undefined},
                                            {"f1_undefined", c.f1_undefined}};
  }
  json confusion = json::array();
  for (const auto& row : r.confusion) confusion.push_back(row);
  return {{"n", r.n},
          {"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"per_class", per_class},
          {"confusion", confusion}};
}

json to_json(const maneuver::ProtocolResult& result) {
  json per_class = json::object();
  for (Maneuver m : kManeuvers) {
    const int i = index_of(m);
    per_class[std::string(to_string(m))] = {
        {"precision", metric(result.precision[i])}, {"recall", metric(result.recall[i])}, {"f1", metric(result.f1[i])}};
  }
  json splits = json::array();
  for (const auto& s : result.splits)
    splits.push_back(
        {{"chosen", params_json(s.chosen)}, {"validation_macro_f1", s.validation_macro_f1}, {"test", to_json(s.test)}});
  return {{"per_class", per_class},
          {"macro_f1", metric(result.macro_f1)},
          {"model", params_json(result.model.params)},
          {"splits", splits}};
}

json to_json(const ssm::DetectionReport& r) {
  json roc = json::array();
  for (const auto& p : r.roc)
    roc.push_back({{"threshold", std::isfinite(p.threshold) ? json(p.threshold) : json("inf")},
                   {"tpr", p.tpr},
                   {"fpr", p.fpr}});
  return {{"sensitivity", r.sensitivity},
          {"false_alarm_rate", r.false_alarm_rate},
          {"auc", r.auc},
          {"true_positives", r.true_positives},
          {"false_positives", r.false_positives},
          {"true_negatives", r.true_negatives},
          {"false_negatives", r.false_negatives},
          {"sensitivity_undefined", r.sensitivity_undefined},
          {"false_alarm_rate_undefined", r.false_alarm_rate_undefined},
          {"auc_undefined", r.auc_undefined},
          {"roc", roc}};
}

synth::Scenario cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  synth::ScenarioSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  auto scenario = stage("synth", [&] { return synth::generate_scenario(spec); });
  stage("synth: writing outputs", [&] {
    ensure_dir(out_dir);
    save_dataset(out_dir / kDatasetFile, scenario.dataset);
    write_json(out_dir / kGroundTruthFile, synth::to_json(scenario.truth));
  });
  return scenario;
}

preprocess::PreprocessResult cmd_preprocess(const RunConfig& cfg, const fs::path& in_csv, const fs::path& out_dir) {
  LoadStats stats;
  const Dataset input = stage("preprocess: loading dataset", [&] {
    if (!fs::exists(in_csv)) throw InputError("input '" + in_csv.string() + "' does not exist");
    Dataset d = load_dataset(in_csv, cfg.schema, &stats);
    return d;
  });
  auto result = stage("preprocess", [&] { return preprocess::run_preprocess(input, cfg.preprocess); });
  stage("preprocess: writing outputs", [&] {
    ensure_dir(out_dir);
    save_dataset(out_dir / kLabeledFile, result.labeled);
    json report = to_json(result.report);
    report["rows_read"] = stats.rows_read;
    report["rows_skipped"] = stats.rows_skipped;
    report["duplicate_frames"] = stats.duplicate_frames;
    report["endpoints_estimated"] = result.grid.has_value();
    write_json(out_dir / kPreprocessReportFile, report);
    if (result.labeled.geometry) write_json(out_dir / kGeometryFile, geometry_json(*result.labeled.geometry));
    if (result.grid) {
      std::ostringstream grid;
      preprocess::write_density_grid(grid, *result.grid);
      write_text(out_dir / kDensityGridFile, grid.str());
    }
  });
  return result;
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& labeled_csv, const fs::path& out_dir) {
  const Dataset data = stage("train: loading dataset", [&] { return load_input(cfg, labeled_csv); });
  const auto vehicles = labeled_vehicles(data);
  if (vehicles.empty()) throw InputError("train: no vehicles with direction and maneuver labels");

  // Vehicle-level holdout drawn per cluster so every cluster keeps training data.
  TrainResult result;
  std::vector<const Trajectory*> train, holdout;
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  for (Direction d : kDirections)
    for (Maneuver m : kManeuvers) {
      std::vector<const Trajectory*> cell;
      for (const Trajectory* v : vehicles)
        if (*v->entering_direction == d && *v->maneuver == m) cell.push_back(v);
      std::shuffle(cell.begin(), cell.end(), rng);
      std::size_t n_hold = static_cast<std::size_t>(std::llround(cfg.evaluation.holdout_fraction * cell.size()));
      if (!cell.empty()) n_hold = std::min(n_hold, cell.size() - 1);
      for (std::size_t i = 0; i < cell.size(); ++i) (i < n_hold ? holdout : train).push_back(cell[i]);
    }
  const auto by_id = [](const Trajectory* a, const Trajectory* b) { return a->id < b->id; };
  std::sort(train.begin(), train.end(), by_id);
  std::sort(holdout.begin(), holdout.end(), by_id);
  for (const auto* v : train) result.train_ids.push_back(v->id);
  for (const auto* v : holdout) result.holdout_ids.push_back(v->id);

  gpr::ClusterTrainingOptions gopt;
  gopt.kind = cfg.gpr.kernel;
  gopt.max_points = cfg.gpr.max_points;
  gopt.seed = cfg.seed;
  gopt.optimizer = cfg.gpr.optimizer;
  gopt.optimizer.seed = cfg.seed;
  const auto models = stage("train: gpr", [&] { return gpr::train_cluster_models(train, gopt); });

  risk::StudyConfig scfg = cfg.evaluation.study;
  scfg.dt = cfg.risk.dt;
  scfg.mode = cfg.risk.mode;
  result.study = stage("train: trajectory study", [&] { return risk::run_trajectory_study(holdout, models, scfg); });

  const auto table = stage("train: feature table", [&] {
    return maneuver::build_feature_table(vehicles, cfg.forest.layout, cfg.forest.frame_stride);
  });
  maneuver::ProtocolConfig pcfg;
  pcfg.n_splits = cfg.forest.splits;
  pcfg.train_fraction = cfg.forest.train_fraction;
  pcfg.validation_fraction = cfg.forest.validation_fraction;
  pcfg.smote_k = cfg.forest.smote_k;
  pcfg.grid = cfg.forest.grid;
  pcfg.seed = cfg.seed;
  result.protocol = stage("train: forest", [&] { return maneuver::run_protocol(table, cfg.forest.layout, pcfg); });

  stage("train: writing outputs", [&] {
    ensure_dir(out_dir);
    gpr::save_cluster_models(models, out_dir / kGprModelsFile);
    maneuver::save_forest(result.protocol.model, cfg.forest.layout, out_dir / kForestFile);
    json traj = to_json(result.study);
    traj["train_vehicles"] = train.size();
    traj["holdout_vehicles"] = holdout.size();
    traj["horizon_steps"] = scfg.horizon_steps;
    write_json(out_dir / kTrajectoryReportFile, traj);
    write_text(out_dir / kTrajectoryTableFile, study_table(result.study));
    json cls = to_json(result.protocol);
    const auto counts = table.class_counts();
    cls["rows"] = table.size();
    cls["class_counts"] = {{"left", counts[0]}, {"right", counts[1]}, {"straight", counts[2]}};
    write_json(out_dir / kClassifierReportFile, cls);
  });
  return result;
}

RiskResult cmd_risk(const RunConfig& cfg, const fs::path& labeled_csv, const fs::path& models_dir,
                    const fs::path& out_dir) {
  const Dataset data = stage("risk: loading dataset", [&] { return load_input(cfg, labeled_csv); });
  const auto models = stage("risk: loading gpr models", [&] {
    return gpr::load_cluster_models(models_dir / kGprModelsFile);
  });
  maneuver::FeatureLayout layout;
  const auto forest = stage("risk: loading forest", [&] { return maneuver::load_forest(models_dir / kForestFile, &layout); });

  RiskResult result;
  result.truth = stage("risk: pet ground truth", [&] {
    return ssm::identify_conflicts_pet(data, cfg.ssm.pet_threshold, cfg.ssm.zone_radius);
  });

  risk::RiskConfig rcfg;
  rcfg.rollout.dt = cfg.risk.dt;
  rcfg.rollout.steps = cfg.risk.steps;
  rcfg.rollout.mode = cfg.risk.mode;
  rcfg.rollout.seed = cfg.seed;
  rcfg.radius = cfg.risk.radius;
  rcfg.layout = layout;

  const auto vehicles = data.of_class(ObjectClass::Vehicle);
  const auto pedestrians = data.of_class(ObjectClass::Pedestrian);
  std::vector<FrameList> ped_frames;
  for (const Trajectory* p : pedestrians) ped_frames.push_back(frames_of(*p, cfg.risk.dt));
  const long long stride = static_cast<long long>(std::max<std::size_t>(1, cfg.risk.frame_stride));

  std::vector<SeriesRow> rows;
  stage("risk: streams", [&] {
    for (const Trajectory* v : vehicles) {
      bool usable = v->entering_direction.has_value();
      if (usable) {
        usable = false;
        for (Maneuver m : kManeuvers) usable = usable || models.get(*v->entering_direction, m) != nullptr;
      }
      if (!usable) ++result.vehicles_skipped;
      const FrameList vf = usable ? frames_of(*v, cfg.risk.dt) : FrameList{};
      std::map<long long, risk::VehicleOutlook> outlooks;
      for (std::size_t pi = 0; pi < pedestrians.size(); ++pi) {
        const Trajectory* p = pedestrians[pi];
        if (!ssm::co_present(*v, *p)) continue;
        const std::size_t pair = result.streams.size();
        result.streams.push_back({v->id, p->id, {}});
        const FrameList& pf = ped_frames[pi];
        std::size_t a = 0, b = 0;
        while (a < vf.size() && b < pf.size()) {
          if (vf[a].first < pf[b].first) {
            ++a;
          } else if (pf[b].first < vf[a].first) {
            ++b;
          } else {
            const long long frame = vf[a].first;
            if (((frame % stride) + stride) % stride == 0) {
              const std::size_t vi = vf[a].second;
              auto it = outlooks.find(frame);
              if (it == outlooks.end())
                it = outlooks
                         .emplace(frame, risk::vehicle_outlook(v->points[vi], *v->entering_direction, models, forest,
                                                               rcfg))
                         .first;
              const auto ped_state = risk::state_at(*p, pf[b].second);
              const auto profile = risk::assess(it->second, ped_state, rcfg);
              SeriesRow row;
              row.t = v->points[vi].t;
              row.pair = pair;
              row.probs = profile.maneuver_probs;
              for (int i = 0; i < 3; ++i) row.risks[i] = profile.assessments[i].risk;
              row.risk = profile.risk;
              row.ttc = ssm::compute_ttc(risk::state_at(*v, vi), ped_state, cfg.ssm.ttc_radius);
              row.vehicle_speed = v->points[vi].speed();
              rows.push_back(row);
              result.streams[pair].risks.push_back(profile.risk);
            }
            ++a;
            ++b;
          }
        }
      }
    }
  });

  result.detection = stage("risk: detection", [&] { return ssm::evaluate_detection(result.streams, result.truth); });

  stage("risk: writing outputs", [&] {
    ensure_dir(out_dir);
    std::map<std::pair<std::string, std::string>, std::size_t> truth_index;
    for (std::size_t i = 0; i < result.truth.size(); ++i)
      truth_index[{result.truth[i].vehicle_id, result.truth[i].pedestrian_id}] = i;

    std::ostringstream series, cases;
    series << "t,vehicle_id,pedestrian_id,p_left,p_right,p_straight,risk_left,risk_right,risk_straight,risk,ttc\n";
    cases << "vehicle_id,pedestrian_id,t,risk,ttc,vehicle_speed\n";
    std::vector<double> max_risk(result.streams.size(), 0.0);
    std::vector<std::optional<double>> first_alarm(result.streams.size());
    for (const auto& r : rows) {
      const auto& s = result.streams[r.pair];
      series << fmt(r.t) << ',' << s.vehicle_id << ',' << s.pedestrian_id << ',' << fmt(r.probs.p_left) << ','
             << fmt(r.probs.p_right) << ',' << fmt(r.probs.p_straight) << ',' << fmt(r.risks[0]) << ','
             << fmt(r.risks[1]) << ',' << fmt(r.risks[2]) << ',' << fmt(r.risk) << ',' << fmt(r.ttc) << '\n';
      max_risk[r.pair] = std::max(max_risk[r.pair], r.risk);
      if (r.risk > 0.0 && !first_alarm[r.pair]) first_alarm[r.pair] = r.t;
      if (truth_index.contains({s.vehicle_id, s.pedestrian_id}))
        cases << s.vehicle_id << ',' << s.pedestrian_id << ',' << fmt(r.t) << ',' << fmt(r.risk) << ','
              << fmt(r.ttc) << ',' << fmt(r.vehicle_speed) << '\n';
    }
    write_text(out_dir / kRiskSeriesFile, series.str());
    write_text(out_dir / kCaseStudiesFile, cases.str());

    std::map<std::pair<std::string, std::string>, std::size_t> stream_index;
    for (std::size_t i = 0; i < result.streams.size(); ++i)
      stream_index[{result.streams[i].vehicle_id, result.streams[i].pedestrian_id}] = i;

    std::ostringstream conflicts;
    conflicts << "vehicle_id,pedestrian_id,pet,window_start,window_end,zone_x,zone_y,vehicle_first,max_risk,"
                 "first_alarm,detected\n";
    json events = json::array();
    for (const auto& e : result.truth) {
      const std::size_t s = stream_index.at({e.vehicle_id, e.pedestrian_id});
      const bool detected = max_risk[s] > 0.0;
      conflicts << e.vehicle_id << ',' << e.pedestrian_id << ',' << fmt(e.pet) << ',' << fmt(e.window_start) << ','
                << fmt(e.window_end) << ',' << fmt(e.zone_center.x) << ',' << fmt(e.zone_center.y) << ','
                << (e.vehicle_first ? "vehicle" : "pedestrian") << ',' << fmt(max_risk[s]) << ','
                << fmt(first_alarm[s]) << ',' << (detected ? 1 : 0) << '\n';
      events.push_back({{"vehicle_id", e.vehicle_id},
                        {"pedestrian_id", e.pedestrian_id},
                        {"pet", e.pet},
                        {"window_start", e.window_start},
                        {"window_end", e.window_end},
                        {"zone_center", vec(e.zone_center)},
                        {"vehicle_first", e.vehicle_first},
                        {"max_risk", max_risk[s]},
                        {"first_alarm", first_alarm[s] ? json(*first_alarm[s]) : json(nullptr)},
                        {"detected", detected}});
    }
    write_text(out_dir / kConflictsFile, conflicts.str());

    json report = to_json(result.detection);
    report["pairs"] = result.streams.size();
    report["conflicts"] = result.truth.size();
    report["vehicles_skipped"] = result.vehicles_skipped;
    report["pet_threshold"] = cfg.ssm.pet_threshold;
    report["events"] = events;
    write_json(out_dir / kDetectionReportFile, report);
  });
  return result;
}

}  // namespace pvrisk::app
