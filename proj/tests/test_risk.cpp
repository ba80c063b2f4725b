#include <doctest.h>

#include <cmath>
#include <random>

#include "pvrisk/errors.hpp"
#include "pvrisk/risk/risk.hpp"
#include "pvrisk/risk/study.hpp"

using namespace pvrisk;
using namespace pvrisk::risk;

namespace {

PredictedPath random_walk(std::mt19937_64& rng, Vec2 start, int steps, double dt) {
  std::normal_distribution<double> n(0.0, 1.0);
  PredictedPath p;
  p.dt = dt;
  Vec2 v{n(rng) * 5.0, n(rng) * 5.0};
  Vec2 x = start;
  for (int j = 0; j <= steps; ++j) {
    p.points.push_back(x);
    v = v + Vec2{n(rng), n(rng)} * 0.5;
    x = x + v * dt;
  }
  return p;
}

std::optional<std::pair<std::size_t, std::size_t>> brute_conflict(const PredictedPath& a, const PredictedPath& b,
                                                                  double r) {
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (std::size_t j = 0; j < a.points.size(); ++j)
    for (std::size_t k = 0; k < b.points.size(); ++k) {
      const double dx = b.points[k].x - a.points[j].x, dy = b.points[k].y - a.points[j].y;
      if (dx * dx + dy * dy > r * r) continue;
      const auto gap = [](std::size_t p, std::size_t q) { return p > q ? p - q : q - p; };
      if (!best || std::make_tuple(gap(j, k), j, k) < std::make_tuple(gap(best->first, best->second), best->first,
                                                                      best->second))
        best = {j, k};
    }
  return best;
}

gpr::GprModelPair constant_field(Vec2 v) {
  const std::vector<Vec2> x{{-50, -50}, {50, -50}, {-50, 50}, {50, 50}};
  gpr::KernelConfig k;
  gpr::GprModelPair pair;
  const std::vector<double> vx(4, v.x), vy(4, v.y);
  pair.gp_x = gpr::GprModel::condition(x, vx, k, gpr::Standardization::fit(vx));
  pair.gp_y = gpr::GprModel::condition(x, vy, k, gpr::Standardization::fit(vy));
  return pair;
}

maneuver::ForestModel fixed_forest(std::array<double, 3> dist) {
  maneuver::ForestModel f;
  f.n_features = 5;
  f.params.n_trees = 1;
  maneuver::DecisionTree t;
  maneuver::TreeNode leaf;
  leaf.distribution = dist;
  t.nodes.push_back(leaf);
  f.trees.push_back(t);
  return f;
}

}  // namespace

TEST_CASE("maneuver risk values") {
  CHECK(maneuver_risk(2.0, 2.0) == 1.0);
  CHECK(std::abs(maneuver_risk(0.0, 1.0) - std::exp(-1.0)) <= 1e-12);
  CHECK(std::abs(maneuver_risk(1.5, 0.5) - std::exp(-1.0)) <= 1e-12);
  CHECK(maneuver_risk(std::optional<ConflictPoint>{}) == 0.0);
  ConflictPoint c;
  c.t_vehicle = 0.3;
  c.t_pedestrian = 0.3;
  CHECK(maneuver_risk(std::optional<ConflictPoint>{c}) == 1.0);
}

TEST_CASE("mixture equals the hand-computed weighted sum") {
  CHECK(std::abs(mix_risk({1.0, 0.0, 0.5}, {0.2, 0.3, 0.5}) - 0.45) <= 1e-12);
  CHECK(std::abs(mix_risk({std::exp(-1.0), 1.0, 0.0}, {0.5, 0.25, 0.25}) - (0.5 * std::exp(-1.0) + 0.25)) <= 1e-12);
  CHECK(std::abs(mix_risk({0.0, 0.0, 0.0}, {0.6, 0.3, 0.1})) <= 1e-12);
}

TEST_CASE("conflict search matches a brute-force scan") {
  std::mt19937_64 rng(99);
  int found = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_walk(rng, {0, 0}, 30, 0.1);
    const auto b = random_walk(rng, {1, 1}, 30, 0.1);
    const double r = 0.5 + (trial % 4) * 0.5;
    const auto got = find_conflict_point(a, b, r);
    const auto want = brute_conflict(a, b, r);
    REQUIRE(got.has_value() == want.has_value());
    if (!got) continue;
    ++found;
    CHECK(got->vehicle_index == want->first);
    CHECK(got->pedestrian_index == want->second);
    CHECK(got->t_vehicle == doctest::Approx(0.1 * static_cast<double>(want->first)));
    const Vec2 mid = (a.points[want->first] + b.points[want->second]) * 0.5;
    CHECK(got->point.x == mid.x);
    CHECK(got->point.y == mid.y);
  }
  CHECK(found > 50);
}

TEST_CASE("conflict search tie-breaking and checks") {
  PredictedPath v{0.1, {{0, 0}, {1, 0}, {2, 0}}};
  PredictedPath p{0.1, {{1, 0.2}, {0, 0.2}, {9, 9}}};
  // Pairs within 0.5: (0,1) and (1,0), both gap 1; smaller vehicle index wins.
  const auto c = find_conflict_point(v, p, 0.5);
  REQUIRE(c);
  CHECK(c->vehicle_index == 0);
  CHECK(c->pedestrian_index == 1);
  CHECK_FALSE(find_conflict_point(v, p, 0.1));
  PredictedPath shorter{0.1, {{0, 0}, {1, 0}}};
  CHECK_THROWS_AS(find_conflict_point(v, shorter, 1.0), InputError);
  PredictedPath other_dt{0.2, p.points};
  CHECK_THROWS_AS(find_conflict_point(v, other_dt, 1.0), InputError);
}

TEST_CASE("kinematic state and closed-form predictions") {
  Trajectory t;
  t.points = {{0.0, 0, 0, 1, 0, 0, true}, {0.1, 0.1, 0, 1.2, 0, 0, true}, {0.2, 0.2, 0, 0, 0, 0, false},
              {0.3, 0.3, 0, 1.6, 0.4, 0, true}};
  const auto s = state_at(t, 3);
  CHECK(s.ax == doctest::Approx(2.0));
  CHECK(s.ay == doctest::Approx(2.0));
  CHECK(state_at(t, 0).ax == 0.0);
  CHECK_THROWS_AS(state_at(t, 2), InputError);
  CHECK_THROWS_AS(state_at(t, 9), InputError);

  const KinematicState k{1, 2, 3, -1, 0, 0};
  const auto ped = predict_pedestrian(k, 0.1, 10);
  CHECK(ped.points.size() == 11);
  CHECK(ped.points[10].x == doctest::Approx(4.0));
  CHECK(ped.points[10].y == doctest::Approx(1.0));
  const auto dyn = dynamic_model_predict(k, 0.1, 10);
  for (std::size_t j = 0; j < ped.points.size(); ++j) {
    CHECK(dyn.points[j].x == ped.points[j].x);
    CHECK(dyn.points[j].y == ped.points[j].y);
  }
  const KinematicState acc{0, 0, 1, 0, 2, 0};
  const auto d2 = dynamic_model_predict(acc, 0.1, 10);
  CHECK(d2.points[10].x == doctest::Approx(1.0 + 0.5 * 2.0 * 1.0));
}

TEST_CASE("trajectory error") {
  const std::vector<Vec2> a{{0, 0}, {1, 0}, {2, 0}};
  const std::vector<Vec2> b{{0, 0}, {1, 1}, {2, 2}};
  const auto e = trajectory_error(a, b);
  CHECK(e.distances == std::vector<double>{0, 1, 2});
  CHECK(e.mean == doctest::Approx(1.0));
  CHECK(e.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK_THROWS_AS(trajectory_error(a, std::vector<Vec2>{{0, 0}}), InputError);
}

TEST_CASE("risk engine on a head-on crossing") {
  gpr::ClusterModels models;
  auto straight = constant_field({0, 10});
  straight.direction = Direction::South;
  straight.maneuver = Maneuver::Straight;
  models.set(straight);
  auto left = constant_field({-10, 0});
  left.direction = Direction::South;
  left.maneuver = Maneuver::LeftTurn;
  models.set(left);

  const auto forest = fixed_forest({0.25, 0.25, 0.5});
  RiskConfig cfg;
  cfg.rollout.steps = 30;
  // Vehicle at origin heading north at 10 m/s; the pedestrian reaches (0, 20)
  // at t = 2 walking west at 1 m/s.
  const TrackPoint veh{0.0, 0.0, 0.0, 0.0, 10.0, 0.0, true};
  const KinematicState ped{2.0, 20.0, -1.0, 0.0, 0.0, 0.0};
  const auto profile = estimate_risk(veh, Direction::South, ped, models, &forest, cfg);
  const auto& s = profile.assessments[2];
  REQUIRE(s.conflict_point);
  CHECK(s.risk == doctest::Approx(1.0));
  CHECK(profile.assessments[1].model_missing);
  CHECK(profile.assessments[1].risk == 0.0);
  CHECK(profile.maneuver_probs.p_straight == 0.5);
  CHECK(profile.risk == doctest::Approx(0.5 * s.risk + 0.25 * profile.assessments[0].risk));

  CHECK_THROWS_AS(estimate_risk(veh, Direction::South, ped, models, nullptr, cfg), InputError);
  CHECK_THROWS_AS(estimate_risk(veh, Direction::North, ped, models, &forest, cfg), InputError);
  maneuver::ForestModel empty;
  CHECK_THROWS_AS(estimate_risk(veh, Direction::South, ped, models, &empty, cfg), InputError);

  const KinematicState far{500.0, 500.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(estimate_risk(veh, Direction::South, far, models, &forest, cfg).risk == 0.0);
}

TEST_CASE("trajectory study rows") {
  gpr::ClusterModels models;
  auto pair = constant_field({0, 8});
  pair.direction = Direction::South;
  pair.maneuver = Maneuver::Straight;
  models.set(pair);
  std::vector<Trajectory> vs;
  for (int i = 0; i < 3; ++i) {
    Trajectory t;
    t.id = "v" + std::to_string(i);
    t.object_class = ObjectClass::Vehicle;
    t.entering_direction = Direction::South;
    t.maneuver = Maneuver::Straight;
    for (int k = 0; k < 70; ++k) t.points.push_back({k * 0.1, 1.75 + i, -30 + 0.8 * k, 0, 8, 0, true});
    vs.push_back(t);
  }
  vs[2].points[25].valid = false;
  std::vector<const Trajectory*> ptrs;
  for (const auto& v : vs) ptrs.push_back(&v);
  StudyConfig cfg;
  const auto study = run_trajectory_study(ptrs, models, cfg);
  REQUIRE(study.by_starting_point.size() == 3);
  REQUIRE(study.by_horizon.size() == 3);
  CHECK(study.by_starting_point[0].parameter == 10);
  CHECK(study.by_horizon[2].parameter == 20);
  const auto straight = static_cast<std::size_t>(StudyGroup::Straight);
  const auto all = static_cast<std::size_t>(StudyGroup::All);
  // The third vehicle has a gap inside the 30-step window for every start.
  CHECK(study.by_starting_point[0].gpr[straight].vehicles == 2);
  CHECK(study.by_starting_point[0].gpr[all].vehicles == 2);
  CHECK(study.by_starting_point[0].gpr[static_cast<std::size_t>(StudyGroup::Turns)].vehicles == 0);
  CHECK(study.by_starting_point[0].gpr[straight].mean < 1e-6);
  CHECK(study.by_starting_point[0].dynamic[straight].mean < 1e-6);
  CHECK(to_string(StudyGroup::Turns) == "turns");
}
