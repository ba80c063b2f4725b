#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pvrisk/errors.hpp"
#include "pvrisk/ssm/ssm.hpp"

using namespace pvrisk;
using namespace pvrisk::ssm;

namespace {

Trajectory line_track(const std::string& id, ObjectClass c, Vec2 start, Vec2 v, double t0, double t1,
                      double dt = 0.1) {
  Trajectory t;
  t.id = id;
  t.object_class = c;
  const int n = static_cast<int>(std::lround((t1 - t0) / dt));
  for (int k = 0; k <= n; ++k) {
    const double tk = t0 + k * dt;
    const Vec2 p = start + v * (tk - t0);
    t.points.push_back({tk, p.x, p.y, v.x, v.y, 0.0, true});
  }
  return t;
}

double point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double s = std::clamp((p - a).dot(d) / d.squared_norm(), 0.0, 1.0);
  return distance(p, a + d * s);
}

double segment_distance_brute(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const auto side = [](Vec2 o, Vec2 a, Vec2 b) { return (a - o).cross(b - o); };
  if (side(a0, a1, b0) * side(a0, a1, b1) < 0.0 && side(b0, b1, a0) * side(b0, b1, a1) < 0.0) return 0.0;
  return std::min({point_segment(a0, b0, b1), point_segment(a1, b0, b1), point_segment(b0, a0, a1),
                   point_segment(b1, a0, a1)});
}

double mann_whitney(const std::vector<double>& s, const std::vector<bool>& pos) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (pos[i] && !pos[j]) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

}  // namespace

TEST_CASE("time to collision agrees with a 1 ms scan") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-20.0, 20.0), vel(-12.0, 12.0);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    risk::KinematicState v{pos(rng), pos(rng), vel(rng), vel(rng), 0, 0};
    risk::KinematicState p{pos(rng), pos(rng), vel(rng) * 0.2, vel(rng) * 0.2, 0, 0};
    if (trial % 2 == 0) {
      // Aim the vehicle roughly at the pedestrian's future position.
      const double tc = 1.0 + trial * 0.05;
      const Vec2 target = p.position() + p.velocity() * tc + Vec2{pos(rng), pos(rng)} * 0.05;
      const Vec2 vel_needed = (target - v.position()) * (1.0 / tc);
      v.vx = vel_needed.x;
      v.vy = vel_needed.y;
    }
    const double r = 1.5;
    const auto ttc = compute_ttc(v, p, r);
    std::optional<double> scan;
    for (int k = 0; k <= 20000; ++k) {
      const double t = k * 1e-3;
      const Vec2 d = (p.position() + p.velocity() * t) - (v.position() + v.velocity() * t);
      if (d.norm() <= r) {
        scan = t;
        break;
      }
    }
    if (scan) {
      ++hits;
      REQUIRE(ttc);
      CHECK(std::abs(*ttc - *scan) <= 1e-3);
    } else if (ttc && *ttc < 20.0) {
      const Vec2 d = (p.position() + p.velocity() * *ttc) - (v.position() + v.velocity() * *ttc);
      CHECK(d.norm() == doctest::Approx(r).epsilon(1e-6));
    }
  }
  CHECK(hits >= 50);
}

TEST_CASE("time to collision edge cases") {
  const risk::KinematicState v{0, 0, 10, 0, 0, 0};
  CHECK(*compute_ttc(v, {0.5, 0, 0, 0, 0, 0}, 1.0) == 0.0);
  CHECK(*compute_ttc(v, {21, 0, 0, 0, 0, 0}, 1.0) == doctest::Approx(2.0));
  CHECK_FALSE(compute_ttc(v, {-5, 0, 0, 0, 0, 0}, 1.0));
  CHECK_FALSE(compute_ttc(v, {10, 5, 0, 0, 0, 0}, 1.0));
  CHECK_FALSE(compute_ttc({0, 0, 1, 1, 0, 0}, {5, 0, 1, 1, 0, 0}, 1.0));
}

TEST_CASE("zone occupancy interpolates entry and exit") {
  const auto v = line_track("v", ObjectClass::Vehicle, {-20, 0}, {10, 0}, 0.0, 4.0);
  const auto occ = zone_occupancy(v, {0, 0}, 1.0);
  REQUIRE(occ);
  CHECK(occ->enter == doctest::Approx(1.9));
  CHECK(occ->exit == doctest::Approx(2.1));
  CHECK_FALSE(zone_occupancy(v, {0, 5}, 1.0));
  auto gappy = v;
  for (int k = 15; k <= 25; ++k) gappy.points[k].valid = false;
  const auto g = zone_occupancy(gappy, {0, 0}, 1.0);
  REQUIRE(g);
  CHECK(g->enter == doctest::Approx(1.9));
  CHECK(g->exit == doctest::Approx(2.1));
}

TEST_CASE("closest approach lies between the segment and sample minima") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    Trajectory a, b;
    Vec2 pa{n(rng) * 5, n(rng) * 5}, pb{n(rng) * 5, n(rng) * 5};
    for (int k = 0; k < 8; ++k) {
      a.points.push_back({k * 0.1, pa.x, pa.y, 0, 0, 0, true});
      b.points.push_back({k * 0.1, pb.x, pb.y, 0, 0, 0, true});
      pa = pa + Vec2{n(rng), n(rng)};
      pb = pb + Vec2{n(rng), n(rng)};
    }
    double samples = std::numeric_limits<double>::infinity(), segments = samples;
    for (std::size_t i = 0; i < a.points.size(); ++i)
      for (std::size_t k = 0; k < b.points.size(); ++k) {
        samples = std::min(samples, distance(a.points[i].position(), b.points[k].position()));
        if (i + 1 < a.points.size() && k + 1 < b.points.size())
          segments = std::min(segments, segment_distance_brute(a.points[i].position(), a.points[i + 1].position(),
                                                               b.points[k].position(), b.points[k + 1].position()));
      }
    const auto c = closest_approach(a, b);
    REQUIRE(c);
    CHECK(c->distance <= samples + 1e-12);
    CHECK(c->distance >= segments - 1e-6);
    CHECK(distance(c->on_a, c->on_b) == doctest::Approx(c->distance));
  }
  Trajectory empty;
  CHECK_FALSE(closest_approach(empty, empty));
}

TEST_CASE("post-encroachment time on crossing paths") {
  const auto v = line_track("v", ObjectClass::Vehicle, {-20, 0}, {10, 0}, 0.0, 4.0);
  const auto p = line_track("p", ObjectClass::Pedestrian, {0, -5}, {0, 1}, 0.0, 10.0);
  const auto e = compute_pet(v, p);
  REQUIRE(e);
  CHECK(e->vehicle_first);
  CHECK(e->pet == doctest::Approx(1.9));
  CHECK(e->window_start == doctest::Approx(2.1));
  CHECK(e->window_end == doctest::Approx(4.0));
  CHECK(std::abs(e->zone_center.x) < 1e-9);
  CHECK(std::abs(e->zone_center.y) < 1e-9);

  const auto early = line_track("p", ObjectClass::Pedestrian, {0, -5}, {0, 1}, -3.0, 7.0);
  const auto o = compute_pet(v, early);
  REQUIRE(o);
  CHECK_FALSE(o->vehicle_first);
  CHECK(o->pet == 0.0);

  const auto away = line_track("p", ObjectClass::Pedestrian, {0, 5}, {0, 1}, 0.0, 10.0);
  CHECK_FALSE(compute_pet(v, away));
}

TEST_CASE("conflict identification applies the threshold") {
  Dataset d;
  d.trajectories.push_back(line_track("v1", ObjectClass::Vehicle, {-20, 0}, {10, 0}, 0.0, 4.0));
  d.trajectories.push_back(line_track("p1", ObjectClass::Pedestrian, {0, -5}, {0, 1}, 0.0, 10.0));
  d.trajectories.push_back(line_track("p2", ObjectClass::Pedestrian, {100, -5}, {0, 1}, 0.0, 10.0));
  d.trajectories.push_back(line_track("p3", ObjectClass::Pedestrian, {0, -5}, {0, 1}, 3.1, 13.1));
  d.trajectories.push_back(line_track("p4", ObjectClass::Pedestrian, {5, -5}, {0, 1}, 50.0, 60.0));
  d.trajectories.push_back(line_track("a0", ObjectClass::Pedestrian, {0, -5}, {0, 1}, 0.0, 10.0));
  CHECK(co_present(d.trajectories[0], d.trajectories[3]));
  CHECK_FALSE(co_present(d.trajectories[0], d.trajectories[4]));
  const auto events = identify_conflicts_pet(d, 3.0, 1.0);
  REQUIRE(events.size() == 2);
  CHECK(events[0].pedestrian_id == "a0");
  CHECK(events[1].pedestrian_id == "p1");
  CHECK(identify_conflicts_pet(d, 6.0, 1.0).size() == 3);
}

TEST_CASE("hand-computed detection metrics") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.0, 0.0};
  const std::vector<bool> pos{true, false, true, false, false};
  const auto r = evaluate_scores(s, pos);
  CHECK(r.true_positives == 2);
  CHECK(r.false_positives == 1);
  CHECK(r.true_negatives == 2);
  CHECK(r.false_negatives == 0);
  CHECK(r.sensitivity == 1.0);
  CHECK(r.false_alarm_rate == doctest::Approx(1.0 / 3.0));
  CHECK(r.auc == doctest::Approx(5.0 / 6.0));
  REQUIRE(r.roc.size() == 5);
  CHECK(std::isinf(r.roc[0].threshold));
  CHECK(r.roc[2].tpr == 0.5);
  CHECK(r.roc[2].fpr == doctest::Approx(1.0 / 3.0));
  CHECK(r.roc[4].fpr == 1.0);
  CHECK_FALSE(r.auc_undefined);
}

TEST_CASE("area under the curve equals the rank statistic") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> level(0, 6);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s;
    std::vector<bool> pos;
    for (int i = 0; i < 30; ++i) {
      s.push_back(level(rng) / 6.0);
      pos.push_back(coin(rng));
    }
    pos[0] = true;
    pos[1] = false;
    CHECK(evaluate_scores(s, pos).auc == doctest::Approx(mann_whitney(s, pos)).epsilon(1e-12));
  }
}

TEST_CASE("undefined detection metrics") {
  const auto all_pos = evaluate_scores({0.5, 0.0}, {true, true});
  CHECK(all_pos.false_alarm_rate_undefined);
  CHECK(all_pos.auc_undefined);
  CHECK_FALSE(all_pos.sensitivity_undefined);
  CHECK(all_pos.sensitivity == 0.5);
  const auto none = evaluate_scores({}, {});
  CHECK(none.sensitivity_undefined);
  CHECK(none.false_alarm_rate_undefined);
  CHECK_THROWS_AS(evaluate_scores({1.0}, {}), InputError);
}

TEST_CASE("detection from pair streams") {
  std::vector<PairStream> streams{{"v1", "p1", {0.1, 0.6, 0.2}},
                                  {"v1", "p2", {}},
                                  {"v2", "p1", {0.0, 0.3}},
                                  {"v1", "p1", {0.7}}};
  ConflictEvent e;
  e.vehicle_id = "v1";
  e.pedestrian_id = "p1";
  const auto r = evaluate_detection(streams, {e});
  CHECK(r.true_positives == 1);
  CHECK(r.false_positives == 1);
  CHECK(r.true_negatives == 1);
  CHECK(r.auc == 1.0);
  CHECK(r.roc[1].threshold == 0.7);
  e.pedestrian_id = "p9";
  CHECK_THROWS_AS(evaluate_detection(streams, {e}), InputError);
}
