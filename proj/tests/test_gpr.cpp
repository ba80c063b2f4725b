#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "pvrisk/errors.hpp"
#include "pvrisk/gpr/gpr.hpp"
#include "pvrisk/gpr/persistence.hpp"

using namespace pvrisk;
using namespace pvrisk::gpr;

namespace {

double oracle_kernel(const KernelConfig& c, Vec2 a, Vec2 b) {
  const double d2 = (a - b).squared_norm();
  const double l2 = c.length_scale * c.length_scale;
  if (c.kind == KernelKind::RBF) return std::exp(-d2 / (2.0 * l2));
  return std::pow(1.0 + d2 / (2.0 * c.rq_alpha * l2), -c.rq_alpha);
}

Eigen::MatrixXd oracle_cov(const KernelConfig& c, const std::vector<Vec2>& x) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = oracle_kernel(c, x[i], x[j]);
  k.diagonal().array() += c.noise_variance + c.jitter;
  return k;
}

struct Problem {
  std::vector<Vec2> x;
  std::vector<double> y;
  KernelConfig kernel;
};

Problem random_problem(std::mt19937_64& rng, KernelKind kind) {
  std::uniform_int_distribution<int> size(2, 10);
  std::uniform_real_distribution<double> pos(-5.0, 5.0), val(-3.0, 3.0);
  std::uniform_real_distribution<double> ls(0.5, 4.0), al(0.3, 5.0), nz(0.01, 0.5);
  Problem p;
  const int n = size(rng);
  for (int i = 0; i < n; ++i) {
    p.x.push_back({pos(rng), pos(rng)});
    p.y.push_back(val(rng));
  }
  p.kernel.kind = kind;
  p.kernel.length_scale = ls(rng);
  p.kernel.rq_alpha = al(rng);
  p.kernel.noise_variance = nz(rng);
  return p;
}

Eigen::VectorXd standardized(const std::vector<double>& y, const Standardization& s) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = (y[i] - s.mean) / s.scale;
  return v;
}

}  // namespace

TEST_CASE("kernel formulas") {
  KernelConfig rbf{KernelKind::RBF, 2.0, 1.0, 0.1, 1e-6};
  CHECK(kernel_eval(rbf, {0, 0}, {0, 0}) == 1.0);
  CHECK(kernel_eval(rbf, {0, 0}, {2, 0}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  KernelConfig rq{KernelKind::RQ, 1.0, 2.0, 0.1, 1e-6};
  CHECK(kernel_eval(rq, {0, 0}, {0, 2}) == doctest::Approx(std::pow(2.0, -2.0)).epsilon(1e-14));
  CHECK(parse_kernel_kind("rbf") == KernelKind::RBF);
  CHECK(parse_kernel_kind("RQ") == KernelKind::RQ);
  CHECK_FALSE(parse_kernel_kind("matern"));
  KernelConfig bad = rq;
  bad.length_scale = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = rq;
  bad.noise_variance = -1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("kernel derivatives match central differences") {
  for (KernelKind kind : {KernelKind::RBF, KernelKind::RQ}) {
    KernelConfig c{kind, 1.7, 0.8, 0.1, 1e-6};
    for (double d2 : {0.0, 0.3, 2.0, 9.0}) {
      const auto d = kernel_derivatives(c, d2);
      CHECK(d.value == doctest::Approx(kernel_from_sqdist(c, d2)).epsilon(1e-14));
      const double h = 1e-6;
      KernelConfig up = c, dn = c;
      up.length_scale = c.length_scale * std::exp(h);
      dn.length_scale = c.length_scale * std::exp(-h);
      const double fd_l = (kernel_from_sqdist(up, d2) - kernel_from_sqdist(dn, d2)) / (2 * h);
      CHECK(d.d_log_length == doctest::Approx(fd_l).epsilon(1e-6));
      up = c;
      dn = c;
      up.rq_alpha = c.rq_alpha * std::exp(h);
      dn.rq_alpha = c.rq_alpha * std::exp(-h);
      const double fd_a = (kernel_from_sqdist(up, d2) - kernel_from_sqdist(dn, d2)) / (2 * h);
      CHECK(d.d_log_alpha == doctest::Approx(kind == KernelKind::RBF ? 0.0 : fd_a).epsilon(1e-6));
    }
  }
}

TEST_CASE("posterior matches the dense-inverse oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(-6.0, 6.0);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = random_problem(rng, trial % 2 ? KernelKind::RQ : KernelKind::RBF);
    const auto st = Standardization::fit(p.y);
    const auto model = GprModel::condition(p.x, p.y, p.kernel, st);
    const Eigen::MatrixXd inv = oracle_cov(model.kernel(), p.x).inverse();
    const Eigen::VectorXd y = standardized(p.y, st);
    for (int q = 0; q < 5; ++q) {
      const Vec2 x{pos(rng), pos(rng)};
      Eigen::VectorXd k(static_cast<Eigen::Index>(p.x.size()));
      for (std::size_t i = 0; i < p.x.size(); ++i) k(static_cast<Eigen::Index>(i)) = oracle_kernel(p.kernel, x, p.x[i]);
      const double mean = st.mean + st.scale * k.dot(inv * y);
      const double var = st.scale * st.scale * (1.0 - k.dot(inv * k) + p.kernel.noise_variance);
      const auto pred = model.predict(x);
      CHECK(std::abs(pred.mean - mean) < 1e-8);
      CHECK(std::abs(pred.variance - var) < 1e-8);
      CHECK(std::abs(model.predict_mean(x) - mean) < 1e-8);
    }
    const Eigen::MatrixXd cov = oracle_cov(model.kernel(), p.x);
    const double n = static_cast<double>(p.x.size());
    const double lml = -0.5 * y.dot(inv * y) - 0.5 * std::log(cov.determinant()) - 0.5 * n * std::log(2.0 * kPi);
    CHECK(std::abs(model.log_marginal_likelihood() - lml) < 1e-8);
  }
}

TEST_CASE("evidence gradient matches central finite differences") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = random_problem(rng, trial % 2 ? KernelKind::RQ : KernelKind::RBF);
    const PointSet pts(p.x);
    const Eigen::MatrixXd d2 = squared_distance_matrix(pts);
    const Eigen::VectorXd y = standardized(p.y, Standardization::fit(p.y));
    const auto g = log_evidence_gradient(d2, y, p.kernel);
    CHECK(g.log_likelihood == doctest::Approx(log_evidence(d2, y, p.kernel)).epsilon(1e-12));

    const double h = 1e-5;
    for (int axis = 0; axis < 3; ++axis) {
      KernelConfig up = p.kernel, dn = p.kernel;
      auto shift = [&](KernelConfig& c, double s) {
        if (axis == 0) c.length_scale *= std::exp(s);
        if (axis == 1) c.rq_alpha *= std::exp(s);
        if (axis == 2) c.noise_variance *= std::exp(s);
      };
      shift(up, h);
      shift(dn, -h);
      const double fd = (log_evidence(d2, y, up) - log_evidence(d2, y, dn)) / (2 * h);
      const double an = g.gradient(axis);
      if (axis == 1 && p.kernel.kind == KernelKind::RBF) {
        CHECK(an == 0.0);
        continue;
      }
      CHECK(std::abs(an - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("kernel matrices are positive semidefinite") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  for (KernelKind kind : {KernelKind::RBF, KernelKind::RQ}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vec2> x;
      for (int i = 0; i < 30; ++i) x.push_back({pos(rng), pos(rng)});
      x.push_back(x.front());  // exact duplicate
      const KernelConfig c{kind, 2.5, 1.3, 0.0, 1e-6};
      Eigen::MatrixXd k = kernel_matrix(c, PointSet(x));
      CHECK((k - k.transpose()).norm() == 0.0);
      k.diagonal().array() += c.jitter;
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
      const Eigen::LLT<Eigen::MatrixXd> llt(k);
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("conditioning input checks") {
  const KernelConfig c;
  CHECK_THROWS_AS(GprModel::condition({}, {}, c, {}), InputError);
  CHECK_THROWS_AS(GprModel::condition({{0, 0}}, {1.0, 2.0}, c, {}), InputError);
  CHECK_THROWS_AS(GprModel::condition({{0, 0}}, {std::nan("")}, c, {}), InputError);
  // Duplicated inputs with no observation noise still factorize.
  KernelConfig exact = c;
  exact.noise_variance = 0.0;
  const auto m = GprModel::condition({{1, 1}, {1, 1}, {2, 1}}, {1.0, 1.0, 3.0}, exact, {});
  CHECK(std::isfinite(m.predict_mean({1.5, 1})));
}

TEST_CASE("standardization") {
  const std::vector<double> v{1.0, 3.0};
  const auto s = Standardization::fit(v);
  CHECK(s.mean == 2.0);
  CHECK(s.scale == 1.0);
  const std::vector<double> w{2.0, 6.0, 4.0};
  CHECK(Standardization::fit(w).scale == doctest::Approx(std::sqrt(8.0 / 3.0)));
  const std::vector<double> flat{5.0, 5.0};
  CHECK(Standardization::fit(flat).scale == 1.0);
}

TEST_CASE("median pairwise distance") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {3, 0}};
  CHECK(median_pairwise_distance(pts, 100, 1) == doctest::Approx(2.0));
}

TEST_CASE("fitting improves the evidence and interpolates a smooth field") {
  std::vector<Vec2> x;
  std::vector<double> y;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 6; ++j) {
      const Vec2 p{i * 1.0, j * 1.0};
      x.push_back(p);
      y.push_back(std::sin(0.4 * p.x) + 0.1 * p.y);
    }
  OptimizerSettings opt;
  opt.iterations = 80;
  for (KernelKind kind : {KernelKind::RBF, KernelKind::RQ}) {
    const auto model = fit_gpr(x, y, kind, opt);
    REQUIRE_FALSE(model.loss_trace().empty());
    CHECK(model.loss_trace().size() <= 80);
    double best = model.loss_trace().front();
    for (double l : model.loss_trace()) best = std::min(best, l);
    CHECK(best < model.loss_trace().front());
    CHECK(-model.log_marginal_likelihood() == doctest::Approx(best).epsilon(1e-6));
    const Vec2 q{4.5, 2.5};
    CHECK(model.predict_mean(q) == doctest::Approx(std::sin(1.8) + 0.25).epsilon(0.05));
  }
}

TEST_CASE("fitting is deterministic") {
  std::vector<Vec2> x{{0, 0}, {1, 0}, {2, 1}, {3, 3}, {4, 2}};
  std::vector<double> y{0.1, 0.5, 0.9, 0.3, -0.2};
  OptimizerSettings opt;
  opt.iterations = 30;
  const auto a = fit_gpr(x, y, KernelKind::RQ, opt);
  const auto b = fit_gpr(x, y, KernelKind::RQ, opt);
  CHECK(a.loss_trace() == b.loss_trace());
  CHECK(a.kernel().length_scale == b.kernel().length_scale);
}

namespace {

GprModelPair constant_field(Vec2 v) {
  std::vector<Vec2> x{{0, 0}, {10, 0}, {0, 10}, {10, 10}};
  KernelConfig k;
  GprModelPair pair;
  pair.gp_x = GprModel::condition(x, std::vector<double>(4, v.x), k, Standardization::fit(std::vector<double>(4, v.x)));
  pair.gp_y = GprModel::condition(x, std::vector<double>(4, v.y), k, Standardization::fit(std::vector<double>(4, v.y)));
  return pair;
}

}  // namespace

TEST_CASE("rollout integrates the velocity field") {
  const auto pair = constant_field({1.0, -0.5});
  RolloutConfig cfg;
  cfg.steps = 10;
  const auto path = rollout(pair, {2, 3}, cfg);
  REQUIRE(path.points.size() == 11);
  CHECK(path.steps() == 10);
  CHECK(path.points[0].x == 2.0);
  CHECK(path.points[0].y == 3.0);
  CHECK(path.points[10].x == doctest::Approx(3.0));
  CHECK(path.points[10].y == doctest::Approx(2.5));
  CHECK(path.time_at(10) == doctest::Approx(1.0));

  cfg.mode = RolloutMode::Sample;
  cfg.seed = 9;
  const auto s1 = rollout(pair, {2, 3}, cfg);
  const auto s2 = rollout(pair, {2, 3}, cfg);
  CHECK(s1.points.back().x == s2.points.back().x);
  cfg.seed = 10;
  const auto s3 = rollout(pair, {2, 3}, cfg);
  CHECK(s1.points.back().x != s3.points.back().x);

  cfg.steps = 0;
  CHECK_THROWS_AS(rollout(pair, {0, 0}, cfg), InputError);
  cfg.steps = 5;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(rollout(pair, {0, 0}, cfg), InputError);
}

namespace {

Trajectory vehicle(const std::string& id, Direction d, Maneuver m, double x0, int n) {
  Trajectory t;
  t.id = id;
  t.object_class = ObjectClass::Vehicle;
  t.entering_direction = d;
  t.maneuver = m;
  for (int i = 0; i < n; ++i) t.points.push_back({i * 0.1, x0 + i * 1.0, 0.5 * i, 10.0, 5.0, 0.0, true});
  return t;
}

}  // namespace

TEST_CASE("cluster data, training and persistence") {
  std::vector<Trajectory> trs{vehicle("a", Direction::South, Maneuver::Straight, 0, 30),
                              vehicle("b", Direction::South, Maneuver::Straight, 0.3, 30),
                              vehicle("c", Direction::North, Maneuver::LeftTurn, 5, 20)};
  trs[1].points[4].valid = false;
  std::vector<const Trajectory*> ptrs;
  for (const auto& t : trs) ptrs.push_back(&t);

  const auto all = collect_cluster_data(ptrs, Direction::South, Maneuver::Straight, 1000, 1);
  CHECK(all.positions.size() == 59);
  const auto sub = collect_cluster_data(ptrs, Direction::South, Maneuver::Straight, 25, 1);
  CHECK(sub.positions.size() == 25);
  const auto sub2 = collect_cluster_data(ptrs, Direction::South, Maneuver::Straight, 25, 1);
  CHECK(sub.vx == sub2.vx);
  CHECK(collect_cluster_data(ptrs, Direction::East, Maneuver::Straight, 25, 1).positions.empty());

  ClusterTrainingOptions opt;
  opt.max_points = 40;
  opt.optimizer.iterations = 15;
  const auto models = train_cluster_models(ptrs, opt);
  CHECK(models.present() == 2);
  REQUIRE(models.get(Direction::South, Maneuver::Straight));
  CHECK_FALSE(models.get(Direction::East, Maneuver::Straight));
  CHECK(models.get(Direction::North, Maneuver::LeftTurn)->gp_x.size() == 20);

  const auto doc = to_json(models);
  const auto back = cluster_models_from_json(doc);
  CHECK(back.present() == 2);
  const auto* a = models.get(Direction::South, Maneuver::Straight);
  const auto* b = back.get(Direction::South, Maneuver::Straight);
  for (Vec2 q : {Vec2{1, 1}, Vec2{10, 4}, Vec2{-3, 2}}) {
    CHECK(a->gp_x.predict(q).mean == b->gp_x.predict(q).mean);
    CHECK(a->gp_y.predict(q).variance == b->gp_y.predict(q).variance);
  }
  CHECK(a->gp_x.loss_trace() == b->gp_x.loss_trace());

  auto broken = doc;
  broken["format"] = "something-else";
  CHECK_THROWS_AS(cluster_models_from_json(broken), InputError);
  CHECK_THROWS_AS(load_cluster_models("/nonexistent/models.json"), InputError);
}
