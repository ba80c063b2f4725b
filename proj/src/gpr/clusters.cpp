#include <algorithm>
#include <future>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "pvrisk/gpr/gpr.hpp"

namespace pvrisk::gpr {

const GprModelPair* ClusterModels::get(Direction d, Maneuver m) const {
  const auto& slot = pairs_[cell(d, m)];
  return slot ? &*slot : nullptr;
}

void ClusterModels::set(GprModelPair pair) {
  const std::size_t c = cell(pair.direction, pair.maneuver);
  pairs_[c] = std::move(pair);
}

std::size_t ClusterModels::present() const {
  return static_cast<std::size_t>(std::count_if(pairs_.begin(), pairs_.end(), [](const auto& p) { return p.has_value(); }));
}

ClusterData collect_cluster_data(const std::vector<const Trajectory*>& vehicles, Direction d, Maneuver m,
                                 std::size_t max_points, std::uint64_t seed) {
  std::vector<const TrackPoint*> pts;
  for (const Trajectory* t : vehicles) {
    if (t->entering_direction != d || t->maneuver != m) continue;
    for (const TrackPoint& p : t->points)
      if (p.valid && kinematics_finite(p)) pts.push_back(&p);
  }
  if (pts.size() > max_points) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (ClusterModels::cell(d, m) + 1)));
    for (std::size_t i = 0; i < max_points; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(max_points);
    std::sort(idx.begin(), idx.end());
    std::vector<const TrackPoint*> kept;
    kept.reserve(max_points);
    for (std::size_t i : idx) kept.push_back(pts[i]);
    pts = std::move(kept);
  }
  ClusterData data;
  data.positions.reserve(pts.size());
  for (const TrackPoint* p : pts) {
    data.positions.push_back(p->position());
    data.vx.push_back(p->vx);
    data.vy.push_back(p->vy);
  }
  return data;
}

ClusterModels train_cluster_models(const std::vector<const Trajectory*>& vehicles, const ClusterTrainingOptions& opt) {
  struct Job {
    Direction d;
    Maneuver m;
    ClusterData data;
  };
  std::vector<Job> jobs;
  for (Direction d : kDirections)
    for (Maneuver m : kManeuvers) {
      ClusterData data = collect_cluster_data(vehicles, d, m, opt.max_points, opt.seed);
      if (data.positions.size() >= 2) jobs.push_back({d, m, std::move(data)});
    }

  // One task per model; results are placed by cell so order never matters.
  std::vector<std::optional<GprModel>> fitted(jobs.size() * 2);
  std::size_t next = 0;
  std::mutex mutex;
  const auto worker = [&] {
    while (true) {
      std::size_t task;
      {
        std::lock_guard lock(mutex);
        if (next >= fitted.size()) return;
        task = next++;
      }
      const Job& job = jobs[task / 2];
      OptimizerSettings os = opt.optimizer;
      os.seed = opt.seed + ClusterModels::cell(job.d, job.m);
      fitted[task] = fit_gpr(job.data.positions, task % 2 == 0 ? job.data.vx : job.data.vy, opt.kind, os);
    }
  };
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), fitted.size()));
  std::vector<std::future<void>> running;
  for (std::size_t i = 0; i < n_threads; ++i) running.push_back(std::async(std::launch::async, worker));
  for (auto& f : running) f.get();

  ClusterModels models;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    models.set({std::move(*fitted[2 * i]), std::move(*fitted[2 * i + 1]), jobs[i].d, jobs[i].m});
  return models;
}

ClusterModels train_cluster_models(const Dataset& dataset, const ClusterTrainingOptions& opt) {
  return train_cluster_models(dataset.of_class(ObjectClass::Vehicle), opt);
}

}  // namespace pvrisk::gpr
