#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "pvrisk/errors.hpp"
#include "pvrisk/maneuver/maneuver.hpp"

namespace pvrisk::maneuver {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Counts = std::array<std::size_t, 3>;

double gini(const Counts& c, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t v : c) {
    const double p = static_cast<double>(v) / static_cast<double>(n);
    s += p * p;
  }
  return 1.0 - s;
}

class TreeBuilder {
 public:
  TreeBuilder(const LabeledFeatures& data, const ForestParams& params, std::size_t mtry, std::uint64_t seed)
      : data_(data), params_(params), mtry_(mtry), rng_(seed) {}

  DecisionTree build() {
    const std::size_t n = data_.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> sample(n);
    for (auto& i : sample) i = pick(rng_);
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  int make_leaf(const Counts& c, std::size_t n) {
    TreeNode leaf;
    for (std::size_t k = 0; k < 3; ++k) leaf.distribution[k] = static_cast<double>(c[k]) / static_cast<double>(n);
    tree_.nodes.push_back(leaf);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  Counts count(const std::vector<std::size_t>& idx) const {
    Counts c{};
    for (std::size_t i : idx) ++c[static_cast<std::size_t>(index_of(data_.labels[i]))];
    return c;
  }

  Split best_split(const std::vector<std::size_t>& idx, double parent) {
    const std::size_t n_features = data_.rows.front().size();
    std::vector<std::size_t> features(n_features);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
      std::swap(features[i], features[pick(rng_)]);
    }

    Split best;
    best.impurity = parent;
    const Counts total = count(idx);
    const std::size_t n = idx.size();
    std::vector<std::pair<double, std::size_t>> values(n);
    for (std::size_t f = 0; f < mtry_; ++f) {
      const std::size_t feature = features[f];
      for (std::size_t i = 0; i < n; ++i)
        values[i] = {data_.rows[idx[i]][feature], static_cast<std::size_t>(index_of(data_.labels[idx[i]]))};
      std::sort(values.begin(), values.end());
      Counts left{};
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left[values[i].second];
        if (!(values[i].first < values[i + 1].first)) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        Counts right{};
        for (std::size_t k = 0; k < 3; ++k) right[k] = total[k] - left[k];
        const double w = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                         static_cast<double>(n);
        if (w < best.impurity - 1e-12) {
          double mid = 0.5 * (values[i].first + values[i + 1].first);
          if (!(mid < values[i + 1].first)) mid = values[i].first;
          best = {static_cast<int>(feature), mid, w};
        }
      }
    }
    return best;
  }

  int grow(const std::vector<std::size_t>& idx, int depth) {
    const Counts c = count(idx);
    const std::size_t n = idx.size();
    const double parent = gini(c, n);
    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    if (parent <= 0.0 || depth_reached || n < std::max<std::size_t>(params_.min_samples_split, 2))
      return make_leaf(c, n);

    const Split split = best_split(idx, parent);
    if (split.feature < 0) return make_leaf(c, n);

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (data_.rows[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({split.feature, split.threshold, -1, -1, {}});
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const LabeledFeatures& data_;
  const ForestParams& params_;
  std::size_t mtry_;
  std::mt19937_64 rng_;
  DecisionTree tree_;
};

}  // namespace

const std::array<double, 3>& DecisionTree::leaf(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& node = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                : node.right);
  }
  return nodes[i].distribution;
}

ManeuverDistribution ForestModel::predict_proba(std::span<const double> row) const {
  std::array<double, 3> sum{};
  for (const DecisionTree& t : trees) {
    const auto& d = t.leaf(row);
    for (std::size_t k = 0; k < 3; ++k) sum[k] += d[k];
  }
  const double n = static_cast<double>(std::max<std::size_t>(trees.size(), 1));
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

ForestModel train_forest(const LabeledFeatures& train, const ForestParams& params, std::uint64_t seed) {
  if (train.size() == 0) throw InputError("train_forest: empty training set");
  if (params.n_trees < 1) throw InputError("train_forest: n_trees must be at least 1");
  const auto counts = train.class_counts();
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2)
    throw InputError("train_forest: training data holds a single class");

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.n_features = train.rows.front().size();
  const std::size_t mtry =
      params.max_features > 0
          ? std::min(params.max_features, model.n_features)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(model.n_features))));
  model.trees.resize(static_cast<std::size_t>(params.n_trees));

  std::size_t next = 0;
  std::mutex mutex;
  const auto worker = [&] {
    while (true) {
      std::size_t t;
      {
        std::lock_guard lock(mutex);
        if (next >= model.trees.size()) return;
        t = next++;
      }
      model.trees[t] = TreeBuilder(train, params, mtry, splitmix64(seed + t)).build();
    }
  };
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), model.trees.size()));
  std::vector<std::future<void>> running;
  for (std::size_t i = 0; i < n_threads; ++i) running.push_back(std::async(std::launch::async, worker));
  for (auto& f : running) f.get();
  return model;
}

TuningResult train_random_forest(const LabeledFeatures& train, const LabeledFeatures& validation,
                                 const ForestGrid& grid, std::uint64_t seed) {
  if (train.size() == 0 || validation.size() == 0) throw InputError("train_random_forest: empty split");
  if (grid.n_trees.empty() || grid.max_depth.empty()) throw InputError("train_random_forest: empty grid");

  std::vector<ForestParams> candidates;
  for (int n : grid.n_trees)
    for (const auto& d : grid.max_depth) {
      ForestParams p;
      p.n_trees = n;
      p.max_depth = d;
      candidates.push_back(p);
    }
  // Smallest model first so that a strict improvement is needed to grow.
  std::stable_sort(candidates.begin(), candidates.end(), [](const ForestParams& a, const ForestParams& b) {
    const int da = a.max_depth.value_or(std::numeric_limits<int>::max());
    const int db = b.max_depth.value_or(std::numeric_limits<int>::max());
    return a.n_trees != b.n_trees ? a.n_trees < b.n_trees : da < db;
  });

  TuningResult result;
  double best = -1.0;
  for (const ForestParams& p : candidates) {
    ForestModel model = train_forest(train, p, seed);
    const double f1 = evaluate_classifier(model, validation).macro_f1;
    result.trials.push_back({p, f1});
    if (f1 > best) {
      best = f1;
      result.model = std::move(model);
    }
  }
  return result;
}

}  // namespace pvrisk::maneuver
