#include <array>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pvrisk/errors.hpp"
#include "pvrisk/maneuver/maneuver.hpp"

namespace pvrisk::maneuver {

namespace {

MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

struct Partition {
  std::vector<std::size_t> train, validation, test;
};

// Units are groups when present, rows otherwise. Units are stratified by
// their majority label; each stratum is shuffled and cut at the requested
// fractions of its size.
Partition partition(const LabeledFeatures& data, double train_fraction, double validation_fraction,
                    std::mt19937_64& rng) {
  std::vector<std::size_t> unit_of(data.size());
  std::size_t n_units = 0;
  if (data.groups.empty()) {
    std::iota(unit_of.begin(), unit_of.end(), 0);
    n_units = data.size();
  } else {
    std::vector<std::size_t> keys = data.groups;
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (std::size_t i = 0; i < data.size(); ++i)
      unit_of[i] = static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), data.groups[i]) - keys.begin());
    n_units = keys.size();
  }
  std::vector<std::array<std::size_t, 3>> votes(n_units, std::array<std::size_t, 3>{});
  for (std::size_t i = 0; i < data.size(); ++i) ++votes[unit_of[i]][static_cast<std::size_t>(index_of(data.labels[i]))];
  std::array<std::vector<std::size_t>, 3> strata;
  for (std::size_t u = 0; u < n_units; ++u)
    strata[static_cast<std::size_t>(std::max_element(votes[u].begin(), votes[u].end()) - votes[u].begin())].push_back(u);

  std::vector<int> bucket(n_units);
  for (auto& order : strata) {
    std::shuffle(order.begin(), order.end(), rng);
    const double n = static_cast<double>(order.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
    const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * n));
    for (std::size_t r = 0; r < order.size(); ++r) bucket[order[r]] = r < n_train ? 0 : (r < n_train + n_val ? 1 : 2);
  }

  Partition p;
  for (std::size_t i = 0; i < data.size(); ++i) {
    switch (bucket[unit_of[i]]) {
      case 0: p.train.push_back(i); break;
      case 1: p.validation.push_back(i); break;
      default: p.test.push_back(i); break;
    }
  }
  return p;
}

}  // namespace

ProtocolResult run_protocol(const LabeledFeatures& data, const FeatureLayout& layout, const ProtocolConfig& cfg) {
  if (cfg.n_splits < 1) throw InputError("run_protocol: n_splits must be at least 1");
  if (!(cfg.train_fraction > 0.0) || !(cfg.validation_fraction > 0.0) ||
      cfg.train_fraction + cfg.validation_fraction >= 1.0)
    throw InputError("run_protocol: fractions must be positive and leave room for a test part");

  std::mt19937_64 rng(cfg.seed);
  ProtocolResult result;
  std::array<std::vector<double>, 3> precision, recall, f1;
  std::vector<double> macro;
  for (int s = 0; s < cfg.n_splits; ++s) {
    const Partition p = partition(data, cfg.train_fraction, cfg.validation_fraction, rng);
    if (p.train.empty() || p.validation.empty() || p.test.empty())
      throw InputError("run_protocol: a partition is empty; not enough data");
    const std::uint64_t split_seed = cfg.seed + 1000003ULL * static_cast<std::uint64_t>(s + 1);
    const LabeledFeatures train =
        smote_oversample(data.subset(p.train), cfg.smote_k, split_seed, layout.direction_column());
    const LabeledFeatures validation = data.subset(p.validation);
    const LabeledFeatures test = data.subset(p.test);

    TuningResult tuned = train_random_forest(train, validation, cfg.grid, split_seed);
    SplitOutcome outcome;
    outcome.chosen = tuned.model.params;
    for (const GridTrial& t : tuned.trials)
      if (t.params.n_trees == outcome.chosen.n_trees && t.params.max_depth == outcome.chosen.max_depth)
        outcome.validation_macro_f1 = t.validation_macro_f1;
    outcome.test = evaluate_classifier(tuned.model, test);
    for (std::size_t c = 0; c < 3; ++c) {
      precision[c].push_back(outcome.test.per_class[c].precision);
      recall[c].push_back(outcome.test.per_class[c].recall);
      f1[c].push_back(outcome.test.per_class[c].f1);
    }
    macro.push_back(outcome.test.macro_f1);
    result.splits.push_back(std::move(outcome));
    if (s == 0) result.model = std::move(tuned.model);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    result.precision[c] = summarize(precision[c]);
    result.recall[c] = summarize(recall[c]);
    result.f1[c] = summarize(f1[c]);
  }
  result.macro_f1 = summarize(macro);
  return result;
}

}  // namespace pvrisk::maneuver
