#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "pvrisk/maneuver/maneuver.hpp"
#include "pvrisk/simd/kernels.hpp"

namespace pvrisk::maneuver {

namespace {

// k nearest same-class neighbours of member `self`, by squared distance then
// index.
std::vector<std::size_t> nearest(const std::vector<std::vector<double>>& columns, const FeatureRow& row,
                                 std::size_t self, std::size_t k, std::vector<double>& scratch) {
  std::fill(scratch.begin(), scratch.end(), 0.0);
  std::size_t c = 0;
  for (const auto& col : columns) {
    simd::add_squared_diff(col, row[c], scratch);
    ++c;
  }
  scratch[self] = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(scratch.size());
  std::iota(order.begin(), order.end(), 0);
  const auto by_distance = [&](std::size_t a, std::size_t b) {
    return scratch[a] < scratch[b] || (scratch[a] == scratch[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), by_distance);
  order.resize(k);
  return order;
}

}  // namespace

LabeledFeatures smote_oversample(const LabeledFeatures& data, std::size_t k, std::uint64_t seed,
                                 std::size_t categorical_column) {
  LabeledFeatures out = data;
  const auto counts = data.class_counts();
  const std::size_t majority = *std::max_element(counts.begin(), counts.end());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (Maneuver m : kManeuvers) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.labels[i] == m) members.push_back(i);
    const std::size_t n = members.size();
    if (n == 0 || n >= majority) continue;
    const std::size_t needed = majority - n;
    const std::size_t k_eff = std::min(k, n - 1);

    // Continuous columns in member order; the categorical column is skipped.
    const std::size_t dim = data.rows[members[0]].size();
    std::vector<std::size_t> continuous;
    for (std::size_t c = 0; c < dim; ++c)
      if (c != categorical_column) continuous.push_back(c);
    std::vector<std::vector<double>> columns(continuous.size(), std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < continuous.size(); ++c) columns[c][j] = data.rows[members[j]][continuous[c]];

    std::vector<std::vector<std::size_t>> neighbours(std::min(n, needed));
    std::vector<double> scratch(n);
    for (std::size_t j = 0; j < neighbours.size() && k_eff > 0; ++j) {
      FeatureRow query(continuous.size());
      for (std::size_t c = 0; c < continuous.size(); ++c) query[c] = columns[c][j];
      neighbours[j] = nearest(columns, query, j, k_eff, scratch);
    }

    for (std::size_t s = 0; s < needed; ++s) {
      const std::size_t j = s % n;
      const FeatureRow& base = data.rows[members[j]];
      FeatureRow row = base;
      if (k_eff > 0) {
        std::uniform_int_distribution<std::size_t> pick(0, k_eff - 1);
        const FeatureRow& other = data.rows[members[neighbours[j][pick(rng)]]];
        const double u = unit(rng);
        for (std::size_t c : continuous) row[c] = base[c] + u * (other[c] - base[c]);
      }
      out.rows.push_back(std::move(row));
      out.labels.push_back(m);
      if (!data.groups.empty()) out.groups.push_back(data.groups[members[j]]);
    }
  }
  return out;
}

}  // namespace pvrisk::maneuver
