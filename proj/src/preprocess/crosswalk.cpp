#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "pvrisk/core/csv.hpp"
#include "pvrisk/errors.hpp"
#include "pvrisk/preprocess/preprocess.hpp"

namespace pvrisk::preprocess {

Vec2 DensityGrid::cell_center(std::size_t col, std::size_t row) const {
  return {origin.x + (static_cast<double>(col) + 0.5) * cell_size,
          origin.y + (static_cast<double>(row) + 0.5) * cell_size};
}

std::optional<std::pair<std::size_t, std::size_t>> DensityGrid::cell_of(Vec2 p) const {
  const double cx = std::floor((p.x - origin.x) / cell_size);
  const double cy = std::floor((p.y - origin.y) / cell_size);
  if (cx < 0 || cy < 0 || cx >= static_cast<double>(cols) || cy >= static_cast<double>(rows)) return std::nullopt;
  return std::pair{static_cast<std::size_t>(cx), static_cast<std::size_t>(cy)};
}

DensityGrid build_density_grid(const std::vector<const Trajectory*>& pedestrians, double cell_size) {
  if (!(cell_size > 0.0)) throw InputError("density grid: cell_size must be positive");
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-lo.x, -lo.y};
  std::size_t n_points = 0;
  for (const Trajectory* t : pedestrians) {
    for (const auto& p : t->points) {
      if (!p.valid) continue;
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
      ++n_points;
    }
  }
  if (n_points == 0) throw InputError("density grid: no valid pedestrian points");

  DensityGrid g;
  g.cell_size = cell_size;
  g.origin = lo;
  g.cols = static_cast<std::size_t>(std::floor((hi.x - lo.x) / cell_size)) + 1;
  g.rows = static_cast<std::size_t>(std::floor((hi.y - lo.y) / cell_size)) + 1;
  g.counts.assign(g.cols * g.rows, 0);

  std::vector<std::size_t> visited;
  for (const Trajectory* t : pedestrians) {
    visited.clear();
    for (const auto& p : t->points) {
      if (!p.valid) continue;
      if (const auto c = g.cell_of(p.position())) visited.push_back(c->second * g.cols + c->first);
    }
    std::sort(visited.begin(), visited.end());
    visited.erase(std::unique(visited.begin(), visited.end()), visited.end());
    for (std::size_t k : visited) ++g.counts[k];
  }
  return g;
}

void write_density_grid(std::ostream& out, const DensityGrid& grid) {
  out << "col,row,x,y,count\n";
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const auto n = grid.at(c, r);
      if (n == 0) continue;
      const Vec2 cc = grid.cell_center(c, r);
      out << c << ',' << r << ',' << csv::format_double(cc.x) << ',' << csv::format_double(cc.y) << ',' << n
          << '\n';
    }
  }
}

namespace {

Vec2 region_endpoint(const DensityGrid& g, const Box& box, double fraction, std::size_t region_index) {
  std::uint32_t best = 0;
  std::size_t best_c = 0, best_r = 0;
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      if (!box.contains(g.cell_center(c, r))) continue;
      if (g.at(c, r) > best) {
        best = g.at(c, r);
        best_c = c;
        best_r = r;
      }
    }
  }
  if (best == 0)
    throw InputError("crosswalk estimation: search region " + std::to_string(region_index) +
                     " contains no visited cells");

  const double cutoff = fraction * static_cast<double>(best);
  std::set<std::pair<std::size_t, std::size_t>> seen{{best_c, best_r}};
  std::vector<std::pair<std::size_t, std::size_t>> stack{{best_c, best_r}};
  Vec2 weighted{};
  double weight = 0.0;
  while (!stack.empty()) {
    const auto [c, r] = stack.back();
    stack.pop_back();
    const double w = g.at(c, r);
    weighted = weighted + g.cell_center(c, r) * w;
    weight += w;
    const std::array<std::pair<long, long>, 4> nbrs = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (const auto& [dc, dr] : nbrs) {
      const long nc = static_cast<long>(c) + dc;
      const long nr = static_cast<long>(r) + dr;
      if (nc < 0 || nr < 0 || nc >= static_cast<long>(g.cols) || nr >= static_cast<long>(g.rows)) continue;
      const auto cell = std::pair{static_cast<std::size_t>(nc), static_cast<std::size_t>(nr)};
      if (seen.count(cell)) continue;
      if (!box.contains(g.cell_center(cell.first, cell.second))) continue;
      if (static_cast<double>(g.at(cell.first, cell.second)) < cutoff) continue;
      seen.insert(cell);
      stack.push_back(cell);
    }
  }
  return weighted / weight;
}

}  // namespace

CrosswalkEstimate estimate_crosswalk_endpoints(const std::vector<const Trajectory*>& pedestrians,
                                               double cell_size, const std::array<Box, 8>& search_regions,
                                               double cluster_fraction) {
  if (pedestrians.empty()) throw InputError("crosswalk estimation: no pedestrian trajectories");
  DensityGrid grid = build_density_grid(pedestrians, cell_size);
  std::array<Vec2, 8> endpoints;
  for (std::size_t k = 0; k < 8; ++k) endpoints[k] = region_endpoint(grid, search_regions[k], cluster_fraction, k);
  return {IntersectionGeometry(endpoints), std::move(grid)};
}

}  // namespace pvrisk::preprocess
