#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fadin/errors.hpp"
#include "fadin/grid.hpp"
#include "fadin/model.hpp"

namespace fadin {

inline constexpr std::uint64_t kDefaultMemoryCap = 4ULL << 30;

/// Event counts per grid point: z[i][s] = number of events of process i
/// whose nearest grid point is s * delta. Dense, p x (G + 1).
struct DiscretizedCounts {
  std::vector<std::vector<std::int32_t>> z;
  /// Grid indices with z[i][s] > 0, ascending.
  std::vector<std::vector<std::int64_t>> occupied;
  std::vector<std::int64_t> totals;

  [[nodiscard]] std::size_t dimension() const { return z.size(); }
  [[nodiscard]] std::int64_t total() const {
    std::int64_t n = 0;
    for (auto v : totals) n += v;
    return n;
  }
  [[nodiscard]] std::int32_t operator()(std::size_t i, std::int64_t s) const {
    if (s < 0 || s >= static_cast<std::int64_t>(z[i].size())) return 0;
    return z[i][static_cast<std::size_t>(s)];
  }
};

/// Nearest grid index floor(t/delta + 1/2); exact half-way ties go up. The
/// snap tolerance keeps decimal ties such as 0.235 / 0.01 on the upper side.
[[nodiscard]] inline std::int64_t grid_index(double t, double delta) {
  return static_cast<std::int64_t>(std::floor(t / delta + 0.5 + kGridSnap));
}

/// Builds counts from raw per-grid-point data (tests, loaders).
[[nodiscard]] inline DiscretizedCounts counts_from_dense(std::vector<std::vector<std::int32_t>> z) {
  DiscretizedCounts out;
  out.z = std::move(z);
  out.occupied.resize(out.z.size());
  out.totals.assign(out.z.size(), 0);
  for (std::size_t i = 0; i < out.z.size(); ++i) {
    for (std::size_t s = 0; s < out.z[i].size(); ++s) {
      if (out.z[i][s] < 0) throw DataError("negative event count");
      if (out.z[i][s] > 0) {
        out.occupied[i].push_back(static_cast<std::int64_t>(s));
        out.totals[i] += out.z[i][s];
      }
    }
  }
  return out;
}

[[nodiscard]] inline DiscretizedCounts project(const EventSequences& events,
                                               const DiscreteGrid& grid,
                                               std::uint64_t memory_cap = kDefaultMemoryCap) {
  const std::size_t p = events.dimension();
  const std::uint64_t bytes = static_cast<std::uint64_t>(p) *
                              static_cast<std::uint64_t>(grid.size()) * sizeof(std::int32_t);
  if (bytes > memory_cap) {
    throw ResourceError("count arrays need " + std::to_string(bytes) +
                        " bytes, above the memory cap of " + std::to_string(memory_cap));
  }
  const double tol = kGridSnap * grid.horizon;
  DiscretizedCounts out;
  out.z.assign(p, std::vector<std::int32_t>(static_cast<std::size_t>(grid.size()), 0));
  out.occupied.resize(p);
  out.totals.assign(p, 0);
  for (std::size_t i = 0; i < p; ++i) {
    auto& zi = out.z[i];
    for (double t : events.times[i]) {
      if (!(t >= -tol && t <= grid.horizon + tol)) {
        throw DataError("timestamp " + std::to_string(t) + " of process " + std::to_string(i) +
                        " lies outside [0, T]");
      }
      const std::int64_t s = std::clamp<std::int64_t>(grid_index(t, grid.delta), 0, grid.G);
      auto& cell = zi[static_cast<std::size_t>(s)];
      if (cell == 0) out.occupied[i].push_back(s);
      ++cell;
      ++out.totals[i];
    }
    // Sorted input gives sorted indices; unsorted input still works.
    if (!std::is_sorted(out.occupied[i].begin(), out.occupied[i].end())) {
      std::sort(out.occupied[i].begin(), out.occupied[i].end());
    }
  }
  return out;
}

}  // namespace fadin
