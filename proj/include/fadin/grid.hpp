#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "fadin/errors.hpp"

namespace fadin {

/// Regular grid {0, Δ, ..., GΔ} over [0, T] together with the discretized
/// kernel support length L = floor(W/Δ).
struct DiscreteGrid {
  double delta{0.0};
  double horizon{0.0};
  std::int64_t G{0};
  double support{0.0};
  std::int64_t L{0};

  [[nodiscard]] std::int64_t size() const { return G + 1; }
};

/// Relative slack used whenever a real quantity is snapped to an integer
/// number of grid steps (W/Δ, T/Δ, t/Δ + 1/2).
inline constexpr double kGridSnap = 1e-9;

/// floor(W/Δ) that tolerates representation error, e.g. 0.3/0.1.
[[nodiscard]] inline std::int64_t support_points(double support, double delta) {
  return static_cast<std::int64_t>(std::floor(support / delta + kGridSnap));
}

[[nodiscard]] inline DiscreteGrid make_grid(double delta, double horizon, double support) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("grid step delta must be finite and > 0");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("horizon T must be finite and > 0");
  }
  if (!(support > 0.0) || !std::isfinite(support)) {
    throw ConfigError("kernel support W must be finite and > 0");
  }
  DiscreteGrid grid;
  grid.delta = delta;
  grid.horizon = horizon;
  grid.support = support;
  grid.G = static_cast<std::int64_t>(std::llround(horizon / delta));
  if (grid.G < 1 ||
      std::abs(static_cast<double>(grid.G) * delta - horizon) > kGridSnap * horizon) {
    throw ConfigError("horizon T = " + std::to_string(horizon) +
                      " is not an integer multiple of delta = " + std::to_string(delta));
  }
  grid.L = support_points(support, delta);
  if (grid.L < 1) {
    throw ConfigError("delta = " + std::to_string(delta) +
                      " exceeds kernel support W = " + std::to_string(support) +
                      " (no grid point on the support)");
  }
  return grid;
}

}  // namespace fadin
