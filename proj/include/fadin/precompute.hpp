#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "fadin/discretization.hpp"
#include "fadin/errors.hpp"
#include "fadin/grid.hpp"

namespace fadin {

/// How the lag correlations behind Phi and Psi are accumulated.
///   Dense       : sweep every grid point for every lag, cost ~ p^2 G L.
///   EventDriven : sweep only occupied grid points, cost ~ p N L + p G.
///   Auto        : pick the cheaper of the two from the occupancy.
/// Both produce identical (integer-valued) tensors.
enum class PrecomputeStrategy { Auto, Dense, EventDriven };

struct PrecomputeOptions {
  PrecomputeStrategy strategy{PrecomputeStrategy::Auto};
  std::uint64_t memory_cap{kDefaultMemoryCap};
};

/// Theta-independent constants of the discretized l2 loss. Lags are 1-based
/// in the accessors (tau = 1..L) and 0-based in storage.
struct Precomputations {
  std::size_t p{0};
  std::int64_t L{0};
  std::int64_t G{0};
  double delta{0.0};
  double horizon{0.0};
  /// Phi_j(tau; G) = sum_{s=1}^{G} z_j[s - tau]; shape p x L.
  std::vector<double> phi_g;
  /// Psi_{j,k}(tau, tau'; G) = sum_{s=1}^{G} z_j[s - tau] z_k[s - tau']; shape p x p x L x L.
  std::vector<double> psi;
  /// Phi_j(tau; events of i) = sum_s z_i[s] z_j[s - tau]; shape p x p x L, indexed (i, j).
  std::vector<double> phi_ev;
  std::vector<std::int64_t> counts;
  std::int64_t n_total{0};
  PrecomputeStrategy used{PrecomputeStrategy::Dense};

  [[nodiscard]] double phi_grid(std::size_t j, std::int64_t tau) const {
    return phi_g[j * static_cast<std::size_t>(L) + static_cast<std::size_t>(tau - 1)];
  }
  [[nodiscard]] const double* psi_block(std::size_t j, std::size_t k) const {
    const auto l = static_cast<std::size_t>(L);
    return psi.data() + (j * p + k) * l * l;
  }
  [[nodiscard]] double psi_at(std::size_t j, std::size_t k, std::int64_t tau,
                              std::int64_t tau2) const {
    return psi_block(j, k)[static_cast<std::size_t>(tau - 1) * static_cast<std::size_t>(L) +
                           static_cast<std::size_t>(tau2 - 1)];
  }
  [[nodiscard]] double phi_events(std::size_t i, std::size_t j, std::int64_t tau) const {
    return phi_ev[(i * p + j) * static_cast<std::size_t>(L) + static_cast<std::size_t>(tau - 1)];
  }
};

[[nodiscard]] inline std::uint64_t precompute_bytes(std::size_t p, std::int64_t L) {
  const auto l = static_cast<std::uint64_t>(L);
  const auto pp = static_cast<std::uint64_t>(p) * p;
  return (pp * l * l + pp * l + p * l) * sizeof(double);
}

namespace detail {

// F[d] = sum_{r=0}^{G-d} zj[r] zk[r+d], d = 0..max_lag.
inline void lag_correlation_dense(const std::vector<std::int32_t>& zj,
                                  const std::vector<std::int32_t>& zk, std::int64_t max_lag,
                                  std::vector<std::int64_t>& F) {
  constexpr std::int64_t kBlock = 8192;
  const auto n = static_cast<std::int64_t>(zj.size());
  F.assign(static_cast<std::size_t>(max_lag + 1), 0);
  for (std::int64_t b = 0; b < n; b += kBlock) {
    const std::int64_t e = std::min(b + kBlock, n);
    for (std::int64_t d = 0; d <= max_lag; ++d) {
      const std::int64_t rend = std::min(e, n - d);
      std::int64_t acc = 0;
      for (std::int64_t r = b; r < rend; ++r) {
        acc += static_cast<std::int64_t>(zj[static_cast<std::size_t>(r)]) *
               zk[static_cast<std::size_t>(r + d)];
      }
      F[static_cast<std::size_t>(d)] += acc;
    }
  }
}

inline void lag_correlation_events(const std::vector<std::int32_t>& zj,
                                   const std::vector<std::int64_t>& occupied_j,
                                   const std::vector<std::int32_t>& zk, std::int64_t max_lag,
                                   std::vector<std::int64_t>& F) {
  const auto n = static_cast<std::int64_t>(zj.size());
  F.assign(static_cast<std::size_t>(max_lag + 1), 0);
  for (std::int64_t r : occupied_j) {
    const std::int64_t w = zj[static_cast<std::size_t>(r)];
    const std::int64_t dmax = std::min(max_lag, n - 1 - r);
    const std::int32_t* zr = zk.data() + r;
    for (std::int64_t d = 0; d <= dmax; ++d) F[static_cast<std::size_t>(d)] += w * zr[d];
  }
}

}  // namespace detail

[[nodiscard]] inline PrecomputeStrategy choose_strategy(const DiscretizedCounts& z,
                                                        std::int64_t L) {
  std::uint64_t occupied = 0;
  for (const auto& o : z.occupied) occupied += o.size();
  const auto p = static_cast<std::uint64_t>(z.dimension());
  const auto n = static_cast<std::uint64_t>(z.z.empty() ? 0 : z.z[0].size());
  const auto lags = static_cast<std::uint64_t>(L + 1);
  const std::uint64_t dense_cost = p * p * n * lags;
  // Scattered reads cost roughly 4x a streamed multiply-add.
  const std::uint64_t event_cost = 4 * p * occupied * lags + p * n;
  return event_cost < dense_cost ? PrecomputeStrategy::EventDriven : PrecomputeStrategy::Dense;
}

[[nodiscard]] inline Precomputations precompute(const DiscretizedCounts& z,
                                                const DiscreteGrid& grid,
                                                const PrecomputeOptions& options = {}) {
  const std::size_t p = z.dimension();
  const std::int64_t L = grid.L;
  const std::int64_t G = grid.G;
  if (p == 0) throw ConfigError("precompute needs at least one process");
  if (L < 1 || L > G) {
    throw ConfigError("precompute needs 1 <= L <= G (L = " + std::to_string(L) +
                      ", G = " + std::to_string(G) + ")");
  }
  for (const auto& zi : z.z) {
    if (static_cast<std::int64_t>(zi.size()) != G + 1) {
      throw ConfigError("count arrays do not match the grid size G + 1");
    }
  }
  const std::uint64_t bytes = precompute_bytes(p, L);
  if (bytes > options.memory_cap) {
    throw ResourceError("precomputations need " + std::to_string(bytes) +
                        " bytes (p^2 L^2 doubles), above the memory cap of " +
                        std::to_string(options.memory_cap));
  }

  Precomputations pre;
  pre.p = p;
  pre.L = L;
  pre.G = G;
  pre.delta = grid.delta;
  pre.horizon = grid.horizon;
  pre.counts = z.totals;
  pre.n_total = z.total();
  pre.used = options.strategy == PrecomputeStrategy::Auto ? choose_strategy(z, L)
                                                           : options.strategy;
  const bool dense = pre.used == PrecomputeStrategy::Dense;
  const auto l = static_cast<std::size_t>(L);

  // Phi_j(tau; G) = sum_{r=0}^{G-tau} z_j[r].
  pre.phi_g.assign(p * l, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const auto& zj = z.z[j];
    if (dense) {
      std::int64_t prefix = 0;
      for (std::int64_t r = 0; r < G; ++r) {
        prefix += zj[static_cast<std::size_t>(r)];
        const std::int64_t tau = G - r;
        if (tau <= L) pre.phi_g[j * l + static_cast<std::size_t>(tau - 1)] = static_cast<double>(prefix);
      }
    } else {
      std::int64_t tail = 0;
      for (std::int64_t tau = 1; tau <= L; ++tau) {
        tail += zj[static_cast<std::size_t>(G - tau + 1)];
        pre.phi_g[j * l + static_cast<std::size_t>(tau - 1)] =
            static_cast<double>(z.totals[j] - tail);
      }
    }
  }

  pre.phi_ev.assign(p * p * l, 0.0);
  pre.psi.assign(p * p * l * l, 0.0);
  std::vector<std::int64_t> F;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      const auto& zj = z.z[j];
      const auto& zk = z.z[k];
      if (dense) {
        detail::lag_correlation_dense(zj, zk, L, F);
      } else {
        detail::lag_correlation_events(zj, z.occupied[j], zk, L, F);
      }
      // Phi_j(tau; events of k) = sum_s z_k[s] z_j[s - tau] = F_jk(tau).
      for (std::int64_t tau = 1; tau <= L; ++tau) {
        pre.phi_ev[(k * p + j) * l + static_cast<std::size_t>(tau - 1)] =
            static_cast<double>(F[static_cast<std::size_t>(tau)]);
      }
      // Psi_jk(tau' + d, tau') = F_jk(d) minus the terms with r > G - tau,
      // which only involve the last L grid points. Entries with tau < tau'
      // come from the (k, j) pass through the mirror write.
      double* block_jk = pre.psi.data() + (j * p + k) * l * l;
      double* block_kj = pre.psi.data() + (k * p + j) * l * l;
      for (std::int64_t d = 0; d < L; ++d) {
        std::int64_t tail = 0;
        for (std::int64_t tau2 = 1; tau2 <= L - d; ++tau2) {
          const std::int64_t tau = tau2 + d;
          const std::int64_t r = G - tau + 1;
          tail += static_cast<std::int64_t>(zj[static_cast<std::size_t>(r)]) *
                  zk[static_cast<std::size_t>(r + d)];
          const auto value = static_cast<double>(F[static_cast<std::size_t>(d)] - tail);
          block_jk[static_cast<std::size_t>(tau - 1) * l + static_cast<std::size_t>(tau2 - 1)] = value;
          block_kj[static_cast<std::size_t>(tau2 - 1) * l + static_cast<std::size_t>(tau - 1)] = value;
        }
      }
    }
  }
  return pre;
}

}  // namespace fadin
