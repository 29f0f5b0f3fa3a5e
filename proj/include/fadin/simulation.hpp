#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fadin/errors.hpp"
#include "fadin/kernels.hpp"
#include "fadin/model.hpp"
#include "fadin/rng.hpp"

namespace fadin {

namespace detail {

inline double intensity_unchecked(const HawkesModel& model,
                                  const std::vector<std::vector<double>>& times,
                                  std::size_t i, double t) {
  double rate = model.baseline[i];
  const std::size_t p = model.dimension();
  for (std::size_t j = 0; j < p; ++j) {
    const KernelSpec& k = model.kernel(i, j);
    if (k.params[0] == 0.0) continue;
    const auto& tj = times[j];
    // Events with t - W <= t_m < t.
    auto first = std::lower_bound(tj.begin(), tj.end(), t - k.support);
    auto last = std::lower_bound(first, tj.end(), t);
    for (auto it = first; it != last; ++it) rate += detail::eval_unchecked(k, t - *it);
  }
  return rate;
}

}  // namespace detail

/// lambda_i(t) = mu_i + sum_j sum_{t_m^j < t, t - t_m^j <= W} phi_ij(t - t_m^j).
/// Only the window [t - W, t) of each process is visited (binary search).
[[nodiscard]] inline double intensity_at(const HawkesModel& model, const EventSequences& events,
                                         std::size_t i, double t) {
  if (i >= model.dimension()) {
    throw ConfigError("process index " + std::to_string(i) + " out of range");
  }
  if (events.dimension() != model.dimension()) {
    throw DataError("event sequences and model have different dimensions");
  }
  return detail::intensity_unchecked(model, events.times, i, t);
}

struct SimulationLimits {
  /// Refuse to continue once the dominating rate exceeds this.
  double max_rate{1e7};
  std::size_t max_events{50'000'000};
};

/// Ogata thinning for finite-support kernels.
///
/// The dominating rate at time t is sum_i mu_i + sum over windowed past
/// events of tail_sup(phi_ij, age), i.e. the largest value each past event can
/// still contribute. It only decreases until the next accepted event, so it is
/// a valid bound up to the next candidate, where it is refreshed.
[[nodiscard]] inline EventSequences simulate(const HawkesModel& model, double horizon,
                                             std::uint64_t seed,
                                             const SimulationLimits& limits = {}) {
  validate(model);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("simulation horizon must be finite and > 0");
  }
  const double rho = branching_ratio(model);
  if (!(rho < 1.0)) {
    throw NumericError("unstable model: spectral radius of the kernel mass matrix is " +
                       std::to_string(rho) + " (must be < 1)");
  }

  const std::size_t p = model.dimension();
  EventSequences out;
  out.horizon = horizon;
  out.times.assign(p, {});

  double mu_total = 0.0;
  for (double mu : model.baseline) mu_total += mu;
  const double W = model.max_support();

  Xoshiro256 rng(seed);
  std::vector<double> rates(p);
  // Merged history (time, process) of events that may still be in a window.
  std::vector<std::pair<double, std::size_t>> recent;
  std::size_t recent_begin = 0;
  std::size_t total = 0;
  double t = 0.0;

  while (true) {
    while (recent_begin < recent.size() && recent[recent_begin].first < t - W) ++recent_begin;
    if (recent_begin > 4096 && recent_begin * 2 > recent.size()) {
      recent.erase(recent.begin(), recent.begin() + static_cast<std::ptrdiff_t>(recent_begin));
      recent_begin = 0;
    }

    double bound = mu_total;
    for (std::size_t r = recent_begin; r < recent.size(); ++r) {
      const double age = t - recent[r].first;
      const std::size_t j = recent[r].second;
      for (std::size_t i = 0; i < p; ++i) bound += tail_sup(model.kernel(i, j), age);
    }
    if (!(bound > 0.0)) break;
    if (bound > limits.max_rate || !std::isfinite(bound)) {
      throw NumericError("thinning bound overflow (rate " + std::to_string(bound) + ")");
    }

    t += rng.exponential(bound);
    if (t > horizon) break;

    double sum = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      rates[i] = detail::intensity_unchecked(model, out.times, i, t);
      sum += rates[i];
    }
    const double u = rng.uniform() * bound;
    if (u >= sum) continue;

    std::size_t which = 0;
    double acc = rates[0];
    while (u >= acc && which + 1 < p) acc += rates[++which];
    // Ties in time are kept in insertion order.
    out.times[which].push_back(t);
    recent.emplace_back(t, which);
    if (++total > limits.max_events) {
      throw NumericError("simulation exceeded " + std::to_string(limits.max_events) + " events");
    }
  }
  return out;
}

}  // namespace fadin
