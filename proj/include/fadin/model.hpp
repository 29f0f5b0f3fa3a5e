#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fadin/errors.hpp"
#include "fadin/kernels.hpp"

namespace fadin {

/// p sorted timestamp lists on [0, T].
struct EventSequences {
  std::vector<std::vector<double>> times;
  double horizon{0.0};

  [[nodiscard]] std::size_t dimension() const { return times.size(); }
  [[nodiscard]] std::size_t count(std::size_t i) const { return times.at(i).size(); }
  [[nodiscard]] std::size_t total() const {
    std::size_t n = 0;
    for (const auto& t : times) n += t.size();
    return n;
  }
};

inline void validate(const EventSequences& ev) {
  if (!(ev.horizon > 0.0) || !std::isfinite(ev.horizon)) {
    throw DataError("event horizon T must be finite and > 0");
  }
  for (std::size_t i = 0; i < ev.times.size(); ++i) {
    const auto& ts = ev.times[i];
    for (std::size_t n = 0; n < ts.size(); ++n) {
      if (!(ts[n] >= 0.0 && ts[n] <= ev.horizon)) {
        throw DataError("timestamp " + std::to_string(ts[n]) + " of process " +
                        std::to_string(i) + " lies outside [0, T]");
      }
      if (n > 0 && ts[n] < ts[n - 1]) {
        throw DataError("timestamps of process " + std::to_string(i) + " are not sorted");
      }
    }
  }
}

/// Multivariate Hawkes model: baseline mu (length p) and a p x p row-major
/// kernel matrix where kernel(i, j) is the excitation of process i by j.
struct HawkesModel {
  std::vector<double> baseline;
  std::vector<KernelSpec> kernels;

  [[nodiscard]] std::size_t dimension() const { return baseline.size(); }
  [[nodiscard]] const KernelSpec& kernel(std::size_t i, std::size_t j) const {
    return kernels[i * dimension() + j];
  }
  [[nodiscard]] KernelSpec& kernel(std::size_t i, std::size_t j) {
    return kernels[i * dimension() + j];
  }
  [[nodiscard]] double max_support() const {
    double w = 0.0;
    for (const auto& k : kernels) w = std::max(w, k.support);
    return w;
  }

  friend bool operator==(const HawkesModel&, const HawkesModel&) = default;
};

/// p-dimensional model with the same kernel in every slot.
[[nodiscard]] inline HawkesModel uniform_model(std::vector<double> baseline,
                                               const KernelSpec& kernel) {
  HawkesModel m;
  const std::size_t p = baseline.size();
  m.baseline = std::move(baseline);
  m.kernels.assign(p * p, kernel);
  return m;
}

inline void validate(const HawkesModel& model) {
  const std::size_t p = model.dimension();
  if (p == 0) throw ConfigError("model dimension p must be >= 1");
  if (model.kernels.size() != p * p) {
    throw ConfigError("model needs p*p = " + std::to_string(p * p) + " kernels, got " +
                      std::to_string(model.kernels.size()));
  }
  for (double mu : model.baseline) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
      throw ConstraintViolation("baseline entries must be finite and >= 0");
    }
  }
  for (const auto& k : model.kernels) validate(k);
}

/// Matrix [kernel_mass(phi_ij)], row-major.
[[nodiscard]] inline std::vector<double> mass_matrix(const HawkesModel& model) {
  std::vector<double> out;
  out.reserve(model.kernels.size());
  for (const auto& k : model.kernels) out.push_back(kernel_mass(k));
  return out;
}

/// Spectral radius of a nonnegative p x p matrix. Power iteration on I + M:
/// its Perron root is rho(M) + 1 and dominates every other eigenvalue in
/// modulus, so the iteration converges even for periodic M.
[[nodiscard]] inline double spectral_radius(std::span<const double> m, std::size_t p) {
  std::vector<double> x(p, 1.0 / static_cast<double>(p));
  std::vector<double> y(p);
  double rho = 0.0;
  for (int it = 0; it < 100000; ++it) {
    for (std::size_t i = 0; i < p; ++i) {
      double acc = x[i];
      for (std::size_t j = 0; j < p; ++j) acc += m[i * p + j] * x[j];
      y[i] = acc;
    }
    double norm = 0.0;
    for (double v : y) norm += v;
    if (!(norm > 0.0)) return 0.0;
    for (double& v : y) v /= norm;
    double diff = 0.0;
    for (std::size_t i = 0; i < p; ++i) diff = std::max(diff, std::abs(y[i] - x[i]));
    x.swap(y);
    const double next = norm - 1.0;
    if (diff < 1e-14 && std::abs(next - rho) < 1e-14) return next;
    rho = next;
  }
  return rho;
}

[[nodiscard]] inline double branching_ratio(const HawkesModel& model) {
  return spectral_radius(mass_matrix(model), model.dimension());
}

// Flat parameter vector theta = (mu_0..mu_{p-1}, eta_00, eta_01, ..., eta_{p-1,p-1})
// with each eta in the family's storage order.

[[nodiscard]] inline std::size_t parameter_count(const HawkesModel& model) {
  std::size_t n = model.dimension();
  for (const auto& k : model.kernels) n += k.size();
  return n;
}

[[nodiscard]] inline std::vector<double> pack(const HawkesModel& model) {
  std::vector<double> theta(model.baseline);
  for (const auto& k : model.kernels) {
    for (double v : k.values()) theta.push_back(v);
  }
  return theta;
}

inline void unpack(std::span<const double> theta, HawkesModel& model) {
  if (theta.size() != parameter_count(model)) {
    throw ConfigError("parameter vector length does not match model layout");
  }
  std::size_t pos = 0;
  for (double& mu : model.baseline) mu = theta[pos++];
  for (auto& k : model.kernels) {
    for (double& v : k.values()) v = theta[pos++];
  }
}

/// Names matching pack(): "mu[0]", "alpha[0][1]", ...
[[nodiscard]] inline std::vector<std::string> parameter_names(const HawkesModel& model) {
  const std::size_t p = model.dimension();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < p; ++i) names.push_back("mu[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (auto n : param_names(model.kernel(i, j).family)) {
        names.push_back(std::string(n) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      }
    }
  }
  return names;
}

}  // namespace fadin
