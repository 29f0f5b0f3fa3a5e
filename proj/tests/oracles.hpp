#pragma once

// Independent reference implementations used only by tests: brute-force
// loops straight from the definitions, no shared code with the fast paths
// beyond kernel evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "fadin/fadin.hpp"

namespace oracle {

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Kernel value straight from the family formulas.
inline double kernel(const fadin::KernelSpec& k, double t) {
  const double W = k.support;
  if (t < 0.0 || t > W) return 0.0;
  const auto& q = k.params;
  switch (k.family) {
    case fadin::KernelFamily::TruncatedGaussian: {
      const double z = norm_cdf((W - q[1]) / q[2]) - norm_cdf(-q[1] / q[2]);
      return q[0] * norm_pdf((t - q[1]) / q[2]) / (q[2] * z);
    }
    case fadin::KernelFamily::RaisedCosine:
      if (t < q[1] || t > q[1] + 2.0 * q[2]) return 0.0;
      return q[0] * (1.0 + std::cos((t - q[1]) / q[2] * std::numbers::pi - std::numbers::pi));
    case fadin::KernelFamily::TruncatedExponential:
      return q[0] * q[1] * std::exp(-q[1] * t) / (1.0 - std::exp(-q[1] * W));
  }
  return 0.0;
}

inline int64_t lag_count(double W, double delta) {
  return static_cast<int64_t>(std::floor(W / delta + 1e-9));
}

/// lambda~_i[s] by explicit convolution over the grid.
inline std::vector<std::vector<double>> intensity(const fadin::HawkesModel& m,
                                                  const std::vector<std::vector<int32_t>>& z,
                                                  double delta, int64_t L) {
  const size_t p = m.dimension();
  const size_t n = z[0].size();
  std::vector<std::vector<double>> lam(p, std::vector<double>(n));
  for (size_t i = 0; i < p; ++i) {
    for (size_t s = 0; s < n; ++s) {
      double v = m.baseline[i];
      for (size_t j = 0; j < p; ++j) {
        for (int64_t tau = 1; tau <= L; ++tau) {
          const int64_t r = static_cast<int64_t>(s) - tau;
          if (r < 0) continue;
          v += kernel(m.kernel(i, j), static_cast<double>(tau) * delta) * z[j][static_cast<size_t>(r)];
        }
      }
      lam[i][s] = v;
    }
  }
  return lam;
}

/// Discretized l2 loss evaluated literally:
/// (1/N) sum_i [ delta sum_{s=0}^{G} lam_i[s]^2 - 2 sum_s z_i[s] lam_i[s] ].
inline double l2_loss(const fadin::HawkesModel& m, const std::vector<std::vector<int32_t>>& z,
                      double delta, int64_t L) {
  const auto lam = intensity(m, z, delta, L);
  double total = 0.0;
  long double n = 0;
  for (size_t i = 0; i < lam.size(); ++i) {
    for (size_t s = 0; s < lam[i].size(); ++s) {
      total += delta * lam[i][s] * lam[i][s] - 2.0 * z[i][s] * lam[i][s];
      n += z[i][s];
    }
  }
  return total / static_cast<double>(n);
}

inline double ll_loss(const fadin::HawkesModel& m, const std::vector<std::vector<int32_t>>& z,
                      double delta, int64_t L) {
  const auto lam = intensity(m, z, delta, L);
  double total = 0.0;
  for (size_t i = 0; i < lam.size(); ++i) {
    for (size_t s = 0; s < lam[i].size(); ++s) {
      total += delta * lam[i][s];
      if (z[i][s] > 0) total -= z[i][s] * std::log(lam[i][s]);
    }
  }
  return total;
}

/// Phi_j(tau; G), Psi_jk(tau, tau'; G) and Phi_j(tau; events of i) by triple loops.
struct Tensors {
  std::vector<double> phi_g, psi, phi_ev;
};

inline Tensors tensors(const std::vector<std::vector<int32_t>>& z, int64_t L) {
  const size_t p = z.size();
  const auto G = static_cast<int64_t>(z[0].size()) - 1;
  const auto l = static_cast<size_t>(L);
  auto at = [&](size_t j, int64_t s) -> double {
    return s < 0 ? 0.0 : static_cast<double>(z[j][static_cast<size_t>(s)]);
  };
  Tensors t;
  t.phi_g.assign(p * l, 0.0);
  t.psi.assign(p * p * l * l, 0.0);
  t.phi_ev.assign(p * p * l, 0.0);
  for (size_t j = 0; j < p; ++j) {
    for (int64_t tau = 1; tau <= L; ++tau) {
      for (int64_t s = 1; s <= G; ++s) t.phi_g[j * l + static_cast<size_t>(tau - 1)] += at(j, s - tau);
    }
  }
  for (size_t j = 0; j < p; ++j) {
    for (size_t k = 0; k < p; ++k) {
      for (int64_t a = 1; a <= L; ++a) {
        for (int64_t b = 1; b <= L; ++b) {
          double v = 0.0;
          for (int64_t s = 1; s <= G; ++s) v += at(j, s - a) * at(k, s - b);
          t.psi[((j * p + k) * l + static_cast<size_t>(a - 1)) * l + static_cast<size_t>(b - 1)] = v;
        }
      }
    }
  }
  for (size_t i = 0; i < p; ++i) {
    for (size_t j = 0; j < p; ++j) {
      for (int64_t tau = 1; tau <= L; ++tau) {
        double v = 0.0;
        for (int64_t s = 0; s <= G; ++s) v += at(i, s) * at(j, s - tau);
        t.phi_ev[(i * p + j) * l + static_cast<size_t>(tau - 1)] = v;
      }
    }
  }
  return t;
}

/// Central finite difference of f at x along every coordinate.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (size_t q = 0; q < x.size(); ++q) {
    const double x0 = x[q];
    x[q] = x0 + h;
    const double fp = f(x);
    x[q] = x0 - h;
    const double fm = f(x);
    x[q] = x0;
    g[q] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Relative error with an absolute floor for near-zero components.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Random feasible kernel, bounded away from constraint boundaries.
inline fadin::KernelSpec random_kernel(fadin::KernelFamily f, double W, fadin::Xoshiro256& rng) {
  const double a = rng.uniform(0.05, 0.5);
  switch (f) {
    case fadin::KernelFamily::TruncatedGaussian:
      return fadin::KernelSpec::truncated_gaussian(a, rng.uniform(0.1, 0.9) * W,
                                                   rng.uniform(0.1, 0.5) * W, W);
    case fadin::KernelFamily::RaisedCosine: {
      const double sigma = rng.uniform(0.1, 0.4) * W;
      return fadin::KernelSpec::raised_cosine(a, rng.uniform(0.02, 0.98) * (W - 2.0 * sigma), sigma, W);
    }
    case fadin::KernelFamily::TruncatedExponential:
      return fadin::KernelSpec::truncated_exponential(a, rng.uniform(0.5, 8.0) / W, W);
  }
  return {};
}

inline fadin::HawkesModel random_model(fadin::KernelFamily f, size_t p, double W,
                                       fadin::Xoshiro256& rng) {
  fadin::HawkesModel m;
  for (size_t i = 0; i < p; ++i) m.baseline.push_back(rng.uniform(0.1, 1.5));
  for (size_t q = 0; q < p * p; ++q) m.kernels.push_back(random_kernel(f, W, rng));
  return m;
}

/// Random sparse-ish counts, with some multiplicities.
inline std::vector<std::vector<int32_t>> random_counts(size_t p, int64_t G, double density,
                                                       fadin::Xoshiro256& rng) {
  std::vector<std::vector<int32_t>> z(p, std::vector<int32_t>(static_cast<size_t>(G + 1), 0));
  for (auto& zi : z) {
    for (auto& v : zi) {
      const double u = rng.uniform();
      if (u < density) v = u < density * 0.2 ? 2 : 1;
    }
    if (std::all_of(zi.begin(), zi.end(), [](int32_t v) { return v == 0; })) zi[static_cast<size_t>(G / 2)] = 1;
  }
  return z;
}

}  // namespace oracle
