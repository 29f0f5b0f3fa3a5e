#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fadin/errors.hpp"
#include "fadin/grid.hpp"
#include "fadin/quadrature.hpp"

namespace fadin {

enum class KernelFamily { TruncatedGaussian, RaisedCosine, TruncatedExponential };

inline constexpr std::size_t kMaxKernelParams = 3;

[[nodiscard]] constexpr std::size_t param_count(KernelFamily family) {
  switch (family) {
    case KernelFamily::TruncatedGaussian: return 3;
    case KernelFamily::RaisedCosine: return 3;
    case KernelFamily::TruncatedExponential: return 2;
  }
  return 0;
}

[[nodiscard]] constexpr std::string_view family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::TruncatedGaussian: return "truncated_gaussian";
    case KernelFamily::RaisedCosine: return "raised_cosine";
    case KernelFamily::TruncatedExponential: return "truncated_exponential";
  }
  return "unknown";
}

[[nodiscard]] inline KernelFamily parse_family(std::string_view name) {
  if (name == "truncated_gaussian" || name == "tg") return KernelFamily::TruncatedGaussian;
  if (name == "raised_cosine" || name == "rc") return KernelFamily::RaisedCosine;
  if (name == "truncated_exponential" || name == "te") return KernelFamily::TruncatedExponential;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

/// Parameter names in storage order; these are also the config-file keys.
[[nodiscard]] inline std::span<const std::string_view> param_names(KernelFamily family) {
  static constexpr std::array<std::string_view, 3> tg{"alpha", "m", "sigma"};
  static constexpr std::array<std::string_view, 3> rc{"alpha", "u", "sigma"};
  static constexpr std::array<std::string_view, 2> te{"alpha", "gamma"};
  switch (family) {
    case KernelFamily::TruncatedGaussian: return tg;
    case KernelFamily::RaisedCosine: return rc;
    case KernelFamily::TruncatedExponential: return te;
  }
  return {};
}

/// A finite-support parametric kernel phi on [0, W].
///
/// Parameter layout (first param_count(family) entries of `params`):
///   truncated_gaussian    (alpha >= 0, m, sigma > 0)
///   raised_cosine         (alpha >= 0, u >= 0, sigma > 0)
///   truncated_exponential (alpha >= 0, gamma > 0)
struct KernelSpec {
  KernelFamily family{KernelFamily::TruncatedExponential};
  std::array<double, kMaxKernelParams> params{};
  double support{1.0};

  [[nodiscard]] std::size_t size() const { return param_count(family); }
  [[nodiscard]] std::span<const double> values() const { return {params.data(), size()}; }
  [[nodiscard]] std::span<double> values() { return {params.data(), size()}; }
  [[nodiscard]] double alpha() const { return params[0]; }

  static KernelSpec truncated_gaussian(double alpha, double m, double sigma, double support) {
    return {KernelFamily::TruncatedGaussian, {alpha, m, sigma}, support};
  }
  static KernelSpec raised_cosine(double alpha, double u, double sigma, double support) {
    return {KernelFamily::RaisedCosine, {alpha, u, sigma}, support};
  }
  static KernelSpec truncated_exponential(double alpha, double gamma, double support) {
    return {KernelFamily::TruncatedExponential, {alpha, gamma, 0.0}, support};
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Kernel sampled on the grid at lags tau = 1..L. Storage is 0-based:
/// values[tau - 1] = phi(tau * delta). Zero lag is never used.
struct DiscretizedKernel {
  std::vector<double> values;
  std::array<std::vector<double>, kMaxKernelParams> grads;
};

inline void validate(const KernelSpec& k) {
  if (!(k.support > 0.0) || !std::isfinite(k.support)) {
    throw ConstraintViolation("kernel support W must be finite and > 0");
  }
  for (double v : k.values()) {
    if (!std::isfinite(v)) throw ConstraintViolation("kernel parameters must be finite");
  }
  if (k.params[0] < 0.0) throw ConstraintViolation("kernel alpha must be >= 0");
  switch (k.family) {
    case KernelFamily::TruncatedGaussian:
      if (!(k.params[2] > 0.0)) throw ConstraintViolation("truncated_gaussian sigma must be > 0");
      break;
    case KernelFamily::RaisedCosine:
      if (k.params[1] < 0.0) throw ConstraintViolation("raised_cosine u must be >= 0");
      if (!(k.params[2] > 0.0)) throw ConstraintViolation("raised_cosine sigma must be > 0");
      break;
    case KernelFamily::TruncatedExponential:
      if (!(k.params[1] > 0.0)) throw ConstraintViolation("truncated_exponential gamma must be > 0");
      break;
  }
}

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

[[nodiscard]] inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// F(b) - F(a) for the standard normal cdf, computed on the side of the
/// distribution that avoids cancellation.
[[nodiscard]] inline double normal_mass(double a, double b) {
  if (a > 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  if (b < 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  return 0.5 * (std::erf(b * kInvSqrt2) - std::erf(a * kInvSqrt2));
}

/// Evaluates phi(t) and, when `grad` is non-null, d phi(t) / d params.
/// Assumes validated parameters and t in [0, W].
inline double eval_inside(const KernelSpec& k, double t, double* grad) {
  const double alpha = k.params[0];
  const double W = k.support;
  switch (k.family) {
    case KernelFamily::TruncatedGaussian: {
      const double m = k.params[1];
      const double sigma = k.params[2];
      const double a = -m / sigma;
      const double b = (W - m) / sigma;
      const double Z = normal_mass(a, b);
      // Mass pushed entirely outside [0, W] at this sigma; treat as absent.
      if (!(Z > 0.0)) {
        if (grad) grad[0] = grad[1] = grad[2] = 0.0;
        return 0.0;
      }
      const double x = (t - m) / sigma;
      const double kappa = normal_pdf(x) / (sigma * Z);
      const double value = alpha * kappa;
      if (grad) {
        const double fa = normal_pdf(a);
        const double fb = normal_pdf(b);
        grad[0] = kappa;
        grad[1] = value * (x / sigma - (fa - fb) / (sigma * Z));
        grad[2] = value * ((x * x - 1.0) / sigma - (a * fa - b * fb) / (sigma * Z));
      }
      return value;
    }
    case KernelFamily::RaisedCosine: {
      const double u = k.params[1];
      const double sigma = k.params[2];
      if (t < u || t > u + 2.0 * sigma) {
        if (grad) grad[0] = grad[1] = grad[2] = 0.0;
        return 0.0;
      }
      const double y = (t - u) / sigma * std::numbers::pi - std::numbers::pi;
      const double shape = 1.0 + std::cos(y);
      if (grad) {
        const double s = std::sin(y);
        grad[0] = shape;
        grad[1] = alpha * std::numbers::pi * s / sigma;
        grad[2] = alpha * std::numbers::pi * (t - u) * s / (sigma * sigma);
      }
      return alpha * shape;
    }
    case KernelFamily::TruncatedExponential: {
      const double gamma = k.params[1];
      const double norm = -std::expm1(-gamma * W);
      const double kappa = gamma * std::exp(-gamma * t) / norm;
      if (grad) {
        const double tail = W / std::expm1(gamma * W);
        grad[0] = kappa;
        grad[1] = alpha * kappa * (1.0 / gamma - t - tail);
      }
      return alpha * kappa;
    }
  }
  return 0.0;
}

[[nodiscard]] inline double eval_unchecked(const KernelSpec& k, double t) {
  if (t < 0.0 || t > k.support) return 0.0;
  return eval_inside(k, t, nullptr);
}

}  // namespace detail

/// phi(t); exactly zero outside [0, W].
[[nodiscard]] inline double eval(const KernelSpec& kernel, double t) {
  validate(kernel);
  return detail::eval_unchecked(kernel, t);
}

/// sup of phi over [lag, W]. Used as the per-event dominating rate by the
/// thinning simulator: the contribution of a past event can never exceed it
/// again once its age is at least `lag`.
[[nodiscard]] inline double tail_sup(const KernelSpec& k, double lag) {
  const double W = k.support;
  if (lag > W) return 0.0;
  lag = std::max(lag, 0.0);
  switch (k.family) {
    case KernelFamily::TruncatedGaussian: {
      const double peak = std::clamp(k.params[1], 0.0, W);
      return detail::eval_unchecked(k, lag <= peak ? peak : lag);
    }
    case KernelFamily::RaisedCosine: {
      const double peak = k.params[1] + k.params[2];
      if (peak > W) return detail::eval_unchecked(k, W);
      return lag <= peak ? 2.0 * k.params[0] : detail::eval_unchecked(k, lag);
    }
    case KernelFamily::TruncatedExponential:
      return detail::eval_unchecked(k, lag);
  }
  return 0.0;
}

/// Samples phi and its parameter gradients at lags tau*delta, tau = 1..L.
[[nodiscard]] inline DiscretizedKernel discretize_kernel(const KernelSpec& kernel,
                                                         double delta, std::int64_t L) {
  validate(kernel);
  if (L < 1) throw ConfigError("discretized kernel needs L >= 1 (delta > W?)");
  DiscretizedKernel out;
  const auto n = static_cast<std::size_t>(L);
  const std::size_t np = kernel.size();
  out.values.assign(n, 0.0);
  for (std::size_t k = 0; k < np; ++k) out.grads[k].assign(n, 0.0);
  std::array<double, kMaxKernelParams> g{};
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double t = static_cast<double>(idx + 1) * delta;
    if (t > kernel.support) continue;
    out.values[idx] = detail::eval_inside(kernel, t, g.data());
    for (std::size_t k = 0; k < np; ++k) out.grads[k][idx] = g[k];
  }
  return out;
}

[[nodiscard]] inline DiscretizedKernel discretize_kernel(const KernelSpec& kernel,
                                                         const DiscreteGrid& grid) {
  if (grid.L < 1) throw ConfigError("grid has no point on the kernel support (delta > W)");
  return discretize_kernel(kernel, grid.delta, grid.L);
}

/// Integral of phi over [0, W] by adaptive Simpson (absolute tolerance 1e-10).
[[nodiscard]] inline double kernel_mass(const KernelSpec& kernel) {
  validate(kernel);
  std::vector<double> breaks;
  const double W = kernel.support;
  switch (kernel.family) {
    case KernelFamily::TruncatedGaussian: {
      const double m = kernel.params[1];
      const double s = kernel.params[2];
      for (double z : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) breaks.push_back(m + z * s);
      break;
    }
    case KernelFamily::RaisedCosine: {
      const double u = kernel.params[1];
      const double s = kernel.params[2];
      breaks = {u, u + s, u + 2.0 * s};
      break;
    }
    case KernelFamily::TruncatedExponential: {
      const double scale = 1.0 / kernel.params[1];
      for (double z : {1.0, 4.0, 16.0}) breaks.push_back(z * scale);
      break;
    }
  }
  return quad::adaptive_simpson_split(
      [&](double t) { return detail::eval_unchecked(kernel, t); }, 0.0, W, std::move(breaks),
      1e-10);
}

/// Projects kernel parameters onto the solver's feasible set: alpha >= 0,
/// sigma/gamma >= shape_floor, and for raised_cosine 0 <= u <= W - 2 sigma.
inline void project_to_feasible(KernelSpec& k, double shape_floor) {
  k.params[0] = std::max(k.params[0], 0.0);
  const double W = k.support;
  switch (k.family) {
    case KernelFamily::TruncatedGaussian:
      k.params[2] = std::max(k.params[2], shape_floor);
      break;
    case KernelFamily::RaisedCosine:
      k.params[2] = std::clamp(k.params[2], shape_floor, std::max(shape_floor, 0.5 * W));
      k.params[1] = std::clamp(k.params[1], 0.0, std::max(0.0, W - 2.0 * k.params[2]));
      break;
    case KernelFamily::TruncatedExponential:
      k.params[1] = std::max(k.params[1], shape_floor);
      break;
  }
}

}  // namespace fadin
