#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fadin/discretization.hpp"
#include "fadin/errors.hpp"
#include "fadin/grid.hpp"
#include "fadin/kernels.hpp"
#include "fadin/model.hpp"
#include "fadin/precompute.hpp"
#include "fadin/rng.hpp"

namespace fadin {

/// Loss value with its gradient in pack() layout.
struct LossGradient {
  double loss{0.0};
  std::vector<double> grad;
};

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline std::vector<DiscretizedKernel> discretize_all(const HawkesModel& model, double delta,
                                                     std::int64_t L) {
  std::vector<DiscretizedKernel> out;
  out.reserve(model.kernels.size());
  for (const auto& k : model.kernels) {
    out.push_back(discretize_kernel(k, delta, L));
    for (double v : out.back().values) {
      if (!std::isfinite(v)) throw NumericError("non-finite kernel value on the grid");
    }
  }
  return out;
}

inline void check_l2_inputs(const HawkesModel& model, const Precomputations& pre,
                            const DiscreteGrid& grid) {
  validate(model);
  if (model.dimension() != pre.p) {
    throw ConfigError("model dimension does not match the precomputations");
  }
  if (pre.L != grid.L || pre.G != grid.G || pre.delta != grid.delta) {
    throw ConfigError("precomputations were built on a different grid");
  }
  if (pre.n_total <= 0) throw DataError("l2 loss is undefined without events (N_T = 0)");
}

}  // namespace detail

/// Discretized l2 loss and its exact gradient, from the precomputed
/// constants only. Cost O(p^3 L^2) independent of the number of events.
[[nodiscard]] inline LossGradient loss_and_grad_l2(const HawkesModel& model,
                                                   const Precomputations& pre,
                                                   const DiscreteGrid& grid) {
  detail::check_l2_inputs(model, pre, grid);
  const std::size_t p = pre.p;
  const auto l = static_cast<std::size_t>(pre.L);
  const double delta = pre.delta;
  const double span = pre.horizon + delta;
  const auto n_total = static_cast<double>(pre.n_total);
  const auto phi = detail::discretize_all(model, delta, pre.L);

  LossGradient out;
  out.grad.assign(parameter_count(model), 0.0);
  double quad_mu = 0.0, cross = 0.0, quad_phi = 0.0, linear = 0.0;

  std::vector<double> v(l);
  std::vector<double> dphi(l);
  std::size_t offset = p;
  for (std::size_t m = 0; m < p; ++m) {
    const double mu = model.baseline[m];
    quad_mu += mu * mu;
    linear += static_cast<double>(pre.counts[m]) * mu;
    double mu_cross = 0.0;
    for (std::size_t ll = 0; ll < p; ++ll) {
      const auto& phi_ml = phi[m * p + ll];
      const double* phi_g = pre.phi_g.data() + ll * l;
      const double* phi_ev = pre.phi_ev.data() + (m * p + ll) * l;
      // v[tau] = sum_k sum_tau' Psi_{l,k}(tau, tau') phi_mk[tau'].
      std::fill(v.begin(), v.end(), 0.0);
      for (std::size_t k = 0; k < p; ++k) {
        const auto& phi_mk = phi[m * p + k].values;
        if (std::all_of(phi_mk.begin(), phi_mk.end(), [](double x) { return x == 0.0; })) continue;
        const double* block = pre.psi_block(ll, k);
        for (std::size_t t = 0; t < l; ++t) v[t] += detail::dot(block + t * l, phi_mk.data(), l);
      }
      const double phi_dot_g = detail::dot(phi_ml.values.data(), phi_g, l);
      mu_cross += phi_dot_g;
      quad_phi += detail::dot(phi_ml.values.data(), v.data(), l);
      linear += detail::dot(phi_ml.values.data(), phi_ev, l);

      for (std::size_t t = 0; t < l; ++t) {
        dphi[t] = (2.0 * delta * (mu * phi_g[t] + v[t]) - 2.0 * phi_ev[t]) / n_total;
      }
      const KernelSpec& kernel = model.kernel(m, ll);
      for (std::size_t q = 0; q < kernel.size(); ++q) {
        out.grad[offset + q] = detail::dot(phi_ml.grads[q].data(), dphi.data(), l);
      }
      offset += kernel.size();
    }
    cross += mu * mu_cross;
    out.grad[m] = (2.0 * span * mu - 2.0 * static_cast<double>(pre.counts[m]) +
                   2.0 * delta * mu_cross) / n_total;
  }
  out.loss = (span * quad_mu + 2.0 * delta * cross + delta * quad_phi - 2.0 * linear) / n_total;
  if (!std::isfinite(out.loss)) throw NumericError("l2 loss is not finite");
  return out;
}

[[nodiscard]] inline double loss_l2(const HawkesModel& model, const Precomputations& pre,
                                    const DiscreteGrid& grid) {
  return loss_and_grad_l2(model, pre, grid).loss;
}

/// d loss / d mu_m, m = 0..p-1.
[[nodiscard]] inline std::vector<double> grad_mu(const HawkesModel& model,
                                                 const Precomputations& pre,
                                                 const DiscreteGrid& grid) {
  auto g = loss_and_grad_l2(model, pre, grid).grad;
  g.resize(model.dimension());
  return g;
}

/// d loss / d eta_ml for every kernel, indexed [m * p + l][param].
[[nodiscard]] inline std::vector<std::vector<double>> grad_eta(const HawkesModel& model,
                                                               const Precomputations& pre,
                                                               const DiscreteGrid& grid) {
  const auto g = loss_and_grad_l2(model, pre, grid).grad;
  std::vector<std::vector<double>> out;
  std::size_t pos = model.dimension();
  for (const auto& k : model.kernels) {
    out.emplace_back(g.begin() + static_cast<std::ptrdiff_t>(pos),
                     g.begin() + static_cast<std::ptrdiff_t>(pos + k.size()));
    pos += k.size();
  }
  return out;
}

namespace detail {

// Fills lambda (resized to p x (G + 1)) with the discrete intensity.
inline void intensity_into(const HawkesModel& model, const DiscretizedCounts& z,
                           const DiscreteGrid& grid, const std::vector<DiscretizedKernel>& phi,
                           std::vector<std::vector<double>>& lambda) {
  const std::size_t p = model.dimension();
  const std::int64_t G = grid.G;
  lambda.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    lambda[i].assign(static_cast<std::size_t>(G + 1), model.baseline[i]);
    double* li = lambda[i].data();
    for (std::size_t j = 0; j < p; ++j) {
      const auto& values = phi[i * p + j].values;
      for (std::int64_t r : z.occupied[j]) {
        const double w = z.z[j][static_cast<std::size_t>(r)];
        const std::int64_t tmax = std::min<std::int64_t>(grid.L, G - r);
        for (std::int64_t tau = 1; tau <= tmax; ++tau) {
          li[r + tau] += w * values[static_cast<std::size_t>(tau - 1)];
        }
      }
    }
  }
}

}  // namespace detail

/// lambda~_i[s] = mu_i + sum_j sum_{tau=1}^{L} phi_ij[tau] z_j[s - tau], s = 0..G.
[[nodiscard]] inline std::vector<std::vector<double>> intensity_discrete(
    const HawkesModel& model, const DiscretizedCounts& z, const DiscreteGrid& grid) {
  validate(model);
  if (z.dimension() != model.dimension()) throw DataError("counts and model have different dimensions");
  std::vector<std::vector<double>> lambda;
  detail::intensity_into(model, z, grid, detail::discretize_all(model, grid.delta, grid.L), lambda);
  return lambda;
}

namespace detail {

/// Negative discrete log-likelihood and (optionally) its gradient. Returns
/// nullopt when some event bin has a nonpositive intensity.
inline std::optional<LossGradient> ll_evaluate(const HawkesModel& model,
                                               const DiscretizedCounts& z,
                                               const DiscreteGrid& grid, bool want_grad,
                                               std::vector<std::vector<double>>* workspace = nullptr) {
  validate(model);
  const std::size_t p = model.dimension();
  if (z.dimension() != p) throw DataError("counts and model have different dimensions");
  const double delta = grid.delta;
  const std::int64_t G = grid.G;
  const auto l = static_cast<std::size_t>(grid.L);
  const auto phi = discretize_all(model, delta, grid.L);
  std::vector<std::vector<double>> local;
  auto& lambda = workspace ? *workspace : local;
  intensity_into(model, z, grid, phi, lambda);

  LossGradient out;
  if (want_grad) out.grad.assign(parameter_count(model), 0.0);
  double loss = 0.0;
  std::vector<double> ratio;
  for (std::size_t i = 0; i < p; ++i) {
    auto& li = lambda[i];
    double integral = 0.0;
    for (double v : li) integral += v;
    double loglik = 0.0;
    ratio.clear();
    for (std::int64_t s : z.occupied[i]) {
      const double rate = li[static_cast<std::size_t>(s)];
      if (!(rate > 0.0)) return std::nullopt;
      const double c = z.z[i][static_cast<std::size_t>(s)];
      loglik += c * std::log(rate);
      ratio.push_back(c / rate);
    }
    loss += delta * integral - loglik;
    if (!want_grad) continue;

    double ratio_sum = 0.0;
    for (double r : ratio) ratio_sum += r;
    out.grad[i] = delta * static_cast<double>(G + 1) - ratio_sum;

    // Reuse the intensity buffer for the adjoint w_i[s] = delta - z_i[s] / lambda_i[s].
    std::fill(li.begin(), li.end(), delta);
    for (std::size_t n = 0; n < ratio.size(); ++n) {
      li[static_cast<std::size_t>(z.occupied[i][n])] -= ratio[n];
    }
  }
  out.loss = loss;
  if (!want_grad) return out;

  // d loss / d eta_ij = sum_tau d phi_ij[tau] * c_ij[tau],
  // c_ij[tau] = sum_s w_i[s] z_j[s - tau].
  std::vector<double> c(l);
  std::size_t offset = p;
  for (std::size_t i = 0; i < p; ++i) {
    const double* w = lambda[i].data();
    for (std::size_t j = 0; j < p; ++j) {
      std::fill(c.begin(), c.end(), 0.0);
      for (std::int64_t r : z.occupied[j]) {
        const double zr = z.z[j][static_cast<std::size_t>(r)];
        const std::int64_t tmax = std::min<std::int64_t>(grid.L, G - r);
        for (std::int64_t tau = 1; tau <= tmax; ++tau) {
          c[static_cast<std::size_t>(tau - 1)] += zr * w[r + tau];
        }
      }
      const auto& kernel = model.kernel(i, j);
      for (std::size_t q = 0; q < kernel.size(); ++q) {
        out.grad[offset + q] = dot(phi[i * p + j].grads[q].data(), c.data(), l);
      }
      offset += kernel.size();
    }
  }
  return out;
}

}  // namespace detail

/// Negative log-likelihood of the discretized process,
/// sum_i (delta sum_{s=0}^{G} lambda~_i[s] - sum_s z_i[s] log lambda~_i[s]).
/// Every evaluation rebuilds the intensity on the whole grid, so its cost
/// grows with G.
[[nodiscard]] inline double loss_ll_discrete(const HawkesModel& model, const DiscretizedCounts& z,
                                             const DiscreteGrid& grid) {
  auto r = detail::ll_evaluate(model, z, grid, false);
  if (!r) {
    throw NumericError("nonpositive intensity at an event bin; the log-likelihood is undefined "
                       "(try a larger baseline initialization)");
  }
  return r->loss;
}

/// Gradient of loss_ll_discrete in pack() layout.
[[nodiscard]] inline std::vector<double> grad_ll_discrete(const HawkesModel& model,
                                                          const DiscretizedCounts& z,
                                                          const DiscreteGrid& grid) {
  auto r = detail::ll_evaluate(model, z, grid, true);
  if (!r) {
    throw NumericError("nonpositive intensity at an event bin; the log-likelihood is undefined "
                       "(try a larger baseline initialization)");
  }
  return std::move(r->grad);
}

[[nodiscard]] inline LossGradient loss_and_grad_ll(const HawkesModel& model,
                                                   const DiscretizedCounts& z,
                                                   const DiscreteGrid& grid) {
  auto r = detail::ll_evaluate(model, z, grid, true);
  if (!r) throw NumericError("nonpositive intensity at an event bin");
  return std::move(*r);
}

// ---------------------------------------------------------------------------
// Fitting

enum class Optimizer { GradientDescent, AdaptiveRMS };
enum class Objective { L2, LogLikelihood };
enum class InitMode { Moment, Random };

struct FitConfig {
  std::size_t max_iter{800};
  /// GradientDescent: fixed step (no line search) or first trial step.
  /// AdaptiveRMS: learning rate.
  double step_size{0.1};
  Optimizer optimizer{Optimizer::GradientDescent};
  /// GradientDescent only: Barzilai-Borwein trial steps with Armijo
  /// backtracking on the projected step.
  bool line_search{true};
  InitMode init{InitMode::Moment};
  std::uint64_t init_seed{0};
  /// Overrides `init` when set (warm start).
  std::optional<HawkesModel> init_model;
  /// Lower clamp for sigma (TG, RC) and gamma (TE).
  double shape_floor{1e-4};
  /// Stop once the largest absolute parameter change falls below this.
  double convergence_tol{1e-6};
  /// false: kernels stay at their initial values and only mu is fitted.
  bool optimize_kernels{true};
  Objective objective{Objective::L2};
  PrecomputeOptions precompute{};
  double rms_decay{0.99};
  double rms_epsilon{1e-8};
};

struct FitResult {
  HawkesModel theta_hat;
  std::vector<double> loss_trace;
  std::size_t iterations_run{0};
  bool converged{false};
  /// "converged", "max_iter", "stalled" (no descent step found), "diverged".
  std::string status;
  double best_loss{std::numeric_limits<double>::infinity()};
  std::int64_t n_events{0};
  PrecomputeStrategy strategy{PrecomputeStrategy::Dense};
  /// Projection of the events plus (for l2) the precomputations.
  double precompute_seconds{0.0};
  std::vector<double> iteration_seconds;
  double total_seconds{0.0};
  /// Spectral radius of the fitted kernel-mass matrix. Fitting does not
  /// enforce stability; simulation does.
  double branching_ratio{0.0};
  bool exceeds_stability{false};
};

[[nodiscard]] inline HawkesModel initial_model(KernelFamily family, std::size_t p,
                                               const std::vector<std::int64_t>& counts,
                                               const DiscreteGrid& grid, const FitConfig& cfg) {
  const double W = grid.support;
  const double T = grid.horizon;
  const double pd = static_cast<double>(p);
  HawkesModel model;
  model.baseline.resize(p);
  model.kernels.resize(p * p);
  if (cfg.init == InitMode::Moment) {
    for (std::size_t i = 0; i < p; ++i) {
      model.baseline[i] = static_cast<double>(counts[i]) / ((pd + 1.0) * T);
    }
    KernelSpec k;
    switch (family) {
      case KernelFamily::TruncatedGaussian:
        k = KernelSpec::truncated_gaussian(0.5 / pd, W / 2.0, W / 4.0, W);
        break;
      case KernelFamily::RaisedCosine:
        k = KernelSpec::raised_cosine(0.5 / pd, W / 4.0, W / 4.0, W);
        break;
      case KernelFamily::TruncatedExponential:
        k = KernelSpec::truncated_exponential(0.5 / pd, 2.0 / W, W);
        break;
    }
    std::fill(model.kernels.begin(), model.kernels.end(), k);
  } else {
    Xoshiro256 rng(cfg.init_seed);
    for (std::size_t i = 0; i < p; ++i) {
      model.baseline[i] = rng.uniform(0.1, 1.0) * static_cast<double>(counts[i]) / T;
    }
    for (auto& k : model.kernels) {
      const double alpha = rng.uniform(0.05, 0.9) / pd;
      switch (family) {
        case KernelFamily::TruncatedGaussian:
          k = KernelSpec::truncated_gaussian(alpha, rng.uniform(0.1, 0.9) * W,
                                             rng.uniform(0.05, 0.5) * W, W);
          break;
        case KernelFamily::RaisedCosine:
          k = KernelSpec::raised_cosine(alpha, rng.uniform(0.0, 0.4) * W,
                                        rng.uniform(0.05, 0.3) * W, W);
          break;
        case KernelFamily::TruncatedExponential:
          k = KernelSpec::truncated_exponential(alpha, rng.uniform(0.5, 10.0) / W, W);
          break;
      }
    }
  }
  for (auto& k : model.kernels) project_to_feasible(k, cfg.shape_floor);
  return model;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline void project_model(HawkesModel& model, double shape_floor) {
  for (double& mu : model.baseline) mu = std::max(mu, 0.0);
  for (auto& k : model.kernels) project_to_feasible(k, shape_floor);
}

/// Projected first-order minimization of `objective` over the model's
/// parameters. `objective` returns nullopt for points outside its domain.
template <typename Objective>
void minimize(HawkesModel& model, const FitConfig& cfg, Objective&& objective, FitResult& result) {
  const std::size_t p = model.dimension();
  const std::size_t n = parameter_count(model);
  HawkesModel trial = model;

  auto masked = [&](std::vector<double>& g) {
    if (!cfg.optimize_kernels) std::fill(g.begin() + static_cast<std::ptrdiff_t>(p), g.end(), 0.0);
  };
  auto step_from = [&](const std::vector<double>& theta, const std::vector<double>& dir,
                       double scale) {
    std::vector<double> next(n);
    for (std::size_t q = 0; q < n; ++q) next[q] = theta[q] - scale * dir[q];
    unpack(next, trial);
    project_model(trial, cfg.shape_floor);
    return pack(trial);
  };

  auto current = objective(model);
  if (!current || !std::isfinite(current->loss)) {
    result.status = "diverged";
    result.converged = false;
    result.theta_hat = model;
    return;
  }
  masked(current->grad);
  std::vector<double> theta = pack(model);
  std::vector<double> best_theta = theta;
  double best_loss = current->loss;
  result.loss_trace.push_back(current->loss);

  std::vector<double> rms(n, 0.0);
  std::vector<double> prev_theta, prev_grad;
  double trial_step = cfg.step_size;
  result.status = "max_iter";

  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    const auto t0 = Clock::now();
    std::vector<double> next;
    std::optional<LossGradient> next_eval;

    if (cfg.optimizer == Optimizer::AdaptiveRMS) {
      std::vector<double> dir(n);
      for (std::size_t q = 0; q < n; ++q) {
        const double g = current->grad[q];
        rms[q] = cfg.rms_decay * rms[q] + (1.0 - cfg.rms_decay) * g * g;
        dir[q] = g / (std::sqrt(rms[q]) + cfg.rms_epsilon);
      }
      next = step_from(theta, dir, cfg.step_size);
      next_eval = objective(trial);
    } else if (!cfg.line_search) {
      next = step_from(theta, current->grad, cfg.step_size);
      next_eval = objective(trial);
    } else {
      if (!prev_theta.empty()) {
        double ss = 0.0, sy = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
          const double s = theta[q] - prev_theta[q];
          const double y = current->grad[q] - prev_grad[q];
          ss += s * s;
          sy += s * y;
        }
        trial_step = sy > 0.0 ? ss / sy : 2.0 * trial_step;
        trial_step = std::clamp(trial_step, 1e-12, 1e12);
      }
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        next = step_from(theta, current->grad, trial_step);
        double decrease = 0.0;
        bool moved = false;
        for (std::size_t q = 0; q < n; ++q) {
          decrease += current->grad[q] * (next[q] - theta[q]);
          moved = moved || next[q] != theta[q];
        }
        if (!moved) break;
        next_eval = objective(trial);
        if (next_eval && std::isfinite(next_eval->loss) &&
            next_eval->loss <= current->loss + 1e-4 * decrease) {
          accepted = true;
          break;
        }
        trial_step *= 0.5;
      }
      if (!accepted) {
        result.iteration_seconds.push_back(seconds_since(t0));
        result.status = "stalled";
        result.converged = true;
        break;
      }
      prev_theta = theta;
      prev_grad = current->grad;
    }

    result.iteration_seconds.push_back(seconds_since(t0));
    ++result.iterations_run;
    if (!next_eval || !std::isfinite(next_eval->loss)) {
      result.status = "diverged";
      result.converged = false;
      break;
    }
    masked(next_eval->grad);
    double change = 0.0;
    for (std::size_t q = 0; q < n; ++q) change = std::max(change, std::abs(next[q] - theta[q]));
    theta = std::move(next);
    current = std::move(next_eval);
    result.loss_trace.push_back(current->loss);
    if (current->loss < best_loss) {
      best_loss = current->loss;
      best_theta = theta;
    }
    if (change < cfg.convergence_tol) {
      result.status = "converged";
      result.converged = true;
      break;
    }
  }
  unpack(best_theta, model);
  result.best_loss = best_loss;
  result.theta_hat = model;
}

}  // namespace detail

/// Fits a model whose p x p kernels all belong to `family` on the support
/// W = grid.support, from already projected counts.
[[nodiscard]] inline FitResult fit_counts(const DiscretizedCounts& z, KernelFamily family,
                                          const DiscreteGrid& grid, const FitConfig& cfg,
                                          double projection_seconds = 0.0) {
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(cfg.step_size > 0.0)) throw ConfigError("step_size must be > 0");
  const auto start = detail::Clock::now();
  FitResult result;
  result.n_events = z.total();
  if (result.n_events <= 0) throw DataError("cannot fit without events (N_T = 0)");
  const std::size_t p = z.dimension();

  HawkesModel model = cfg.init_model ? *cfg.init_model : initial_model(family, p, z.totals, grid, cfg);
  if (model.dimension() != p) throw ConfigError("initial model dimension does not match the data");
  detail::project_model(model, cfg.shape_floor);

  if (cfg.objective == Objective::L2) {
    const auto t0 = detail::Clock::now();
    const Precomputations pre = precompute(z, grid, cfg.precompute);
    result.precompute_seconds = projection_seconds + detail::seconds_since(t0);
    result.strategy = pre.used;
    detail::minimize(model, cfg, [&](const HawkesModel& m) -> std::optional<LossGradient> {
      try {
        return loss_and_grad_l2(m, pre, grid);
      } catch (const NumericError&) {
        return std::nullopt;
      }
    }, result);
  } else {
    result.precompute_seconds = projection_seconds;
    std::vector<std::vector<double>> workspace;
    detail::minimize(model, cfg, [&](const HawkesModel& m) -> std::optional<LossGradient> {
      try {
        return detail::ll_evaluate(m, z, grid, true, &workspace);
      } catch (const NumericError&) {
        return std::nullopt;
      }
    }, result);
  }
  result.branching_ratio = branching_ratio(result.theta_hat);
  result.exceeds_stability = !(result.branching_ratio < 1.0);
  result.total_seconds = projection_seconds + detail::seconds_since(start);
  return result;
}

/// project -> precompute -> projected gradient iterations.
[[nodiscard]] inline FitResult fit(const EventSequences& events, KernelFamily family,
                                   const DiscreteGrid& grid, const FitConfig& cfg) {
  validate(events);
  if (std::abs(events.horizon - grid.horizon) > kGridSnap * grid.horizon) {
    throw ConfigError("grid horizon does not match the events horizon");
  }
  const auto t0 = detail::Clock::now();
  const DiscretizedCounts z = project(events, grid, cfg.precompute.memory_cap);
  return fit_counts(z, family, grid, cfg, detail::seconds_since(t0));
}

/// sum |lambda_hat - lambda_true| / sum |lambda_true| over the grid, both
/// intensities driven by the same projected events.
[[nodiscard]] inline double intensity_l1_error(const HawkesModel& estimate,
                                               const HawkesModel& truth,
                                               const DiscretizedCounts& z,
                                               const DiscreteGrid& grid) {
  const auto a = intensity_discrete(estimate, z, grid);
  const auto b = intensity_discrete(truth, z, grid);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t s = 0; s < a[i].size(); ++s) {
      num += std::abs(a[i][s] - b[i][s]);
      den += std::abs(b[i][s]);
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace fadin
