#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fadin/discretization.hpp"
#include "fadin/errors.hpp"
#include "fadin/grid.hpp"
#include "fadin/io.hpp"
#include "fadin/kernels.hpp"
#include "fadin/model.hpp"
#include "fadin/rng.hpp"
#include "fadin/simulation.hpp"
#include "fadin/solver.hpp"

namespace fadin {

enum class Scenario { ConsistencySweep, Prop2Rate, WSensitivity, L2vsLL };

[[nodiscard]] inline std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::ConsistencySweep: return "consistency";
    case Scenario::Prop2Rate: return "prop2_rate";
    case Scenario::WSensitivity: return "w_sensitivity";
    case Scenario::L2vsLL: return "l2_vs_ll";
  }
  return "unknown";
}

[[nodiscard]] inline Scenario parse_scenario(const std::string& s) {
  if (s == "consistency" || s == "ConsistencySweep") return Scenario::ConsistencySweep;
  if (s == "prop2_rate" || s == "Prop2Rate") return Scenario::Prop2Rate;
  if (s == "w_sensitivity" || s == "WSensitivity") return Scenario::WSensitivity;
  if (s == "l2_vs_ll" || s == "L2vsLL") return Scenario::L2vsLL;
  throw ConfigError("unknown scenario '" + s + "'");
}

struct ExperimentSpec {
  Scenario scenario{Scenario::ConsistencySweep};
  /// Ground truth used for simulation. For l2_vs_ll, one truth per family.
  std::vector<HawkesModel> truths;
  std::vector<double> horizons;
  std::vector<double> deltas;
  /// Fitted kernel supports. Defaults to the truth's support.
  std::vector<double> supports;
  std::size_t repetitions{1};
  std::uint64_t seed{0};
  FitConfig fit;
  /// Prop2Rate: the fine grid standing in for the continuous estimate.
  double delta_ref{1e-4};
  /// WSensitivity: iteration budget used to normalize per-fit time.
  std::size_t timing_iterations{100};
  /// Record the normalized l1 intensity error when G + 1 stays below this.
  std::int64_t intensity_error_max_grid{0};
  std::size_t threads{1};
  std::filesystem::path output;
};

/// One fit in one scenario.
struct RunRecord {
  std::string scenario;
  std::string family;
  std::string method{"l2"};
  double horizon{0.0};
  double delta{0.0};
  double support{0.0};
  std::size_t rep{0};
  std::uint64_t seed{0};
  std::int64_t n_events{0};
  /// ||theta_hat - reference||_2 in pack() order (truth, or the fine-grid fit for prop2).
  double l2_error{std::numeric_limits<double>::quiet_NaN()};
  std::vector<double> sq_errors;
  std::vector<double> theta_hat;
  double intensity_l1{std::numeric_limits<double>::quiet_NaN()};
  std::size_t iterations{0};
  bool converged{false};
  std::string status;
  double precompute_seconds{0.0};
  double mean_iteration_seconds{0.0};
  double total_seconds{0.0};
  /// WSensitivity: precompute + timing_iterations x median iteration time.
  double budget_seconds{std::numeric_limits<double>::quiet_NaN()};
};

/// Prop2Rate: slope of log ||theta_delta - theta_ref|| against log delta.
struct SlopeRecord {
  std::size_t rep{0};
  std::uint64_t seed{0};
  double horizon{0.0};
  double slope{std::numeric_limits<double>::quiet_NaN()};
  double intercept{std::numeric_limits<double>::quiet_NaN()};
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<SlopeRecord> slopes;
};

// ---------------------------------------------------------------------------
// Statistics helpers

[[nodiscard]] inline double quantile(std::vector<double> v, double q) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

[[nodiscard]] inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// Least-squares fit y = a + b x; returns {a, b}.
[[nodiscard]] inline std::pair<double, double> linear_fit(const std::vector<double>& x,
                                                          const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {(sy - b * sx) / n, b};
}

/// Runs fn(0..n-1) on up to `threads` workers. Exceptions are rethrown.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

inline void check_spec(const ExperimentSpec& spec) {
  if (spec.truths.empty()) throw ConfigError("experiment needs a ground-truth model");
  if (spec.horizons.empty()) throw ConfigError("experiment needs at least one horizon T");
  if (spec.deltas.empty()) throw ConfigError("experiment needs at least one delta");
  if (spec.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  for (const auto& m : spec.truths) validate(m);
}

inline KernelFamily family_of(const HawkesModel& m) { return m.kernels.front().family; }

/// Fitting support for a truth: spec.supports[0] if given, else the truth's.
inline double fit_support(const ExperimentSpec& spec, const HawkesModel& truth) {
  return spec.supports.empty() ? truth.max_support() : spec.supports.front();
}

inline void fill_fit(RunRecord& rec, const FitResult& r, const std::vector<double>& reference) {
  rec.n_events = r.n_events;
  rec.theta_hat = pack(r.theta_hat);
  rec.iterations = r.iterations_run;
  rec.converged = r.converged;
  rec.status = r.status;
  rec.precompute_seconds = r.precompute_seconds;
  double iter = 0.0;
  for (double t : r.iteration_seconds) iter += t;
  rec.mean_iteration_seconds = r.iteration_seconds.empty() ? 0.0 : iter / static_cast<double>(r.iteration_seconds.size());
  rec.total_seconds = r.total_seconds;
  if (reference.size() == rec.theta_hat.size()) {
    double sum = 0.0;
    rec.sq_errors.clear();
    for (std::size_t q = 0; q < reference.size(); ++q) {
      const double e = (rec.theta_hat[q] - reference[q]) * (rec.theta_hat[q] - reference[q]);
      rec.sq_errors.push_back(e);
      sum += e;
    }
    rec.l2_error = std::sqrt(sum);
  }
}

/// Per-(horizon index, rep) simulation seed; shared across deltas and supports.
inline std::uint64_t rep_seed(const ExperimentSpec& spec, std::size_t truth_idx,
                              std::size_t horizon_idx, std::size_t rep) {
  return derive_seed(spec.seed, (truth_idx * 1000 + horizon_idx) * 100000 + rep);
}

inline FitResult guarded_fit(const EventSequences& ev, KernelFamily family,
                             const DiscreteGrid& grid, const FitConfig& cfg) {
  try {
    return fit(ev, family, grid, cfg);
  } catch (const NumericError& e) {
    FitResult r;
    r.status = std::string("failed: ") + e.what();
    r.converged = false;
    return r;
  }
}

inline void maybe_intensity_error(RunRecord& rec, const ExperimentSpec& spec,
                                  const FitResult& r, const HawkesModel& truth,
                                  const EventSequences& ev, const DiscreteGrid& grid) {
  if (grid.size() > spec.intensity_error_max_grid || r.theta_hat.dimension() == 0) return;
  const auto z = project(ev, grid, spec.fit.precompute.memory_cap);
  HawkesModel t = truth;
  for (auto& k : t.kernels) k.support = std::min(k.support, grid.support);
  rec.intensity_l1 = intensity_l1_error(r.theta_hat, t, z, grid);
}

}  // namespace detail

/// simulate -> fit at every delta; one record per (T, delta, rep).
[[nodiscard]] inline ExperimentResult run_consistency(const ExperimentSpec& spec) {
  detail::check_spec(spec);
  const HawkesModel& truth = spec.truths.front();
  const KernelFamily family = detail::family_of(truth);
  const double W = detail::fit_support(spec, truth);
  const std::vector<double> reference = pack(truth);
  const std::size_t nT = spec.horizons.size();
  const std::size_t nd = spec.deltas.size();
  std::vector<RunRecord> runs(nT * spec.repetitions * nd);
  parallel_for(nT * spec.repetitions, spec.threads, [&](std::size_t job) {
    const std::size_t ti = job / spec.repetitions;
    const std::size_t rep = job % spec.repetitions;
    const double T = spec.horizons[ti];
    const std::uint64_t seed = detail::rep_seed(spec, 0, ti, rep);
    const EventSequences ev = simulate(truth, T, seed);
    for (std::size_t di = 0; di < nd; ++di) {
      RunRecord& rec = runs[job * nd + di];
      rec.scenario = scenario_name(Scenario::ConsistencySweep);
      rec.family = std::string(family_name(family));
      rec.horizon = T;
      rec.delta = spec.deltas[di];
      rec.support = W;
      rec.rep = rep;
      rec.seed = seed;
      const DiscreteGrid grid = make_grid(spec.deltas[di], T, W);
      const FitResult r = detail::guarded_fit(ev, family, grid, spec.fit);
      detail::fill_fit(rec, r, reference);
      rec.n_events = static_cast<std::int64_t>(ev.total());
      detail::maybe_intensity_error(rec, spec, r, truth, ev, grid);
    }
  });
  return {std::move(runs), {}};
}

/// Fits each rep's events on the swept grids (coarse to fine) and on
/// delta_ref, warm-started from the finest swept fit, then regresses
/// log ||theta_delta - theta_ref|| on log delta.
[[nodiscard]] inline ExperimentResult run_prop2_rate(const ExperimentSpec& spec) {
  detail::check_spec(spec);
  const HawkesModel& truth = spec.truths.front();
  const KernelFamily family = detail::family_of(truth);
  const double W = detail::fit_support(spec, truth);
  for (double d : spec.deltas) {
    if (!(spec.delta_ref < d)) throw ConfigError("delta_ref must be smaller than every swept delta");
  }
  std::vector<double> deltas = spec.deltas;
  std::sort(deltas.rbegin(), deltas.rend());
  const double T = spec.horizons.front();
  const std::size_t nd = deltas.size();

  ExperimentResult out;
  out.runs.resize(spec.repetitions * (nd + 1));
  out.slopes.resize(spec.repetitions);
  parallel_for(spec.repetitions, spec.threads, [&](std::size_t rep) {
    const std::uint64_t seed = detail::rep_seed(spec, 0, 0, rep);
    const EventSequences ev = simulate(truth, T, seed);
    std::vector<FitResult> fits;
    FitConfig cfg = spec.fit;
    for (double d : deltas) {
      fits.push_back(detail::guarded_fit(ev, family, make_grid(d, T, W), cfg));
    }
    FitConfig ref_cfg = spec.fit;
    if (fits.back().theta_hat.dimension() > 0) ref_cfg.init_model = fits.back().theta_hat;
    const FitResult ref = detail::guarded_fit(ev, family, make_grid(spec.delta_ref, T, W), ref_cfg);
    const std::vector<double> ref_theta =
        ref.theta_hat.dimension() > 0 ? pack(ref.theta_hat) : std::vector<double>{};

    std::vector<double> lx, ly;
    for (std::size_t k = 0; k <= nd; ++k) {
      RunRecord& rec = out.runs[rep * (nd + 1) + k];
      rec.scenario = scenario_name(Scenario::Prop2Rate);
      rec.family = std::string(family_name(family));
      rec.horizon = T;
      rec.delta = k < nd ? deltas[k] : spec.delta_ref;
      rec.support = W;
      rec.rep = rep;
      rec.seed = seed;
      detail::fill_fit(rec, k < nd ? fits[k] : ref, ref_theta);
      if (k < nd && rec.l2_error > 0.0 && std::isfinite(rec.l2_error)) {
        lx.push_back(std::log(rec.delta));
        ly.push_back(std::log(rec.l2_error));
      }
    }
    SlopeRecord& s = out.slopes[rep];
    s.rep = rep;
    s.seed = seed;
    s.horizon = T;
    std::tie(s.intercept, s.slope) = linear_fit(lx, ly);
  });
  return out;
}

/// TE truth simulated on its own (large) support, fitted at every W in
/// spec.supports with the same events.
[[nodiscard]] inline ExperimentResult run_w_sensitivity(const ExperimentSpec& spec) {
  detail::check_spec(spec);
  if (spec.supports.empty()) throw ConfigError("w_sensitivity needs a list of supports W");
  const HawkesModel& truth = spec.truths.front();
  const KernelFamily family = detail::family_of(truth);
  const std::vector<double> reference = pack(truth);
  const double T = spec.horizons.front();
  const double delta = spec.deltas.front();
  const std::size_t nw = spec.supports.size();
  std::vector<RunRecord> runs(spec.repetitions * nw);
  parallel_for(spec.repetitions, spec.threads, [&](std::size_t rep) {
    const std::uint64_t seed = detail::rep_seed(spec, 0, 0, rep);
    const EventSequences ev = simulate(truth, T, seed);
    for (std::size_t wi = 0; wi < nw; ++wi) {
      RunRecord& rec = runs[rep * nw + wi];
      rec.scenario = scenario_name(Scenario::WSensitivity);
      rec.family = std::string(family_name(family));
      rec.horizon = T;
      rec.delta = delta;
      rec.support = spec.supports[wi];
      rec.rep = rep;
      rec.seed = seed;
      const FitResult r =
          detail::guarded_fit(ev, family, make_grid(delta, T, spec.supports[wi]), spec.fit);
      detail::fill_fit(rec, r, reference);
      rec.budget_seconds = r.precompute_seconds +
                           static_cast<double>(spec.timing_iterations) * median(r.iteration_seconds);
    }
  });
  return {std::move(runs), {}};
}

/// Same events, same init and iteration budget, l2 and discrete LL
/// objectives. One truth per family.
[[nodiscard]] inline ExperimentResult run_l2_vs_ll(const ExperimentSpec& spec) {
  detail::check_spec(spec);
  const std::size_t nt = spec.truths.size();
  const std::size_t nT = spec.horizons.size();
  const std::size_t nd = spec.deltas.size();
  const std::size_t jobs = nt * nT * spec.repetitions;
  std::vector<RunRecord> runs(jobs * nd * 2);
  parallel_for(jobs, spec.threads, [&](std::size_t job) {
    const std::size_t fi = job / (nT * spec.repetitions);
    const std::size_t ti = (job / spec.repetitions) % nT;
    const std::size_t rep = job % spec.repetitions;
    const HawkesModel& truth = spec.truths[fi];
    const KernelFamily family = detail::family_of(truth);
    const double W = truth.max_support();
    const std::vector<double> reference = pack(truth);
    const double T = spec.horizons[ti];
    const std::uint64_t seed = detail::rep_seed(spec, fi, ti, rep);
    const EventSequences ev = simulate(truth, T, seed);
    for (std::size_t di = 0; di < nd; ++di) {
      const DiscreteGrid grid = make_grid(spec.deltas[di], T, W);
      for (int method = 0; method < 2; ++method) {
        FitConfig cfg = spec.fit;
        cfg.objective = method == 0 ? Objective::L2 : Objective::LogLikelihood;
        RunRecord& rec = runs[(job * nd + di) * 2 + static_cast<std::size_t>(method)];
        rec.scenario = scenario_name(Scenario::L2vsLL);
        rec.family = std::string(family_name(family));
        rec.method = method == 0 ? "l2" : "log_likelihood";
        rec.horizon = T;
        rec.delta = spec.deltas[di];
        rec.support = W;
        rec.rep = rep;
        rec.seed = seed;
        const FitResult r = detail::guarded_fit(ev, family, grid, cfg);
        detail::fill_fit(rec, r, reference);
        rec.n_events = static_cast<std::int64_t>(ev.total());
        detail::maybe_intensity_error(rec, spec, r, truth, ev, grid);
      }
    }
  });
  return {std::move(runs), {}};
}

[[nodiscard]] inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  switch (spec.scenario) {
    case Scenario::ConsistencySweep: return run_consistency(spec);
    case Scenario::Prop2Rate: return run_prop2_rate(spec);
    case Scenario::WSensitivity: return run_w_sensitivity(spec);
    case Scenario::L2vsLL: return run_l2_vs_ll(spec);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Spec files and CSV output

/// Default truths for l2_vs_ll: mu = 0.3, alpha = 0.8, W = 1.
[[nodiscard]] inline std::vector<HawkesModel> default_l2_vs_ll_truths() {
  return {uniform_model({0.3}, KernelSpec::raised_cosine(0.8, 0.2, 0.3, 1.0)),
          uniform_model({0.3}, KernelSpec::truncated_gaussian(0.8, 0.5, 0.3, 1.0)),
          uniform_model({0.3}, KernelSpec::truncated_exponential(0.8, 5.0, 1.0))};
}

/// Defaults: TG truth mu = 0.5, alpha = 0.8, m = 0.5, sigma = 0.3, W = 1.
[[nodiscard]] inline ExperimentSpec spec_from_json(const io::json& j) {
  using io::detail::get_or;
  ExperimentSpec spec;
  spec.scenario = parse_scenario(io::detail::require<std::string>(j, "scenario"));
  if (j.contains("truths")) {
    for (const auto& m : j.at("truths")) spec.truths.push_back(io::model_from_json(m));
  } else if (j.contains("truth")) {
    spec.truths.push_back(io::model_from_json(j.at("truth")));
  } else if (spec.scenario == Scenario::L2vsLL) {
    spec.truths = default_l2_vs_ll_truths();
  } else if (spec.scenario == Scenario::WSensitivity) {
    spec.truths.push_back(uniform_model({1.1}, KernelSpec::truncated_exponential(0.8, 0.5, 100.0)));
  } else {
    spec.truths.push_back(uniform_model({0.5}, KernelSpec::truncated_gaussian(0.8, 0.5, 0.3, 1.0)));
  }
  spec.horizons = get_or<std::vector<double>>(j, "T", {});
  spec.deltas = get_or<std::vector<double>>(j, "delta", {});
  spec.supports = get_or<std::vector<double>>(j, "W", {});
  spec.repetitions = get_or<std::size_t>(j, "repetitions", 1);
  spec.seed = get_or<std::uint64_t>(j, "seed", 0);
  spec.delta_ref = get_or<double>(j, "delta_ref", spec.delta_ref);
  spec.timing_iterations = get_or<std::size_t>(j, "timing_iterations", spec.timing_iterations);
  spec.intensity_error_max_grid =
      get_or<std::int64_t>(j, "intensity_error_max_grid", spec.intensity_error_max_grid);
  spec.threads = get_or<std::size_t>(j, "threads", spec.threads);
  if (j.contains("fit")) spec.fit = io::fit_config_from_json(j.at("fit"));
  detail::check_spec(spec);
  return spec;
}

[[nodiscard]] inline io::json spec_to_json(const ExperimentSpec& spec) {
  io::json truths = io::json::array();
  for (const auto& m : spec.truths) truths.push_back(io::model_to_json(m));
  return io::json{{"scenario", scenario_name(spec.scenario)},
                  {"truths", truths},
                  {"T", spec.horizons},
                  {"delta", spec.deltas},
                  {"W", spec.supports},
                  {"repetitions", spec.repetitions},
                  {"seed", spec.seed},
                  {"delta_ref", spec.delta_ref},
                  {"timing_iterations", spec.timing_iterations},
                  {"intensity_error_max_grid", spec.intensity_error_max_grid},
                  {"threads", spec.threads},
                  {"fit", io::fit_config_to_json(spec.fit)}};
}

namespace detail {

inline std::string join(const std::vector<double>& v, char sep = ';') {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) os << sep;
    os << v[k];
  }
  return os.str();
}

/// Appends rows to `path`, writing the header only for a new file. An
/// existing file with another header is a schema mismatch.
inline void append_csv(const std::filesystem::path& path, const std::string& header,
                       const std::vector<std::string>& rows) {
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    std::ifstream in(path);
    std::string existing;
    std::getline(in, existing);
    if (existing != header) {
      throw ConfigError("existing " + path.string() + " has a different schema; refusing to append");
    }
  } else {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << header << '\n';
  }
  std::ofstream out(path, std::ios::app);
  for (const auto& r : rows) out << r << '\n';
}

}  // namespace detail

inline constexpr const char* kRunsHeader =
    "schema_version,scenario,family,method,T,delta,W,rep,seed,n_events,l2_error,sq_errors,"
    "theta_hat,intensity_l1,iterations,converged,status,precompute_s,mean_iteration_s,total_s,"
    "budget_s";

inline constexpr const char* kSlopesHeader = "schema_version,scenario,T,rep,seed,slope,intercept";

/// Appends <dir>/<scenario>.csv (and <dir>/prop2_slopes.csv) rows.
inline void write_results(const std::filesystem::path& dir, const ExperimentResult& result,
                          Scenario scenario) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> rows;
  for (const auto& r : result.runs) {
    std::ostringstream os;
    os.precision(17);
    os << io::kSchemaVersion << ',' << r.scenario << ',' << r.family << ',' << r.method << ','
       << r.horizon << ',' << r.delta << ',' << r.support << ',' << r.rep << ',' << r.seed << ','
       << r.n_events << ',' << r.l2_error << ',' << detail::join(r.sq_errors) << ','
       << detail::join(r.theta_hat) << ',' << r.intensity_l1 << ',' << r.iterations << ','
       << (r.converged ? 1 : 0) << ',' << '"' << r.status << '"' << ',' << r.precompute_seconds
       << ',' << r.mean_iteration_seconds << ',' << r.total_seconds << ',' << r.budget_seconds;
    rows.push_back(os.str());
  }
  detail::append_csv(dir / (scenario_name(scenario) + ".csv"), kRunsHeader, rows);
  if (!result.slopes.empty()) {
    rows.clear();
    for (const auto& s : result.slopes) {
      std::ostringstream os;
      os.precision(17);
      os << io::kSchemaVersion << ',' << scenario_name(scenario) << ',' << s.horizon << ','
         << s.rep << ',' << s.seed << ',' << s.slope << ',' << s.intercept;
      rows.push_back(os.str());
    }
    detail::append_csv(dir / "prop2_slopes.csv", kSlopesHeader, rows);
  }
}

}  // namespace fadin
