#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fadin/discretization.hpp"
#include "fadin/errors.hpp"
#include "fadin/kernels.hpp"
#include "fadin/model.hpp"
#include "fadin/precompute.hpp"
#include "fadin/solver.hpp"

namespace fadin::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

[[nodiscard]] inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
  return get_or<T>(j, key, T{});
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Events: CSV (process_index,timestamp) sorted by timestamp, plus a sidecar
// <file>.meta.json holding the horizon and dimension.

[[nodiscard]] inline std::filesystem::path meta_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".meta.json");
}

inline void write_events(const std::filesystem::path& path, const EventSequences& events) {
  std::vector<std::pair<double, std::size_t>> merged;
  merged.reserve(events.total());
  for (std::size_t i = 0; i < events.dimension(); ++i) {
    for (double t : events.times[i]) merged.emplace_back(t, i);
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  out << "process_index,timestamp\n";
  for (const auto& [t, i] : merged) out << i << ',' << t << '\n';
  write_json(meta_path(path), json{{"schema_version", kSchemaVersion},
                                   {"horizon", events.horizon},
                                   {"dimension", events.dimension()}});
}

/// Reads an events CSV. The horizon comes from the sidecar unless
/// `horizon_override` > 0.
[[nodiscard]] inline EventSequences read_events(const std::filesystem::path& path,
                                                double horizon_override = 0.0) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open events file " + path.string());
  EventSequences ev;
  std::size_t dimension = 0;
  if (std::filesystem::exists(meta_path(path))) {
    const json meta = read_json(meta_path(path));
    ev.horizon = detail::get_or<double>(meta, "horizon", 0.0);
    dimension = detail::get_or<std::size_t>(meta, "dimension", 0);
  }
  if (horizon_override > 0.0) ev.horizon = horizon_override;
  if (!(ev.horizon > 0.0)) {
    throw DataError("no horizon for " + path.string() + " (missing " +
                    meta_path(path).filename().string() + ")");
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.find("process_index") != std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError("line " + std::to_string(lineno) + ": expected process_index,timestamp");
    }
    std::size_t idx = 0;
    double t = 0.0;
    try {
      idx = std::stoul(line.substr(0, comma));
      t = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(lineno) + ": cannot parse '" + line + "'");
    }
    if (idx >= ev.times.size()) ev.times.resize(idx + 1);
    ev.times[idx].push_back(t);
  }
  if (dimension > ev.times.size()) ev.times.resize(dimension);
  for (auto& ts : ev.times) std::sort(ts.begin(), ts.end());
  validate(ev);
  return ev;
}

/// Debug dump of z as (process, s, count) for nonzero bins.
inline void write_counts(const std::filesystem::path& path, const DiscretizedCounts& z) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "process,s,count\n";
  for (std::size_t i = 0; i < z.dimension(); ++i) {
    for (std::int64_t s : z.occupied[i]) out << i << ',' << s << ',' << z(i, s) << '\n';
  }
}

/// Flat little-endian float64 dump: phi_g, then psi, then phi_ev, with a
/// <file>.json header describing shapes and element offsets.
inline void dump_precompute(const std::filesystem::path& path, const Precomputations& pre) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  auto put = [&](const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  put(pre.phi_g);
  put(pre.psi);
  put(pre.phi_ev);
  const std::size_t p = pre.p;
  const auto L = static_cast<std::size_t>(pre.L);
  json header{
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"p", p},
      {"L", L},
      {"G", pre.G},
      {"delta", pre.delta},
      {"horizon", pre.horizon},
      {"counts", pre.counts},
      {"tensors",
       json::array({json{{"name", "phi_g"}, {"shape", {p, L}}, {"offset", 0}},
                    json{{"name", "psi"}, {"shape", {p, p, L, L}}, {"offset", pre.phi_g.size()}},
                    json{{"name", "phi_ev"},
                         {"shape", {p, p, L}},
                         {"offset", pre.phi_g.size() + pre.psi.size()}}})}};
  write_json(std::filesystem::path(path.string() + ".json"), header);
}

// ---------------------------------------------------------------------------
// Models

[[nodiscard]] inline json kernel_to_json(const KernelSpec& k) {
  json j{{"family", std::string(family_name(k.family))}};
  const auto names = param_names(k.family);
  for (std::size_t q = 0; q < names.size(); ++q) j[std::string(names[q])] = k.params[q];
  j["W"] = k.support;
  return j;
}

/// {"family": ..., "alpha": ..., <shape keys>, "W": ...}; `fallback_family`
/// and `fallback_support` fill in missing keys.
[[nodiscard]] inline KernelSpec kernel_from_json(const json& j,
                                                 std::optional<KernelFamily> fallback_family = {},
                                                 double fallback_support = 0.0) {
  KernelSpec k;
  if (j.contains("family")) {
    k.family = parse_family(detail::require<std::string>(j, "family"));
  } else if (fallback_family) {
    k.family = *fallback_family;
  } else {
    throw ConfigError("kernel without 'family'");
  }
  k.support = detail::get_or<double>(j, "W", fallback_support);
  const auto names = param_names(k.family);
  for (std::size_t q = 0; q < names.size(); ++q) {
    const std::string key(names[q]);
    k.params[q] = detail::require<double>(j, key.c_str());
  }
  validate(k);
  return k;
}

[[nodiscard]] inline json model_to_json(const HawkesModel& m) {
  json kernels = json::array();
  for (std::size_t i = 0; i < m.dimension(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.dimension(); ++j) row.push_back(kernel_to_json(m.kernel(i, j)));
    kernels.push_back(row);
  }
  return json{{"baseline", m.baseline}, {"kernels", kernels}};
}

/// Either {"baseline": [...], "kernels": [[k00, k01], [k10, k11]]} or the
/// shorthand {"baseline": [...], "kernel": k} repeated over all pairs.
[[nodiscard]] inline HawkesModel model_from_json(const json& j) {
  HawkesModel m;
  m.baseline = detail::require<std::vector<double>>(j, "baseline");
  const std::size_t p = m.dimension();
  if (p == 0) throw ConfigError("model needs a non-empty baseline");
  if (j.contains("kernels")) {
    const json& rows = j.at("kernels");
    if (!rows.is_array() || rows.size() != p) throw ConfigError("'kernels' must be a p x p array");
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != p) throw ConfigError("'kernels' must be a p x p array");
      for (const auto& k : row) m.kernels.push_back(kernel_from_json(k));
    }
  } else if (j.contains("kernel")) {
    m.kernels.assign(p * p, kernel_from_json(j.at("kernel")));
  } else {
    throw ConfigError("model needs 'kernels' or 'kernel'");
  }
  validate(m);
  return m;
}

// ---------------------------------------------------------------------------
// Fit configuration

[[nodiscard]] inline Optimizer parse_optimizer(const std::string& s) {
  if (s == "gradient_descent" || s == "gd") return Optimizer::GradientDescent;
  if (s == "adaptive_rms" || s == "rmsprop") return Optimizer::AdaptiveRMS;
  throw ConfigError("unknown optimizer '" + s + "'");
}

[[nodiscard]] inline std::string optimizer_name(Optimizer o) {
  return o == Optimizer::GradientDescent ? "gradient_descent" : "adaptive_rms";
}

[[nodiscard]] inline Objective parse_objective(const std::string& s) {
  if (s == "l2") return Objective::L2;
  if (s == "log_likelihood" || s == "ll") return Objective::LogLikelihood;
  throw ConfigError("unknown objective '" + s + "'");
}

[[nodiscard]] inline std::string objective_name(Objective o) {
  return o == Objective::L2 ? "l2" : "log_likelihood";
}

[[nodiscard]] inline PrecomputeStrategy parse_strategy(const std::string& s) {
  if (s == "auto") return PrecomputeStrategy::Auto;
  if (s == "dense") return PrecomputeStrategy::Dense;
  if (s == "event_driven" || s == "events") return PrecomputeStrategy::EventDriven;
  throw ConfigError("unknown precompute strategy '" + s + "'");
}

[[nodiscard]] inline std::string strategy_name(PrecomputeStrategy s) {
  switch (s) {
    case PrecomputeStrategy::Auto: return "auto";
    case PrecomputeStrategy::Dense: return "dense";
    case PrecomputeStrategy::EventDriven: return "event_driven";
  }
  return "auto";
}

/// Settings a `fit` config file carries besides FitConfig itself.
struct FitSettings {
  KernelFamily family{KernelFamily::TruncatedGaussian};
  double delta{0.01};
  double support{1.0};
  FitConfig config;
};

[[nodiscard]] inline FitConfig fit_config_from_json(const json& j, FitConfig cfg = {}) {
  cfg.max_iter = detail::get_or<std::size_t>(j, "max_iter", cfg.max_iter);
  cfg.step_size = detail::get_or<double>(j, "step_size", cfg.step_size);
  if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  cfg.line_search = detail::get_or<bool>(j, "line_search", cfg.line_search);
  if (j.contains("init")) {
    const auto s = j.at("init").get<std::string>();
    if (s == "moment") {
      cfg.init = InitMode::Moment;
    } else if (s == "random") {
      cfg.init = InitMode::Random;
    } else {
      throw ConfigError("unknown init '" + s + "'");
    }
  }
  cfg.init_seed = detail::get_or<std::uint64_t>(j, "init_seed", cfg.init_seed);
  cfg.shape_floor = detail::get_or<double>(j, "clamp_floor", cfg.shape_floor);
  cfg.convergence_tol = detail::get_or<double>(j, "convergence_tol", cfg.convergence_tol);
  cfg.optimize_kernels = detail::get_or<bool>(j, "optimize_kernels", cfg.optimize_kernels);
  if (j.contains("objective")) cfg.objective = parse_objective(j.at("objective").get<std::string>());
  if (j.contains("precompute")) {
    cfg.precompute.strategy = parse_strategy(j.at("precompute").get<std::string>());
  }
  cfg.rms_decay = detail::get_or<double>(j, "rms_decay", cfg.rms_decay);
  cfg.rms_epsilon = detail::get_or<double>(j, "rms_epsilon", cfg.rms_epsilon);
  if (j.contains("init_model")) cfg.init_model = model_from_json(j.at("init_model"));
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(cfg.step_size > 0.0)) throw ConfigError("step_size must be > 0");
  if (!(cfg.shape_floor > 0.0)) throw ConfigError("clamp_floor must be > 0");
  if (!(cfg.convergence_tol >= 0.0)) throw ConfigError("convergence_tol must be >= 0");
  return cfg;
}

[[nodiscard]] inline json fit_config_to_json(const FitConfig& cfg) {
  json j{{"max_iter", cfg.max_iter},
         {"step_size", cfg.step_size},
         {"optimizer", optimizer_name(cfg.optimizer)},
         {"line_search", cfg.line_search},
         {"init", cfg.init == InitMode::Moment ? "moment" : "random"},
         {"init_seed", cfg.init_seed},
         {"clamp_floor", cfg.shape_floor},
         {"convergence_tol", cfg.convergence_tol},
         {"optimize_kernels", cfg.optimize_kernels},
         {"objective", objective_name(cfg.objective)},
         {"precompute", strategy_name(cfg.precompute.strategy)},
         {"rms_decay", cfg.rms_decay},
         {"rms_epsilon", cfg.rms_epsilon}};
  if (cfg.init_model) j["init_model"] = model_to_json(*cfg.init_model);
  return j;
}

/// {"family": ..., "delta": ..., "W": ..., <FitConfig keys>}.
[[nodiscard]] inline FitSettings fit_settings_from_json(const json& j) {
  FitSettings s;
  s.family = parse_family(detail::require<std::string>(j, "family"));
  s.delta = detail::require<double>(j, "delta");
  s.support = detail::require<double>(j, "W");
  s.config = fit_config_from_json(j);
  return s;
}

[[nodiscard]] inline json fit_result_to_json(const FitResult& r, const FitSettings& settings,
                                             std::uint64_t seed) {
  const HawkesModel& m = r.theta_hat;
  json params = json::array();
  for (std::size_t i = 0; i < m.dimension(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.dimension(); ++j) row.push_back(kernel_to_json(m.kernel(i, j)));
    params.push_back(json{{"process", i}, {"baseline", m.baseline[i]}, {"kernels", row}});
  }
  double iter_total = 0.0;
  for (double t : r.iteration_seconds) iter_total += t;
  json config = fit_config_to_json(settings.config);
  config["family"] = std::string(family_name(settings.family));
  config["delta"] = settings.delta;
  config["W"] = settings.support;
  return json{{"schema_version", kSchemaVersion},
              {"params", params},
              {"loss_trace", r.loss_trace},
              {"best_loss", r.best_loss},
              {"iterations_run", r.iterations_run},
              {"converged", r.converged},
              {"status", r.status},
              {"n_events", r.n_events},
              {"branching_ratio", r.branching_ratio},
              {"exceeds_stability", r.exceeds_stability},
              {"timings",
               {{"precompute_seconds", r.precompute_seconds},
                {"iterations_seconds", iter_total},
                {"per_iteration_seconds", r.iteration_seconds},
                {"total_seconds", r.total_seconds},
                {"precompute_strategy", strategy_name(r.strategy)}}},
              {"config", config},
              {"seed", seed}};
}

}  // namespace fadin::io
