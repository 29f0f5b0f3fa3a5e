// fadin command-line front end.
//
//   fadin simulate   --config <file> --out <csv>
//   fadin fit        --events <csv> --config <file> --out <json>
//   fadin experiment --spec <file> --out <dir>
//   fadin bench      --spec <file>
//
// Exit codes: 0 success, 2 configuration/data error, 3 numeric failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "fadin/fadin.hpp"

namespace {

using namespace fadin;
using io::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t threads{1};
  std::uint64_t mem_cap{kDefaultMemoryCap};
};

int cmd_simulate(const Globals& g, const std::string& config_path, const std::string& out) {
  const json cfg = io::read_json(config_path);
  const HawkesModel model = io::model_from_json(cfg.at("model"));
  double horizon = io::detail::get_or<double>(cfg, "T", 0.0);
  if (horizon == 0.0) horizon = io::detail::get_or<double>(cfg, "horizon", 0.0);
  const std::uint64_t seed = g.seed ? *g.seed : io::detail::get_or<std::uint64_t>(cfg, "seed", 0);
  const EventSequences ev = simulate(model, horizon, seed);
  io::write_events(out, ev);
  std::cout << "simulated " << ev.total() << " events on [0, " << horizon << "] (seed " << seed
            << ") -> " << out << '\n';
  return 0;
}

int cmd_fit(const Globals& g, const std::string& events_path, const std::string& config_path,
            const std::string& out, const std::string& dump_pre, const std::string& dump_counts) {
  const json cfg = io::read_json(config_path);
  io::FitSettings settings = io::fit_settings_from_json(cfg);
  settings.config.precompute.memory_cap = g.mem_cap;
  const std::uint64_t seed = g.seed ? *g.seed : settings.config.init_seed;
  settings.config.init_seed = seed;
  const EventSequences ev = io::read_events(events_path);
  const DiscreteGrid grid = make_grid(settings.delta, ev.horizon, settings.support);

  if (!dump_pre.empty() || !dump_counts.empty()) {
    const auto z = project(ev, grid, g.mem_cap);
    if (!dump_counts.empty()) io::write_counts(dump_counts, z);
    if (!dump_pre.empty()) io::dump_precompute(dump_pre, precompute(z, grid, settings.config.precompute));
  }

  const FitResult r = fit(ev, settings.family, grid, settings.config);
  io::write_json(out, io::fit_result_to_json(r, settings, seed));
  std::cout << "fit " << r.status << " after " << r.iterations_run << " iterations, loss "
            << r.best_loss << " -> " << out << '\n';
  if (r.status == "diverged") {
    std::cerr << "error: optimization diverged\n";
    return kExitNumeric;
  }
  return 0;
}

void print_summary(const ExperimentResult& r) {
  // Median error per (family, method, T, delta, W) cell.
  std::map<std::tuple<std::string, std::string, double, double, double>, std::vector<double>> err, time;
  for (const auto& rec : r.runs) {
    const auto key = std::make_tuple(rec.family, rec.method, rec.horizon, rec.delta, rec.support);
    err[key].push_back(rec.l2_error);
    time[key].push_back(rec.total_seconds);
  }
  std::cout << "family,method,T,delta,W,median_l2_error,q25,q75,median_total_s\n";
  for (const auto& [key, v] : err) {
    const auto& [family, method, T, delta, W] = key;
    std::cout << family << ',' << method << ',' << T << ',' << delta << ',' << W << ','
              << median(v) << ',' << quantile(v, 0.25) << ',' << quantile(v, 0.75) << ','
              << median(time[key]) << '\n';
  }
  if (!r.slopes.empty()) {
    std::vector<double> s;
    for (const auto& x : r.slopes) s.push_back(x.slope);
    std::cout << "median log-log slope: " << median(s) << '\n';
  }
}

int cmd_experiment(const Globals& g, const std::string& spec_path, const std::string& out) {
  ExperimentSpec spec = spec_from_json(io::read_json(spec_path));
  if (g.seed) spec.seed = *g.seed;
  spec.threads = g.threads;
  spec.fit.precompute.memory_cap = g.mem_cap;
  spec.output = out;
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult r = run_experiment(spec);
  write_results(out, r, spec.scenario);
  io::write_json(std::filesystem::path(out) / (scenario_name(spec.scenario) + "_spec.json"),
                 spec_to_json(spec));
  print_summary(r);
  std::cout << "wrote " << r.runs.size() << " rows to " << out << " in "
            << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
            << " s\n";
  return 0;
}

/// Timing of the three stages per horizon: projection + precompute, one l2
/// gradient, one discrete-LL gradient.
int cmd_bench(const Globals& g, const std::string& spec_path) {
  const json spec = io::read_json(spec_path);
  using io::detail::get_or;
  const auto horizons = get_or<std::vector<double>>(spec, "T", {1000.0, 10000.0});
  const double delta = get_or<double>(spec, "delta", 0.01);
  const std::size_t repeats = get_or<std::size_t>(spec, "repeats", 5);
  const std::uint64_t seed = g.seed ? *g.seed : get_or<std::uint64_t>(spec, "seed", 0);
  HawkesModel model;
  if (spec.contains("model")) {
    model = io::model_from_json(spec.at("model"));
  } else {
    model = uniform_model({0.3, 0.3}, KernelSpec::truncated_gaussian(0.3, 0.5, 0.3, 1.0));
  }
  const double W = model.max_support();
  PrecomputeOptions popt;
  popt.memory_cap = g.mem_cap;
  if (spec.contains("precompute")) popt.strategy = io::parse_strategy(spec.at("precompute").get<std::string>());
  const bool with_ll = get_or<bool>(spec, "log_likelihood", true);

  using Clock = std::chrono::steady_clock;
  auto best_of = [&](auto&& fn) {
    double best = 1e300;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = Clock::now();
      fn();
      best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
    }
    return best;
  };

  std::cout << "T,G,n_events,precompute_s,l2_gradient_s,ll_gradient_s\n";
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    const double T = horizons[k];
    const EventSequences ev = simulate(model, T, derive_seed(seed, k));
    const DiscreteGrid grid = make_grid(delta, T, W);
    const DiscretizedCounts z = project(ev, grid, g.mem_cap);
    Precomputations pre;
    const double t_pre = best_of([&] { pre = precompute(z, grid, popt); });
    volatile double sink = 0.0;
    const double t_l2 = best_of([&] { sink = loss_and_grad_l2(model, pre, grid).loss; });
    double t_ll = std::numeric_limits<double>::quiet_NaN();
    if (with_ll) t_ll = best_of([&] { sink = grad_ll_discrete(model, z, grid)[0]; });
    std::cout << T << ',' << grid.G << ',' << ev.total() << ',' << t_pre << ',' << t_l2 << ','
              << t_ll << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discretized inference for multivariate Hawkes processes"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for simulation, random init and experiments");
  app.add_option("--threads", g.threads, "Worker threads for experiment repetitions")
      ->check(CLI::PositiveNumber);
  app.add_option("--mem-cap-bytes", g.mem_cap, "Memory cap for count arrays and precomputations");

  std::string config, out, events, spec, dump_pre, dump_counts;
  auto* sim = app.add_subcommand("simulate", "Simulate a Hawkes model to an events CSV");
  sim->add_option("--config", config, "Model JSON")->required();
  sim->add_option("--out", out, "Events CSV")->required();

  auto* fitc = app.add_subcommand("fit", "Fit a model to an events CSV");
  fitc->add_option("--events", events, "Events CSV")->required();
  fitc->add_option("--config", config, "Fit config JSON")->required();
  fitc->add_option("--out", out, "FitResult JSON")->required();
  fitc->add_option("--dump-precompute", dump_pre, "Write the precomputed tensors (binary + .json header)");
  fitc->add_option("--dump-counts", dump_counts, "Write nonzero counts as process,s,count CSV");

  auto* exp = app.add_subcommand("experiment", "Run an experiment spec");
  exp->add_option("--spec", spec, "Experiment spec JSON")->required();
  exp->add_option("--out", out, "Output directory")->required();

  auto* bench = app.add_subcommand("bench", "Time precompute and gradients");
  bench->add_option("--spec", spec, "Bench spec JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*sim) return cmd_simulate(g, config, out);
    if (*fitc) return cmd_fit(g, events, config, out, dump_pre, dump_counts);
    if (*exp) return cmd_experiment(g, spec, out);
    if (*bench) return cmd_bench(g, spec);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
