// Acceptance checks. Usage: fadin_acceptance <criterion 1..8 | all>
// Prints one "criterion N: PASS|FAIL ..." line per criterion and exits
// nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

#ifndef FADIN_CONFIG_DIR
#define FADIN_CONFIG_DIR "configs"
#endif

using namespace fadin;

namespace {

using Clock = std::chrono::steady_clock;

constexpr KernelFamily kFamilies[] = {KernelFamily::TruncatedGaussian, KernelFamily::RaisedCosine,
                                      KernelFamily::TruncatedExponential};

struct Outcome {
  bool pass{false};
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ExperimentSpec load_spec(const std::string& name) {
  ExperimentSpec spec = spec_from_json(io::read_json(std::string(FADIN_CONFIG_DIR) + "/" + name));
  spec.threads = 1;
  return spec;
}

struct Instance {
  HawkesModel model;
  std::vector<std::vector<std::int32_t>> dense;
  DiscretizedCounts z;
  DiscreteGrid grid;
};

Instance random_instance(KernelFamily f, std::size_t p, std::int64_t G, std::int64_t L,
                         double density, Xoshiro256& rng) {
  Instance in;
  const double delta = 0.01;
  in.grid = make_grid(delta, delta * static_cast<double>(G), delta * static_cast<double>(L));
  in.model = oracle::random_model(f, p, in.grid.support, rng);
  in.dense = oracle::random_counts(p, G, density, rng);
  in.z = counts_from_dense(in.dense);
  return in;
}

// 1. Fast l2 loss against the explicit convolution.
Outcome criterion_1() {
  Xoshiro256 rng(101);
  double worst = 0.0;
  int failures = 0;
  const auto t0 = Clock::now();
  for (int n = 0; n < 100; ++n) {
    const KernelFamily f = kFamilies[n % 3];
    const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform(0.0, 3.0));
    const auto G = static_cast<std::int64_t>(rng.uniform(50.0, 2000.0));
    const auto L = static_cast<std::int64_t>(rng.uniform(1.0, 50.0));
    const auto in = random_instance(f, p, G, L, rng.uniform(0.01, 0.3), rng);
    const PrecomputeStrategy strategy = n % 2 == 0 ? PrecomputeStrategy::Dense : PrecomputeStrategy::EventDriven;
    const auto pre = precompute(in.z, in.grid, {strategy, kDefaultMemoryCap});
    const double fast = loss_l2(in.model, pre, in.grid);
    const double slow = oracle::l2_loss(in.model, in.dense, in.grid.delta, in.grid.L);
    const double e = oracle::rel_err(fast, slow, 0.0);
    worst = std::max(worst, e);
    if (!(e <= 1e-10)) ++failures;
  }
  std::ostringstream os;
  os << "100 instances, max relative error " << worst << ", failures " << failures << ", "
     << seconds_since(t0) << " s";
  return {failures == 0, os.str()};
}

// 2. Analytic gradients against central differences of the oracle losses.
Outcome criterion_2() {
  Xoshiro256 rng(202);
  double worst_mu = 0.0, worst_eta = 0.0, worst_ll = 0.0;
  const auto t0 = Clock::now();
  for (auto f : kFamilies) {
    for (int n = 0; n < 50; ++n) {
      const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform(0.0, 2.0));
      const auto in = random_instance(f, p, 300, 20, 0.05, rng);
      const auto pre = precompute(in.z, in.grid);
      HawkesModel work = in.model;
      const auto fd_l2 = oracle::central_diff(
          [&](const std::vector<double>& th) {
            unpack(th, work);
            return oracle::l2_loss(work, in.dense, in.grid.delta, in.grid.L);
          },
          pack(in.model), 1e-6);
      const auto gm = grad_mu(in.model, pre, in.grid);
      for (std::size_t q = 0; q < p; ++q) worst_mu = std::max(worst_mu, oracle::rel_err(gm[q], fd_l2[q]));
      std::size_t pos = p;
      for (const auto& block : grad_eta(in.model, pre, in.grid)) {
        for (double g : block) worst_eta = std::max(worst_eta, oracle::rel_err(g, fd_l2[pos++]));
      }
      const auto gl = grad_ll_discrete(in.model, in.z, in.grid);
      const auto fd_ll = oracle::central_diff(
          [&](const std::vector<double>& th) {
            unpack(th, work);
            return oracle::ll_loss(work, in.dense, in.grid.delta, in.grid.L);
          },
          pack(in.model), 1e-6);
      for (std::size_t q = 0; q < gl.size(); ++q) worst_ll = std::max(worst_ll, oracle::rel_err(gl[q], fd_ll[q]));
    }
  }
  std::ostringstream os;
  os << "150 points, max relative error grad_mu " << worst_mu << ", grad_eta " << worst_eta
     << ", grad_ll " << worst_ll << ", " << seconds_since(t0) << " s";
  return {worst_mu <= 1e-4 && worst_eta <= 1e-4 && worst_ll <= 1e-4, os.str()};
}

std::map<std::pair<double, double>, std::vector<double>> errors_by_cell(const ExperimentResult& r) {
  std::map<std::pair<double, double>, std::vector<double>> out;
  for (const auto& rec : r.runs) out[{rec.horizon, rec.delta}].push_back(rec.l2_error);
  return out;
}

// 3. Error decreases with T and plateaus in delta.
Outcome criterion_3() {
  const auto t0 = Clock::now();
  const ExperimentSpec spec = load_spec("consistency.json");
  const auto cells = errors_by_cell(run_experiment(spec));
  std::ostringstream os;
  os << "median error at delta=0.01:";
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double T : {1e3, 1e4, 1e5}) {
    const double m = median(cells.at({T, 0.01}));
    os << " T=" << T << " " << m;
    if (!(m < prev)) decreasing = false;
    prev = m;
  }
  const double a = median(cells.at({1e5, 0.01}));
  const double b = median(cells.at({1e5, 0.001}));
  const double ratio = std::max(a, b) / std::min(a, b);
  os << "; T=1e5 delta=0.001 " << b << ", ratio " << ratio << "; " << spec.repetitions
     << " reps, " << seconds_since(t0) << " s";
  return {decreasing && ratio < 2.0, os.str()};
}

// 4. Distance to the fine-grid estimate is linear in delta.
Outcome criterion_4() {
  const auto t0 = Clock::now();
  const ExperimentSpec spec = load_spec("prop2_rate.json");
  const auto r = run_experiment(spec);
  std::vector<double> slopes;
  for (const auto& s : r.slopes) slopes.push_back(s.slope);
  const double m = slopes.empty() ? std::numeric_limits<double>::quiet_NaN() : median(slopes);
  std::ostringstream os;
  os << "median log-log slope " << m << " over " << slopes.size() << " reps (q25 "
     << quantile(slopes, 0.25) << ", q75 " << quantile(slopes, 0.75) << "), " << seconds_since(t0)
     << " s";
  return {m >= 0.5 && m <= 1.5, os.str()};
}

// 5. Error plateau and time growth in the fitted support W.
Outcome criterion_5() {
  const auto t0 = Clock::now();
  const ExperimentSpec spec = load_spec("w_sensitivity.json");
  const auto r = run_experiment(spec);
  std::map<double, std::vector<double>> err, time;
  for (const auto& rec : r.runs) {
    err[rec.support].push_back(rec.l2_error);
    time[rec.support].push_back(rec.total_seconds);
  }
  std::ostringstream os;
  bool monotone = true;
  double prev = 0.0;
  for (const auto& [W, v] : time) {
    const double t = median(v);
    os << "W=" << W << " err " << median(err[W]) << " time " << t << "; ";
    if (t < 0.9 * prev) monotone = false;
    prev = std::max(prev, t);
  }
  const double e20 = median(err.at(20.0));
  const double e100 = median(err.at(100.0));
  const double rel = std::abs(e20 - e100) / e100;
  os << "|e20 - e100| / e100 = " << rel << ", " << seconds_since(t0) << " s";
  return {rel <= 0.2 && monotone, os.str()};
}

// 6. Gradient cost independent of N_T, precompute linear in G.
Outcome criterion_6() {
  const auto t0 = Clock::now();
  const HawkesModel truth =
      uniform_model({0.3, 0.3}, KernelSpec::truncated_gaussian(0.3, 0.5, 0.3, 1.0));
  const double delta = 0.01;
  auto best_of = [](int repeats, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
      const auto s = Clock::now();
      fn();
      best = std::min(best, seconds_since(s));
    }
    return best;
  };
  auto gradient_time = [&](double T) {
    const auto ev = simulate(truth, T, derive_seed(606, static_cast<std::uint64_t>(T)));
    const auto grid = make_grid(delta, T, 1.0);
    const auto pre = precompute(project(ev, grid), grid);
    volatile double sink = 0.0;
    constexpr int inner = 200;
    return best_of(15, [&] {
             for (int k = 0; k < inner; ++k) sink = loss_and_grad_l2(truth, pre, grid).grad[2];
           }) /
           inner;
  };
  auto precompute_time = [&](double T) {
    const auto ev = simulate(truth, T, derive_seed(607, static_cast<std::uint64_t>(T)));
    const auto grid = make_grid(delta, T, 1.0);
    const auto z = project(ev, grid);
    volatile double sink = 0.0;
    return best_of(15, [&] {
      sink = precompute(z, grid, {PrecomputeStrategy::Dense, kDefaultMemoryCap}).psi[0];
    });
  };
  const double g_small = gradient_time(1e3);
  const double g_large = gradient_time(1e5);
  const double p_small = precompute_time(100.0);   // G = 1e4
  const double p_large = precompute_time(1000.0);  // G = 1e5
  const double g_ratio = g_large / g_small;
  const double p_ratio = p_large / p_small;
  std::ostringstream os;
  os << "gradient " << g_small << " s (T=1e3) vs " << g_large << " s (T=1e5), ratio " << g_ratio
     << "; dense precompute G=1e4 " << p_small << " s, G=1e5 " << p_large << " s, ratio "
     << p_ratio << "; " << seconds_since(t0) << " s";
  return {g_ratio <= 2.0 && p_ratio >= 8.0 && p_ratio <= 12.0, os.str()};
}

// 7. l2 against the discrete log-likelihood at equal iteration count.
Outcome criterion_7() {
  const auto t0 = Clock::now();
  const ExperimentSpec spec = load_spec("l2_vs_ll.json");
  const auto r = run_experiment(spec);
  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> cells;
  for (const auto& rec : r.runs) cells[{rec.family, rec.method}].push_back(&rec);
  bool pass = true;
  std::ostringstream os;
  for (auto f : kFamilies) {
    const std::string name(family_name(f));
    const auto& l2 = cells[{name, "l2"}];
    const auto& ll = cells[{name, "log_likelihood"}];
    if (l2.empty() || l2.size() != ll.size()) {
      pass = false;
      os << name << " missing runs; ";
      continue;
    }
    std::vector<double> e2, el, t2, tl, i2, il;
    bool same_iterations = true;
    for (std::size_t k = 0; k < l2.size(); ++k) {
      e2.push_back(l2[k]->l2_error);
      el.push_back(ll[k]->l2_error);
      t2.push_back(l2[k]->total_seconds);
      tl.push_back(ll[k]->total_seconds);
      i2.push_back(l2[k]->intensity_l1);
      il.push_back(ll[k]->intensity_l1);
      if (l2[k]->iterations != ll[k]->iterations) same_iterations = false;
    }
    const double ratio = median(tl) / median(t2);
    const double a25 = quantile(e2, 0.25), a75 = quantile(e2, 0.75);
    const double b25 = quantile(el, 0.25), b75 = quantile(el, 0.75);
    const bool overlap = a25 <= b75 && b25 <= a75;
    const bool ok = ratio >= 10.0 && overlap && same_iterations;
    pass = pass && ok;
    os << name << ": time ratio " << ratio << ", l2 IQR [" << a25 << ", " << a75 << "], ll IQR ["
       << b25 << ", " << b75 << "], intensity l1 IQR l2 [" << quantile(i2, 0.25) << ", "
       << quantile(i2, 0.75) << "] ll [" << quantile(il, 0.25) << ", " << quantile(il, 0.75) << "]"
       << (same_iterations ? "" : ", iteration counts differ") << "; ";
  }
  os << spec.repetitions << " reps, " << seconds_since(t0) << " s";
  return {pass, os.str()};
}

// Kernel primitive K(u) = int_0^min(u, W) phi, closed forms.
double kernel_primitive(const KernelSpec& k, double u) {
  if (u <= 0.0) return 0.0;
  u = std::min(u, k.support);
  const auto& q = k.params;
  if (k.family == KernelFamily::TruncatedExponential) {
    return q[0] * (1.0 - std::exp(-q[1] * u)) / (1.0 - std::exp(-q[1] * k.support));
  }
  const double lo = oracle::norm_cdf(-q[1] / q[2]);
  const double z = oracle::norm_cdf((k.support - q[1]) / q[2]) - lo;
  return q[0] * (oracle::norm_cdf((u - q[1]) / q[2]) - lo) / z;
}

// Asymptotic Kolmogorov p-value for statistic D on n samples.
double ks_pvalue(double D, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * D;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    sum += (k % 2 == 1 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(sum, 0.0, 1.0);
}

// Time-rescaled inter-event compensator increments of a univariate process.
std::pair<double, std::size_t> time_rescaling_ks(const HawkesModel& m, double T, std::uint64_t seed) {
  const auto ev = simulate(m, T, seed);
  const auto& t = ev.times[0];
  const KernelSpec& k = m.kernel(0, 0);
  std::vector<double> u;
  double prev = 0.0;
  std::size_t first = 0;
  for (std::size_t n = 0; n < t.size(); ++n) {
    double inc = m.baseline[0] * (t[n] - prev);
    while (first < n && t[first] < prev - k.support) ++first;
    for (std::size_t j = first; j < n; ++j) {
      inc += kernel_primitive(k, t[n] - t[j]) - kernel_primitive(k, prev - t[j]);
    }
    u.push_back(1.0 - std::exp(-inc));
    prev = t[n];
  }
  std::sort(u.begin(), u.end());
  double D = 0.0;
  const auto n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    D = std::max({D, static_cast<double>(i + 1) / n - u[i], u[i] - static_cast<double>(i) / n});
  }
  return {ks_pvalue(D, u.size()), u.size()};
}

// 8. Simulator sanity.
Outcome criterion_8() {
  const auto t0 = Clock::now();
  std::ostringstream os;

  // Poisson: 20 seeds, mean count against mu T with sd sqrt(mu T / 20).
  const double mu = 2.0, T = 1000.0;
  const HawkesModel poisson = uniform_model({mu}, KernelSpec::truncated_exponential(0.0, 1.0, 1.0));
  double mean = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) mean += static_cast<double>(simulate(poisson, T, derive_seed(808, s)).total());
  mean /= 20.0;
  const double sd = std::sqrt(mu * T / 20.0);
  const bool poisson_ok = std::abs(mean - mu * T) <= 3.0 * sd;
  os << "poisson mean " << mean << " (expected " << mu * T << " +- " << 3.0 * sd << "); ";

  // Stationary rate mu / (1 - alpha).
  const HawkesModel te = uniform_model({1.1}, KernelSpec::truncated_exponential(0.8, 0.5, 100.0));
  const double horizon = 20000.0;
  const double rate = static_cast<double>(simulate(te, horizon, 809).total()) / horizon;
  const bool rate_ok = std::abs(rate - 5.5) <= 0.1 * 5.5;
  os << "TE rate " << rate << " (expected 5.5); ";

  bool ks_ok = true;
  const std::vector<std::pair<std::string, HawkesModel>> models = {
      {"TG", uniform_model({0.5}, KernelSpec::truncated_gaussian(0.8, 0.5, 0.3, 1.0))},
      {"TE", uniform_model({1.1}, KernelSpec::truncated_exponential(0.8, 0.5, 100.0))}};
  for (const auto& [name, model] : models) {
    const auto [pvalue, n] = time_rescaling_ks(model, 1000.0, 810);
    ks_ok = ks_ok && n >= 500 && pvalue > 0.01;
    os << "KS " << name << " p=" << pvalue << " on " << n << " events; ";
  }
  os << seconds_since(t0) << " s";
  return {poisson_ok && rate_ok && ks_ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion_1, criterion_2, criterion_3,
                                                          criterion_4, criterion_5, criterion_6,
                                                          criterion_7, criterion_8};
  std::vector<int> selected;
  const std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "all") {
    for (int k = 1; k <= 8; ++k) selected.push_back(k);
  } else {
    const int k = std::atoi(arg.c_str());
    if (k < 1 || k > 8) {
      std::cerr << "usage: fadin_acceptance <1..8|all>\n";
      return 2;
    }
    selected.push_back(k);
  }
  bool all_pass = true;
  for (int k : selected) {
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
