#pragma once

// Experiment commands behind the CLI. Each command takes a HarnessConfig,
// computes its rows (trials fan out over parallel_map with per-trial derived
// seeds), and writes <out>/<command>.csv plus a JSON mirror and a plotting
// stub. Config errors are std::domain_error; the CLI maps them to exit 1.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmlab/algorithm.hpp"
#include "kmlab/concentration.hpp"
#include "kmlab/dynamics.hpp"
#include "kmlab/io.hpp"
#include "kmlab/lower_bound.hpp"
#include "kmlab/mixture.hpp"
#include "kmlab/parallel.hpp"

namespace kmlab {

enum class ExperimentKind { Predict, Simulate, Compare, SweepSamples, LowerBound, Packing };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Predict: return "predict";
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Compare: return "compare";
    case ExperimentKind::SweepSamples: return "sweep-samples";
    case ExperimentKind::LowerBound: return "lower-bound";
    case ExperimentKind::Packing: return "packing";
  }
  return "?";
}

inline InitStrategy parse_init(const std::string& s) {
  if (s == "random_unit") return InitStrategy::RandomUnit;
  if (s == "random_sample") return InitStrategy::RandomSample;
  if (s == "explicit") return InitStrategy::Explicit;
  throw std::domain_error("init: expected random_unit, random_sample or explicit, got '" + s + "'");
}

inline std::string_view to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::RandomUnit: return "random_unit";
    case InitStrategy::RandomSample: return "random_sample";
    case InitStrategy::Explicit: return "explicit";
  }
  return "?";
}

struct HarnessConfig {
  ExperimentKind kind = ExperimentKind::Predict;

  // Model: a JSON model file, or a symmetric unit-variance pair.
  std::string model_file;
  double mu = 1.0;
  std::int64_t dim = 16;

  // Algorithm / dynamics.
  std::int64_t iterations = 10;
  std::int64_t n = 200000;     // total samples per trial
  std::string init = "random_unit";
  double cos2_0 = 0.0;         // > 0: start every trial at this angle (k = 2)
  double eps = 0.1;
  double c0 = 1.0;
  double tolerance = 0.02;     // compare: per-round pass threshold
  double delta = 0.05;
  std::string samples_file;    // simulate: run on a binary sample file instead

  // Sweeps.
  std::vector<std::int64_t> dims;
  std::vector<double> mus;
  double confidence = 0.9;
  double growth_fraction = 0.5;  // target growth = 1 + fraction (g_inf - 1)
  std::int64_t n_min = 16;
  std::int64_t n_max = std::int64_t{1} << 22;

  // Packing.
  std::int64_t K = 100;

  int trials = 20;
  std::uint64_t seed = 1;
  std::string out = "out";
  unsigned workers = 0;  // 0: all processors; never affects results
};

/// Canonical description used for the config hash (excludes out/workers,
/// which cannot change any value).
inline nlohmann::json config_to_json(const HarnessConfig& c) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(c.kind));
  j["model_file"] = c.model_file;
  if (!c.model_file.empty()) j["model"] = nlohmann::json::parse(read_file(c.model_file));
  j["mu"] = c.mu;
  j["dim"] = c.dim;
  j["iterations"] = c.iterations;
  j["n"] = c.n;
  j["init"] = c.init;
  j["cos2_0"] = c.cos2_0;
  j["eps"] = c.eps;
  j["c0"] = c.c0;
  j["tolerance"] = c.tolerance;
  j["delta"] = c.delta;
  j["samples_file"] = c.samples_file;
  j["dims"] = c.dims;
  j["mus"] = c.mus;
  j["confidence"] = c.confidence;
  j["growth_fraction"] = c.growth_fraction;
  j["n_min"] = c.n_min;
  j["n_max"] = c.n_max;
  j["K"] = c.K;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  return j;
}

inline std::string config_hash(const HarnessConfig& c) { return hex64(fnv1a64(config_to_json(c).dump())); }

inline MixtureModel build_model(const HarnessConfig& c) {
  if (!c.model_file.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(c.model_file));
    } catch (const nlohmann::json::exception& e) {
      throw std::domain_error("model_file: " + std::string(e.what()));
    } catch (const std::runtime_error& e) {
      throw std::domain_error("model_file: " + std::string(e.what()));
    }
    MixtureModel m = model_from_json(j);
    require_valid(m);
    return m;
  }
  if (!(c.mu > 0.0)) throw std::domain_error("mu must be > 0");
  if (c.dim < 2) throw std::domain_error("dim must be >= 2");
  return symmetric_pair(c.mu, static_cast<std::size_t>(c.dim));
}

inline void check_common(const HarnessConfig& c) {
  if (c.trials < 1) throw std::domain_error("trials must be >= 1");
  if (c.out.empty()) throw std::domain_error("out must name a directory");
}

namespace detail {

inline Metadata make_meta(const HarnessConfig& c) {
  Metadata m;
  m.config_hash = config_hash(c);
  m.seed = c.seed;
  m.extra.push_back({"command", std::string(to_string(c.kind))});
  return m;
}

inline std::filesystem::path stem_for(const HarnessConfig& c) {
  return std::filesystem::path(c.out) / std::string(to_string(c.kind));
}

inline void write_plot_stub(const HarnessConfig& c, const std::string& x, const std::vector<std::string>& ys) {
  std::string py = "# Plot " + std::string(to_string(c.kind)) + ".csv (generated by kmlab; edit freely).\n";
  py += "import sys\nimport pandas as pd\nimport matplotlib.pyplot as plt\n\n";
  py += "df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else '" + std::string(to_string(c.kind)) +
        ".csv', comment='#')\n";
  py += "fig, ax = plt.subplots()\n";
  for (const auto& y : ys) py += "ax.plot(df['" + x + "'], df['" + y + "'], marker='.', label='" + y + "')\n";
  py += "ax.set_xlabel('" + x + "')\nax.legend()\nfig.savefig('" + std::string(to_string(c.kind)) + ".png', dpi=150)\n";
  std::filesystem::path p = std::filesystem::path(c.out) / ("plot_" + std::string(to_string(c.kind)) + ".py");
  atomic_write(p, py);
}

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Ordinary least squares y = a + b x; returns (slope, r^2).
inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::domain_error("linear_fit needs >= 2 points");
  const double mx = detail::mean_of(x), my = detail::mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double b = sxy / sxx;
  const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return {b, r2};
}

// ---------------------------------------------------------------------------
// predict

struct PredictResult {
  Trajectory trajectory;
  std::optional<std::int64_t> predicted_iterations;
};

inline PredictResult run_predict(const HarnessConfig& c) {
  const MixtureModel m = build_model(c);
  if (c.iterations < 1) throw std::domain_error("iterations must be >= 1");
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw std::domain_error("eps must lie in (0,1)");
  Vec u0;
  double cos2_0 = c.cos2_0;
  if (m.k() == 2) {
    if (cos2_0 <= 0.0) cos2_0 = 1.0 / static_cast<double>(m.dim());
    if (cos2_0 > 1.0) throw std::domain_error("cos2_0 must lie in (0,1]");
    u0 = direction_from_cos2(m, cos2_0);
  } else {
    AlgoConfig a;
    a.seed = c.seed;
    u0 = init_vector(a, m);
  }
  PredictResult r;
  r.trajectory = exact_trajectory(m, u0, c.iterations, 1.0 - c.eps);
  const auto s = separation_summary(m);
  if (s.bold_mu && std::abs(m[0].sigma - 1.0) <= 1e-12 && m.k() == 2) {
    r.predicted_iterations = predict_convergence_time(m, cos2_0, c.eps, c.c0);
  }
  return r;
}

inline int cmd_predict(const HarnessConfig& c) {
  check_common(c);
  const PredictResult r = run_predict(c);
  Metadata meta = detail::make_meta(c);
  meta.extra.push_back({"predicted_iterations",
                        r.predicted_iterations ? std::to_string(*r.predicted_iterations) : std::string("n/a")});
  write_table(detail::stem_for(c), trajectory_table(r.trajectory), meta);
  detail::write_plot_stub(c, "t", {"cos2"});
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

inline Table run_simulate(const HarnessConfig& c) {
  AlgoConfig a;
  a.iterations = c.iterations;
  a.init = parse_init(c.init);
  a.seed = c.seed;
  Table t{{"trial", "t", "cos2", "growth_factor", "regime", "samples", "error"}, {}};
  if (!c.samples_file.empty()) {
    // One run on the file; cos^2 is measured against the model's means.
    const MixtureModel m = build_model(c);
    const SampleSet s = read_samples(c.samples_file);
    if (s.dim != m.dim()) throw std::domain_error("samples_file dimension does not match the model");
    if (a.init == InitStrategy::Explicit) throw std::domain_error("init = explicit is not available from the CLI");
    const InitChoice init = init_vector(a, s);
    const auto res = two_means_iterate(s, a.iterations, init.u, c.seed, TieRule::ToComplement, init.held_out);
    const MeanSubspace sub = mean_subspace(m);
    double prev = cos2_to_subspace(sub, init.u);
    t.add({"0", "0", fmt_double(prev), "1", std::string(to_string(regime_classify(m, direction_state(m, init.u)))),
           "0", ""});
    for (const auto& r : res.rounds) {
      const double c2 = cos2_to_subspace(sub, r.u);
      t.add({"0", std::to_string(r.t), fmt_double(c2), fmt_double(prev > 0 ? c2 / prev : 1.0),
             std::string(to_string(regime_classify(m, direction_state(m, r.u)))), std::to_string(r.batch_size), ""});
      prev = c2;
    }
    return t;
  }
  const MixtureModel m = build_model(c);
  if (a.init == InitStrategy::Explicit) throw std::domain_error("init = explicit is not available from the CLI");
  struct Out {
    std::optional<Trajectory> tr;
    std::string error;
  };
  const auto outs = parallel_map(static_cast<std::size_t>(c.trials), c.workers, [&](std::size_t i) {
    Out o;
    try {
      o.tr = run_trial(m, c.n, a, i);
    } catch (const EmptyClusterError& e) {
      o.error = e.what();
    }
    return o;
  });
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (!outs[i].tr) {
      t.add({std::to_string(i), "", "", "", "", "", outs[i].error});
      continue;
    }
    for (const auto& r : outs[i].tr->records) {
      t.add({std::to_string(i), std::to_string(r.t), fmt_double(r.cos2), fmt_double(r.growth_factor),
             std::string(to_string(r.regime)), std::to_string(r.samples), ""});
    }
  }
  return t;
}

inline int cmd_simulate(const HarnessConfig& c) {
  check_common(c);
  write_table(detail::stem_for(c), run_simulate(c), detail::make_meta(c));
  detail::write_plot_stub(c, "t", {"cos2"});
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareRound {
  std::int64_t t = 0;
  double emp_mean = 0, emp_std = 0;
  double recurrence = 0;        // mean over trials of the exact trajectory from each trial's u0
  double one_step = 0;          // mean of the exact map applied to each trial's previous empirical u
  double mean_abs_dev = 0;      // mean |emp - recurrence| over trials
  double within_tol = 0;        // fraction of trials with |emp - recurrence| <= tolerance
  double keysample_lower = std::nan("");  // k = 2 only
  double above_lower = std::nan("");      // fraction of trials at or above the lower bound
  int trials_ok = 0;
  bool pass = false;
};

struct CompareResult {
  std::vector<CompareRound> rounds;
  std::vector<std::string> errors;  // one entry per failed trial
  double cells_within = 0;          // fraction of (round, trial) cells within tolerance
};

inline CompareResult run_compare(const HarnessConfig& c) {
  const MixtureModel m = build_model(c);
  AlgoConfig a;
  a.iterations = c.iterations;
  a.init = parse_init(c.init);
  a.seed = c.seed;
  if (a.init == InitStrategy::Explicit) throw std::domain_error("init = explicit is not available from the CLI");
  if (c.cos2_0 > 0.0) {
    if (m.k() != 2 || c.cos2_0 > 1.0) throw std::domain_error("cos2_0 needs a 2-component model and a value in (0,1]");
    a.init = InitStrategy::Explicit;
    a.explicit_u = direction_from_cos2(m, c.cos2_0);
  }
  const std::int64_t batch = c.n / std::max<std::int64_t>(c.iterations, 1);
  struct Out {
    std::vector<double> emp, open, one, lower;
    std::string error;
  };
  const auto outs = parallel_map(static_cast<std::size_t>(c.trials), c.workers, [&](std::size_t i) {
    Out o;
    try {
      const TrialResult r = run_trial_detailed(m, c.n, a, i);
      const Trajectory ex = exact_trajectory(m, r.u0, c.iterations);
      Vec u = r.u0;
      for (std::int64_t t = 1; t <= c.iterations; ++t) {
        o.emp.push_back(r.trajectory.records[static_cast<std::size_t>(t)].cos2);
        o.open.push_back(ex.records[static_cast<std::size_t>(t)].cos2);
        o.one.push_back(recurrence_step_k(m, u).cos2_next);
        if (m.k() == 2 && batch >= 2) {
          // The bound is stated for u on the mu^1 side; flip orientation if needed.
          Vec uo = u;
          if (dot(uo, m[0].mean) < 0) uo = scaled(uo, -1.0);
          o.lower.push_back(cos2_progress_lower_bound(m, uo, batch, c.delta));
        }
        u = r.rounds[static_cast<std::size_t>(t - 1)].u;
      }
    } catch (const EmptyClusterError& e) {
      o = Out{};
      o.error = "trial " + std::to_string(i) + ": " + e.what();
    }
    return o;
  });
  CompareResult res;
  std::size_t cells = 0, within = 0;
  for (const Out& o : outs) {
    if (!o.error.empty()) res.errors.push_back(o.error);
  }
  for (std::int64_t t = 0; t < c.iterations; ++t) {
    CompareRound cr;
    cr.t = t + 1;
    std::vector<double> emp, open, one, lower, dev;
    int above = 0;
    for (const Out& o : outs) {
      if (!o.error.empty()) continue;
      const auto k = static_cast<std::size_t>(t);
      emp.push_back(o.emp[k]);
      open.push_back(o.open[k]);
      one.push_back(o.one[k]);
      dev.push_back(std::abs(o.emp[k] - o.open[k]));
      ++cells;
      within += dev.back() <= c.tolerance;
      if (!o.lower.empty()) {
        lower.push_back(o.lower[k]);
        above += o.emp[k] >= o.lower[k];
      }
    }
    cr.trials_ok = static_cast<int>(emp.size());
    if (!emp.empty()) {
      cr.emp_mean = detail::mean_of(emp);
      cr.emp_std = detail::std_of(emp);
      cr.recurrence = detail::mean_of(open);
      cr.one_step = detail::mean_of(one);
      cr.mean_abs_dev = detail::mean_of(dev);
      cr.within_tol = static_cast<double>(std::count_if(dev.begin(), dev.end(), [&](double x) { return x <= c.tolerance; })) /
                      static_cast<double>(dev.size());
      if (!lower.empty()) {
        cr.keysample_lower = detail::mean_of(lower);
        cr.above_lower = static_cast<double>(above) / static_cast<double>(lower.size());
      }
      cr.pass = cr.mean_abs_dev <= c.tolerance;
    }
    res.rounds.push_back(cr);
  }
  res.cells_within = cells ? static_cast<double>(within) / static_cast<double>(cells) : 0.0;
  return res;
}

inline int cmd_compare(const HarnessConfig& c) {
  check_common(c);
  const CompareResult r = run_compare(c);
  Table t{{"t", "emp_mean", "emp_std", "recurrence", "one_step", "mean_abs_dev", "within_tol", "keysample_lower",
           "above_lower", "trials_ok", "pass"},
          {}};
  bool all = r.errors.empty();
  for (const auto& x : r.rounds) {
    t.add({std::to_string(x.t), fmt_double(x.emp_mean), fmt_double(x.emp_std), fmt_double(x.recurrence),
           fmt_double(x.one_step), fmt_double(x.mean_abs_dev), fmt_double(x.within_tol),
           std::isnan(x.keysample_lower) ? "" : fmt_double(x.keysample_lower),
           std::isnan(x.above_lower) ? "" : fmt_double(x.above_lower), std::to_string(x.trials_ok),
           x.pass ? "1" : "0"});
    all = all && x.pass;
  }
  Metadata meta = detail::make_meta(c);
  meta.extra.push_back({"cells_within_tolerance", fmt_double(r.cells_within)});
  meta.extra.push_back({"failed_trials", std::to_string(r.errors.size())});
  for (const auto& e : r.errors) meta.extra.push_back({"trial_error", e});
  write_table(detail::stem_for(c), t, meta);
  detail::write_plot_stub(c, "t", {"emp_mean", "recurrence", "keysample_lower"});
  return all ? 0 : 2;
}

// ---------------------------------------------------------------------------
// sweep-samples

struct SweepCell {
  std::int64_t d = 0;
  double mu = 0;
  double cos2_0 = 0;
  double target_growth = 0;
  MinSampleResult result;
  std::uint64_t required = 0;
  Regime regime = Regime::SmallMu;
};

/// One cell: symmetric pair (mu, d), cos^2 theta_0 = 1/d, target growth
/// 1 + fraction (g_inf - 1) with g_inf the exact one-round growth.
inline SweepCell sweep_cell(double mu, std::int64_t d, const HarnessConfig& c, std::uint64_t seed) {
  const MixtureModel m = symmetric_pair(mu, static_cast<std::size_t>(d));
  SweepCell s;
  s.d = d;
  s.mu = mu;
  s.cos2_0 = 1.0 / static_cast<double>(d);
  const double g_inf = recurrence_step_cos2(m, s.cos2_0) / s.cos2_0;
  s.target_growth = 1.0 + c.growth_fraction * (g_inf - 1.0);
  SampleGrid grid;
  grid.n_min = c.n_min;
  grid.n_max = c.n_max;
  s.result = empirical_min_samples(m, s.cos2_0, s.target_growth, c.trials, c.confidence, seed, grid);
  s.regime = regime_classify(m, s.cos2_0);
  s.required = required_samples(m, s.cos2_0, c.delta, s.regime);
  return s;
}

/// Per-cell stream, keyed by the cell itself so that a cell's result does not
/// depend on which other cells share the sweep.
inline std::uint64_t sweep_cell_seed(std::uint64_t root, double mu, std::int64_t d) {
  return derive_seed(root, {std::bit_cast<std::uint64_t>(mu), static_cast<std::uint64_t>(d)});
}

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<std::pair<double, double>> slope_in_d;   // (mu, slope) over the d grid
  std::vector<std::pair<std::int64_t, double>> slope_in_mu;  // (d, slope) over the mu grid
};

inline SweepResult run_sweep(const HarnessConfig& c) {
  if (c.dims.empty() || c.mus.empty()) throw std::domain_error("sweep-samples needs non-empty dims and mus");
  for (auto d : c.dims) {
    if (d < 2) throw std::domain_error("dims entries must be >= 2");
  }
  for (double mu : c.mus) {
    if (!(mu > 0.0)) throw std::domain_error("mus entries must be > 0");
  }
  std::vector<std::pair<double, std::int64_t>> jobs;
  for (double mu : c.mus) {
    for (auto d : c.dims) jobs.push_back({mu, d});
  }
  SweepResult r;
  r.cells = parallel_map(jobs.size(), c.workers, [&](std::size_t i) {
    return sweep_cell(jobs[i].first, jobs[i].second, c, sweep_cell_seed(c.seed, jobs[i].first, jobs[i].second));
  });
  auto fit = [&](auto pick, auto key) {
    std::vector<double> x, y;
    for (const auto& s : r.cells) {
      if (pick(s) && s.result.resolved) {
        x.push_back(std::log(key(s)));
        y.push_back(std::log(static_cast<double>(s.result.n_threshold)));
      }
    }
    return x.size() >= 2 ? linear_fit(x, y).first : std::nan("");
  };
  if (c.dims.size() >= 2) {
    for (double mu : c.mus) {
      r.slope_in_d.push_back(
          {mu, fit([&](const SweepCell& s) { return s.mu == mu; }, [](const SweepCell& s) { return double(s.d); })});
    }
  }
  if (c.mus.size() >= 2) {
    for (auto d : c.dims) {
      r.slope_in_mu.push_back({d, fit([&](const SweepCell& s) { return s.d == d; }, [](const SweepCell& s) { return s.mu; })});
    }
  }
  return r;
}

inline int cmd_sweep_samples(const HarnessConfig& c) {
  check_common(c);
  const SweepResult r = run_sweep(c);
  Table t{{"d", "mu", "cos2_0", "target_growth", "n_threshold", "resolved", "confidence", "trials", "regime",
           "required_samples"},
          {}};
  for (const auto& s : r.cells) {
    t.add({std::to_string(s.d), fmt_double(s.mu), fmt_double(s.cos2_0), fmt_double(s.target_growth),
           s.result.resolved ? std::to_string(s.result.n_threshold) : "unresolved", s.result.resolved ? "1" : "0",
           fmt_double(c.confidence), std::to_string(c.trials), std::string(to_string(s.regime)),
           s.required == kInfiniteSamples ? "inf" : std::to_string(s.required)});
  }
  Metadata meta = detail::make_meta(c);
  for (const auto& [mu, sl] : r.slope_in_d) meta.extra.push_back({"slope_in_d[mu=" + fmt_double(mu) + "]", fmt_double(sl)});
  for (const auto& [d, sl] : r.slope_in_mu) meta.extra.push_back({"slope_in_mu[d=" + std::to_string(d) + "]", fmt_double(sl)});
  write_table(detail::stem_for(c), t, meta);
  detail::write_plot_stub(c, "d", {"n_threshold", "required_samples"});
  return 0;
}

// ---------------------------------------------------------------------------
// lower-bound

inline Table run_lower_bound(const HarnessConfig& c) {
  std::vector<std::int64_t> dims = c.dims.empty() ? std::vector<std::int64_t>{c.dim} : c.dims;
  std::vector<double> mus = c.mus.empty() ? std::vector<double>{c.mu} : c.mus;
  Table t{{"d", "mu", "alpha", "beta", "r", "n_star", "n_threshold", "risk_floor", "n", "fano_bound"}, {}};
  for (auto d : dims) {
    for (double mu : mus) {
      MinimaxThreshold mt;
      try {
        mt = minimax_threshold(static_cast<std::size_t>(d), mu);
      } catch (const std::domain_error& e) {
        throw std::domain_error("lower-bound at d=" + std::to_string(d) + ", mu=" + fmt_double(mu) + ": " + e.what());
      }
      // Bound curve over n in [0, 2 n_star], 21 points.
      for (int i = 0; i <= 20; ++i) {
        const double n = mt.n_star * i / 10.0;
        t.add({std::to_string(d), fmt_double(mu), fmt_double(mt.alpha), fmt_double(mt.beta), fmt_double(mt.r),
               fmt_double(mt.n_star), std::to_string(mt.n_threshold), fmt_double(mt.risk_floor), fmt_double(n),
               fmt_double(fano_bound({mt.alpha, mt.beta, mt.r, n}))});
      }
    }
  }
  return t;
}

inline int cmd_lower_bound(const HarnessConfig& c) {
  check_common(c);
  write_table(detail::stem_for(c), run_lower_bound(c), detail::make_meta(c));
  detail::write_plot_stub(c, "n", {"fano_bound"});
  return 0;
}

// ---------------------------------------------------------------------------
// packing

struct PackingRun {
  std::uint64_t seed = 0;
  double min_pairwise = 0, max_norm_sq = 0;
  std::size_t pair_violations = 0, norm_violations = 0;
  bool passed = false;
};

inline std::vector<PackingRun> run_packing(const HarnessConfig& c) {
  if (c.dim < 10) throw std::domain_error("packing needs dim >= 10");
  if (c.K < 2) throw std::domain_error("packing needs K >= 2");
  return parallel_map(static_cast<std::size_t>(c.trials), c.workers, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(c.seed, {static_cast<std::uint64_t>(i)});
    const PackingCodebook cb = generate_packing(static_cast<std::size_t>(c.dim), static_cast<std::size_t>(c.K), s);
    const PackingReport rep = verify_packing(cb);
    return PackingRun{s, cb.min_pairwise, cb.max_norm_sq, rep.pair_violations.size(), rep.norm_violations.size(),
                      rep.passed};
  });
}

inline int cmd_packing(const HarnessConfig& c) {
  check_common(c);
  const auto runs = run_packing(c);
  Table t{{"trial", "codebook_seed", "min_pairwise", "max_norm_sq", "pair_violations", "norm_violations", "passed"}, {}};
  std::size_t failures = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    failures += !r.passed;
    t.add({std::to_string(i), std::to_string(r.seed), fmt_double(r.min_pairwise), fmt_double(r.max_norm_sq),
           std::to_string(r.pair_violations), std::to_string(r.norm_violations), r.passed ? "1" : "0"});
  }
  Metadata meta = detail::make_meta(c);
  meta.extra.push_back({"failures", std::to_string(failures)});
  meta.extra.push_back({"failure_bound_per_codebook",
                        fmt_double(packing_failure_bound(static_cast<std::size_t>(c.dim), static_cast<std::size_t>(c.K)))});
  write_table(detail::stem_for(c), t, meta);
  detail::write_plot_stub(c, "trial", {"min_pairwise", "max_norm_sq"});
  return failures <= 1 ? 0 : 2;
}

inline int run_command(const HarnessConfig& c) {
  switch (c.kind) {
    case ExperimentKind::Predict: return cmd_predict(c);
    case ExperimentKind::Simulate: return cmd_simulate(c);
    case ExperimentKind::Compare: return cmd_compare(c);
    case ExperimentKind::SweepSamples: return cmd_sweep_samples(c);
    case ExperimentKind::LowerBound: return cmd_lower_bound(c);
    case ExperimentKind::Packing: return cmd_packing(c);
  }
  return 1;
}

}  // namespace kmlab
