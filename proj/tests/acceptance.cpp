// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run all criteria
//   acceptance --criterion N   run criterion N only (exit 1 if it fails)
//
// Tolerances and seeds are fixed here and nowhere else.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kmlab/harness.hpp"

using namespace kmlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

// 1. Empirical rounds track the exact recurrence.
Outcome criterion_1() {
  constexpr double kTol = 0.02;
  constexpr double kCellFraction = 0.9;
  HarnessConfig c;
  c.kind = ExperimentKind::Compare;
  c.mu = 1.0;
  c.dim = 16;
  c.iterations = 10;
  c.n = 2'000'000;  // 2e5 per round
  c.trials = 20;
  c.seed = 2024;
  c.tolerance = kTol;
  const CompareResult r = run_compare(c);
  double worst = 0, worst_one = 0;
  bool ok = r.errors.empty();
  for (const auto& x : r.rounds) {
    worst = std::max(worst, x.mean_abs_dev);
    worst_one = std::max(worst_one, std::abs(x.emp_mean - x.one_step));
    ok = ok && x.pass && x.trials_ok == c.trials;
  }
  ok = ok && r.cells_within >= kCellFraction;
  return {ok, "max per-round mean |emp - recurrence| = " + f(worst) + " (tol " + f(kTol) + "), cells within tol = " +
                  f(r.cells_within) + ", max |mean emp - one-step map| = " + f(worst_one) +
                  ", failed trials = " + std::to_string(r.errors.size())};
}

MixtureModel random_model(std::size_t k, std::size_t d, Engine& eng) {
  std::uniform_real_distribution<double> uw(0.2, 1.0), us(0.5, 1.5), scale(0.3, 2.5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Component> cs(k);
  double wsum = 0;
  const double sc = scale(eng);
  for (auto& c : cs) {
    c.mean.resize(d);
    for (double& x : c.mean) x = sc * g(eng);
    c.sigma = us(eng);
    c.weight = uw(eng);
    wsum += c.weight;
  }
  for (auto& c : cs) c.weight /= wsum;
  return recenter(MixtureModel(cs));
}

Vec random_unit(std::size_t d, Engine& eng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec u(d);
  for (double& x : u) x = g(eng);
  return normalized(u);
}

// 2. Expected center against Monte Carlo halfspace means.
Outcome criterion_2() {
  constexpr int kCases = 50, kRequired = 48;
  constexpr std::size_t kSamples = 10'000'000;
  constexpr double kSe = 4.0;
  struct Case {
    bool ok;
    double worst_z;
  };
  const auto cases = parallel_map(kCases, 0, [&](std::size_t i) {
    Engine eng = make_engine(31337, {i});
    const std::size_t k = 2 + i % 3;
    const std::size_t d = std::uniform_int_distribution<std::size_t>(k, 10)(eng);
    const MixtureModel m = random_model(k, d, eng);
    const Vec u = random_unit(d, eng);
    const Vec e = expected_center(m, direction_state(m, u));
    Vec sum(d, 0.0), sq(d, 0.0);
    std::size_t cnt = 0;
    Engine draw = make_engine(31337, {i, 1});
    for_each_sample(m, kSamples, draw, [&](std::span<const double> x, std::uint32_t) {
      if (dot(x, u) > 0.0) {
        ++cnt;
        for (std::size_t q = 0; q < d; ++q) {
          sum[q] += x[q];
          sq[q] += x[q] * x[q];
        }
      }
    });
    double worst = 0;
    for (std::size_t q = 0; q < d; ++q) {
      const double mean = sum[q] / static_cast<double>(cnt);
      const double var = sq[q] / static_cast<double>(cnt) - mean * mean;
      const double se = std::sqrt(var / static_cast<double>(cnt));
      worst = std::max(worst, std::abs(mean - e[q]) / se);
    }
    return Case{worst <= kSe, worst};
  });
  int good = 0;
  double worst = 0;
  for (const auto& c : cases) {
    good += c.ok;
    worst = std::max(worst, c.worst_z);
  }
  return {good >= kRequired, std::to_string(good) + "/" + std::to_string(kCases) +
                                 " cases within 4 SE on every coordinate (need " + std::to_string(kRequired) +
                                 "), worst |z| = " + f(worst)};
}

// 3. Fixed points and monotonicity of the k = 2 map.
Outcome criterion_3() {
  constexpr int kModels = 1000, kPoints = 20;
  Engine eng = make_engine(4242);
  std::uniform_real_distribution<double> uw(0.05, 0.95), us(0.3, 3.0), un(0.01, 5.0), ux(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> ud(2, 20);
  std::int64_t violations = 0, checks = 0;
  double worst = 0;
  for (int i = 0; i < kModels; ++i) {
    const std::size_t d = ud(eng);
    const double rho = uw(eng);
    const Vec dir = random_unit(d, eng);
    const double n1 = un(eng);
    const Vec m1 = scaled(dir, n1);
    const Vec m2 = scaled(dir, -rho * n1 / (1.0 - rho));
    const MixtureModel m({{m1, us(eng), rho}, {m2, us(eng), 1.0 - rho}});
    violations += recurrence_step_cos2(m, 0.0) != 0.0;
    violations += recurrence_step_cos2(m, 1.0) != 1.0;
    checks += 2;
    for (int j = 0; j < kPoints; ++j) {
      double x = ux(eng);
      if (x <= 0.0) x = 0.5;
      const double fx = recurrence_step_cos2(m, x);
      ++checks;
      if (fx < x) {
        ++violations;
        worst = std::max(worst, x - fx);
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) + " checks" +
                               (violations ? ", worst shortfall " + f(worst) : "")};
}

// 4. Iterations to reach cos^2 = 1/2 grow linearly in ln d.
Outcome criterion_4() {
  constexpr double kR2 = 0.99;
  std::vector<double> lnd, t_int, t_frac;
  std::string rows;
  for (std::int64_t d : {10, 100, 1000, 10000}) {
    const MixtureModel m = symmetric_pair(1.0, static_cast<std::size_t>(d));
    double x = 1.0 / static_cast<double>(d), prev = x;
    int t = 0;
    while (x < 0.5) {
      prev = x;
      x = recurrence_step_cos2(m, x);
      ++t;
    }
    // Crossing time with log-linear interpolation inside the last round.
    const double frac = (t - 1) + (std::log(0.5) - std::log(prev)) / (std::log(x) - std::log(prev));
    lnd.push_back(std::log(static_cast<double>(d)));
    t_int.push_back(t);
    t_frac.push_back(frac);
    rows += " d=" + std::to_string(d) + ":" + std::to_string(t) + "/" + f(frac);
  }
  const auto [b, r2] = linear_fit(lnd, t_frac);
  const auto [bi, r2i] = linear_fit(lnd, t_int);
  return {r2 >= kR2, "R^2 = " + f(r2, 6) + " (slope " + f(b) + " per unit ln d), integer-count R^2 = " + f(r2i, 6) +
                         ";" + rows};
}

// 5. Fitted rate bounds sandwich the exact map on the fine grid.
Outcome criterion_5() {
  const RateConstants shipped = load_rate_constants(shipped_rate_constants_path());
  const RateConstants def = default_rate_constants();
  const bool same = shipped.a1 == def.a1 && shipped.a2 == def.a2 && shipped.a3 == def.a3 && shipped.a4 == def.a4 &&
                    shipped.a5 == def.a5 && shipped.a6 == def.a6 && shipped.a7 == def.a7 && shipped.a8 == def.a8;
  std::int64_t cells = 0, inside = 0;
  for (int i = 0; i <= 289; ++i) {
    const double mu = 0.105 + 0.01 * i;
    const MixtureModel m = symmetric_pair(mu, 2);
    for (int j = 0; j <= 489; ++j) {
      const double c2 = 0.011 + 0.002 * j;
      const double fx = recurrence_step_cos2(m, c2);
      const RateBounds rb = rate_bounds(m, c2, shipped);
      ++cells;
      inside += rb.lower <= fx && fx <= rb.upper;
    }
  }
  return {same && inside == cells, std::to_string(inside) + "/" + std::to_string(cells) +
                                       " fine-grid cells inside [lower, upper]; shipped constants " +
                                       (same ? "match" : "DIFFER from") + " the built-in defaults"};
}

// 6. Empirical sample thresholds scale as d / mu^4 (small mu) and d / mu^2 (large mu).
Outcome criterion_6() {
  HarnessConfig c;
  c.trials = 400;
  c.confidence = 0.9;
  c.growth_fraction = 0.5;
  c.seed = 7;
  const std::vector<std::pair<double, std::int64_t>> jobs = {{0.5, 8},   {0.5, 16}, {0.5, 32}, {0.5, 64},
                                                             {0.25, 16}, {1.5, 16}, {3.0, 16}};
  const auto cells = parallel_map(jobs.size(), 0, [&](std::size_t i) {
    const auto [mu, d] = jobs[i];
    return sweep_cell(mu, d, c, sweep_cell_seed(c.seed, mu, d));
  });
  bool resolved = true;
  std::string rows;
  for (const auto& s : cells) {
    resolved = resolved && s.result.resolved;
    rows += " (mu=" + f(s.mu) + ",d=" + std::to_string(s.d) + "):" + std::to_string(s.result.n_threshold);
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < 4; ++i) {
    x.push_back(std::log(static_cast<double>(cells[i].d)));
    y.push_back(std::log(static_cast<double>(cells[i].result.n_threshold)));
  }
  const double slope = linear_fit(x, y).first;
  const double small_ratio = static_cast<double>(cells[4].result.n_threshold) / cells[1].result.n_threshold;
  const double large_ratio = static_cast<double>(cells[5].result.n_threshold) / cells[6].result.n_threshold;
  const bool ok_slope = slope >= 0.8 && slope <= 1.2;
  const bool ok_small = small_ratio >= 16.0 / 3.0 && small_ratio <= 16.0 * 3.0;
  const bool ok_large = large_ratio >= 4.0 / 3.0 && large_ratio <= 4.0 * 3.0;
  return {resolved && ok_slope && ok_small && ok_large,
          "slope in d = " + f(slope) + " [0.8,1.2]; n(0.25)/n(0.5) = " + f(small_ratio) + " vs 16 (x3); n(1.5)/n(3) = " +
              f(large_ratio) + " vs 4 (x3);" + rows};
}

// 7. Finite-sample deviation budgets hold at their stated failure rates.
Outcome criterion_7() {
  constexpr double kDelta = 0.05;
  constexpr std::int64_t kN = 10'000;
  constexpr int kTrials = 1000;
  bool ok = true;
  std::string rows;
  for (double mu : {0.5, 1.0, 2.0}) {
    const MixtureModel m = symmetric_pair(mu, 16);
    const Vec u = direction_from_cos2(m, 0.25);
    const Vec b = normalized(m[0].mean);
    Engine pick = make_engine(777, {std::bit_cast<std::uint64_t>(mu)});
    const Vec r = random_unit(16, pick);
    const SMoments s = s_moments(m, u);
    const SeparationSummary sep = separation_summary(m);
    const std::vector<Vec> vs = {u, b, r};
    std::vector<double> d1;
    for (const Vec& v : vs) {
      std::vector<double> dots;
      for (const Component& c : m.components()) dots.push_back(dot(c.mean, v));
      d1.push_back(delta1_bound(kN, kDelta, sep.sigma_max, dots, 1.0));
    }
    const double d2 = delta2_bound(kN, kDelta, m.dim(), sep.sigma_max, std::vector<double>{mu, mu}, s);
    const double lb = cos2_progress_lower_bound(m, u, kN, kDelta);
    struct T {
      bool e1, e2, e3;
    };
    const auto outs = parallel_map(kTrials, 0, [&](std::size_t i) {
      Engine eng = make_engine(777, {std::bit_cast<std::uint64_t>(mu), i});
      HalfspaceAccumulator acc(u, TieRule::ToComplement);
      for_each_sample(m, kN, eng, [&](std::span<const double> x, std::uint32_t) { acc.add(x); });
      const Vec sh = scaled(acc.sum(), 1.0 / static_cast<double>(kN));
      bool e1 = false;
      for (std::size_t q = 0; q < vs.size(); ++q) e1 = e1 || std::abs(dot(sh, vs[q]) - dot(s.s, vs[q])) > d1[q];
      const bool e2 = std::abs(norm_sq(sh) - s.s_norm * s.s_norm) > d2;
      const double c2 = dot(sh, b) * dot(sh, b) / norm_sq(sh);
      return T{e1, e2, c2 < lb};
    });
    int n1 = 0, n2 = 0, n3 = 0;
    for (const auto& t : outs) {
      n1 += t.e1;
      n2 += t.e2;
      n3 += t.e3;
    }
    const double f1 = n1 / double(kTrials), f2 = n2 / double(kTrials), f3 = n3 / double(kTrials);
    ok = ok && f1 <= kDelta && f2 <= kDelta && f3 <= 2 * kDelta;
    rows += " mu=" + f(mu) + ": " + f(f1) + "/" + f(f2) + "/" + f(f3);
  }
  return {ok, "exceedance fractions (delta1/delta2/progress, limits 0.05/0.05/0.1):" + rows};
}

// 8. Monte Carlo KL stays under the closed-form bound.
Outcome criterion_8() {
  constexpr std::int64_t kSamples = 200'000;
  constexpr std::size_t kDim = 10;
  int good = 0, cells = 0;
  double worst_gap = -1e300;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double a = 1.0 + 0.5 * i, b = 1.0 + 0.5 * j;
      Engine eng = make_engine(8088, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
      const Vec m1 = scaled(random_unit(kDim, eng), a);
      const Vec m2 = scaled(random_unit(kDim, eng), b);
      const KlEstimate e = kl_monte_carlo(m1, m2, kSamples, derive_seed(8088, {100 + static_cast<std::uint64_t>(5 * i + j)}));
      const double lhs = e.estimate + 4.0 * e.std_err;
      const double rhs = kl_upper_bound(a, b);
      ++cells;
      good += lhs <= rhs;
      worst_gap = std::max(worst_gap, lhs - rhs);
    }
  }
  return {good == cells, std::to_string(good) + "/" + std::to_string(cells) +
                             " cells with estimate + 4 SE <= bound; max (lhs - bound) = " + f(worst_gap)};
}

// 9. Packing certificates and chi-squared tails.
Outcome criterion_9() {
  HarnessConfig c;
  c.dim = 200;
  c.K = 100;
  c.trials = 100;
  c.seed = 12345;
  const auto runs = run_packing(c);
  int failures = 0, pair_fail = 0, norm_fail = 0;
  for (const auto& r : runs) {
    failures += !r.passed;
    pair_fail += r.pair_violations > 0;
    norm_fail += r.norm_violations > 0;
  }
  bool ok = failures <= 1;
  std::string detail = "packing failures " + std::to_string(failures) + "/100 (limit 1; " + std::to_string(pair_fail) +
                       " by distance, " + std::to_string(norm_fail) + " by norm);";
  for (std::size_t d : {20, 50, 100}) {
    const ChiSqTailReport r = chisq_tail_check(d, 1'000'000, 12345);
    ok = ok && r.passed();
    detail += " d=" + std::to_string(d) + " low " + f(r.freq_low) + "<=" + f(r.bound_low) + (r.low_ok ? "" : "(X)") +
              " high " + f(r.freq_high) + "<=" + f(r.bound_high) + (r.high_ok ? "" : "(X)") + ";";
  }
  return {ok, detail};
}

// 10. Minimax sample threshold: linear in d, inverse in mu^2.
Outcome criterion_10() {
  std::vector<double> x, y;
  std::string rows;
  for (std::size_t d : {50, 100, 200}) {
    const MinimaxThreshold t = minimax_threshold(d, 2.0);
    x.push_back(std::log(static_cast<double>(d)));
    y.push_back(std::log(t.n_star));
    rows += " d=" + std::to_string(d) + ": n*=" + f(t.n_star) + " (integer " + std::to_string(t.n_threshold) + ")";
  }
  const double slope = linear_fit(x, y).first;
  const MinimaxThreshold lo = minimax_threshold(100, 1.5), hi = minimax_threshold(100, 3.0);
  const double ratio = lo.n_star / hi.n_star;
  const bool ok = std::abs(slope - 1.0) <= 0.1 && ratio >= 2.0 && ratio <= 8.0;
  return {ok, "slope in d = " + f(slope) + " (1 +- 0.1); n*(1.5)/n*(3) = " + f(ratio) + " vs 4 (x2);" + rows};
}

// 11. General-k exact dynamics converge into the mean subspace.
Outcome criterion_11() {
  constexpr int kStarts = 20;
  constexpr std::int64_t kMaxIter = 10'000;
  constexpr double kTarget = 1.0 - 1e-6;
  constexpr double kAgree = 1e-10;
  Engine eng = make_engine(1111);
  const MixtureModel m = random_model(3, 10, eng);
  const MeanSubspace sub = mean_subspace(m);
  int reached = 0;
  std::int64_t max_iter = 0;
  double worst = 0;
  for (int s = 0; s < kStarts; ++s) {
    Vec u = random_unit(10, eng);
    double c2 = cos2_to_subspace(sub, u);
    std::int64_t t = 0;
    while (c2 < kTarget && t < kMaxIter) {
      const StepResult st = recurrence_step_k(m, u);
      const Vec direct = normalized(expected_center(m, direction_state(m, u)));
      worst = std::max(worst, std::abs(st.cos2_next - cos2_to_subspace(sub, direct)));
      u = st.u_next;
      c2 = st.cos2_next;
      ++t;
    }
    reached += c2 >= kTarget;
    max_iter = std::max(max_iter, t);
  }
  return {reached == kStarts && worst <= kAgree,
          std::to_string(reached) + "/" + std::to_string(kStarts) + " starts reached 1 - 1e-6 (max " +
              std::to_string(max_iter) + " iterations); max step disagreement = " + f(worst, 3)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> all = {criterion_1, criterion_2, criterion_3, criterion_4,
                                                     criterion_5, criterion_6, criterion_7, criterion_8,
                                                     criterion_9, criterion_10, criterion_11};
  int failed = 0;
  for (int i = 1; i <= 11; ++i) {
    if (only && i != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << i << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  [" << f(secs, 3)
              << " s]" << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
