// Fits the rate-bound constants a1..a8 against the exact k = 2 map on a
// coarse grid of symmetric unit-variance pairs, then checks them on a
// disjoint fine grid.
//
//   fit_rate_constants [--out data/rate_constants.json] [--margin 0.05]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kmlab/dynamics.hpp"
#include "kmlab/io.hpp"

using namespace kmlab;

namespace {

struct Cell {
  double mu, cos2, f, q, p, V;
  Regime regime;
};

std::vector<Cell> make_cells(const std::vector<double>& mus, const std::vector<double>& cos2s) {
  std::vector<Cell> out;
  for (double mu : mus) {
    const MixtureModel m = symmetric_pair(mu, 2);
    const SeparationSummary s = separation_summary(m);
    for (double c2 : cos2s) {
      out.push_back({mu, c2, recurrence_step_cos2(m, c2), s.M / s.V, s.rho_min * s.rho_min * s.mu_min * s.mu_min, s.V,
                     regime_classify(m, c2)});
    }
  }
  return out;
}

std::vector<double> steps(double first, double step, int count) {
  std::vector<double> v;
  for (int i = 0; i < count; ++i) v.push_back(first + step * i);
  return v;
}

// Growth term G = (f / cos2 - 1) / sin2, so f = cos2 (1 + sin2 G).
double growth(const Cell& c) { return (c.f / c.cos2 - 1.0) / (1.0 - c.cos2); }

// Best scale for a bound of the form cos2 (1 + a h(cell; b) sin2), for each
// candidate b: a = min (lower) or max (upper) of G / h over the cells. The
// b that makes the bound tightest on average wins.
std::pair<double, double> fit_pair(const std::vector<Cell>& cells, bool lower,
                                   const std::function<double(const Cell&, double)>& h) {
  double best_a = 0, best_b = 0, best_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 120; ++i) {
    const double b = std::pow(10.0, -3.0 + 5.0 * i / 120.0);
    double a = lower ? std::numeric_limits<double>::infinity() : 0.0;
    for (const Cell& c : cells) {
      const double r = growth(c) / h(c, b);
      a = lower ? std::min(a, r) : std::max(a, r);
    }
    double gap = 0;
    for (const Cell& c : cells) gap += std::abs(a * h(c, b) - growth(c)) * c.cos2 * (1.0 - c.cos2);
    if (gap < best_gap) {
      best_gap = gap;
      best_a = a;
      best_b = b;
    }
  }
  return {best_a, best_b};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit the rate-bound constants against the exact map"};
  std::string out = "data/rate_constants.json";
  double margin = 0.05;
  app.add_option("--out", out, "output JSON path");
  app.add_option("--margin", margin, "relative slack applied to each fitted scale")->check(CLI::Range(0.0, 0.5));
  CLI11_PARSE(app, argc, argv);

  // Coarse: mu = 0.1 .. 3.0 step 0.1 plus the largest small-mu value the
  // threshold allows, cos2 = 0.01 .. 0.99 step 0.02.
  // Fine:   mu = 0.105 .. 2.995 step 0.01, cos2 = 0.011 .. 0.989 step 0.002.
  auto coarse_mu = steps(0.1, 0.1, 30);
  coarse_mu.push_back(std::nextafter(kSmallTauThreshold, 0.0));
  std::sort(coarse_mu.begin(), coarse_mu.end());
  const auto coarse = make_cells(coarse_mu, steps(0.01, 0.02, 50));
  const auto fine = make_cells(steps(0.105, 0.01, 290), steps(0.011, 0.002, 490));

  auto select = [&](Regime r) {
    std::vector<Cell> v;
    for (const Cell& c : coarse) {
      if (c.regime == r) v.push_back(c);
    }
    return v;
  };
  const auto sm = select(Regime::SmallMu);
  const auto lmst = select(Regime::LargeMuSmallTau);
  const auto lmlt = select(Regime::LargeMuLargeTau);

  RateConstants a;
  {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const Cell& c : sm) {
      lo = std::min(lo, growth(c) / c.q);
      hi = std::max(hi, growth(c) / c.q);
    }
    a.a1 = lo;
    a.a2 = hi;
  }
  {
    auto hl = [](const Cell& c, double b) { return c.q * c.q / (b + c.q * c.q * c.cos2); };
    auto hu = [](const Cell& c, double b) { return (c.q + c.q * c.q) / (b + c.q * c.q * c.cos2); };
    std::tie(a.a3, a.a4) = fit_pair(lmst, true, hl);
    std::tie(a.a5, a.a6) = fit_pair(lmst, false, hu);
  }
  {
    // f = cos2 (1 + a7 p / (a8 V^2 + p) tan2) = cos2 + a7 p / (a8 V^2 + p) sin2
    auto h = [](const Cell& c, double b) { return c.p / (b * c.V * c.V + c.p) / c.cos2; };
    std::tie(a.a7, a.a8) = fit_pair(lmlt, true, h);
  }
  a.a1 *= 1.0 - margin;
  a.a3 *= 1.0 - margin;
  a.a7 *= 1.0 - margin;
  a.a2 *= 1.0 + margin;
  a.a5 *= 1.0 + margin;

  std::size_t inside = 0;
  for (const Cell& c : fine) {
    const RateBounds b = rate_bounds(symmetric_pair(c.mu, 2), c.cos2, a);
    inside += b.lower <= c.f && c.f <= b.upper;
  }

  nlohmann::json j;
  j["constants"] = rate_constants_to_json(a);
  j["fit"] = {{"model", "symmetric unit-variance pair"},
              {"mu_grid", "0.1:0.1:3.0 and sqrt(ln(9/2pi))-"},
              {"cos2_grid", "0.01:0.02:0.99"},
              {"margin", margin},
              {"cells", coarse.size()}};
  j["check"] = {{"mu_grid", "0.105:0.01:2.995"},
                {"cos2_grid", "0.011:0.002:0.989"},
                {"cells", fine.size()},
                {"inside", inside}};
  atomic_write(out, j.dump(2) + "\n");

  std::printf("a1..a8 = %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", a.a1, a.a2, a.a3, a.a4, a.a5, a.a6, a.a7,
              a.a8);
  std::printf("fine grid: %zu / %zu cells inside the bounds\n", inside, fine.size());
  return inside == fine.size() ? 0 : 2;
}
