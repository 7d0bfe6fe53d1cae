#pragma once

// Finite-sample budgets: deviation bounds for the empirical halfspace moment
// S_hat = (1/n) sum x 1{<x,u> > 0}, the per-round progress lower bound they
// imply, the sample-requirement formulas, and an empirical threshold search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "kmlab/algorithm.hpp"
#include "kmlab/dynamics.hpp"
#include "kmlab/mixture.hpp"
#include "kmlab/rng.hpp"

namespace kmlab {

struct SMoments {
  Vec s;                 // S = E[X 1{<X,u> > 0}] = Z E[u_{t+1}]
  double s_norm = 0.0;
  std::vector<double> s_dot_mu;
};

inline SMoments s_moments(const MixtureModel& model, std::span<const double> u) {
  const DirectionState state = direction_state(model, u);
  const RecurrenceTerms t = compute_terms(model, state);
  SMoments m;
  m.s = scaled(expected_center(model, state), t.z);
  m.s_norm = norm(m.s);
  for (const Component& c : model.components()) m.s_dot_mu.push_back(dot(m.s, c.mean));
  return m;
}

/// Deviation bound on |<S_hat - S, v>|:
/// 8 log(4n/delta) (sigma_max |v| + max_j |<mu^j, v>|) / sqrt(n).
inline double delta1_bound(std::int64_t n, double delta, double sigma_max, std::span<const double> mu_dots,
                           double v_norm) {
  if (n < 2) throw std::domain_error("delta1_bound requires n >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0,1)");
  double mx = 0.0;
  for (double x : mu_dots) mx = std::max(mx, std::abs(x));
  const double nn = static_cast<double>(n);
  return 8.0 * std::log(4.0 * nn / delta) * (sigma_max * v_norm + mx) / std::sqrt(nn);
}

/// Bound on ||S_hat||^2 - ||S||^2 in the form used by the progress bound:
/// 128 log^2(8n/delta)(sigma_max^2 d + sum_j |mu^j|^2)/n
///   + 8 log(n/delta)/sqrt(n) (sigma_max |S| + max_j |<S, mu^j>|).
inline double delta2_bound(std::int64_t n, double delta, std::size_t d, double sigma_max,
                           std::span<const double> mu_norms, const SMoments& s) {
  if (n < 2) throw std::domain_error("delta2_bound requires n >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0,1)");
  const double nn = static_cast<double>(n);
  double sum_mu2 = 0.0;
  for (double m : mu_norms) sum_mu2 += m * m;
  double max_dot = 0.0;
  for (double x : s.s_dot_mu) max_dot = std::max(max_dot, std::abs(x));
  const double l8 = std::log(8.0 * nn / delta);
  const double first = 128.0 * l8 * l8 * (sigma_max * sigma_max * static_cast<double>(d) + sum_mu2) / nn;
  const double second = 8.0 * std::log(nn / delta) / std::sqrt(nn) * (sigma_max * s.s_norm + max_dot);
  return first + second;
}

struct ConcentrationBudget {
  std::int64_t n = 0;
  double delta = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
};

/// Delta_1 (with |v| = 1, max_j |<mu^j,v>| <= max_j |mu^j|) and Delta_2 at
/// direction u.
inline ConcentrationBudget concentration_budget(const MixtureModel& model, std::span<const double> u, std::int64_t n,
                                                double delta) {
  const SeparationSummary sep = separation_summary(model);
  std::vector<double> mu_norms;
  for (const Component& c : model.components()) mu_norms.push_back(norm(c.mean));
  ConcentrationBudget b;
  b.n = n;
  b.delta = delta;
  b.delta1 = delta1_bound(n, delta, sep.sigma_max, mu_norms, 1.0);
  b.delta2 = delta2_bound(n, delta, model.dim(), sep.sigma_max, mu_norms, s_moments(model, u));
  return b;
}

/// Lower bound on cos^2(theta_{t+1}) holding with probability 1 - 2 delta
/// when the round uses n samples (k = 2, u on the mu^1 side):
///
///   cos^2 (1 + tan^2 (2 c xi m + m^2) / (D + Delta_2))
///     - (Delta_2 cos^2 + 2 Delta_1 (m + xi c)) / (D + Delta_2),
///   D = xi^2 + 2 c xi m + m^2.
inline double cos2_progress_lower_bound(const MixtureModel& model, std::span<const double> u, std::int64_t n,
                                        double delta) {
  if (model.k() != 2) throw std::domain_error("cos2_progress_lower_bound requires k = 2");
  const DirectionState state = direction_state(model, u);
  const RecurrenceTerms t = compute_terms(model, state);
  const ConcentrationBudget b = concentration_budget(model, u, n, delta);
  const double c = state.cos_theta;
  const double cos2 = c * c;
  const double sin2 = 1.0 - cos2;
  const double num = 2.0 * c * t.xi * t.m + t.m * t.m;
  const double den = t.xi * t.xi + num + b.delta2;
  const double gain = cos2 > 0.0 ? cos2 + sin2 * num / den : 0.0;  // cos^2 (1 + tan^2 num/den)
  const double loss = (b.delta2 * cos2 + 2.0 * b.delta1 * (t.m + t.xi * c)) / den;
  return gain - loss;
}

/// Constants of the sample-requirement formulas; only a9 and a11 enter the
/// sample counts, a10, a12, a13 scale the promised progress.
struct SampleConstants {
  double a9 = 1.0, a10 = 1.0, a11 = 1.0, a12 = 1.0, a13 = 1.0;
};

inline constexpr std::uint64_t kInfiniteSamples = std::numeric_limits<std::uint64_t>::max();

/// Samples per round sufficient for progress, by regime. Returns
/// kInfiniteSamples when sin^4 or cos^2 vanishes.
///
///   SmallMu: a9 sigma_max^2 log^2(d/delta) (d/(M V sin^4) + 1/(M^2 sin^4 cos^2))
///   LargeMu: a11 log^2(d/delta) (d sigma_max^2 / (rho_min^2 mu_min^2 sin^4)
///            + (sigma_max^2 + mu_max^2) / (M^2 cos^2 sin^4)
///            + (sigma_max^2 mu_max^2 + mu_max^4) / (rho_min^4 mu_min^4 sin^4))
inline std::uint64_t required_samples(const MixtureModel& model, double cos2, double delta, Regime regime,
                                      const SampleConstants& a = {}) {
  if (!(cos2 >= 0.0 && cos2 <= 1.0)) throw std::domain_error("cos2 must lie in [0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0,1)");
  const SeparationSummary s = separation_summary(model);
  const double sin2 = 1.0 - cos2;
  const double sin4 = sin2 * sin2;
  if (cos2 == 0.0 || sin4 == 0.0) return kInfiniteSamples;
  const double d = static_cast<double>(model.dim());
  const double lg = std::log(d / delta);
  double n;
  if (regime == Regime::SmallMu) {
    n = a.a9 * s.sigma_max * s.sigma_max * lg * lg *
        (d / (s.M * s.V * sin4) + 1.0 / (s.M * s.M * sin4 * cos2));
  } else {
    const double sm2 = s.sigma_max * s.sigma_max;
    const double mx2 = s.mu_max * s.mu_max;
    const double p = s.rho_min * s.rho_min * s.mu_min * s.mu_min;
    n = a.a11 * lg * lg *
        (d * sm2 / (p * sin4) + (sm2 + mx2) / (s.M * s.M * cos2 * sin4) + (sm2 * mx2 + mx2 * mx2) / (p * p * sin4));
  }
  if (!std::isfinite(n) || n >= 1.8e19) return kInfiniteSamples;
  return static_cast<std::uint64_t>(std::ceil(n));
}

// ---------------------------------------------------------------------------
// Empirical thresholds

/// Geometric grid n_min * 2^(i / steps_per_octave), up to n_max.
struct SampleGrid {
  std::int64_t n_min = 16;
  std::int64_t n_max = std::int64_t{1} << 22;
  int steps_per_octave = 4;

  std::vector<std::int64_t> points() const {
    std::vector<std::int64_t> out;
    for (int i = 0;; ++i) {
      const auto n = static_cast<std::int64_t>(std::llround(static_cast<double>(n_min) *
                                                             std::exp2(static_cast<double>(i) / steps_per_octave)));
      if (n > n_max) break;
      if (out.empty() || n > out.back()) out.push_back(n);
    }
    return out;
  }
};

struct MinSampleResult {
  bool resolved = false;
  std::int64_t n_threshold = 0;          // 0 when unresolved
  std::vector<std::int64_t> grid;        // grid points actually evaluated
  std::vector<double> success_fraction;  // per evaluated grid point
  double target_cos2 = 0.0;
};

/// Smallest grid n at which a single round from cos^2(theta_0) = cos2_0
/// reaches cos2_0 * target_growth in at least `confidence` of the trials.
///
/// Trial i draws its points for the grid interval (n_{g-1}, n_g] on stream
/// (seed, i, g), so the sample at n_g extends the sample at n_{g-1}; the
/// search stops at the first grid point that succeeds. target_growth <= 1
/// demands no progress and returns the first grid point without sampling.
inline MinSampleResult empirical_min_samples(const MixtureModel& model, double cos2_0, double target_growth,
                                             int trials, double confidence, std::uint64_t seed = 1,
                                             const SampleGrid& grid = {}) {
  if (!(cos2_0 > 0.0 && cos2_0 < 1.0)) throw std::domain_error("cos2_0 must lie in (0,1)");
  if (trials < 1) throw std::domain_error("trials must be >= 1");
  if (!(confidence > 0.0 && confidence <= 1.0)) throw std::domain_error("confidence must lie in (0,1]");
  MinSampleResult res;
  res.target_cos2 = cos2_0 * target_growth;
  const std::vector<std::int64_t> pts = grid.points();
  if (pts.empty()) throw std::domain_error("empty sample grid");
  if (target_growth <= 1.0) {
    res.resolved = true;
    res.n_threshold = pts.front();
    return res;
  }
  const MeanSubspace sub = mean_subspace(model);
  const Vec u0 = direction_from_cos2(model, cos2_0);
  std::vector<HalfspaceAccumulator> acc(static_cast<std::size_t>(trials), HalfspaceAccumulator(u0, TieRule::ToComplement));
  std::int64_t have = 0;
  for (std::size_t g = 0; g < pts.size(); ++g) {
    const std::int64_t extra = pts[g] - have;
    int ok = 0;
    for (int i = 0; i < trials; ++i) {
      Engine eng = make_engine(seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(g)});
      HalfspaceAccumulator& a = acc[static_cast<std::size_t>(i)];
      for_each_sample(model, static_cast<std::size_t>(extra), eng, [&](std::span<const double> x, std::uint32_t) { a.add(x); });
      if (a.count() > 0 && cos2_to_subspace(sub, a.sum()) >= res.target_cos2) ++ok;
    }
    have = pts[g];
    const double frac = static_cast<double>(ok) / trials;
    res.grid.push_back(pts[g]);
    res.success_fraction.push_back(frac);
    if (frac >= confidence) {
      res.resolved = true;
      res.n_threshold = pts[g];
      return res;
    }
  }
  return res;
}

}  // namespace kmlab
