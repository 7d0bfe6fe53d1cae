#pragma once

// Infinite-sample dynamics of symmetrized 2-means.
//
// With unlimited samples one round maps the separator normal u_t to
//
//   S_{t+1} = E[X 1{<X,u_t> > 0}] = xi_t * u_t/|u_t| + sum_j rho^j Phi_j mu^j,
//
// where Phi_j = Phi(-tau^j/sigma^j, inf). Everything below (the cos^2 theta
// recurrence for k = 2, its general-k counterpart, the expected center and the
// regime and rate-bound helpers) is built on that identity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kmlab/linalg.hpp"
#include "kmlab/mixture.hpp"
#include "kmlab/numerics.hpp"

namespace kmlab {

enum class Regime { SmallMu, LargeMuSmallTau, LargeMuLargeTau };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::SmallMu: return "small_mu";
    case Regime::LargeMuSmallTau: return "large_mu_small_tau";
    case Regime::LargeMuLargeTau: return "large_mu_large_tau";
  }
  return "?";
}

enum class InitStrategy { RandomUnit, RandomSample, Explicit };

// ---------------------------------------------------------------------------
// Mean subspace

inline constexpr double kRankTol = 1e-10;

/// Orthonormal basis of span(mu^1, ..., mu^k), built by Gram-Schmidt with
/// pivoting on the largest remaining residual. A residual at or below
/// kRankTol times the largest mean norm is treated as dependent.
struct MeanSubspace {
  std::vector<Vec> basis;

  std::size_t rank() const { return basis.size(); }

  Vec project(std::span<const double> x) const {
    Vec p(x.size(), 0.0);
    for (const Vec& q : basis) axpy(dot(q, x), q, p);
    return p;
  }
};

namespace detail {

// Pivoted Gram-Schmidt of `candidates` against the (orthonormal) `fixed`
// vectors; returns at most max_count new orthonormal vectors.
inline std::vector<Vec> pivoted_gram_schmidt(std::vector<Vec> candidates, const std::vector<Vec>& fixed,
                                             double abs_tol, std::size_t max_count) {
  auto orthogonalize = [](Vec& x, const Vec& q) { axpy(-dot(q, x), q, x); };
  for (Vec& c : candidates) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& q : fixed) orthogonalize(c, q);
    }
  }
  std::vector<Vec> out;
  while (out.size() < max_count && !candidates.empty()) {
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double n = norm(candidates[i]);
      if (n > best_norm) {
        best_norm = n;
        best = i;
      }
    }
    if (!(best_norm > abs_tol)) break;
    Vec q = scaled(candidates[best], 1.0 / best_norm);
    // Second pass against everything accepted so far.
    for (const Vec& f : fixed) orthogonalize(q, f);
    for (const Vec& f : out) orthogonalize(q, f);
    q = normalized(q);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
    for (Vec& c : candidates) orthogonalize(c, q);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace detail

inline MeanSubspace mean_subspace(const MixtureModel& model) {
  std::vector<Vec> means;
  double scale = 0.0;
  for (const Component& c : model.components()) {
    means.push_back(c.mean);
    scale = std::max(scale, norm(c.mean));
  }
  MeanSubspace m;
  if (scale == 0.0) return m;
  m.basis = detail::pivoted_gram_schmidt(std::move(means), {}, kRankTol * scale, model.dim());
  return m;
}

/// cos^2 of the angle between u and the mean subspace (orientation free).
inline double cos2_to_subspace(const MeanSubspace& sub, std::span<const double> u) {
  const double nu2 = norm_sq(u);
  if (!(nu2 > 0.0)) throw std::domain_error("cos2_to_subspace: zero vector");
  double p2 = 0.0;
  for (const Vec& q : sub.basis) {
    const double c = dot(q, u);
    p2 += c * c;
  }
  return std::clamp(p2 / nu2, 0.0, 1.0);
}

inline double cos2_to_subspace(const MixtureModel& model, std::span<const double> u) {
  return cos2_to_subspace(mean_subspace(model), u);
}

// ---------------------------------------------------------------------------
// Direction state and the per-round decomposition

struct DirectionState {
  Vec u;               // unit separator normal
  double cos_theta = 0;  // |projection of u on the mean subspace|
  Vec tau;             // tau^j = <mu^j, u>
};

inline DirectionState direction_state(const MixtureModel& model, std::span<const double> u) {
  if (u.size() != model.dim()) throw std::domain_error("direction_state: dimension mismatch");
  DirectionState s;
  s.u = normalized(u);
  s.cos_theta = std::sqrt(cos2_to_subspace(model, s.u));
  for (const Component& c : model.components()) s.tau.push_back(dot(c.mean, s.u));
  return s;
}

/// Unit vector orthogonal to the mean subspace (first pivoted coordinate
/// axis), or nullopt when the means span the whole space.
inline std::optional<Vec> orthogonal_direction(const MeanSubspace& sub, std::size_t d) {
  std::vector<Vec> axes;
  for (std::size_t i = 0; i < d; ++i) axes.push_back(unit_vector(d, i));
  auto found = detail::pivoted_gram_schmidt(std::move(axes), sub.basis, 1e-8, 1);
  if (found.empty()) return std::nullopt;
  return found.front();
}

/// For k = 2: the unit vector at angle arccos(sqrt(cos2)) from mu^1, on the
/// mu^1 side, tilted toward `perp` (defaults to the first orthogonal axis).
inline Vec direction_from_cos2(const MixtureModel& model, double cos2, std::optional<Vec> perp = std::nullopt) {
  if (!(cos2 >= 0.0 && cos2 <= 1.0)) throw std::domain_error("cos2 must lie in [0,1]");
  const Vec b = normalized(model[0].mean);
  const double c = std::sqrt(cos2);
  const double s = std::sqrt(1.0 - cos2);
  Vec u = scaled(b, c);
  if (s == 0.0) return u;
  if (!perp) perp = orthogonal_direction(mean_subspace(model), model.dim());
  if (!perp) throw std::domain_error("direction_from_cos2: no direction orthogonal to the means (d too small)");
  axpy(s, *perp, u);
  return u;
}

/// Orthonormal frame adapted to the current direction.
///
/// b[0] is the unit projection of u onto the mean subspace; b[1..] complete
/// a basis of that subspace; v is the unit component of u orthogonal to it,
/// and u_perp = sin(theta) b[0] - cos(theta) v.
struct SubspaceBasis {
  std::vector<Vec> b;
  Vec v;
  Vec u_perp;
  double cos_theta = 0.0;
  double sin_theta = 0.0;
  bool orthogonal_to_means = false;  // u has no component in the mean subspace
  bool inside_means = false;         // u lies in the mean subspace
};

inline SubspaceBasis subspace_basis(const MixtureModel& model, std::span<const double> u_raw) {
  const MeanSubspace sub = mean_subspace(model);
  const Vec u = normalized(u_raw);
  const Vec p = sub.project(u);
  Vec r = u;
  axpy(-1.0, p, r);
  SubspaceBasis fb;
  const double pn = norm(p);
  const double rn = norm(r);
  // Renormalize so cos^2 + sin^2 = 1 exactly up to rounding.
  const double h = std::hypot(pn, rn);
  fb.cos_theta = pn / h;
  fb.sin_theta = rn / h;
  fb.orthogonal_to_means = !(pn > 0.0);
  fb.inside_means = !(rn > 0.0);

  Vec b1 = fb.orthogonal_to_means ? (sub.rank() ? sub.basis.front() : Vec(u.size(), 0.0)) : scaled(p, 1.0 / pn);
  fb.b.push_back(b1);
  if (sub.rank() > 1) {
    auto rest = detail::pivoted_gram_schmidt(sub.basis, {b1}, 1e-8, sub.rank() - 1);
    for (Vec& q : rest) fb.b.push_back(std::move(q));
  }
  if (!fb.inside_means) {
    fb.v = scaled(r, 1.0 / rn);
  } else {
    fb.v = orthogonal_direction(sub, u.size()).value_or(Vec(u.size(), 0.0));
  }
  fb.u_perp = scaled(fb.b.front(), fb.sin_theta);
  axpy(-fb.cos_theta, fb.v, fb.u_perp);
  return fb;
}

struct RecurrenceTerms {
  double xi = 0.0;   // sum_j rho^j sigma^j phi(tau^j / sigma^j)
  double m = 0.0;    // m_l[0]
  Vec m_l;           // sum_j rho^j Phi_j <mu^j, b^l>
  double z = 0.0;    // P[<X,u> > 0]
  Vec w;             // P[component j | <X,u> > 0]
};

namespace detail {

inline RecurrenceTerms terms_in_frame(const MixtureModel& model, std::span<const double> u_unit,
                                      const std::vector<Vec>& frame) {
  RecurrenceTerms t;
  t.m_l.assign(frame.size(), 0.0);
  std::vector<double> mass;
  for (const Component& c : model.components()) {
    const double tau = dot(c.mean, u_unit);
    const double phi_mass = halfspace_mass(tau, c.sigma).value();
    t.xi += c.weight * c.sigma * gauss_pdf(tau / c.sigma);
    t.z += c.weight * phi_mass;
    mass.push_back(c.weight * phi_mass);
    for (std::size_t l = 0; l < frame.size(); ++l) t.m_l[l] += c.weight * phi_mass * dot(c.mean, frame[l]);
  }
  t.m = t.m_l.empty() ? 0.0 : t.m_l.front();
  for (double w : mass) t.w.push_back(t.z > 0.0 ? w / t.z : 0.0);
  return t;
}

}  // namespace detail

/// xi, m^l, Z and w for the halfspace {x : <x, u> > 0}.
///
/// The m^l are taken against the adapted frame of subspace_basis(), so for
/// k = 2 with u on the mu^1 side m equals sum_j rho^j <mu^j, b> Phi_j with
/// b = mu^1 / |mu^1|.
inline RecurrenceTerms compute_terms(const MixtureModel& model, const DirectionState& state) {
  if (state.u.size() != model.dim()) throw std::domain_error("compute_terms: dimension mismatch");
  require_valid(model);
  const SubspaceBasis fb = subspace_basis(model, state.u);
  return detail::terms_in_frame(model, normalized(state.u), fb.b);
}

/// One exact round for k = 2, as a map on cos^2(theta) against mu^1.
///
/// Evaluates (xi c + m)^2 / (xi^2 + 2 xi m c + m^2) with the denominator
/// written as numerator + xi^2 sin^2(theta), which is total on [0,1] and
/// keeps both fixed points exact. m uses the centered form
/// rho^1 |mu^1| (Phi_1 - Phi_2), so m = 0 at cos = 0 and m >= 0 for cos > 0.
inline double recurrence_step_cos2(const MixtureModel& model, double cos2) {
  if (model.k() != 2) throw std::domain_error("recurrence_step_cos2 requires k = 2");
  if (!(cos2 >= 0.0 && cos2 <= 1.0)) throw std::domain_error("cos2 must lie in [0,1]");
  require_valid(model);
  const Component& c1 = model[0];
  const Component& c2 = model[1];
  const double n1 = norm(c1.mean);
  if (!(n1 > 0.0)) throw std::domain_error("recurrence_step_cos2: mu^1 = 0");
  const double c = std::sqrt(cos2);
  const double sin2 = 1.0 - cos2;
  const double tau1 = n1 * c;
  const double tau2 = dot(c2.mean, c1.mean) / n1 * c;
  const double xi = c1.weight * c1.sigma * gauss_pdf(tau1 / c1.sigma) +
                    c2.weight * c2.sigma * gauss_pdf(tau2 / c2.sigma);
  const double m = c1.weight * n1 *
                   (halfspace_mass(tau1, c1.sigma).value() - halfspace_mass(tau2, c2.sigma).value());
  const double num = (xi * c + m) * (xi * c + m);
  const double den = num + xi * xi * sin2;
  if (!(den > 0.0)) return cos2;
  return num / den;
}

/// E[u_{t+1}] = S_{t+1} / Z_{t+1}, assembled from its coordinates in the
/// adapted frame: (xi + cos m^1) on u, sin m^1 on u_perp, m^l on b^l (l >= 2),
/// and exactly zero on everything else.
inline Vec expected_center(const MixtureModel& model, const DirectionState& state) {
  if (state.u.size() != model.dim()) throw std::domain_error("expected_center: dimension mismatch");
  if (!(norm(state.u) > 0.0)) throw std::domain_error("expected_center: zero direction");
  require_valid(model);
  const Vec u = normalized(state.u);
  const SubspaceBasis fb = subspace_basis(model, u);
  const RecurrenceTerms t = detail::terms_in_frame(model, u, fb.b);
  Vec e = scaled(u, (t.xi + fb.cos_theta * t.m) / t.z);
  if (!fb.inside_means && !fb.orthogonal_to_means) axpy(fb.sin_theta * t.m / t.z, fb.u_perp, e);
  if (fb.orthogonal_to_means) {
    // b^1 is arbitrary here; every m^l is the centering residual.
    axpy(t.m / t.z, fb.b.front(), e);
  }
  for (std::size_t l = 1; l < fb.b.size(); ++l) axpy(t.m_l[l] / t.z, fb.b[l], e);
  return e;
}

struct StepResult {
  Vec u_next;         // unit vector along E[u_{t+1}]
  double cos2_next = 0.0;
  bool degenerate = false;  // u orthogonal to the means: cos^2 = 0 is a fixed point
};

/// One exact round for any k: the cos^2 update against the mean subspace in
/// its tan^2 form, paired with the normalized expected center.
inline StepResult recurrence_step_k(const MixtureModel& model, std::span<const double> u_raw) {
  require_valid(model);
  const Vec u = normalized(u_raw);
  const SubspaceBasis fb = subspace_basis(model, u);
  const RecurrenceTerms t = detail::terms_in_frame(model, u, fb.b);
  StepResult r;
  r.u_next = normalized(expected_center(model, DirectionState{u, fb.cos_theta, {}}));
  if (fb.orthogonal_to_means) {
    r.degenerate = true;
    r.cos2_next = 0.0;
    return r;
  }
  if (fb.inside_means) {
    r.cos2_next = 1.0;
    return r;
  }
  const double c = fb.cos_theta;
  const double cos2 = c * c;
  const double tan2 = (fb.sin_theta * fb.sin_theta) / cos2;
  double msq = 0.0;
  for (double ml : t.m_l) msq += ml * ml;
  const double cross = 2.0 * c * t.xi * t.m;
  const double ratio = (cross + msq) / (t.xi * t.xi + cross + msq);
  r.cos2_next = std::clamp(cos2 * (1.0 + tan2 * ratio), 0.0, 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// Regimes and trajectories

inline Regime regime_classify(const MixtureModel& model, const DirectionState& state) {
  require_valid(model);
  bool all_small_mu = true;
  for (const Component& c : model.components()) all_small_mu = all_small_mu && norm(c.mean) / c.sigma < kSmallTauThreshold;
  if (all_small_mu) return Regime::SmallMu;
  const Vec u = normalized(state.u);
  for (const Component& c : model.components()) {
    if (std::abs(dot(c.mean, u)) / c.sigma >= kSmallTauThreshold) return Regime::LargeMuLargeTau;
  }
  return Regime::LargeMuSmallTau;
}

/// k = 2 convenience: classify the direction at the given cos^2 from mu^1,
/// using tau^j = <mu^j, b> cos(theta).
inline Regime regime_classify(const MixtureModel& model, double cos2) {
  if (model.k() != 2) throw std::domain_error("regime_classify(cos2) requires k = 2");
  if (!(cos2 >= 0.0 && cos2 <= 1.0)) throw std::domain_error("cos2 must lie in [0,1]");
  require_valid(model);
  const Vec b = normalized(model[0].mean);
  const double c = std::sqrt(cos2);
  bool all_small_mu = true;
  for (const Component& comp : model.components()) {
    all_small_mu = all_small_mu && norm(comp.mean) / comp.sigma < kSmallTauThreshold;
  }
  if (all_small_mu) return Regime::SmallMu;
  for (const Component& comp : model.components()) {
    if (std::abs(dot(comp.mean, b) * c) / comp.sigma >= kSmallTauThreshold) return Regime::LargeMuLargeTau;
  }
  return Regime::LargeMuSmallTau;
}

struct TrajectoryRecord {
  std::int64_t t = 0;
  double cos2 = 0.0;
  double growth_factor = 1.0;  // cos2_t / cos2_{t-1}; 1 for t = 0 and at cos2 = 0
  Regime regime = Regime::SmallMu;
  std::int64_t samples = 0;    // samples used in this round (0 for exact dynamics)
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  Vec final_u;
  bool degenerate = false;
};

/// Iterates recurrence_step_k from u0 for up to N rounds. With stop_cos2 set,
/// stops after the first record reaching it (t = 0 included).
inline Trajectory exact_trajectory(const MixtureModel& model, std::span<const double> u0, std::int64_t N,
                                   std::optional<double> stop_cos2 = std::nullopt) {
  if (N < 1) throw std::domain_error("exact_trajectory requires N >= 1");
  require_valid(model);
  const MeanSubspace sub = mean_subspace(model);
  Trajectory tr;
  Vec u = normalized(u0);
  double cos2 = cos2_to_subspace(sub, u);
  tr.records.push_back({0, cos2, 1.0, regime_classify(model, direction_state(model, u)), 0});
  for (std::int64_t t = 1; t <= N; ++t) {
    if (stop_cos2 && cos2 >= *stop_cos2) break;
    const StepResult step = recurrence_step_k(model, u);
    const double growth = cos2 > 0.0 ? step.cos2_next / cos2 : 1.0;
    u = step.u_next;
    cos2 = step.cos2_next;
    tr.degenerate = tr.degenerate || step.degenerate;
    tr.records.push_back({t, cos2, growth, regime_classify(model, direction_state(model, u)), 0});
  }
  tr.final_u = u;
  return tr;
}

// ---------------------------------------------------------------------------
// Rate bounds

/// Constants of the per-round rate bounds; the bounds fix only their form.
struct RateConstants {
  double a1 = 0, a2 = 0;                  // small mu
  double a3 = 0, a4 = 0, a5 = 0, a6 = 0;  // large mu, small tau
  double a7 = 0, a8 = 0;                  // large mu, large tau
};

/// Fitted by tools/fit_rate_constants against the exact map (see
/// data/rate_constants.json, which holds the same numbers).
inline RateConstants default_rate_constants() {
  return {1.3112097257393376, 2.4598531571829483, 0.8076863131106831, 0.5623413251903491, 0.9266538461057303, 0.510896977450693, 0.7908634275515479, 0.1467799267622069};
}

struct RateBounds {
  double lower = 0.0;
  double upper = 0.0;
  Regime regime = Regime::SmallMu;
};

/// Regime-appropriate lower/upper bound on cos^2(theta_{t+1}) given cos^2(theta_t).
inline RateBounds rate_bounds(const MixtureModel& model, double cos2, const RateConstants& a) {
  if (model.k() != 2) throw std::domain_error("rate_bounds requires k = 2");
  if (!(cos2 >= 0.0 && cos2 <= 1.0)) throw std::domain_error("cos2 must lie in [0,1]");
  const SeparationSummary s = separation_summary(model);
  const double q = s.M / s.V;
  const double sin2 = 1.0 - cos2;
  RateBounds r;
  r.regime = regime_classify(model, cos2);
  switch (r.regime) {
    case Regime::SmallMu:
      r.lower = cos2 * (1.0 + a.a1 * q * sin2);
      r.upper = cos2 * (1.0 + a.a2 * q * sin2);
      break;
    case Regime::LargeMuSmallTau:
      r.lower = cos2 * (1.0 + a.a3 * q * q * sin2 / (a.a4 + q * q * cos2));
      r.upper = cos2 * (1.0 + a.a5 * (q + q * q) * sin2 / (a.a6 + q * q * cos2));
      break;
    case Regime::LargeMuLargeTau: {
      const double p = s.rho_min * s.rho_min * s.mu_min * s.mu_min;
      const double tan2 = cos2 > 0.0 ? sin2 / cos2 : 0.0;
      r.lower = cos2 * (1.0 + a.a7 * p / (a.a8 * s.V * s.V + p) * tan2);
      r.upper = cos2 > 0.0 ? cos2 + sin2 : 0.0;  // cos^2 (1 + tan^2)
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Convergence time and initialization scale (symmetric unit-variance pair)

namespace detail {

inline double require_symmetric_unit_pair(const MixtureModel& model, std::string_view who) {
  const SeparationSummary s = separation_summary(model);
  if (!s.bold_mu || std::abs(model[0].sigma - 1.0) > 1e-12) {
    throw std::domain_error(std::string(who) + " requires a symmetric equal-weight pair with sigma = 1");
  }
  return *s.bold_mu;
}

}  // namespace detail

/// ceil(C0 (ln(1/cos^2 theta_0) / ln(1 + mu^2) + 1 / ln(1 + eps))).
inline std::int64_t predict_convergence_time(const MixtureModel& model, double cos2_0, double eps, double C0) {
  if (!(cos2_0 > 0.0 && cos2_0 <= 1.0)) throw std::domain_error("cos2_0 must lie in (0,1]");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("eps must lie in (0,1)");
  const double mu = detail::require_symmetric_unit_pair(model, "predict_convergence_time");
  const double n = C0 * (std::log(1.0 / cos2_0) / std::log1p(mu * mu) + 1.0 / std::log1p(eps));
  return static_cast<std::int64_t>(std::ceil(n));
}

/// Typical cos^2(theta_0) of an initialization strategy with the Theta
/// constant set to 1: 1/d for a random unit vector, (1 + mu)^2 / d (capped
/// at 1) for a random sample of a symmetric pair.
inline double init_cos2_theory(InitStrategy strategy, const MixtureModel& model) {
  const double d = static_cast<double>(model.dim());
  switch (strategy) {
    case InitStrategy::RandomUnit: return 1.0 / d;
    case InitStrategy::RandomSample: {
      const double mu = detail::require_symmetric_unit_pair(model, "init_cos2_theory(RandomSample)");
      return std::min(1.0, (1.0 + mu) * (1.0 + mu) / d);
    }
    case InitStrategy::Explicit: break;
  }
  throw std::domain_error("init_cos2_theory: no theoretical scale for explicit initialization");
}

}  // namespace kmlab
