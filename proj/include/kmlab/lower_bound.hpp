#pragma once

// Information-theoretic side: a KL upper bound between symmetric two-component
// mixtures, its Monte Carlo check, random packing codebooks, and the Fano
// minimax bound assembled from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kmlab/linalg.hpp"
#include "kmlab/numerics.hpp"
#include "kmlab/rng.hpp"

namespace kmlab {

/// Upper bound on KL(D(mu1) || D(mu2)) for D(mu) = 1/2 N(mu, I) + 1/2 N(-mu, I):
///
///   (1/sqrt(2 pi)) (|mu2|^2 - |mu1|^2 + (3 sqrt(2 pi)/2) ln 2
///                   + 2 |mu1| (e^{-|mu1|^2/2} + sqrt(2 pi) |mu1| Phi(0, |mu1|)))
inline double kl_upper_bound(double mu1_norm, double mu2_norm) {
  if (!(mu1_norm >= 0.0 && mu2_norm >= 0.0)) throw std::domain_error("kl_upper_bound requires nonnegative norms");
  const double a = mu1_norm;
  const double b = mu2_norm;
  const double inner = b * b - a * a + 1.5 * kSqrt2Pi * std::log(2.0) +
                       2.0 * a * (std::exp(-0.5 * a * a) + kSqrt2Pi * a * phi_interval(0.0, a).value());
  return kInvSqrt2Pi * inner;
}

namespace detail {

// log cosh(y), stable for large |y|.
inline double log_cosh(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace detail

struct KlEstimate {
  double estimate = 0.0;
  double std_err = 0.0;
};

/// Monte Carlo KL(D(mu1) || D(mu2)). The log density ratio only depends on
/// <x, mu1> and <x, mu2>,
///
///   log f1(x)/f2(x) = (|mu2|^2 - |mu1|^2)/2 + log cosh <x,mu1> - log cosh <x,mu2>,
///
/// so x is drawn in the plane spanned by the two means; the orthogonal
/// coordinates are identical under both laws and contribute nothing.
inline KlEstimate kl_monte_carlo(std::span<const double> mu1, std::span<const double> mu2, std::int64_t n,
                                 std::uint64_t seed) {
  if (n < 10000) throw std::domain_error("kl_monte_carlo requires n >= 1e4");
  if (mu1.size() != mu2.size() || mu1.empty()) throw std::domain_error("kl_monte_carlo: dimension mismatch");
  // Plane coordinates: e1 along mu1 (or mu2 if mu1 = 0), e2 completing span.
  const double n1 = norm(mu1);
  const double n2 = norm(mu2);
  double a1 = 0, a2 = 0, b1 = 0, b2 = 0;  // mu1 = (a1, a2), mu2 = (b1, b2)
  if (n1 > 0.0) {
    const Vec e1 = scaled(mu1, 1.0 / n1);
    a1 = n1;
    b1 = dot(mu2, e1);
    Vec r(mu2.begin(), mu2.end());
    axpy(-b1, e1, r);
    b2 = norm(r);
  } else {
    b1 = n2;
  }
  const double offset = 0.5 * (n2 * n2 - n1 * n1);
  Engine eng = make_engine(seed, {0x6b6cULL});
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  double mean = 0.0, m2 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double s = coin(eng) ? 1.0 : -1.0;
    const double x1 = s * a1 + g(eng);
    const double x2 = s * a2 + g(eng);
    const double v = offset + detail::log_cosh(x1 * a1 + x2 * a2) - detail::log_cosh(x1 * b1 + x2 * b2);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

// ---------------------------------------------------------------------------
// Packing codebooks

/// Squared Euclidean distance; the packing certificate is stated in it.
inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double sq_dist_antipodal(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] + b[i]) * (a[i] + b[i]);
  return s;
}

struct PackingCodebook {
  std::size_t dim = 0;
  std::vector<Vec> vectors;
  double min_pairwise = 0.0;   // min over i != j of d(v_i, v_j) and d(v_i, -v_j), squared distance
  double max_norm_sq = 0.0;
  std::int64_t pair_checks = 0;
};

/// Recomputes min_pairwise, max_norm_sq and pair_checks from the vectors.
inline void certify(PackingCodebook& cb) {
  cb.min_pairwise = std::numeric_limits<double>::infinity();
  cb.max_norm_sq = 0.0;
  cb.pair_checks = 0;
  for (std::size_t i = 0; i < cb.vectors.size(); ++i) {
    cb.max_norm_sq = std::max(cb.max_norm_sq, norm_sq(cb.vectors[i]));
    for (std::size_t j = i + 1; j < cb.vectors.size(); ++j) {
      cb.min_pairwise = std::min({cb.min_pairwise, sq_dist(cb.vectors[i], cb.vectors[j]),
                                  sq_dist_antipodal(cb.vectors[i], cb.vectors[j])});
      cb.pair_checks += 2;
    }
  }
}

/// K i.i.d. draws from N(0, I_d / d).
inline PackingCodebook generate_packing(std::size_t d, std::size_t K, std::uint64_t seed) {
  if (d < 10) throw std::domain_error("generate_packing requires d >= 10");
  if (K < 2) throw std::domain_error("generate_packing requires K >= 2");
  Engine eng = make_engine(seed, {0x7061636bULL});
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  PackingCodebook cb;
  cb.dim = d;
  cb.vectors.assign(K, Vec(d));
  for (Vec& v : cb.vectors) {
    for (double& x : v) x = g(eng);
  }
  certify(cb);
  return cb;
}

inline constexpr double kPackingDistThreshold = 1.0 / 5.0;
inline constexpr double kPackingNormSqThreshold = 7.0 / 5.0;

struct PackingViolation {
  std::size_t i = 0;
  std::size_t j = 0;
  bool antipodal = false;  // d(v_i, -v_j) rather than d(v_i, v_j)
  double value = 0.0;
};

struct PackingReport {
  bool passed = false;
  bool distance_ok = false;
  bool norm_ok = false;
  std::vector<PackingViolation> pair_violations;
  std::vector<std::size_t> norm_violations;
};

inline PackingReport verify_packing(const PackingCodebook& cb, double dist_threshold = kPackingDistThreshold,
                                    double norm_sq_threshold = kPackingNormSqThreshold) {
  PackingReport r;
  for (std::size_t i = 0; i < cb.vectors.size(); ++i) {
    if (norm_sq(cb.vectors[i]) > norm_sq_threshold) r.norm_violations.push_back(i);
    for (std::size_t j = i + 1; j < cb.vectors.size(); ++j) {
      const double dp = sq_dist(cb.vectors[i], cb.vectors[j]);
      const double dm = sq_dist_antipodal(cb.vectors[i], cb.vectors[j]);
      if (dp < dist_threshold) r.pair_violations.push_back({i, j, false, dp});
      if (dm < dist_threshold) r.pair_violations.push_back({i, j, true, dm});
    }
  }
  r.distance_ok = r.pair_violations.empty();
  r.norm_ok = r.norm_violations.empty();
  r.passed = r.distance_ok && r.norm_ok;
  return r;
}

/// Failure probability of one random codebook: 2 K^2 e^{-3d/10} + K e^{-2d/15}.
inline double packing_failure_bound(std::size_t d, std::size_t K) {
  const double kk = static_cast<double>(K);
  const double dd = static_cast<double>(d);
  return 2.0 * kk * kk * std::exp(-0.3 * dd) + kk * std::exp(-2.0 * dd / 15.0);
}

struct ChiSqTailReport {
  std::size_t d = 0;
  std::int64_t trials = 0;
  double freq_low = 0.0;    // P[X < d/10]
  double freq_high = 0.0;   // P[X > 7d/5]
  double bound_low = 0.0;   // e^{-3d/10}
  double bound_high = 0.0;  // e^{-2d/15}
  bool low_ok = false;
  bool high_ok = false;
  bool passed() const { return low_ok && high_ok; }
};

inline ChiSqTailReport chisq_tail_check(std::size_t d, std::int64_t trials, std::uint64_t seed) {
  if (d < 1) throw std::domain_error("chisq_tail_check requires d >= 1");
  if (trials < 1000) throw std::domain_error("chisq_tail_check requires trials >= 1e3");
  Engine eng = make_engine(seed, {0x63686971ULL, d});
  std::chi_squared_distribution<double> chi(static_cast<double>(d));
  const double lo = static_cast<double>(d) / 10.0;
  const double hi = 7.0 * static_cast<double>(d) / 5.0;
  std::int64_t n_lo = 0, n_hi = 0;
  for (std::int64_t i = 0; i < trials; ++i) {
    const double x = chi(eng);
    n_lo += x < lo;
    n_hi += x > hi;
  }
  ChiSqTailReport r;
  r.d = d;
  r.trials = trials;
  r.freq_low = static_cast<double>(n_lo) / static_cast<double>(trials);
  r.freq_high = static_cast<double>(n_hi) / static_cast<double>(trials);
  r.bound_low = std::exp(-0.3 * static_cast<double>(d));
  r.bound_high = std::exp(-2.0 * static_cast<double>(d) / 15.0);
  r.low_ok = r.freq_low <= r.bound_low;
  r.high_ok = r.freq_high <= r.bound_high;
  return r;
}

// ---------------------------------------------------------------------------
// Fano

struct FanoInputs {
  double alpha = 0.0;  // pairwise parameter separation
  double beta = 0.0;   // pairwise KL bound
  double r = 0.0;      // number of densities (real so that e^{d/10} fits)
  double n = 0.0;      // sample count
};

/// (alpha/2) (1 - (n beta + log 2) / log(r - 1)); negative values are returned.
inline double fano_bound(const FanoInputs& in) {
  if (!(in.r >= 3.0)) throw std::domain_error("fano_bound requires r >= 3");
  if (!(in.alpha > 0.0)) throw std::domain_error("fano_bound requires alpha > 0");
  if (!(in.beta >= 0.0)) throw std::domain_error("fano_bound requires beta >= 0");
  if (!(in.n >= 0.0)) throw std::domain_error("fano_bound requires n >= 0");
  return 0.5 * in.alpha * (1.0 - (in.n * in.beta + std::log(2.0)) / std::log(in.r - 1.0));
}

struct MinimaxThreshold {
  std::int64_t n_threshold = 0;  // largest integer n with a positive bound (-1 if none)
  double n_star = 0.0;           // real crossing (log(r-1) - log 2) / beta
  double risk_floor = 0.0;       // bound at n_star / 2
  double alpha = 0.0;
  double beta = 0.0;
  double r = 0.0;
};

/// Fano instantiated with the scaled packing: codewords |mu| v_i with
/// |v_i|^2 <= 7/5 and pairwise squared distance >= 1/5, so
/// alpha = |mu| / sqrt(5), beta = kl_upper_bound(m, m) with m = |mu| sqrt(7/5),
/// and r = round(e^{d/10}).
inline MinimaxThreshold minimax_threshold(std::size_t d, double mu_norm) {
  if (!(mu_norm > 1.0)) throw std::domain_error("minimax_threshold requires |mu| > 1");
  if (d < 30) throw std::domain_error("minimax_threshold requires d >= 30");
  MinimaxThreshold t;
  t.alpha = mu_norm / std::sqrt(5.0);
  const double m = mu_norm * std::sqrt(7.0 / 5.0);
  t.beta = kl_upper_bound(m, m);
  t.r = std::round(std::exp(static_cast<double>(d) / 10.0));
  const double L = std::log(t.r - 1.0);
  t.n_star = (L - std::log(2.0)) / t.beta;
  // Largest integer strictly below the crossing.
  auto n_int = static_cast<std::int64_t>(std::ceil(t.n_star)) - 1;
  while (n_int >= 0 && !(fano_bound({t.alpha, t.beta, t.r, static_cast<double>(n_int)}) > 0.0)) --n_int;
  while (fano_bound({t.alpha, t.beta, t.r, static_cast<double>(n_int + 1)}) > 0.0) ++n_int;
  t.n_threshold = n_int;
  t.risk_floor = fano_bound({t.alpha, t.beta, t.r, 0.5 * t.n_star});
  return t;
}

}  // namespace kmlab
