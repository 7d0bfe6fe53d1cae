#pragma once

// Scalar Gaussian special functions and truncated-moment primitives.
//
// Every interval probability goes through erfc/erf of the side that keeps
// the result away from 1, so tail masses keep full relative precision far
// out (|x| > 8) instead of collapsing through 1 - CDF.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace kmlab {

/// sqrt(ln(9 / (2 pi))): regime boundary for ||mu||/sigma and |tau|/sigma.
inline constexpr double kSmallTauThreshold = 0.599456012503731502300860713216;

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kSqrt2Pi = 2.50662827463100050241576528481;

/// A value known to lie in [0, 1].
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("Probability out of [0,1]: " + std::to_string(v));
    }
  }
  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Standard normal density; underflows to 0 for large |x|.
inline double gauss_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

namespace detail {

// Upper tail P[Z > x].
inline double upper_tail(double x) {
  if (x == std::numeric_limits<double>::infinity()) return 0.0;
  if (x == -std::numeric_limits<double>::infinity()) return 1.0;
  return 0.5 * std::erfc(x * std::numbers::sqrt2 * 0.5);
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace detail

/// P[a <= Z <= b] for Z ~ N(0,1). Infinite endpoints are allowed.
inline Probability phi_interval(double a, double b) {
  if (std::isnan(a) || std::isnan(b) || a > b) {
    throw std::domain_error("phi_interval requires a <= b");
  }
  double p;
  if (a >= 0.0) {
    p = detail::upper_tail(a) - detail::upper_tail(b);
  } else if (b <= 0.0) {
    p = detail::upper_tail(-b) - detail::upper_tail(-a);
  } else {
    // Straddles zero: sum the two half-intervals, each computed from its tail.
    p = (0.5 - detail::upper_tail(-a)) + (0.5 - detail::upper_tail(b));
  }
  return Probability(detail::clamp01(p));
}

/// P[N(tau, sigma^2) > 0] = Phi(-tau/sigma, inf).
inline Probability halfspace_mass(double tau, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("halfspace_mass requires sigma > 0");
  return Probability(detail::clamp01(detail::upper_tail(-tau / sigma)));
}

/// E[Y 1{Y > 0}] for Y ~ N(tau, sigma^2).
///
/// Divide by halfspace_mass(tau, sigma) for the conditional mean E[Y | Y > 0].
inline double truncated_first_moment(double tau, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::domain_error("truncated_first_moment requires sigma > 0");
  }
  return tau * halfspace_mass(tau, sigma).value() + sigma * gauss_pdf(tau / sigma);
}

struct SmallTauBounds {
  double lower;
  double upper;
};

/// Linear bracket of Phi(-tau, tau) valid on [0, kSmallTauThreshold].
inline SmallTauBounds small_tau_bounds(double tau) {
  if (!(tau >= 0.0 && tau <= kSmallTauThreshold)) {
    throw std::domain_error("small_tau_bounds requires 0 <= tau <= sqrt(ln(9/2pi))");
  }
  return {5.0 * tau / (3.0 * kSqrt2Pi), 2.0 * tau / kSqrt2Pi};
}

}  // namespace kmlab
