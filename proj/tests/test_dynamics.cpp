#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "kmlab/dynamics.hpp"

using namespace kmlab;

namespace {

MixtureModel random_two_component(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> w(0.05, 0.95), sg(0.3, 3.0), mu(0.01, 5.0);
  std::normal_distribution<double> g;
  Vec dir(d);
  for (double& x : dir) x = g(rng);
  dir = normalized(dir);
  const double rho = w(rng);
  const double a = mu(rng);
  // Centered: rho a - (1 - rho) b = 0.
  const double b = rho * a / (1.0 - rho);
  return MixtureModel({{scaled(dir, a), sg(rng), rho}, {scaled(dir, -b), sg(rng), 1.0 - rho}});
}

MixtureModel random_k(std::mt19937_64& rng, std::size_t k, std::size_t d) {
  std::uniform_real_distribution<double> w(0.2, 1.0), sg(0.5, 2.0);
  std::normal_distribution<double> g;
  std::vector<Component> comps;
  double wsum = 0;
  for (std::size_t j = 0; j < k; ++j) {
    Vec m(d);
    for (double& x : m) x = 1.5 * g(rng);
    comps.push_back({m, sg(rng), w(rng)});
    wsum += comps.back().weight;
  }
  for (auto& c : comps) c.weight /= wsum;
  return recenter(MixtureModel(comps));
}

}  // namespace

TEST(Dynamics, FrozenRecurrenceValues) {
  const auto m = symmetric_pair(1.0, 16);
  EXPECT_NEAR(recurrence_step_cos2(m, 0.5), 0.826763239522916297, 1e-14);

  const Vec u = direction_from_cos2(m, 0.5);
  const auto state = direction_state(m, u);
  const auto t = compute_terms(m, state);
  EXPECT_NEAR(t.xi, 0.310696560376927745, 1e-15);
  EXPECT_NEAR(t.m, 0.260249938906523269, 1e-15);
  EXPECT_NEAR(t.z, 0.5, 1e-15);
  // <S, u> = xi + m cos
  const Vec e = expected_center(m, state);
  EXPECT_NEAR(dot(e, state.u) * t.z, 0.494721056981115055, 1e-14);
}

TEST(Dynamics, RatioFormMatchesTanForm) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto m = random_two_component(rng, 6);
    const double c2 = x(rng);
    const Vec u = direction_from_cos2(m, c2);
    EXPECT_NEAR(recurrence_step_k(m, u).cos2_next, recurrence_step_cos2(m, c2), 1e-12);
  }
}

TEST(Dynamics, FixedPointsAndMonotonicity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> x(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const auto m = random_two_component(rng, 3);
    EXPECT_EQ(recurrence_step_cos2(m, 0.0), 0.0);
    EXPECT_EQ(recurrence_step_cos2(m, 1.0), 1.0);
    for (int j = 0; j < 20; ++j) {
      const double c2 = x(rng);
      EXPECT_GE(recurrence_step_cos2(m, c2), c2);
    }
  }
  EXPECT_THROW(recurrence_step_cos2(symmetric_pair(1.0, 3), 1.5), std::domain_error);
}

// Independent oracle for S = E[X 1{<X,u> > 0}] in d = 2: integrate the mixture
// density over the halfplane in coordinates (a along u, b along u_perp).
TEST(Dynamics, ExpectedCenterMatchesQuadrature) {
  std::mt19937_64 rng(5);
  boost::math::quadrature::exp_sinh<double> half;
  boost::math::quadrature::sinh_sinh<double> full;
  const double inf = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 6; ++rep) {
    const auto m = random_k(rng, 2 + rep % 3, 2);
    std::normal_distribution<double> g;
    Vec u = normalized(Vec{g(rng), g(rng)});
    const Vec up{-u[1], u[0]};
    auto density = [&](double a, double b) {
      double f = 0;
      for (const auto& c : m.components()) {
        const double x0 = a * u[0] + b * up[0] - c.mean[0];
        const double x1 = a * u[1] + b * up[1] - c.mean[1];
        f += c.weight * gauss_pdf(x0 / c.sigma) * gauss_pdf(x1 / c.sigma) / (c.sigma * c.sigma);
      }
      return f;
    };
    auto moment = [&](int which) {
      return half.integrate(
          [&](double a) {
            return full.integrate([&](double b) { return (which == 0 ? a : (which == 1 ? b : 1.0)) * density(a, b); });
          },
          0.0, inf);
    };
    const double Sa = moment(0), Sb = moment(1), Z = moment(2);
    const Vec e = expected_center(m, direction_state(m, u));
    EXPECT_NEAR(dot(e, u), Sa / Z, 1e-8);
    EXPECT_NEAR(dot(e, up), Sb / Z, 1e-8);
    EXPECT_NEAR(compute_terms(m, direction_state(m, u)).z, Z, 1e-9);
  }
}

TEST(Dynamics, GeneralKStepAgreesWithExpectedCenter) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = random_k(rng, 3, 10);
    std::normal_distribution<double> g;
    Vec u(10);
    for (double& x : u) x = g(rng);
    const auto step = recurrence_step_k(m, u);
    const Vec e = expected_center(m, direction_state(m, u));
    EXPECT_NEAR(step.cos2_next, cos2_to_subspace(m, e), 1e-10);
    EXPECT_FALSE(step.degenerate);
  }
}

TEST(Dynamics, DegenerateAndInsideDirections) {
  const auto m = symmetric_pair(1.5, 4);
  const auto orth = recurrence_step_k(m, unit_vector(4, 2));
  EXPECT_TRUE(orth.degenerate);
  EXPECT_EQ(orth.cos2_next, 0.0);
  const auto inside = recurrence_step_k(m, unit_vector(4, 0));
  EXPECT_EQ(inside.cos2_next, 1.0);
  EXPECT_FALSE(inside.degenerate);
}

TEST(Dynamics, ExpectedCenterStaysInSpanOfUAndMeans) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = random_k(rng, 2, 8);
    std::normal_distribution<double> g;
    Vec u(8);
    for (double& x : u) x = g(rng);
    u = normalized(u);
    Vec e = expected_center(m, direction_state(m, u));
    // Remove the u and mean-subspace components; nothing should remain.
    MeanSubspace sub = mean_subspace(m);
    auto extra = detail::pivoted_gram_schmidt({u}, sub.basis, 1e-12, 1);
    sub.basis.insert(sub.basis.end(), extra.begin(), extra.end());
    const Vec p = sub.project(e);
    axpy(-1.0, p, e);
    EXPECT_LT(norm(e), 1e-12);
  }
}

TEST(Dynamics, ExactTrajectoryIsMonotoneAndConverges) {
  const auto m = symmetric_pair(1.0, 100);
  const Vec u0 = direction_from_cos2(m, 0.01);
  const auto tr = exact_trajectory(m, u0, 200);
  for (std::size_t i = 1; i < tr.records.size(); ++i) EXPECT_GE(tr.records[i].cos2, tr.records[i - 1].cos2);
  EXPECT_GE(tr.records.back().cos2, 0.9);
  EXPECT_NEAR(tr.records.front().cos2, 0.01, 1e-14);

  const auto stop = exact_trajectory(m, u0, 200, 0.5);
  EXPECT_GE(stop.records.back().cos2, 0.5);
  EXPECT_LT(stop.records[stop.records.size() - 2].cos2, 0.5);
}

TEST(Dynamics, RegimeClassification) {
  EXPECT_EQ(regime_classify(symmetric_pair(0.5, 4), 0.9), Regime::SmallMu);
  EXPECT_EQ(regime_classify(symmetric_pair(2.0, 4), 0.01), Regime::LargeMuSmallTau);
  EXPECT_EQ(regime_classify(symmetric_pair(2.0, 4), 0.5), Regime::LargeMuLargeTau);
  // Either side of tau = threshold.
  const double mu = 2.0;
  const double c2 = kSmallTauThreshold * kSmallTauThreshold / (mu * mu);
  EXPECT_EQ(regime_classify(symmetric_pair(mu, 4), c2 * (1.0 - 1e-12)), Regime::LargeMuSmallTau);
  EXPECT_EQ(regime_classify(symmetric_pair(mu, 4), c2 * (1.0 + 1e-12)), Regime::LargeMuLargeTau);
  EXPECT_EQ(to_string(Regime::LargeMuLargeTau), "large_mu_large_tau");
}

TEST(Dynamics, RateBoundsSandwichTheMapWithShippedConstants) {
  const auto a = default_rate_constants();
  for (double mu : {0.2, 0.55, 0.8, 1.7, 2.9}) {
    const auto m = symmetric_pair(mu, 8);
    for (double c2 : {0.02, 0.1, 0.3, 0.6, 0.95}) {
      const auto b = rate_bounds(m, c2, a);
      const double f = recurrence_step_cos2(m, c2);
      EXPECT_LE(b.lower, f) << mu << " " << c2;
      EXPECT_GE(b.upper, f) << mu << " " << c2;
    }
  }
}

TEST(Dynamics, ConvergenceTimeFormula) {
  const auto m = symmetric_pair(1.0, 100);
  // ln(100)/ln 2 + 1/ln 1.1 = 17.1359...
  EXPECT_EQ(predict_convergence_time(m, 0.01, 0.1, 1.0), 18);
  EXPECT_THROW(predict_convergence_time(m, 0.0, 0.1, 1.0), std::domain_error);
  EXPECT_THROW(predict_convergence_time(MixtureModel({{{1.0}, 1.0, 0.25}, {{-1.0 / 3}, 1.0, 0.75}}), 0.5, 0.1, 1.0),
               std::domain_error);
}

TEST(Dynamics, InitScale) {
  const auto m = symmetric_pair(2.0, 100);
  EXPECT_DOUBLE_EQ(init_cos2_theory(InitStrategy::RandomUnit, m), 0.01);
  EXPECT_DOUBLE_EQ(init_cos2_theory(InitStrategy::RandomSample, m), 0.09);
  EXPECT_DOUBLE_EQ(init_cos2_theory(InitStrategy::RandomSample, symmetric_pair(20.0, 100)), 1.0);
  EXPECT_THROW(init_cos2_theory(InitStrategy::Explicit, m), std::domain_error);
}

TEST(Dynamics, MeanSubspaceRank) {
  MixtureModel m({{{1.0, 1.0, 0.0}, 1.0, 0.5}, {{-1.0, -1.0, 0.0}, 1.0, 0.5}});
  EXPECT_EQ(mean_subspace(m).rank(), 1u);
  std::mt19937_64 rng(1);
  EXPECT_EQ(mean_subspace(random_k(rng, 4, 10)).rank(), 3u);  // centered: k - 1
}
