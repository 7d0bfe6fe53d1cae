#pragma once

// Finite-sample 2-means-iterate: the separator is always a hyperplane through
// the origin, each round uses a fresh batch, and u_{t+1} is the empirical mean
// of the batch points on the positive side of u_t.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmlab/dynamics.hpp"
#include "kmlab/linalg.hpp"
#include "kmlab/mixture.hpp"
#include "kmlab/rng.hpp"

namespace kmlab {

/// Where points with <x, u> == 0 go. The cluster is {x : <x,u> > 0}, so the
/// default sends ties to the complement.
enum class TieRule { ToComplement, ToCluster };

struct AlgoConfig {
  std::int64_t iterations = 10;
  InitStrategy init = InitStrategy::RandomUnit;
  Vec explicit_u;  // used when init == Explicit
  TieRule tie_rule = TieRule::ToComplement;
  std::uint64_t seed = 1;
};

struct EmpiricalRound {
  std::int64_t t = 0;          // round index, 1-based (produces u_t)
  Vec u;                       // unnormalized empirical mean of the cluster
  std::int64_t n_in_cluster = 0;
  std::int64_t batch_size = 0;
  Vec s_hat;                   // batch mean of x 1{x in cluster}
};

class EmptyClusterError : public std::runtime_error {
 public:
  EmptyClusterError(std::int64_t round, const std::string& context = {})
      : std::runtime_error("empty cluster in round " + std::to_string(round) +
                           (context.empty() ? std::string() : " (" + context + ")")),
        round_(round) {}
  std::int64_t round() const { return round_; }

 private:
  std::int64_t round_;
};

/// Streaming halfspace mean over one batch.
class HalfspaceAccumulator {
 public:
  HalfspaceAccumulator(std::span<const double> u, TieRule tie) : u_(u.begin(), u.end()), sum_(u.size(), 0.0), tie_(tie) {}

  void add(std::span<const double> x) {
    ++total_;
    const double side = dot(x, u_);
    if (side > 0.0 || (side == 0.0 && tie_ == TieRule::ToCluster)) {
      ++count_;
      axpy(1.0, x, sum_);
    }
  }

  std::int64_t count() const { return count_; }
  std::int64_t total() const { return total_; }
  const Vec& sum() const { return sum_; }

  EmpiricalRound finish(std::int64_t t) const {
    if (count_ == 0) throw EmptyClusterError(t);
    EmpiricalRound r;
    r.t = t;
    r.n_in_cluster = count_;
    r.batch_size = total_;
    r.u = scaled(sum_, 1.0 / static_cast<double>(count_));
    r.s_hat = scaled(sum_, 1.0 / static_cast<double>(total_));
    return r;
  }

 private:
  Vec u_;
  Vec sum_;
  TieRule tie_;
  std::int64_t count_ = 0;
  std::int64_t total_ = 0;
};

struct TwoMeansResult {
  Vec u_final;
  std::vector<EmpiricalRound> rounds;
};

/// Runs N rounds on a materialized sample set. The points (minus `exclude`,
/// if given) are shuffled with `seed` and cut into N equal batches; the
/// remainder is dropped.
inline TwoMeansResult two_means_iterate(const SampleSet& samples, std::int64_t N, std::span<const double> u0,
                                        std::uint64_t seed = 0, TieRule tie = TieRule::ToComplement,
                                        std::optional<std::size_t> exclude = std::nullopt) {
  if (N < 1) throw std::domain_error("two_means_iterate requires N >= 1");
  if (u0.size() != samples.dim) throw std::domain_error("two_means_iterate: dimension mismatch");
  if (!(norm(u0) > 0.0)) throw std::domain_error("two_means_iterate: u0 is the zero vector");
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (exclude) idx.erase(std::remove(idx.begin(), idx.end(), *exclude), idx.end());
  if (idx.size() < static_cast<std::size_t>(N)) throw std::domain_error("two_means_iterate requires |S| >= N");
  Engine perm = make_engine(seed, {0x7065726dULL});
  std::shuffle(idx.begin(), idx.end(), perm);
  const std::size_t batch = idx.size() / static_cast<std::size_t>(N);

  TwoMeansResult res;
  Vec u(u0.begin(), u0.end());
  for (std::int64_t t = 0; t < N; ++t) {
    HalfspaceAccumulator acc(u, tie);
    const std::size_t lo = static_cast<std::size_t>(t) * batch;
    for (std::size_t i = lo; i < lo + batch; ++i) acc.add(samples.row(idx[i]));
    EmpiricalRound r = acc.finish(t + 1);
    u = r.u;
    res.rounds.push_back(std::move(r));
  }
  res.u_final = u;
  return res;
}

namespace streams {
inline constexpr std::uint64_t kInit = 0x696e6974ULL;
inline constexpr std::uint64_t kRound = 0x726f756eULL;
}  // namespace streams

/// Starting vector. RandomUnit: normalized standard Gaussian. RandomSample:
/// one fresh draw from the model on its own stream, so it never appears in a
/// batch. Explicit: pass-through (must be nonzero).
inline Vec init_vector(const AlgoConfig& config, const MixtureModel& model, std::uint64_t trial = 0) {
  switch (config.init) {
    case InitStrategy::Explicit:
      if (config.explicit_u.size() != model.dim()) throw std::domain_error("explicit u0 has the wrong dimension");
      if (!(norm(config.explicit_u) > 0.0)) throw std::domain_error("explicit u0 is the zero vector");
      return config.explicit_u;
    case InitStrategy::RandomUnit: {
      Engine eng = make_engine(config.seed, {streams::kInit, trial});
      std::normal_distribution<double> g(0.0, 1.0);
      Vec u(model.dim());
      for (double& x : u) x = g(eng);
      return normalized(u);
    }
    case InitStrategy::RandomSample: {
      Engine eng = make_engine(config.seed, {streams::kInit, trial});
      Vec u;
      for_each_sample(model, 1, eng, [&](std::span<const double> x, std::uint32_t) { u.assign(x.begin(), x.end()); });
      return u;
    }
  }
  throw std::domain_error("unknown init strategy");
}

/// Sample-file variant: RandomSample takes one point (chosen with the seed)
/// and reports it so the caller can hold it out of the batches.
struct InitChoice {
  Vec u;
  std::optional<std::size_t> held_out;
};

inline InitChoice init_vector(const AlgoConfig& config, const SampleSet& samples) {
  if (config.init == InitStrategy::RandomSample) {
    if (samples.size() == 0) throw std::domain_error("RandomSample init needs at least one sample");
    Engine eng = make_engine(config.seed, {streams::kInit});
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    const std::size_t i = pick(eng);
    const auto row = samples.row(i);
    return {Vec(row.begin(), row.end()), i};
  }
  if (config.init == InitStrategy::Explicit) {
    if (config.explicit_u.size() != samples.dim || !(norm(config.explicit_u) > 0.0)) {
      throw std::domain_error("explicit u0 must be a nonzero vector of the sample dimension");
    }
    return {config.explicit_u, std::nullopt};
  }
  Engine eng = make_engine(config.seed, {streams::kInit});
  std::normal_distribution<double> g(0.0, 1.0);
  Vec u(samples.dim);
  for (double& x : u) x = g(eng);
  return {normalized(u), std::nullopt};
}

struct TrialResult {
  Trajectory trajectory;             // empirical cos^2 per round (t = 0 is u0)
  std::vector<EmpiricalRound> rounds;
  Vec u0;
};

/// One seeded trial on freshly generated data: n_total / N points per round,
/// each round drawn on the stream (seed, trial, round). This is the same
/// distribution as sampling n_total points and partitioning them at random,
/// without holding all of them in memory.
inline TrialResult run_trial_detailed(const MixtureModel& model, std::int64_t n_total, const AlgoConfig& config,
                                      std::uint64_t trial = 0) {
  if (config.iterations < 1) throw std::domain_error("AlgoConfig.iterations must be >= 1");
  if (n_total < config.iterations) throw std::domain_error("run_trial requires n_total >= iterations");
  const MeanSubspace sub = mean_subspace(model);
  const std::int64_t batch = n_total / config.iterations;
  TrialResult res;
  res.u0 = init_vector(config, model, trial);
  Vec u = res.u0;
  double cos2 = cos2_to_subspace(sub, u);
  res.trajectory.records.push_back({0, cos2, 1.0, regime_classify(model, direction_state(model, u)), 0});
  for (std::int64_t t = 1; t <= config.iterations; ++t) {
    HalfspaceAccumulator acc(u, config.tie_rule);
    Engine eng = make_engine(config.seed, {streams::kRound, trial, static_cast<std::uint64_t>(t)});
    for_each_sample(model, static_cast<std::size_t>(batch), eng,
                    [&](std::span<const double> x, std::uint32_t) { acc.add(x); });
    if (acc.count() == 0) {
      throw EmptyClusterError(t, "seed " + std::to_string(config.seed) + ", trial " + std::to_string(trial));
    }
    EmpiricalRound r = acc.finish(t);
    const double next = cos2_to_subspace(sub, r.u);
    const double growth = cos2 > 0.0 ? next / cos2 : 1.0;
    u = r.u;
    cos2 = next;
    res.trajectory.records.push_back({t, cos2, growth, regime_classify(model, direction_state(model, u)), batch});
    res.rounds.push_back(std::move(r));
  }
  res.trajectory.final_u = u;
  return res;
}

inline Trajectory run_trial(const MixtureModel& model, std::int64_t n_total, const AlgoConfig& config,
                            std::uint64_t trial = 0) {
  return run_trial_detailed(model, n_total, config, trial).trajectory;
}

}  // namespace kmlab
