#pragma once

// Mixtures of spherical Gaussians: data types, assumption checks, seeded
// sampling and the separation parameters M and V.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <limits>
#include <sstream>
#include <string_view>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmlab/linalg.hpp"
#include "kmlab/rng.hpp"

namespace kmlab {

struct Component {
  Vec mean;
  double sigma = 1.0;
  double weight = 0.0;
};

/// k >= 2 spherical components sharing one dimension.
///
/// Construction rejects structurally broken input (empty means, mixed
/// dimensions, non-positive sigma or weight, non-finite entries). The
/// statistical assumptions (weights summing to one, centering at the
/// origin) are reported by validate() rather than enforced here, so that a
/// misconfigured experiment can be inspected instead of silently repaired.
class MixtureModel {
 public:
  explicit MixtureModel(std::vector<Component> components)
      : components_(std::move(components)) {
    if (components_.size() < 2) throw std::domain_error("mixture needs at least 2 components");
    dim_ = components_.front().mean.size();
    if (dim_ == 0) throw std::domain_error("mixture dimension must be positive");
    for (std::size_t j = 0; j < components_.size(); ++j) {
      const Component& c = components_[j];
      const std::string where = "component " + std::to_string(j) + ": ";
      if (c.mean.size() != dim_) throw std::domain_error(where + "dimension mismatch");
      if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) throw std::domain_error(where + "sigma must be > 0");
      if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw std::domain_error(where + "weight must be > 0");
      for (double v : c.mean) {
        if (!std::isfinite(v)) throw std::domain_error(where + "mean is not finite");
      }
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t k() const { return components_.size(); }
  const std::vector<Component>& components() const { return components_; }
  const Component& operator[](std::size_t j) const { return components_.at(j); }

  friend bool operator==(const MixtureModel& a, const MixtureModel& b) {
    if (a.dim_ != b.dim_ || a.k() != b.k()) return false;
    for (std::size_t j = 0; j < a.k(); ++j) {
      const Component& x = a.components_[j];
      const Component& y = b.components_[j];
      if (x.mean != y.mean || x.sigma != y.sigma || x.weight != y.weight) return false;
    }
    return true;
  }

 private:
  std::vector<Component> components_;
  std::size_t dim_ = 0;
};

inline constexpr double kWeightSumTol = 1e-12;
inline constexpr double kCenteringTol = 1e-10;

struct ValidationReport {
  struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
  };
  std::vector<Check> checks;
  std::vector<std::string> warnings;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  const Check* find(std::string_view name) const {
    for (const Check& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

/// Center of mass sum_j rho^j mu^j.
inline Vec center_of_mass(const MixtureModel& model) {
  Vec c(model.dim(), 0.0);
  for (const Component& comp : model.components()) axpy(comp.weight, comp.mean, c);
  return c;
}

inline ValidationReport validate(const MixtureModel& model) {
  ValidationReport r;
  double wsum = 0.0;
  for (const Component& c : model.components()) wsum += c.weight;
  {
    std::ostringstream os;
    os << "sum of weights = " << wsum;
    r.checks.push_back({"weights_sum_to_one", std::abs(wsum - 1.0) <= kWeightSumTol, os.str()});
  }
  {
    bool in_range = true;
    for (const Component& c : model.components()) in_range = in_range && c.weight > 0.0 && c.weight <= 1.0;
    r.checks.push_back({"weights_in_range", in_range, "each weight in (0,1]"});
  }
  {
    const Vec com = center_of_mass(model);
    double worst = 0.0;
    for (double v : com) worst = std::max(worst, std::abs(v));
    std::ostringstream os;
    os << "max |sum rho mu| coordinate = " << worst;
    r.checks.push_back({"centered_at_origin", worst <= kCenteringTol, os.str()});
  }
  for (std::size_t j = 0; j < model.k(); ++j) {
    if (model[j].sigma < 1.0) {
      r.warnings.push_back("component " + std::to_string(j) + " has sigma < 1 (" +
                           std::to_string(model[j].sigma) + ")");
    }
  }
  return r;
}

/// Throws std::domain_error naming every failed check.
inline void require_valid(const MixtureModel& model) {
  const ValidationReport r = validate(model);
  if (r.ok()) return;
  std::string msg = "invalid mixture:";
  for (const auto& c : r.checks) {
    if (!c.passed) msg += " [" + c.name + ": " + c.detail + "]";
  }
  throw std::domain_error(msg);
}

/// Shifts every mean by -sum_j rho^j mu^j.
inline MixtureModel recenter(const MixtureModel& model) {
  const Vec com = center_of_mass(model);
  double wsum = 0.0;
  for (const Component& c : model.components()) wsum += c.weight;
  std::vector<Component> comps = model.components();
  for (Component& c : comps) axpy(-1.0 / wsum, com, c.mean);
  return MixtureModel(std::move(comps));
}

/// Means +-mu_norm e_1, unit sigmas, equal weights.
inline MixtureModel symmetric_pair(double mu_norm, std::size_t d) {
  if (!(mu_norm > 0.0)) throw std::domain_error("symmetric_pair requires mu_norm > 0");
  if (d < 1) throw std::domain_error("symmetric_pair requires d >= 1");
  Vec m1(d, 0.0), m2(d, 0.0);
  m1[0] = mu_norm;
  m2[0] = -mu_norm;
  return MixtureModel({{std::move(m1), 1.0, 0.5}, {std::move(m2), 1.0, 0.5}});
}

struct SeparationSummary {
  double M = 0.0;          // sum_j rho^j ||mu^j||^2 / sigma^j
  double V = 0.0;          // sum_j rho^j sigma^j
  double rho_min = 0.0;
  double mu_min = 0.0;
  double mu_max = 0.0;
  double sigma_max = 0.0;
  std::optional<double> bold_mu;  // common ||mu|| of a symmetric equal pair
};

inline SeparationSummary separation_summary(const MixtureModel& model) {
  require_valid(model);
  SeparationSummary s;
  s.rho_min = std::numeric_limits<double>::infinity();
  s.mu_min = std::numeric_limits<double>::infinity();
  for (const Component& c : model.components()) {
    const double n2 = norm_sq(c.mean);
    s.M += c.weight * n2 / c.sigma;
    s.V += c.weight * c.sigma;
    s.rho_min = std::min(s.rho_min, c.weight);
    s.mu_min = std::min(s.mu_min, std::sqrt(n2));
    s.mu_max = std::max(s.mu_max, std::sqrt(n2));
    s.sigma_max = std::max(s.sigma_max, c.sigma);
  }
  if (model.k() == 2) {
    const Component& a = model[0];
    const Component& b = model[1];
    bool antipodal = true;
    for (std::size_t i = 0; i < model.dim(); ++i) antipodal = antipodal && std::abs(a.mean[i] + b.mean[i]) <= 1e-12;
    if (antipodal && std::abs(a.weight - b.weight) <= 1e-12 && std::abs(a.sigma - b.sigma) <= 1e-12) {
      s.bold_mu = norm(a.mean);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sampling

/// Row-major sample matrix with ground-truth component labels.
struct SampleSet {
  std::size_t dim = 0;
  std::vector<double> points;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {points.data() + i * dim, dim}; }
};

struct LabeledSample {
  std::span<const double> point;
  std::uint32_t label;
};

inline LabeledSample at(const SampleSet& s, std::size_t i) { return {s.row(i), s.labels.at(i)}; }

/// Draws n points from `engine`, calling fn(point, label) for each. The
/// point buffer is reused between calls.
template <class Fn>
void for_each_sample(const MixtureModel& model, std::size_t n, Engine& engine, Fn&& fn) {
  std::vector<double> weights;
  for (const Component& c : model.components()) weights.push_back(c.weight);
  std::discrete_distribution<std::uint32_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec x(model.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t j = pick(engine);
    const Component& c = model[j];
    for (std::size_t q = 0; q < x.size(); ++q) x[q] = c.mean[q] + c.sigma * gauss(engine);
    fn(std::span<const double>(x), j);
  }
}

inline SampleSet sample(const MixtureModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::domain_error("sample requires n >= 1");
  SampleSet s;
  s.dim = model.dim();
  s.points.reserve(n * s.dim);
  s.labels.reserve(n);
  Engine engine = make_engine(seed);
  for_each_sample(model, n, engine, [&](std::span<const double> x, std::uint32_t label) {
    s.points.insert(s.points.end(), x.begin(), x.end());
    s.labels.push_back(label);
  });
  return s;
}

}  // namespace kmlab
