#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kfeller/errors.hpp"
#include "kfeller/real.hpp"

namespace kfeller {

/// Probability weights (w1, w2) of the two ternary contractions
/// S1(x) = x/3 and S2(x) = x/3 + 2/3.
///
/// Construction canonicalizes to w1 <= w2. The limit spectrum is invariant
/// under the reflection x -> 1 - x, so only the ordering is recorded.
class WeightVector {
 public:
  WeightVector() : WeightVector(0.5) {}

  explicit WeightVector(double w1) {
    if (!(w1 > 0.0 && w1 < 1.0)) {
      throw ConfigError("weight w1 must lie in (0,1), got " + std::to_string(w1));
    }
    double w2 = 1.0 - w1;
    if (w1 > w2) {
      swapped_ = true;
      w1 = w2;
    }
    w1_ = w1;
  }

  double w1() const { return w1_; }
  double w2() const { return 1.0 - w1_; }
  bool swapped() const { return swapped_; }
  double weight(int letter) const { return letter == 0 ? w1() : w2(); }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  double w1_ = 0.5;
  bool swapped_ = false;
};

/// Level-n approximant of the invariant Cantor measure with the given weights.
struct CantorLevel {
  WeightVector weights;
  int level = 0;
};

/// Size limits guarding against runaway constructions.
struct Limits {
  std::size_t max_intervals = std::size_t{1} << 20;
  std::size_t max_table_bytes = std::size_t{2} << 30;
};

/// Breakpoints expressed as integers over 3^level. Cantor grids are exact in
/// this form, so conversions to any floating type are correctly rounded.
struct TernaryGrid {
  int level = 0;
  std::vector<std::int64_t> numerators;
};

/// Non-atomic probability measure on [0,1] with piecewise-constant density.
///
/// Gap pieces keep an explicit zero density so the grid stays aligned with
/// the Cantor construction. Immutable after construction.
class Measure {
 public:
  Measure(std::vector<double> breakpoints, std::vector<double> densities)
      : breakpoints_(std::move(breakpoints)), densities_(std::move(densities)) {
    validate_shape();
    std::vector<long double> cumulative(breakpoints_.size(), 0.0L);
    for (std::size_t i = 0; i < densities_.size(); ++i) {
      const long double len =
          static_cast<long double>(breakpoints_[i + 1]) - breakpoints_[i];
      cumulative[i + 1] = cumulative[i] + len * densities_[i];
    }
    finish(cumulative);
  }

  /// Constructs from an exact ternary grid with given cumulative masses at
  /// every breakpoint. Used by the Cantor builder so that F agrees exactly
  /// with the weight products at interval endpoints.
  Measure(TernaryGrid grid, std::vector<double> densities,
          const std::vector<long double>& cumulative)
      : densities_(std::move(densities)), ternary_(std::move(grid)) {
    const auto denom = static_cast<double>(pow3(ternary_->level));
    breakpoints_.reserve(ternary_->numerators.size());
    for (auto num : ternary_->numerators) {
      breakpoints_.push_back(static_cast<double>(num) / denom);
    }
    validate_shape();
    finish(cumulative);
  }

  static Measure lebesgue() { return Measure({0.0, 1.0}, {1.0}); }

  std::size_t pieces() const { return densities_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& densities() const { return densities_; }
  double density(std::size_t piece) const { return densities_.at(piece); }
  const std::optional<TernaryGrid>& ternary() const { return ternary_; }

  /// Breakpoint converted to Real. Ternary grids round once from the exact
  /// rational; otherwise the stored double is widened.
  template <class Real>
  Real breakpoint_as(std::size_t i) const {
    if (ternary_) {
      return static_cast<Real>(ternary_->numerators[i]) /
             static_cast<Real>(pow3(ternary_->level));
    }
    return static_cast<Real>(breakpoints_[i]);
  }

  /// Length of piece i in Real, exact up to one rounding on ternary grids.
  template <class Real>
  Real length_as(std::size_t i) const {
    if (ternary_) {
      return static_cast<Real>(ternary_->numerators[i + 1] - ternary_->numerators[i]) /
             static_cast<Real>(pow3(ternary_->level));
    }
    return static_cast<Real>(breakpoints_[i + 1]) - static_cast<Real>(breakpoints_[i]);
  }

  /// Index of the piece containing t (the left piece at interior breakpoints).
  std::size_t locate(double t) const {
    auto it = std::lower_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, t);
    return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  }

  /// F(t) = mu[0,t]; piecewise linear.
  double cdf(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw DomainError("cdf argument outside [0,1]: " + std::to_string(t));
    }
    return cdf_unchecked(t);
  }

  /// Cumulative mass at breakpoint i.
  double cumulative(std::size_t i) const { return cumulative_[i]; }

  double total_mass() const { return cumulative_.back(); }

  friend bool operator==(const Measure& a, const Measure& b) {
    return a.breakpoints_ == b.breakpoints_ && a.densities_ == b.densities_;
  }

 private:
  double cdf_unchecked(double t) const {
    const std::size_t i = locate(t);
    const double v = cumulative_[i] + densities_[i] * (t - breakpoints_[i]);
    return std::clamp(v, cumulative_[i], cumulative_[i + 1]);
  }

  void validate_shape() const {
    if (breakpoints_.size() < 2 || densities_.size() + 1 != breakpoints_.size()) {
      throw ConfigError("measure needs K+1 breakpoints for K densities");
    }
    if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0) {
      throw ConfigError("measure breakpoints must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] > breakpoints_[i - 1])) {
        throw ConfigError("measure breakpoints must be strictly increasing");
      }
    }
    for (double d : densities_) {
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw ConfigError("measure densities must be finite and nonnegative");
      }
    }
  }

  void finish(const std::vector<long double>& cumulative) {
    if (std::abs(static_cast<double>(cumulative.back()) - 1.0) > 1e-12) {
      throw ConfigError("measure total mass differs from 1 by more than 1e-12");
    }
    cumulative_.assign(cumulative.begin(), cumulative.end());
  }

  std::vector<double> breakpoints_;
  std::vector<double> densities_;
  std::vector<double> cumulative_;
  std::optional<TernaryGrid> ternary_;
};

/// Level-n approximant mu_n^w: mass prod(w_{x_i}) spread uniformly over each
/// Cantor interval I_x of length 3^-n, zero density on the gaps.
inline Measure cantor_approximant(const CantorLevel& spec, const Limits& limits = {}) {
  if (spec.level < 0) throw ConfigError("Cantor level must be nonnegative");
  if (spec.level > 39 || (std::size_t{1} << std::min(spec.level, 62)) > limits.max_intervals) {
    throw ResourceError("Cantor level " + std::to_string(spec.level) +
                        " exceeds the interval cap");
  }
  const int n = spec.level;
  const std::int64_t denom = pow3(n);

  // Support intervals in left-to-right order: (left numerator, mass).
  std::vector<std::pair<std::int64_t, long double>> support{{0, 1.0L}};
  std::int64_t len = denom;
  for (int k = 0; k < n; ++k) {
    const std::int64_t child = len / 3;
    std::vector<std::pair<std::int64_t, long double>> next;
    next.reserve(support.size() * 2);
    for (const auto& [left, mass] : support) {
      next.emplace_back(left, mass * spec.weights.w1());
      next.emplace_back(left + 2 * child, mass * spec.weights.w2());
    }
    support = std::move(next);
    len = child;
  }

  TernaryGrid grid{n, {0}};
  std::vector<double> densities;
  std::vector<long double> cumulative{0.0L};
  const long double scale = static_cast<long double>(denom);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto [left, mass] = support[i];
    if (left != grid.numerators.back()) {
      grid.numerators.push_back(left);
      densities.push_back(0.0);
      cumulative.push_back(cumulative.back());
    }
    grid.numerators.push_back(left + len);
    densities.push_back(static_cast<double>(mass * scale));
    cumulative.push_back(cumulative.back() + mass);
  }
  return Measure(std::move(grid), std::move(densities), cumulative);
}

/// Distribution function F(t) = mu[0,t].
inline double cdf(const Measure& measure, double t) { return measure.cdf(t); }

/// Exact sup over [0,1] of |F_a - F_b|. Both CDFs are piecewise linear, so
/// the supremum is attained on the merged breakpoint grid.
inline double cdf_sup_distance(const Measure& a, const Measure& b) {
  std::vector<double> grid;
  grid.reserve(a.breakpoints().size() + b.breakpoints().size());
  std::merge(a.breakpoints().begin(), a.breakpoints().end(), b.breakpoints().begin(),
             b.breakpoints().end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double sup = 0.0;
  for (double t : grid) sup = std::max(sup, std::abs(a.cdf(t) - b.cdf(t)));
  return sup;
}

namespace detail {
inline double cdf_extended(const Measure& m, double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return m.cdf(s);
}
}  // namespace detail

/// Max over samples of |F_n(y) - w1 F_{n-1}(3y) - w2 F_{n-1}(3y-2)|, with
/// F(s) = 0 for s <= 0 and F(s) = 1 for s >= 1.
inline double verify_refinement_identity(const CantorLevel& spec,
                                         std::span<const double> samples) {
  if (spec.level < 1) throw ConfigError("refinement identity needs level >= 1");
  const Measure fine = cantor_approximant(spec);
  const Measure coarse = cantor_approximant({spec.weights, spec.level - 1});
  const double w1 = spec.weights.w1();
  const double w2 = spec.weights.w2();
  double defect = 0.0;
  for (double y : samples) {
    const double lhs = fine.cdf(y);
    const double rhs = w1 * detail::cdf_extended(coarse, 3.0 * y) +
                       w2 * detail::cdf_extended(coarse, 3.0 * y - 2.0);
    defect = std::max(defect, std::abs(lhs - rhs));
  }
  return defect;
}

/// Certified enclosure of ||F_mu - F_n|| for the singular limit measure mu^w.
struct DistanceBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Encloses the distance from mu_n^w to the limit measure using level
/// `reference` > n. F_mu equals F_reference at every reference breakpoint and
/// is monotone in between, which yields the enclosure.
inline DistanceBounds limit_cdf_distance_bounds(const WeightVector& w, int n, int reference,
                                                const Limits& limits = {}) {
  if (reference <= n) throw ConfigError("reference level must exceed n");
  const Measure coarse = cantor_approximant({w, n}, limits);
  const Measure fine = cantor_approximant({w, reference}, limits);
  DistanceBounds out;
  const auto& bp = fine.breakpoints();
  for (std::size_t i = 0; i < fine.pieces(); ++i) {
    const double a = bp[i];
    const double b = bp[i + 1];
    const double fa = fine.cumulative(i);
    const double fb = fine.cumulative(i + 1);
    const double ga = coarse.cdf(a);
    const double gb = coarse.cdf(b);
    out.lower = std::max({out.lower, std::abs(fa - ga), std::abs(fb - gb)});
    if (fine.density(i) > 0.0) {
      out.upper = std::max({out.upper, fb - ga, gb - fa});
    }
  }
  out.upper = std::max(out.upper, out.lower);
  return out;
}

}  // namespace kfeller
