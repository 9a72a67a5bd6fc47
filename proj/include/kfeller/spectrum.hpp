#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "kfeller/errors.hpp"
#include "kfeller/measure.hpp"
#include "kfeller/trig_table.hpp"

namespace kfeller {

enum class Boundary { neumann, dirichlet };

inline const char* to_string(Boundary b) { return b == Boundary::neumann ? "neumann" : "dirichlet"; }

inline Boundary parse_boundary(const std::string& s) {
  if (s == "neumann" || s == "N" || s == "n") return Boundary::neumann;
  if (s == "dirichlet" || s == "D" || s == "d") return Boundary::dirichlet;
  throw ConfigError("unknown boundary type '" + s + "'");
}

/// Neumann eigenvalues are zeros of sinp, Dirichlet eigenvalues zeros of sinq.
inline TrigFunction sine_of(Boundary b) {
  return b == Boundary::neumann ? TrigFunction::sinp : TrigFunction::sinq;
}

struct RootOptions {
  /// Bracket width target relative to max(1, z).
  double tol = 1e-12;
  /// Tail bound the working table must certify over the scanned range.
  double max_tail = 1e-15;
  double z_ceiling = 1e3;
  std::size_t max_order = 800;
  Limits limits;
};

struct EigenvalueRecord {
  int index = 0;
  Boundary boundary = Boundary::neumann;
  double z = 0.0;       // root of the sine function
  double lambda = 0.0;  // z^2
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double residual = 0.0;
  double error_bound = 0.0;  // bracket width plus tail / |slope|, in z units
};

template <class Real>
struct Spectrum {
  Boundary boundary = Boundary::neumann;
  std::vector<EigenvalueRecord> records;
  /// Table certified over every returned root; eigenfunctions refer to it.
  std::shared_ptr<const TrigTable<Real>> table;
};

namespace detail {

struct Sample {
  double z = 0.0;
  double value = 0.0;
  double slope = 0.0;
  double tail = 0.0;
  double slope_tail = 0.0;

  int sign() const { return value > 0.0 ? 1 : (value < 0.0 ? -1 : 0); }
};

/// Holds the working table and grows its order when the scan leaves the
/// certified range.
template <class Real>
class RootWorkspace {
 public:
  RootWorkspace(std::shared_ptr<const TrigTable<Real>> table, TrigFunction f,
                const RootOptions& opts)
      : table_(std::move(table)), f_(f), opts_(opts), max_tail_(opts.max_tail) {
    range_ = table_->certified_range(max_tail_);
  }

  Sample at(double z) {
    ensure(z);
    EvalOptions unchecked{std::numeric_limits<double>::infinity()};
    const auto v = evaluate(*table_, f_, z, unchecked);
    const auto d = evaluate_prime(*table_, f_, z, unchecked);
    return {z, v.value, d.value, v.certificate.tail_bound, d.certificate.tail_bound};
  }

  /// Tightens the tail target and rebuilds, for near-zero plateaus and weak slopes.
  bool escalate() {
    if (max_tail_ < opts_.max_tail * 1e-12) return false;
    max_tail_ *= 1e-6;
    rebuild(std::max(range_, 1.0));
    return true;
  }

  const std::shared_ptr<const TrigTable<Real>>& table() const { return table_; }
  double scale() const {
    return std::max(to_double(table_->p_one(2)), to_double(table_->q_one(2)));
  }

 private:
  void ensure(double z) {
    if (z <= range_) return;
    rebuild(std::max(1.5 * z, 4.0));
  }

  void rebuild(double z_target) {
    const std::size_t order = bounds::required_order(z_target, max_tail_);
    if (order > opts_.max_order) {
      throw PrecisionError("series order " + std::to_string(order) + " needed for z=" +
                               std::to_string(z_target) + " exceeds the configured maximum",
                           order);
    }
    if (order > table_->order()) {
      table_ = std::make_shared<const TrigTable<Real>>(table_->measure(), order, opts_.limits);
    }
    range_ = table_->certified_range(max_tail_);
  }

  std::shared_ptr<const TrigTable<Real>> table_;
  TrigFunction f_;
  RootOptions opts_;
  double max_tail_;
  double range_ = 0.0;
};

inline bool certified(const Sample& s) { return std::abs(s.value) > s.tail; }

/// Bisection down to width 1e-3, then Illinois-type secant steps that fall
/// back to bisection whenever the bracket fails to halve over two steps.
template <class Real>
EigenvalueRecord refine_bracket(RootWorkspace<Real>& ws, Sample lo, Sample hi,
                                const RootOptions& opts) {
  Sample clo = lo, chi = hi;  // tightest bracket with certified signs
  auto accept = [&](const Sample& s) {
    if (s.sign() == lo.sign()) {
      lo = s;
      if (certified(s)) clo = s;
    } else {
      hi = s;
      if (certified(s)) chi = s;
    }
  };
  auto done = [&] {
    return std::abs(hi.z - lo.z) <= opts.tol * std::max(1.0, std::abs(lo.z));
  };
  while (std::abs(hi.z - lo.z) > 1e-3 && !done()) {
    const auto mid = ws.at(0.5 * (lo.z + hi.z));
    if (mid.value == 0.0) {
      lo = hi = mid;
      break;
    }
    accept(mid);
  }
  double flo = lo.value, fhi = hi.value;
  double previous_width = std::abs(hi.z - lo.z) * 2.0;
  int stale_side = 0;
  for (int iter = 0; iter < 200 && lo.z != hi.z && !done(); ++iter) {
    const double width = std::abs(hi.z - lo.z);
    double x = (lo.z * fhi - hi.z * flo) / (fhi - flo);
    const double a = std::min(lo.z, hi.z), b = std::max(lo.z, hi.z);
    const bool contracting = width <= 0.5 * previous_width;
    if (!(x > a && x < b) || (!contracting && iter % 2 == 1)) x = 0.5 * (lo.z + hi.z);
    if (!(x > a && x < b)) break;  // adjacent doubles
    previous_width = width;
    const auto s = ws.at(x);
    if (s.value == 0.0) {
      lo = hi = s;
      break;
    }
    if (s.sign() == lo.sign()) {
      lo = s;
      flo = s.value;
      if (stale_side == -1) fhi *= 0.5;
      stale_side = -1;
      if (certified(s)) clo = s;
    } else {
      hi = s;
      fhi = s.value;
      if (stale_side == 1) flo *= 0.5;
      stale_side = 1;
      if (certified(s)) chi = s;
    }
  }
  const Sample& best = std::abs(lo.value) <= std::abs(hi.value) ? lo : hi;
  EigenvalueRecord rec;
  rec.z = best.z;
  rec.lambda = best.z * best.z;
  rec.bracket_lo = std::min(clo.z, chi.z);
  rec.bracket_hi = std::max(clo.z, chi.z);
  rec.residual = std::abs(best.value);
  const double slope = std::abs(best.slope);
  rec.error_bound = (rec.bracket_hi - rec.bracket_lo) +
                    (slope > 0.0 ? best.tail / slope : std::numeric_limits<double>::infinity());
  return rec;
}

/// Same sign at both ends but the slopes point toward zero at `a` and away
/// at `b`: the function might touch or cross zero twice in between.
inline bool hidden_pair_possible(const Sample& a, const Sample& b) {
  const int s = a.sign();
  return s * a.slope < 0.0 && s * b.slope > 0.0 &&
         std::min(std::abs(a.value), std::abs(b.value)) <=
             (b.z - a.z) * std::max(std::abs(a.slope), std::abs(b.slope));
}

}  // namespace detail

/// First `count` eigenvalues for the boundary type, in increasing order.
/// The Neumann list starts with lambda = 0 at index 0; Dirichlet starts at m = 1.
///
/// The sine function is scanned upward on an adaptive grid; every zero is a
/// sign change because zeros of sinp and sinq are never local extrema.
template <class Real>
Spectrum<Real> find_eigenvalues(std::shared_ptr<const TrigTable<Real>> table, Boundary boundary,
                                std::size_t count, const RootOptions& opts = {}) {
  if (count < 1) throw ConfigError("eigenvalue count must be at least 1");
  if (!(opts.tol >= 1e-15 && opts.tol <= 1e-2)) throw ConfigError("root tolerance out of range");
  const TrigFunction f = sine_of(boundary);
  detail::RootWorkspace<Real> ws(std::move(table), f, opts);

  Spectrum<Real> out;
  out.boundary = boundary;
  int next_index = 1;
  if (boundary == Boundary::neumann) out.records.push_back({0, boundary, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});

  auto push_root = [&](const detail::Sample& lo, const detail::Sample& hi) {
    auto rec = detail::refine_bracket(ws, lo, hi, opts);
    rec.index = next_index++;
    rec.boundary = boundary;
    out.records.push_back(rec);
  };

  // The first positive zero exceeds 1: |sine(z) - z| <= z^3 e^{z^2}/2 for z <= 1.
  detail::Sample a = ws.at(1e-3);
  const double base_step = std::numbers::pi / 4.0;
  while (out.records.size() < count) {
    double step = base_step / std::max(1.0, ws.scale() * a.z);
    detail::Sample b;
    for (;;) {
      if (a.z + step > opts.z_ceiling) {
        throw PrecisionError("scan ceiling z=" + std::to_string(opts.z_ceiling) +
                             " reached after " + std::to_string(out.records.size()) +
                             " eigenvalues");
      }
      b = ws.at(a.z + step);
      if (b.value == 0.0) b = ws.at(a.z + step * (1.0 + 1e-6));
      if (std::abs(b.value) > 10.0 * b.tail || b.sign() != a.sign()) break;
      // Near-zero plateau: look closer, then ask for a smaller tail.
      step *= 0.5;
      if (step < 1e-9 * std::max(1.0, a.z)) {
        if (!ws.escalate()) {
          throw PrecisionError("ambiguous near-zero plateau at z=" + std::to_string(a.z) +
                               "; increase series order");
        }
        step = base_step / std::max(1.0, ws.scale() * a.z);
        a = ws.at(a.z);
      }
    }
    if (b.sign() != a.sign()) {
      push_root(a, b);
    } else {
      // Probe for a pair of close zeros hiding between samples.
      detail::Sample lo = a, hi = b;
      for (int depth = 0; depth < 60 && detail::hidden_pair_possible(lo, hi); ++depth) {
        const auto mid = ws.at(0.5 * (lo.z + hi.z));
        if (mid.sign() != lo.sign()) {
          push_root(lo, mid);
          if (out.records.size() < count) push_root(mid, hi);
          break;
        }
        (a.sign() * mid.slope > 0.0 ? hi : lo) = mid;
      }
    }
    a = b;
  }
  out.records.resize(count);

  // Simple-zero check: the slope must dominate its truncation tail.
  for (auto& rec : out.records) {
    if (rec.z == 0.0) continue;
    for (;;) {
      const auto s = ws.at(rec.z);
      if (std::abs(s.slope) >= 10.0 * s.slope_tail) break;
      if (!ws.escalate()) {
        throw PrecisionError("slope at z=" + std::to_string(rec.z) +
                             " is not resolved above its truncation tail");
      }
    }
  }
  out.table = ws.table();
  return out;
}

/// Convenience overload building the initial table for a rough frequency guess.
template <class Real = Extended>
Spectrum<Real> find_eigenvalues(const Measure& mu, Boundary boundary, std::size_t count,
                                const RootOptions& opts = {}) {
  const double guess = std::max(4.0, 1.2 * std::numbers::pi * static_cast<double>(count + 1));
  auto table = std::make_shared<const TrigTable<Real>>(
      mu, bounds::required_order(guess, opts.max_tail), opts.limits);
  return find_eigenvalues<Real>(std::move(table), boundary, count, opts);
}

/// Eigenfunction f_{N,m} = cp_z or f_{D,m} = sq_z at z = sqrt(lambda), with
/// the series normalization f(0) = 1 (Neumann) or f'(0) = z (Dirichlet).
template <class Real>
class Eigenfunction {
 public:
  Eigenfunction(EigenvalueRecord record, std::shared_ptr<const TrigTable<Real>> table)
      : record_(record),
        table_(std::move(table)),
        values_(series_function(*table_, kind(), record_.z, {1e-8})),
        slope_(values_.values.derivative()) {}

  const EigenvalueRecord& record() const { return record_; }
  const TrigTable<Real>& table() const { return *table_; }
  TrigFunction kind() const {
    return record_.boundary == Boundary::neumann ? TrigFunction::cosp : TrigFunction::sinq;
  }
  double tail_bound() const { return values_.tail_bound; }
  const PiecewisePolynomial<Real>& polynomial() const { return values_.values; }

  double operator()(double x) const { return to_double(values_.values(static_cast<Real>(x))); }
  double derivative(double x) const { return to_double(slope_(static_cast<Real>(x))); }

 private:
  EigenvalueRecord record_;
  std::shared_ptr<const TrigTable<Real>> table_;
  SeriesFunction<Real> values_;
  PiecewisePolynomial<Real> slope_;
};

template <class Real>
Eigenfunction<Real> eigenfunction(const Spectrum<Real>& s, std::size_t i) {
  return Eigenfunction<Real>(s.records.at(i), s.table);
}

template <class Real>
double eigenfunction_eval(const Eigenfunction<Real>& ef, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("eigenfunction argument outside [0,1]");
  return ef(x);
}

/// L2(mu) norm of a Neumann eigenfunction via ||f||^2 = cosp(z) sinp'(z) / 2.
template <class Real>
double eigenfunction_l2_norm(const Eigenfunction<Real>& ef) {
  const auto& rec = ef.record();
  if (rec.boundary != Boundary::neumann || rec.index < 1) {
    throw ConfigError("norm identity applies to Neumann eigenfunctions with m >= 1");
  }
  const auto c = cosp(ef.table(), rec.z);
  const auto d = sinp_prime(ef.table(), rec.z);
  const double product = 0.5 * c.value * d.value;
  const double noise = std::abs(c.value) * d.certificate.tail_bound +
                       std::abs(d.value) * c.certificate.tail_bound + 1e-14;
  if (!(product > noise)) {
    throw InconsistencyError("cosp(z) sinp'(z) is not positive at z=" + std::to_string(rec.z) +
                             "; the root is inaccurate");
  }
  return std::sqrt(product);
}

/// ||f||^2 in L2(mu) by exact integration of the squared polynomial pieces.
template <class Real>
double eigenfunction_l2_norm_exact(const Eigenfunction<Real>& ef) {
  const auto& poly = ef.polynomial();
  const auto& grid = *poly.grid();
  const auto& mu = ef.table().measure();
  CompensatedSum<Real> total;
  for (std::size_t i = 0; i < grid.pieces(); ++i) {
    if (mu.density(i) == 0.0) continue;
    const auto& c = poly.piece(i);
    std::vector<Real> sq(2 * c.size() - 1, Real(0));
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = 0; b < c.size(); ++b) sq[a + b] += c[a] * c[b];
    std::vector<Real> anti(sq.size() + 1, Real(0));
    for (std::size_t j = 0; j < sq.size(); ++j) anti[j + 1] = sq[j] / Real(static_cast<double>(j + 1));
    total.add(static_cast<Real>(mu.density(i)) *
              PiecewisePolynomial<Real>::horner(anti, grid.lengths[i]));
  }
  return std::sqrt(to_double(total.value()));
}

/// Number of zeros: sign changes in (0,1) for Neumann; interior sign changes
/// plus both endpoints for Dirichlet. Cells whose slopes suggest an unresolved
/// pair of zeros are bisected.
template <class Real>
int count_zeros(const Eigenfunction<Real>& ef, std::size_t resolution = 1000) {
  if (resolution < 2) throw ConfigError("zero counting needs resolution >= 2");
  struct Point {
    double x, v, d;
    int sign() const { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }
  };
  auto sample = [&](double x) { return Point{x, ef(x), ef.derivative(x)}; };

  std::vector<double> xs;
  for (std::size_t i = 1; i < resolution; ++i) {
    xs.push_back(static_cast<double>(i) / static_cast<double>(resolution));
  }
  for (double t : ef.table().measure().breakpoints()) {
    if (t > 0.0 && t < 1.0) xs.push_back(t);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<Point> pts;
  for (double x : xs) {
    auto p = sample(x);
    if (p.sign() != 0) pts.push_back(p);
  }
  int changes = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    Point lo = pts[i - 1], hi = pts[i];
    if (lo.sign() != hi.sign()) {
      ++changes;
      continue;
    }
    const int s = lo.sign();
    for (int depth = 0;; ++depth) {
      const bool turning = s * lo.d < 0.0 && s * hi.d > 0.0 &&
                           std::min(std::abs(lo.v), std::abs(hi.v)) <=
                               (hi.x - lo.x) * std::max(std::abs(lo.d), std::abs(hi.d));
      if (!turning) break;
      if (depth >= 50) {
        throw PrecisionError("unresolvable sign-change cluster near x=" + std::to_string(lo.x));
      }
      const auto mid = sample(0.5 * (lo.x + hi.x));
      if (mid.sign() != s) {
        changes += 2;
        break;
      }
      (s * mid.d > 0.0 ? hi : lo) = mid;
    }
  }
  return ef.record().boundary == Boundary::dirichlet ? changes + 2 : changes;
}

}  // namespace kfeller
