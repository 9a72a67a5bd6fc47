#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "kfeller/errors.hpp"
#include "kfeller/measure.hpp"
#include "kfeller/piecewise_polynomial.hpp"
#include "kfeller/real.hpp"

namespace kfeller {

/// The four measure-theoretic trigonometric functions.
///   sp_z(x) = sum (-1)^n z^{2n+1} p_{2n+1}(x)     cp_z(x) = sum (-1)^n z^{2n} p_{2n}(x)
///   sq_z(x) = sum (-1)^n z^{2n+1} q_{2n+1}(x)     cq_z(x) = sum (-1)^n z^{2n} q_{2n}(x)
enum class TrigFunction { sinp, sinq, cosp, cosq };

inline const char* to_string(TrigFunction f) {
  switch (f) {
    case TrigFunction::sinp: return "sinp";
    case TrigFunction::sinq: return "sinq";
    case TrigFunction::cosp: return "cosp";
    case TrigFunction::cosq: return "cosq";
  }
  return "?";
}

inline bool uses_p(TrigFunction f) { return f == TrigFunction::sinp || f == TrigFunction::cosp; }
inline bool is_odd(TrigFunction f) { return f == TrigFunction::sinp || f == TrigFunction::sinq; }

/// Upper bound on the discarded tail of a truncated series at one z.
struct TruncationCertificate {
  double z = 0.0;
  std::size_t order = 0;
  double tail_bound = 0.0;
};

struct SeriesValue {
  double value = 0.0;
  TruncationCertificate certificate;
};

struct EvalOptions {
  /// Largest acceptable tail bound; beyond it evaluation throws.
  double max_tail = 1e-10;
};

/// Quantities entering the coefficient bounds at a point x.
struct BoundInputs {
  double x = 1.0;
  double cdf = 1.0;  // F(x) = p_1(x)
  double p2 = 1.0;   // p_2(x); nonpositive disables the factorial bound
  double q2 = 1.0;   // q_2(x)
};

namespace bounds {

inline double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline double safe_log(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

/// log of the interleaved-simplex bound on the n-th coefficient of f at x.
/// The coefficient is an iterated integral over an ordered chain of mu- and
/// Lebesgue-variables; dropping the interleaving constraint leaves a product
/// of two ordered simplices, of measure F(x)^a/a! * x^b/b! (mu is non-atomic).
inline double log_simplex_bound(TrigFunction f, std::size_t n, const BoundInputs& in) {
  const double lf = safe_log(in.cdf);
  const double lx = safe_log(in.x);
  const double dn = static_cast<double>(n);
  auto term = [](double count, double lg) { return count == 0.0 ? 0.0 : count * lg; };
  switch (f) {
    case TrigFunction::sinp:  // n+1 mu-variables, n Lebesgue
      return term(dn + 1, lf) + term(dn, lx) - log_factorial(n + 1) - log_factorial(n);
    case TrigFunction::sinq:  // n+1 Lebesgue, n mu
      return term(dn + 1, lx) + term(dn, lf) - log_factorial(n + 1) - log_factorial(n);
    case TrigFunction::cosp:
    case TrigFunction::cosq:
      return term(dn, lf) + term(dn, lx) - 2.0 * log_factorial(n);
  }
  return 0.0;
}

/// log of the factorial bound p_{2n+1} <= q_2^n/n!, p_{2n} <= p_2^n/n!,
/// q_{2n+1} <= p_2^n/n!, q_{2n} <= q_2^n/n!.
inline double log_factorial_bound(TrigFunction f, std::size_t n, const BoundInputs& in) {
  const double base = (f == TrigFunction::sinp || f == TrigFunction::cosq) ? in.q2 : in.p2;
  if (!(base > 0.0)) return std::numeric_limits<double>::infinity();
  return (n == 0 ? 0.0 : static_cast<double>(n) * std::log(base)) - log_factorial(n);
}

inline std::size_t exponent(TrigFunction f, std::size_t n) { return is_odd(f) ? 2 * n + 1 : 2 * n; }

/// Sum over n > order of |d^k/dz^k [z^{e(n)}]| * bound_n for k = derivative.
inline double tail(TrigFunction f, double z, std::size_t order, bool derivative,
                   const BoundInputs& in) {
  const double az = std::abs(z);
  if (az == 0.0) return 0.0;
  const double lz = std::log(az);
  auto log_weight = [&](std::size_t n) {
    const double e = static_cast<double>(exponent(f, n));
    return derivative ? std::log(e) + (e - 1.0) * lz : e * lz;
  };
  auto log_simplex = [&](std::size_t n) { return log_weight(n) + log_simplex_bound(f, n, in); };
  auto log_min = [&](std::size_t n) {
    return log_weight(n) + std::min(log_simplex_bound(f, n, in), log_factorial_bound(f, n, in));
  };
  double total = 0.0;
  for (std::size_t n = order + 1;; ++n) {
    const double ls = log_simplex(n);
    if (ls == -std::numeric_limits<double>::infinity()) return total;
    const double ratio = std::exp(log_simplex(n + 1) - ls);
    if (ratio <= 0.5) {
      // Ratios of the simplex terms decrease in n from here on.
      return total + std::exp(ls) / (1.0 - ratio);
    }
    total += std::exp(log_min(n));
    if (!std::isfinite(total)) return total;
  }
}

/// Worst tail over the four functions and their z-derivatives.
inline double worst_tail(double z, std::size_t order, const BoundInputs& in) {
  double worst = 0.0;
  for (auto f : {TrigFunction::sinp, TrigFunction::sinq, TrigFunction::cosp, TrigFunction::cosq}) {
    worst = std::max({worst, tail(f, z, order, false, in), tail(f, z, order, true, in)});
  }
  return worst;
}

/// Smallest order whose worst tail at |z| <= z_max is below target, using
/// only the measure-independent simplex bound (F(1) = 1, x = 1).
inline std::size_t required_order(double z_max, double target) {
  BoundInputs in{1.0, 1.0, -1.0, -1.0};
  std::size_t order = 1;
  while (worst_tail(z_max, order, in) > target) {
    order = order < 8 ? order + 1 : order + order / 8;
  }
  // Step back to the minimal sufficient order after the coarse search.
  while (order > 1 && worst_tail(z_max, order - 1, in) <= target) --order;
  return order;
}

}  // namespace bounds

/// Coefficient tables p_0..p_{2N+1}, q_0..q_{2N+1} for a measure, with
/// p_n = int p_{n-1} dmu for odd n and int p_{n-1} dt for even n, and the
/// opposite alternation for q_n. Immutable after construction.
template <class Real>
class TrigTable {
 public:
  TrigTable(const Measure& mu, std::size_t order, const Limits& limits = {})
      : measure_(mu), order_(order) {
    if (order < 1) throw ConfigError("series order must be at least 1");
    const std::size_t count = 2 * order + 2;
    std::size_t support = 0;
    for (double d : mu.densities()) support += d > 0.0 ? 1 : 0;
    const double bytes = 2.0 * static_cast<double>(support) * static_cast<double>(count) *
                         static_cast<double>(count + 1) / 2.0 * sizeof(Real);
    if (bytes > static_cast<double>(limits.max_table_bytes)) {
      throw ResourceError("coefficient table of order " + std::to_string(order) + " needs " +
                          std::to_string(static_cast<long long>(bytes)) + " bytes");
    }
    const auto dm = discretize<Real>(mu);
    const std::size_t cap = 2 * order + 2;
    p_.reserve(count);
    q_.reserve(count);
    p_.push_back(PiecewisePolynomial<Real>::constant(dm.grid, Real(1), cap));
    q_.push_back(p_.back());
    for (std::size_t n = 1; n < count; ++n) {
      if (n % 2 == 1) {
        p_.push_back(integrate_dmu(p_.back(), dm));
        q_.push_back(integrate_dt(q_.back()));
      } else {
        p_.push_back(integrate_dt(p_.back()));
        q_.push_back(integrate_dmu(q_.back(), dm));
      }
    }
    const std::size_t last = dm.grid->pieces() - 1;
    for (std::size_t n = 0; n < count; ++n) {
      p_one_.push_back(p_[n].right_value(last));
      q_one_.push_back(q_[n].right_value(last));
    }
  }

  const Measure& measure() const { return measure_; }
  std::size_t order() const { return order_; }
  std::size_t size() const { return p_.size(); }  // 2N+2

  const PiecewisePolynomial<Real>& p(std::size_t n) const { return p_.at(n); }
  const PiecewisePolynomial<Real>& q(std::size_t n) const { return q_.at(n); }
  Real p_one(std::size_t n) const { return p_one_.at(n); }
  Real q_one(std::size_t n) const { return q_one_.at(n); }
  const std::vector<Real>& p_ones() const { return p_one_; }
  const std::vector<Real>& q_ones() const { return q_one_; }

  const PiecewisePolynomial<Real>& coefficient(TrigFunction f, std::size_t n) const {
    const std::size_t idx = bounds::exponent(f, n);
    return uses_p(f) ? p_.at(idx) : q_.at(idx);
  }
  Real coefficient_one(TrigFunction f, std::size_t n) const {
    const std::size_t idx = bounds::exponent(f, n);
    return uses_p(f) ? p_one_.at(idx) : q_one_.at(idx);
  }

  BoundInputs bound_inputs(double x) const {
    const Real xr = static_cast<Real>(x);
    return {x, measure_.cdf(x), to_double(p_[2](xr)), to_double(q_[2](xr))};
  }
  BoundInputs bound_inputs_at_one() const {
    return {1.0, 1.0, to_double(p_one_[2]), to_double(q_one_[2])};
  }

  /// Largest |z| at which every function and derivative has tail <= target.
  double certified_range(double target) const {
    const auto in = bound_inputs_at_one();
    double lo = 0.0, hi = 1.0;
    while (bounds::worst_tail(hi, order_, in) <= target) {
      lo = hi;
      hi *= 2.0;
    }
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (bounds::worst_tail(mid, order_, in) <= target ? lo : hi) = mid;
    }
    return lo;
  }

 private:
  Measure measure_;
  std::size_t order_;
  std::vector<PiecewisePolynomial<Real>> p_;
  std::vector<PiecewisePolynomial<Real>> q_;
  std::vector<Real> p_one_;
  std::vector<Real> q_one_;
};

template <class Real = Extended>
TrigTable<Real> build_table(const Measure& mu, std::size_t order, const Limits& limits = {}) {
  return TrigTable<Real>(mu, order, limits);
}

namespace detail {

template <class Real>
void require_tail(double tail, double z, std::size_t order, const EvalOptions& opts) {
  if (tail > opts.max_tail) {
    throw PrecisionError("series order " + std::to_string(order) + " cannot reach tail " +
                             std::to_string(opts.max_tail) + " at z=" + std::to_string(z) +
                             "; increase order",
                         bounds::required_order(std::abs(z), opts.max_tail));
  }
}

/// Truncated series sum over n = 0..N of (-1)^n d^k/dz^k[z^{e(n)}] c_n, with
/// c_n supplied by `coefficient(n)`, summed in ascending n with compensation.
template <class Real, class CoefficientFn>
Real series_sum(TrigFunction f, Real z, std::size_t order, bool derivative,
                CoefficientFn&& coefficient) {
  CompensatedSum<Real> sum;
  const Real z2 = z * z;
  // pow holds z^{e(n)} for values and z^{e(n)-1} for derivatives.
  Real pow = (is_odd(f) != derivative) ? z : Real(1);
  for (std::size_t n = 0; n <= order; ++n) {
    const std::size_t e = bounds::exponent(f, n);
    if (derivative && e == 0) continue;  // constant term of a cos-type series
    Real term = pow * coefficient(n);
    if (derivative) term *= Real(static_cast<double>(e));
    sum.add(n % 2 == 0 ? term : -term);
    pow *= z2;
  }
  return sum.value();
}

template <class Real>
SeriesValue evaluate_at_one(const TrigTable<Real>& table, TrigFunction f, double z,
                            bool derivative, const EvalOptions& opts) {
  const double tail = bounds::tail(f, z, table.order(), derivative, table.bound_inputs_at_one());
  require_tail<Real>(tail, z, table.order(), opts);
  const Real value =
      series_sum<Real>(f, static_cast<Real>(z), table.order(), derivative,
                       [&](std::size_t n) { return table.coefficient_one(f, n); });
  return {to_double(value), {z, table.order(), tail}};
}

}  // namespace detail

template <class Real>
SeriesValue evaluate(const TrigTable<Real>& table, TrigFunction f, double z,
                     const EvalOptions& opts = {}) {
  return detail::evaluate_at_one(table, f, z, false, opts);
}

template <class Real>
SeriesValue evaluate_prime(const TrigTable<Real>& table, TrigFunction f, double z,
                           const EvalOptions& opts = {}) {
  return detail::evaluate_at_one(table, f, z, true, opts);
}

template <class Real>
SeriesValue sinp(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate(t, TrigFunction::sinp, z, o);
}
template <class Real>
SeriesValue sinq(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate(t, TrigFunction::sinq, z, o);
}
template <class Real>
SeriesValue cosp(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate(t, TrigFunction::cosp, z, o);
}
template <class Real>
SeriesValue cosq(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate(t, TrigFunction::cosq, z, o);
}

/// Termwise z-derivatives. sinp'(z) = sum (-1)^k (2k+1) z^{2k} p_{2k+1}.
template <class Real>
SeriesValue sinp_prime(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate_prime(t, TrigFunction::sinp, z, o);
}
template <class Real>
SeriesValue sinq_prime(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate_prime(t, TrigFunction::sinq, z, o);
}
template <class Real>
SeriesValue cosp_prime(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate_prime(t, TrigFunction::cosp, z, o);
}
template <class Real>
SeriesValue cosq_prime(const TrigTable<Real>& t, double z, const EvalOptions& o = {}) {
  return evaluate_prime(t, TrigFunction::cosq, z, o);
}

/// x-dependent series value, e.g. cp_z(x) for TrigFunction::cosp.
template <class Real>
SeriesValue evaluate_at(const TrigTable<Real>& table, TrigFunction f, double z, double x,
                        const EvalOptions& opts = {}) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("evaluation point outside [0,1]: " + std::to_string(x));
  }
  const double tail = bounds::tail(f, z, table.order(), false, table.bound_inputs(x));
  detail::require_tail<Real>(tail, z, table.order(), opts);
  const Real xr = static_cast<Real>(x);
  const auto& grid = *table.p(0).grid();
  const std::size_t piece = grid.locate(xr);
  const Real s = xr - grid.breakpoints[piece];
  const Real value = detail::series_sum<Real>(f, static_cast<Real>(z), table.order(), false,
                                              [&](std::size_t n) {
                                                return table.coefficient(f, n).eval_local(piece, s);
                                              });
  return {to_double(value), {z, table.order(), tail}};
}

/// Neumann eigenfunction candidate cp_z(x).
template <class Real>
SeriesValue cp_eval(const TrigTable<Real>& t, double z, double x, const EvalOptions& o = {}) {
  return evaluate_at(t, TrigFunction::cosp, z, x, o);
}
/// Dirichlet eigenfunction candidate sq_z(x).
template <class Real>
SeriesValue sq_eval(const TrigTable<Real>& t, double z, double x, const EvalOptions& o = {}) {
  return evaluate_at(t, TrigFunction::sinq, z, x, o);
}
template <class Real>
SeriesValue sp_eval(const TrigTable<Real>& t, double z, double x, const EvalOptions& o = {}) {
  return evaluate_at(t, TrigFunction::sinp, z, x, o);
}
template <class Real>
SeriesValue cq_eval(const TrigTable<Real>& t, double z, double x, const EvalOptions& o = {}) {
  return evaluate_at(t, TrigFunction::cosq, z, x, o);
}

/// The x-dependent function for fixed z collapsed into one piecewise
/// polynomial on the table grid, with a tail bound valid for all x in [0,1].
template <class Real>
struct SeriesFunction {
  PiecewisePolynomial<Real> values;
  double tail_bound = 0.0;
};

template <class Real>
SeriesFunction<Real> series_function(const TrigTable<Real>& table, TrigFunction f, double z,
                                     const EvalOptions& opts = {}) {
  // Every coefficient bound is nondecreasing in x, so x = 1 dominates.
  const double tail = bounds::tail(f, z, table.order(), false, table.bound_inputs_at_one());
  detail::require_tail<Real>(tail, z, table.order(), opts);
  const auto& grid = table.p(0).grid();
  const Real zr = static_cast<Real>(z);
  const Real z2 = zr * zr;
  std::vector<typename PiecewisePolynomial<Real>::Coefficients> pieces(grid->pieces());
  for (std::size_t i = 0; i < grid->pieces(); ++i) {
    std::vector<CompensatedSum<Real>> acc;
    Real pow = is_odd(f) ? zr : Real(1);
    for (std::size_t n = 0; n <= table.order(); ++n) {
      const auto& c = table.coefficient(f, n).piece(i);
      if (acc.size() < c.size()) acc.resize(c.size());
      const Real scale = n % 2 == 0 ? pow : -pow;
      for (std::size_t j = 0; j < c.size(); ++j) acc[j].add(scale * c[j]);
      pow *= z2;
    }
    pieces[i].reserve(acc.size());
    for (const auto& a : acc) pieces[i].push_back(a.value());
  }
  return {PiecewisePolynomial<Real>(grid, std::move(pieces), table.p(0).degree_cap()), tail};
}

/// Truncated Cauchy-product sums at frequency z:
///   first  = sum_{n<=N} (-1)^n z^{2n} sum_k p_{2k} p_{2n-2k+1}
///   second = sum_{n<=N} (-1)^n z^{2n} sum_k 2k p_{2k} p_{2n-2k+1}
/// Both vanish at the square root of every positive Neumann eigenvalue.
struct NullSums {
  double first = 0.0;
  double second = 0.0;
  double tail_bound = 0.0;  // bound on the omitted n > N terms of either sum
};

template <class Real>
NullSums neumann_null_sums(const TrigTable<Real>& table, double z) {
  const std::size_t order = table.order();
  const Real zr = static_cast<Real>(z);
  const Real z2 = zr * zr;
  CompensatedSum<Real> first, second;
  Real pow(1);
  for (std::size_t n = 0; n <= order; ++n) {
    CompensatedSum<Real> inner, inner_weighted;
    for (std::size_t k = 0; k <= n; ++k) {
      const Real prod = table.p_one(2 * k) * table.p_one(2 * n - 2 * k + 1);
      inner.add(prod);
      inner_weighted.add(Real(static_cast<double>(2 * k)) * prod);
    }
    const Real scale = n % 2 == 0 ? pow : -pow;
    first.add(scale * inner.value());
    second.add(scale * inner_weighted.value());
    pow *= z2;
  }
  // Omitted terms: n > N, bounded with the coefficient bounds at x = 1.
  const auto in = table.bound_inputs_at_one();
  auto log_b = [&](TrigFunction f, std::size_t k) {
    return std::min(bounds::log_simplex_bound(f, k, in), bounds::log_factorial_bound(f, k, in));
  };
  const double lz2 = z == 0.0 ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(std::abs(z));
  double tail = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n = order + 1; n < order + 4000; ++n) {
    double term = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      const double weight = std::max<double>(1.0, static_cast<double>(2 * k));
      term += std::exp(std::log(weight) + static_cast<double>(n) * lz2 +
                       log_b(TrigFunction::cosp, k) + log_b(TrigFunction::sinp, n - k));
    }
    tail += term;
    if (term < previous && term <= 1e-40 * std::max(tail, 1e-300)) break;
    previous = term;
  }
  return {to_double(first.value()), to_double(second.value()), tail};
}

/// CSV dump of n, p_n(1), q_n(1).
template <class Real>
void write_coefficients_csv(std::ostream& os, const TrigTable<Real>& table) {
  char buf[128];
  os << "n,p_n(1),q_n(1)\r\n";
  for (std::size_t n = 0; n < table.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\r\n", n, to_double(table.p_one(n)),
                  to_double(table.q_one(n)));
    os << buf;
  }
}

}  // namespace kfeller
