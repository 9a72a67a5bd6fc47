#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <deque>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "kfeller/errors.hpp"
#include "kfeller/measure.hpp"
#include "kfeller/parallel.hpp"
#include "kfeller/spectrum.hpp"
#include "kfeller/trig_table.hpp"

namespace kfeller {

/// Least-squares slope of log(gap) against level.
struct RateFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::size_t points = 0;
  /// Fewer than two gaps above the noise floor: nothing left to fit.
  bool converged_below_tolerance = false;
};

/// Gaps at or below `floor` are treated as converged and excluded.
inline RateFit fit_log_rate(const std::vector<int>& levels, const std::vector<double>& gaps,
                            double floor = 0.0) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < gaps.size() && i < levels.size(); ++i) {
    if (gaps[i] > floor && std::isfinite(gaps[i])) {
      xs.push_back(static_cast<double>(levels[i]));
      ys.push_back(std::log(gaps[i]));
    }
  }
  RateFit fit;
  fit.points = xs.size();
  if (xs.size() < 2) {
    fit.converged_below_tolerance = true;
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

struct RateOptions {
  RootOptions roots;
  /// Gaps below floor_factor * tol * lambda count as converged.
  double floor_factor = 10.0;
};

struct RateReport {
  WeightVector weights;
  Boundary boundary = Boundary::neumann;
  std::vector<int> indices;
  std::vector<int> levels;
  std::vector<std::vector<double>> lambdas;          // [index][level]
  std::vector<double> cdf_dist_bounds;               // w2^n / w1 per level
  std::vector<double> cdf_distances;                 // ||F_n - F_n'|| per consecutive pair
  std::vector<std::vector<double>> successive_gaps;  // [index][pair]
  std::vector<RateFit> fits;                         // per index
  std::vector<RateFit> fits_without_deepest;         // per index, deepest gap dropped

  double reference_slope() const { return std::log(weights.w2()); }
  /// Lower level of each consecutive pair; the x-axis of the fits.
  std::vector<int> gap_levels() const { return {levels.begin(), levels.end() - 1}; }
};

namespace detail {

inline void check_levels(const std::vector<int>& levels) {
  if (levels.size() < 3) throw ConfigError("rate experiments need at least 3 levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0) throw ConfigError("levels must be nonnegative");
    if (i > 0 && levels[i] <= levels[i - 1]) throw ConfigError("levels must be strictly ascending");
  }
}

/// Position of eigenvalue index m in a spectrum's record list.
inline std::size_t record_slot(Boundary b, int m) {
  return b == Boundary::neumann ? static_cast<std::size_t>(m) : static_cast<std::size_t>(m - 1);
}

inline std::size_t record_count(Boundary b, int m_max) {
  return b == Boundary::neumann ? static_cast<std::size_t>(m_max) + 1
                                : static_cast<std::size_t>(m_max);
}

template <class Real>
std::vector<Spectrum<Real>> spectra_by_level(const WeightVector& w, const std::vector<int>& levels,
                                             Boundary b, std::size_t count,
                                             const RootOptions& opts) {
  std::vector<Spectrum<Real>> out(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    const Measure mu = cantor_approximant({w, levels[i]}, opts.limits);
    out[i] = find_eigenvalues<Real>(mu, b, count, opts);
  });
  return out;
}

}  // namespace detail

/// Eigenvalues for indices 1..m_max at every level, with successive gaps
/// |lambda_{m,n'} - lambda_{m,n}| as the rate proxy and a log-slope fit per m.
template <class Real = Extended>
RateReport eigenvalue_rate_experiment(const WeightVector& w, const std::vector<int>& levels,
                                      Boundary boundary, int m_max,
                                      const RateOptions& opts = {}) {
  detail::check_levels(levels);
  if (m_max < 1) throw ConfigError("m_max must be at least 1");
  const auto spectra = detail::spectra_by_level<Real>(
      w, levels, boundary, detail::record_count(boundary, m_max), opts.roots);

  RateReport report;
  report.weights = w;
  report.boundary = boundary;
  report.levels = levels;
  for (int level : levels) {
    report.cdf_dist_bounds.push_back(std::pow(w.w2(), level) / w.w1());
  }
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    report.cdf_distances.push_back(cdf_sup_distance(cantor_approximant({w, levels[i]}),
                                                    cantor_approximant({w, levels[i + 1]})));
  }
  const auto gap_levels = report.gap_levels();
  for (int m = 1; m <= m_max; ++m) {
    report.indices.push_back(m);
    std::vector<double> lam;
    for (const auto& s : spectra) lam.push_back(s.records[detail::record_slot(boundary, m)].lambda);
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < lam.size(); ++i) gaps.push_back(std::abs(lam[i + 1] - lam[i]));
    const double floor = opts.floor_factor * opts.roots.tol * lam.back();
    report.fits.push_back(fit_log_rate(gap_levels, gaps, floor));
    std::vector<double> head(gaps.begin(), gaps.end() - 1);
    report.fits_without_deepest.push_back(fit_log_rate(gap_levels, head, floor));
    report.lambdas.push_back(std::move(lam));
    report.successive_gaps.push_back(std::move(gaps));
  }
  return report;
}

struct EigenfunctionRateReport {
  WeightVector weights;
  Boundary boundary = Boundary::neumann;
  int index = 1;
  std::vector<int> levels;
  std::vector<double> sup_gaps;       // per consecutive pair
  std::vector<double> endpoint_gaps;  // max of |difference| at x = 0 and x = 1
  RateFit fit;

  double reference_slope() const { return std::log(weights.w2()); }
};

/// Shared x-grid for a level pair: breakpoints of the finer level plus
/// `per_interval` uniform points inside every piece.
inline std::vector<double> refined_grid(const Measure& finer, std::size_t per_interval = 16) {
  std::vector<double> xs;
  const auto& bp = finer.breakpoints();
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    for (std::size_t k = 0; k <= per_interval; ++k) {
      xs.push_back(bp[i] + (bp[i + 1] - bp[i]) * static_cast<double>(k) /
                               static_cast<double>(per_interval + 1));
    }
  }
  xs.push_back(1.0);
  return xs;
}

/// Sup-norm gaps between series-normalized eigenfunctions of consecutive
/// levels. An empty `x_grid` selects the refined grid of the finer level.
template <class Real = Extended>
EigenfunctionRateReport eigenfunction_rate_experiment(const WeightVector& w,
                                                      const std::vector<int>& levels,
                                                      Boundary boundary, int m,
                                                      const std::vector<double>& x_grid = {},
                                                      const RateOptions& opts = {}) {
  detail::check_levels(levels);
  if (m < (boundary == Boundary::neumann ? 0 : 1)) throw ConfigError("eigenfunction index out of range");
  for (double x : x_grid) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("x-grid point outside [0,1]");
  }
  const auto spectra = detail::spectra_by_level<Real>(
      w, levels, boundary, detail::record_count(boundary, std::max(m, 1)), opts.roots);
  std::vector<std::unique_ptr<Eigenfunction<Real>>> fns(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    fns[i] = std::make_unique<Eigenfunction<Real>>(
        spectra[i].records[detail::record_slot(boundary, m)], spectra[i].table);
  });

  EigenfunctionRateReport report;
  report.weights = w;
  report.boundary = boundary;
  report.index = m;
  report.levels = levels;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const auto grid = x_grid.empty() ? refined_grid(fns[i + 1]->table().measure()) : x_grid;
    double sup = 0.0;
    for (double x : grid) sup = std::max(sup, std::abs((*fns[i + 1])(x) - (*fns[i])(x)));
    report.sup_gaps.push_back(sup);
    report.endpoint_gaps.push_back(std::max(std::abs((*fns[i + 1])(0.0) - (*fns[i])(0.0)),
                                            std::abs((*fns[i + 1])(1.0) - (*fns[i])(1.0))));
  }
  report.fit = fit_log_rate(report.levels, report.sup_gaps, 1e-13);
  return report;
}

// ---------------------------------------------------------------------------
// Audit of the proven inequalities.

/// Constant 2 z^2 e^{z^2} bounding ||cq_z - cq_{z,m}|| / ||F - F_m||.
inline double cq_gap_constant(double z) { return 2.0 * z * z * std::exp(z * z); }

/// Constant obtained by summing the coefficient gap bounds termwise for f.
/// The sine families carry one extra power of z; sp also keeps the n = 0
/// term |F - F_m|, which the other three families do not have.
inline double termwise_gap_constant(TrigFunction f, double z) {
  const double base = cq_gap_constant(std::abs(z));
  switch (f) {
    case TrigFunction::cosp:
    case TrigFunction::cosq:
      return base;
    case TrigFunction::sinq:
      return std::abs(z) * base;
    case TrigFunction::sinp:
      return std::abs(z) + std::abs(z) * base;
  }
  return base;
}

/// Constant 2 sum_{n>=1} (2n+1) z^{2n} / (n-1)! = 2 z^2 e^{z^2} (2z^2 + 3).
inline double derivative_gap_constant(double z) {
  return cq_gap_constant(z) * (2.0 * z * z + 3.0);
}

struct AuditOptions {
  std::vector<double> z_grid{0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0};
  std::size_t uniform_points = 129;
  /// Reference level offset for the limit-measure enclosure.
  int reference_offset = 8;
  int reference_cap = 16;
  /// Relative and absolute rounding allowance before a check counts as violated.
  double relative_slack = 1e-12;
  double absolute_slack = 1e-15;
  /// Check the cq constant against sp, sq and cp as well (reported only).
  bool probe_shared_constant = true;
  Limits limits;
};

/// One family of inequalities: how often it was checked and how close it came.
struct BoundSummary {
  std::string name;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max of value / bound
  double worst_slack = std::numeric_limits<double>::infinity();  // min of bound - value
  std::string worst_case;
  /// Informational rows never fail the audit.
  bool informational = false;
};

struct CdfAuditRow {
  int n = 0;
  int n2 = 0;
  double distance = 0.0;
  double telescoping_bound = 0.0;  // sum_{j=n}^{n2-1} w2^j
  double level_bound = 0.0;        // w2^n / w1
};

struct LimitAuditRow {
  int n = 0;
  int reference = 0;
  double lower = 0.0;
  double upper = 0.0;
  double bound = 0.0;  // w2^n / w1
};

struct AuditReport {
  WeightVector weights;
  std::vector<int> levels;
  std::vector<CdfAuditRow> cdf_rows;
  std::vector<LimitAuditRow> limit_rows;
  std::vector<BoundSummary> bounds;

  std::size_t violations() const {
    std::size_t v = 0;
    for (const auto& b : bounds) {
      if (!b.informational) v += b.violations;
    }
    return v;
  }
};

class BoundViolation : public InconsistencyError {
 public:
  BoundViolation(const std::string& what, AuditReport report)
      : InconsistencyError(what), report_(std::move(report)) {}
  const AuditReport& report() const { return report_; }

 private:
  AuditReport report_;
};

namespace detail {

class AuditLedger {
 public:
  explicit AuditLedger(const AuditOptions& opts) : opts_(opts) {}

  BoundSummary& family(const std::string& name, bool informational = false) {
    for (auto& b : families_) {
      if (b.name == name) return b;
    }
    families_.push_back({name, 0, 0, 0.0, std::numeric_limits<double>::infinity(), "", informational});
    return families_.back();
  }

  void check(BoundSummary& b, double value, double bound, const std::string& where) {
    ++b.checks;
    const double slack = bound - value;
    if (bound > 0.0) {
      const double ratio = value / bound;
      if (ratio > b.worst_ratio) {
        b.worst_ratio = ratio;
        b.worst_case = where;
      }
    } else if (value > 0.0 && b.worst_case.empty()) {
      b.worst_ratio = std::numeric_limits<double>::infinity();
      b.worst_case = where;
    }
    b.worst_slack = std::min(b.worst_slack, slack);
    const double allowance =
        opts_.relative_slack * std::max(std::abs(bound), std::abs(value)) + opts_.absolute_slack;
    if (value > bound + allowance) ++b.violations;
  }

  std::vector<BoundSummary> take() { return {families_.begin(), families_.end()}; }

 private:
  const AuditOptions& opts_;
  std::deque<BoundSummary> families_;
};

inline std::string where() { return {}; }

/// "key=value key=value ..." for audit messages.
template <class V, class... Rest>
std::string where(const char* key, V value, Rest... rest) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.6g", key, static_cast<double>(value));
  const std::string tail = where(rest...);
  return tail.empty() ? std::string(buf) : std::string(buf) + " " + tail;
}

}  // namespace detail

/// Audits every proven inequality between the level-n approximants: CDF
/// telescoping and level bounds, the limit-measure enclosure, coefficient
/// factorial bounds, coefficient gap bounds, trig-function gaps and the
/// derivative gap at x = 1. Throws BoundViolation if any of them fails.
template <class Real = Extended>
AuditReport bound_audit(const WeightVector& w, const std::vector<int>& levels,
                        const AuditOptions& opts = {}) {
  if (levels.empty()) throw ConfigError("audit needs at least one level");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] <= levels[i - 1]) throw ConfigError("levels must be strictly ascending");
  }
  if (levels.front() < 0) throw ConfigError("levels must be nonnegative");
  const double w1 = w.w1(), w2 = w.w2();
  const double z_max = opts.z_grid.empty() ? 1.0 : *std::max_element(opts.z_grid.begin(), opts.z_grid.end());
  const std::size_t order = bounds::required_order(z_max, 1e-15);

  std::vector<Measure> measures;
  for (int n : levels) measures.push_back(cantor_approximant({w, n}, opts.limits));
  std::vector<std::unique_ptr<TrigTable<Real>>> tables(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    tables[i] = std::make_unique<TrigTable<Real>>(measures[i], order, opts.limits);
  });

  // Shared x-grid: uniform points plus the breakpoints of the deepest level.
  std::vector<double> xs;
  for (std::size_t k = 0; k < opts.uniform_points; ++k) {
    xs.push_back(static_cast<double>(k) / static_cast<double>(opts.uniform_points - 1));
  }
  for (double t : measures.back().breakpoints()) xs.push_back(t);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  // values[level][family][index][x]
  const std::size_t coeffs = 2 * order + 2;
  std::vector<std::vector<std::vector<double>>> pv(levels.size()), qv(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    pv[i].assign(coeffs, std::vector<double>(xs.size()));
    qv[i].assign(coeffs, std::vector<double>(xs.size()));
    for (std::size_t k = 0; k < coeffs; ++k) {
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const Real x = static_cast<Real>(xs[j]);
        pv[i][k][j] = to_double(tables[i]->p(k)(x));
        qv[i][k][j] = to_double(tables[i]->q(k)(x));
      }
    }
  });

  AuditReport report;
  report.weights = w;
  report.levels = levels;
  detail::AuditLedger ledger(opts);
  using detail::where;

  // CDF distances between levels.
  auto& telescoping = ledger.family("cdf_telescoping");
  auto& level_bound = ledger.family("cdf_level_bound");
  std::vector<std::vector<double>> dist(levels.size(), std::vector<double>(levels.size(), 0.0));
  for (std::size_t a = 0; a < levels.size(); ++a) {
    for (std::size_t b = a; b < levels.size(); ++b) {
      const double d = a == b ? 0.0 : cdf_sup_distance(measures[a], measures[b]);
      dist[a][b] = dist[b][a] = d;
      double tele = 0.0;
      for (int j = levels[a]; j < levels[b]; ++j) tele += std::pow(w2, j);
      const double lb = std::pow(w2, levels[a]) / w1;
      report.cdf_rows.push_back({levels[a], levels[b], d, tele, lb});
      const auto at = where("n", levels[a], "n2", levels[b]);
      ledger.check(telescoping, d, tele, at);
      ledger.check(level_bound, d, lb, at);
    }
  }

  // Enclosure of the distance to the limit measure.
  auto& limit = ledger.family("limit_cdf_bound");
  for (int n : levels) {
    const int ref = std::min(n + opts.reference_offset, std::max(opts.reference_cap, n + 1));
    const auto enc = limit_cdf_distance_bounds(w, n, ref, opts.limits);
    const double bound = std::pow(w2, n) / w1;
    report.limit_rows.push_back({n, ref, enc.lower, enc.upper, bound});
    ledger.check(limit, enc.upper, bound, where("n", n, "reference", ref));
  }

  // Factorial bounds on every stored coefficient.
  auto& factorial = ledger.family("coefficient_factorial");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double p2 = pv[i][2][j], q2 = qv[i][2][j];
      for (std::size_t n = 0; 2 * n + 1 < coeffs; ++n) {
        const double lf = bounds::log_factorial(n);
        const double bq = std::exp(static_cast<double>(n) * std::log(q2) - lf);
        const double bp = std::exp(static_cast<double>(n) * std::log(p2) - lf);
        const double fq = n == 0 ? 1.0 : bq, fp = n == 0 ? 1.0 : bp;
        const auto at = where("level", levels[i], "n", static_cast<double>(n), "x", xs[j]);
        ledger.check(factorial, pv[i][2 * n + 1][j], fq, "p_odd " + at);
        ledger.check(factorial, pv[i][2 * n][j], fp, "p_even " + at);
        ledger.check(factorial, qv[i][2 * n + 1][j], fp, "q_odd " + at);
        ledger.check(factorial, qv[i][2 * n][j], fq, "q_even " + at);
      }
    }
  }

  // Coefficient gap bounds for every ordered pair of levels.
  auto& coefficient_gap = ledger.family("coefficient_gap");
  for (std::size_t a = 0; a < levels.size(); ++a) {
    for (std::size_t b = a + 1; b < levels.size(); ++b) {
      const double d = dist[a][b];
      for (std::size_t n = 1; 2 * n + 1 < coeffs; ++n) {
        const double lf = bounds::log_factorial(n - 1);
        for (std::size_t j = 0; j < xs.size(); ++j) {
          const double bound =
              xs[j] == 0.0 ? 0.0 : 2.0 * d * std::exp(static_cast<double>(n) * std::log(xs[j]) - lf);
          const auto at = where("n", levels[a], "n2", levels[b], "k", static_cast<double>(n), "x", xs[j]);
          ledger.check(coefficient_gap, std::abs(pv[a][2 * n][j] - pv[b][2 * n][j]), bound, "p_even " + at);
          ledger.check(coefficient_gap, std::abs(pv[a][2 * n + 1][j] - pv[b][2 * n + 1][j]), bound, "p_odd " + at);
          ledger.check(coefficient_gap, std::abs(qv[a][2 * n][j] - qv[b][2 * n][j]), bound, "q_even " + at);
          ledger.check(coefficient_gap, std::abs(qv[a][2 * n + 1][j] - qv[b][2 * n + 1][j]), bound, "q_odd " + at);
        }
      }
    }
  }

  // Trig-function gaps on the x-grid and derivative gaps at x = 1.
  const TrigFunction families[] = {TrigFunction::cosq, TrigFunction::cosp, TrigFunction::sinq,
                                   TrigFunction::sinp};
  const std::size_t nz = opts.z_grid.size();
  // samples[level][z][family][x]
  std::vector<std::vector<std::vector<std::vector<double>>>> samples(levels.size());
  parallel_for(levels.size(), [&](std::size_t i) {
    samples[i].assign(nz, std::vector<std::vector<double>>(4));
    for (std::size_t zi = 0; zi < nz; ++zi) {
      for (std::size_t fi = 0; fi < 4; ++fi) {
        const auto fn = series_function(*tables[i], families[fi], opts.z_grid[zi], {1e-12});
        auto& out = samples[i][zi][fi];
        out.reserve(xs.size());
        for (double x : xs) out.push_back(to_double(fn.values(static_cast<Real>(x))));
      }
    }
  });
  auto& cq_gap = ledger.family("trig_gap_cq");
  auto& termwise = ledger.family("trig_gap_termwise");
  auto& derivative = ledger.family("sine_derivative_gap");
  for (std::size_t a = 0; a < levels.size(); ++a) {
    for (std::size_t b = a + 1; b < levels.size(); ++b) {
      const double d = dist[a][b];
      for (std::size_t zi = 0; zi < nz; ++zi) {
        const double z = opts.z_grid[zi];
        for (std::size_t fi = 0; fi < 4; ++fi) {
          double sup = 0.0;
          for (std::size_t j = 0; j < xs.size(); ++j) {
            sup = std::max(sup, std::abs(samples[a][zi][fi][j] - samples[b][zi][fi][j]));
          }
          const auto at = std::string(to_string(families[fi])) + " " +
                          where("n", levels[a], "n2", levels[b], "z", z);
          // Sampling noise of the two materialized series.
          const double noise = tables[a]->order() > 0 ? 1e-13 * std::exp(z) : 0.0;
          if (families[fi] == TrigFunction::cosq) ledger.check(cq_gap, sup - noise, cq_gap_constant(z) * d, at);
          ledger.check(termwise, sup - noise, termwise_gap_constant(families[fi], z) * d, at);
          if (opts.probe_shared_constant && families[fi] != TrigFunction::cosq) {
            ledger.check(ledger.family("trig_gap_shared_constant_probe", true), sup - noise,
                         cq_gap_constant(z) * d, at);
          }
        }
        for (auto f : {TrigFunction::sinp, TrigFunction::sinq}) {
          const EvalOptions loose{1e-6};
          const auto va = evaluate_prime(*tables[a], f, z, loose);
          const auto vb = evaluate_prime(*tables[b], f, z, loose);
          const double gap = std::abs(va.value - vb.value) - va.certificate.tail_bound -
                             vb.certificate.tail_bound - 1e-13 * std::exp(z);
          ledger.check(derivative, gap, derivative_gap_constant(z) * d,
                       std::string(to_string(f)) + "' " +
                           where("n", levels[a], "n2", levels[b], "z", z));
        }
      }
    }
  }

  report.bounds = ledger.take();
  if (report.violations() > 0) {
    std::string msg = "proven inequality violated:";
    for (const auto& b : report.bounds) {
      if (!b.informational && b.violations > 0) msg += " " + b.name + " (" + b.worst_case + ")";
    }
    throw BoundViolation(msg, std::move(report));
  }
  return report;
}

}  // namespace kfeller
