#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "kfeller/errors.hpp"
#include "kfeller/measure.hpp"
#include "kfeller/real.hpp"

namespace kfeller {

/// Partition 0 = t_0 < ... < t_K = 1 in working precision.
template <class Real>
struct Grid {
  std::vector<Real> breakpoints;
  std::vector<Real> lengths;

  std::size_t pieces() const { return lengths.size(); }

  /// Piece containing x; interior breakpoints resolve to the left piece.
  std::size_t locate(Real x) const {
    auto first = breakpoints.begin() + 1;
    auto last = breakpoints.end() - 1;
    auto it = std::lower_bound(first, last, x);
    return static_cast<std::size_t>(it - breakpoints.begin()) - 1;
  }

  static Grid from_breakpoints(std::vector<Real> bp) {
    Grid g;
    g.breakpoints = std::move(bp);
    g.lengths.resize(g.breakpoints.size() - 1);
    for (std::size_t i = 0; i + 1 < g.breakpoints.size(); ++i) {
      g.lengths[i] = g.breakpoints[i + 1] - g.breakpoints[i];
    }
    return g;
  }
};

/// A measure carried over to a working-precision grid.
template <class Real>
struct DiscreteMeasure {
  std::shared_ptr<const Grid<Real>> grid;
  std::vector<Real> densities;
};

template <class Real>
DiscreteMeasure<Real> discretize(const Measure& mu) {
  auto grid = std::make_shared<Grid<Real>>();
  grid->breakpoints.resize(mu.pieces() + 1);
  grid->lengths.resize(mu.pieces());
  for (std::size_t i = 0; i <= mu.pieces(); ++i) grid->breakpoints[i] = mu.breakpoint_as<Real>(i);
  for (std::size_t i = 0; i < mu.pieces(); ++i) grid->lengths[i] = mu.length_as<Real>(i);
  DiscreteMeasure<Real> out{grid, {}};
  out.densities.reserve(mu.pieces());
  for (double d : mu.densities()) out.densities.push_back(static_cast<Real>(d));
  return out;
}

/// Continuous piecewise polynomial on a shared grid. Each piece stores
/// coefficients in the local variable s = x - t_{i-1}, which keeps short
/// pieces far from the origin well conditioned.
template <class Real>
class PiecewisePolynomial {
 public:
  using Coefficients = std::vector<Real>;

  PiecewisePolynomial(std::shared_ptr<const Grid<Real>> grid, std::vector<Coefficients> pieces,
                      std::size_t degree_cap)
      : grid_(std::move(grid)), pieces_(std::move(pieces)), degree_cap_(degree_cap) {
    if (pieces_.size() != grid_->pieces()) {
      throw ConfigError("piece count must equal grid interval count");
    }
    for (auto& c : pieces_) {
      if (c.empty()) c.push_back(Real(0));
      if (c.size() > degree_cap_ + 1) {
        throw ConfigError("polynomial degree " + std::to_string(c.size() - 1) +
                          " exceeds degree cap " + std::to_string(degree_cap_));
      }
    }
  }

  static PiecewisePolynomial constant(std::shared_ptr<const Grid<Real>> grid, Real value,
                                      std::size_t degree_cap) {
    std::vector<Coefficients> pieces(grid->pieces(), Coefficients{value});
    return PiecewisePolynomial(std::move(grid), std::move(pieces), degree_cap);
  }

  const std::shared_ptr<const Grid<Real>>& grid() const { return grid_; }
  const std::vector<Coefficients>& pieces() const { return pieces_; }
  const Coefficients& piece(std::size_t i) const { return pieces_[i]; }
  std::size_t degree_cap() const { return degree_cap_; }

  std::size_t degree() const {
    std::size_t d = 0;
    for (const auto& c : pieces_) d = std::max(d, c.size() - 1);
    return d;
  }

  std::size_t coefficient_count() const {
    std::size_t n = 0;
    for (const auto& c : pieces_) n += c.size();
    return n;
  }

  /// Horner evaluation of piece i at local offset s.
  Real eval_local(std::size_t i, Real s) const { return horner(pieces_[i], s); }

  /// Value at the right end of piece i.
  Real right_value(std::size_t i) const { return horner(pieces_[i], grid_->lengths[i]); }

  Real operator()(Real x) const {
    if (!(x >= Real(0) && x <= Real(1))) {
      throw DomainError("evaluation point outside [0,1]: " + std::to_string(to_double(x)));
    }
    const std::size_t i = grid_->locate(x);
    return horner(pieces_[i], x - grid_->breakpoints[i]);
  }

  /// Piecewise classical derivative.
  PiecewisePolynomial derivative() const {
    std::vector<Coefficients> out(pieces_.size());
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto& c = pieces_[i];
      auto& d = out[i];
      for (std::size_t j = 1; j < c.size(); ++j) d.push_back(c[j] * Real(j));
    }
    return PiecewisePolynomial(grid_, std::move(out), degree_cap_);
  }

  friend PiecewisePolynomial operator+(const PiecewisePolynomial& a, const PiecewisePolynomial& b) {
    return combine(Real(1), a, Real(1), b);
  }

  /// a*f + b*g on a shared grid.
  static PiecewisePolynomial combine(Real a, const PiecewisePolynomial& f, Real b,
                                     const PiecewisePolynomial& g) {
    if (f.grid_ != g.grid_) throw ConfigError("combine requires a shared grid");
    std::vector<Coefficients> out(f.pieces_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& x = f.pieces_[i];
      const auto& y = g.pieces_[i];
      out[i].assign(std::max(x.size(), y.size()), Real(0));
      for (std::size_t j = 0; j < x.size(); ++j) out[i][j] += a * x[j];
      for (std::size_t j = 0; j < y.size(); ++j) out[i][j] += b * y[j];
    }
    return PiecewisePolynomial(f.grid_, std::move(out), std::max(f.degree_cap_, g.degree_cap_));
  }

  /// Re-expands onto a finer grid containing every breakpoint of this one.
  PiecewisePolynomial refine_to(std::shared_ptr<const Grid<Real>> finer) const {
    if (finer == grid_) return *this;
    std::vector<Coefficients> out(finer->pieces());
    std::size_t src = 0;
    for (std::size_t i = 0; i < finer->pieces(); ++i) {
      const Real left = finer->breakpoints[i];
      while (src + 1 < grid_->pieces() && grid_->breakpoints[src + 1] <= left) ++src;
      out[i] = taylor_shift(pieces_[src], left - grid_->breakpoints[src]);
    }
    return PiecewisePolynomial(std::move(finer), std::move(out), degree_cap_);
  }

  static Real horner(const Coefficients& c, Real s) {
    Real acc = c.back();
    for (std::size_t j = c.size() - 1; j-- > 0;) acc = acc * s + c[j];
    return acc;
  }

  /// Coefficients of p(s + delta) in s.
  static Coefficients taylor_shift(Coefficients c, Real delta) {
    if (delta == Real(0)) return c;
    const std::size_t n = c.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
      for (std::size_t j = n - 1; j-- > k;) c[j] += delta * c[j + 1];
    }
    return c;
  }

 private:
  std::shared_ptr<const Grid<Real>> grid_;
  std::vector<Coefficients> pieces_;
  std::size_t degree_cap_;
};

/// Grid containing the breakpoints of both inputs.
template <class Real>
std::shared_ptr<const Grid<Real>> merge_grids(const std::shared_ptr<const Grid<Real>>& a,
                                              const std::shared_ptr<const Grid<Real>>& b) {
  if (a == b) return a;
  std::vector<Real> bp;
  bp.reserve(a->breakpoints.size() + b->breakpoints.size());
  std::merge(a->breakpoints.begin(), a->breakpoints.end(), b->breakpoints.begin(),
             b->breakpoints.end(), std::back_inserter(bp));
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  if (bp.size() == a->breakpoints.size()) return a;
  if (bp.size() == b->breakpoints.size()) return b;
  return std::make_shared<const Grid<Real>>(Grid<Real>::from_breakpoints(std::move(bp)));
}

namespace detail {

/// Antiderivative on each piece scaled by `weights[i]`, chaining the
/// accumulated value left to right so the result vanishes at 0.
template <class Real>
PiecewisePolynomial<Real> integrate_weighted(const PiecewisePolynomial<Real>& f,
                                             const std::vector<Real>* weights) {
  const auto& grid = *f.grid();
  std::vector<typename PiecewisePolynomial<Real>::Coefficients> out(grid.pieces());
  Real acc(0);
  for (std::size_t i = 0; i < grid.pieces(); ++i) {
    const auto& c = f.piece(i);
    auto& r = out[i];
    const Real w = weights ? (*weights)[i] : Real(1);
    if (w == Real(0)) {
      r.assign(1, acc);
      continue;
    }
    if (c.size() + 1 > f.degree_cap() + 1) {
      throw ConfigError("integration would exceed degree cap " + std::to_string(f.degree_cap()) +
                        "; raise the cap");
    }
    r.resize(c.size() + 1);
    r[0] = acc;
    for (std::size_t j = 0; j < c.size(); ++j) r[j + 1] = w * c[j] / Real(j + 1);
    acc = PiecewisePolynomial<Real>::horner(r, grid.lengths[i]);
  }
  return PiecewisePolynomial<Real>(f.grid(), std::move(out), f.degree_cap());
}

}  // namespace detail

/// F(x) = int_0^x f(t) dt.
template <class Real>
PiecewisePolynomial<Real> integrate_dt(const PiecewisePolynomial<Real>& f) {
  return detail::integrate_weighted<Real>(f, nullptr);
}

/// G(x) = int_0^x f(t) dmu(t) for a measure already on f's grid.
template <class Real>
PiecewisePolynomial<Real> integrate_dmu(const PiecewisePolynomial<Real>& f,
                                        const DiscreteMeasure<Real>& mu) {
  if (f.grid() == mu.grid) return detail::integrate_weighted<Real>(f, &mu.densities);
  // Refine both onto the common grid; densities follow by lookup.
  auto common = merge_grids(f.grid(), mu.grid);
  std::vector<Real> densities(common->pieces());
  std::size_t src = 0;
  for (std::size_t i = 0; i < common->pieces(); ++i) {
    while (src + 1 < mu.grid->pieces() && mu.grid->breakpoints[src + 1] <= common->breakpoints[i]) {
      ++src;
    }
    densities[i] = mu.densities[src];
  }
  return detail::integrate_weighted<Real>(f.refine_to(common), &densities);
}

template <class Real>
PiecewisePolynomial<Real> integrate_dmu(const PiecewisePolynomial<Real>& f, const Measure& mu,
                                        const Limits& limits = {}) {
  if (f.grid()->pieces() + mu.pieces() > limits.max_intervals) {
    throw ResourceError("grid refinement exceeds the interval cap");
  }
  return integrate_dmu(f, discretize<Real>(mu));
}

/// Evaluates f at x in [0,1].
template <class Real>
Real eval(const PiecewisePolynomial<Real>& f, Real x) {
  return f(x);
}

/// Debug dump: one row per stored coefficient (piece, left, right, power, coefficient).
template <class Real>
void write_csv(std::ostream& os, const PiecewisePolynomial<Real>& f) {
  char buf[160];
  os << "piece,left,right,power,coefficient\r\n";
  const auto& g = *f.grid();
  for (std::size_t i = 0; i < f.pieces().size(); ++i) {
    const auto& c = f.piece(i);
    for (std::size_t j = 0; j < c.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu,%.17g\r\n", i,
                    to_double(g.breakpoints[i]), to_double(g.breakpoints[i + 1]), j,
                    to_double(c[j]));
      os << buf;
    }
  }
}

}  // namespace kfeller
