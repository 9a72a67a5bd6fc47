#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "kfeller/errors.hpp"
#include "kfeller/measure.hpp"
#include "kfeller/spectrum.hpp"

namespace kfeller {

/// Symmetric tridiagonal pencil (K, M) from linear finite elements.
struct TridiagonalPencil {
  std::vector<double> k_diag, k_off;
  std::vector<double> m_diag, m_off;

  std::size_t size() const { return k_diag.size(); }

  /// Number of generalized eigenvalues below sigma (LDL^T inertia of K - sigma M).
  std::size_t count_below(double sigma) const {
    std::size_t negative = 0;
    double pivot = 1.0;
    for (std::size_t i = 0; i < size(); ++i) {
      double a = k_diag[i] - sigma * m_diag[i];
      if (i > 0) {
        const double b = k_off[i - 1] - sigma * m_off[i - 1];
        a -= b * b / pivot;
      }
      if (a == 0.0) a = -std::numeric_limits<double>::min();
      if (a < 0.0) ++negative;
      pivot = a;
    }
    return negative;
  }
};

/// Stiffness and consistent mass for u'' = -lambda u mu on a uniform mesh.
/// Nodes carrying no mass sit on springs only; they are condensed exactly
/// (springs in series), which leaves a tridiagonal pencil with M positive definite.
inline TridiagonalPencil assemble_fem(const Measure& mu, std::size_t elements, Boundary boundary) {
  if (elements < 1) throw ConfigError("FEM mesh needs at least one element");
  const double h = 1.0 / static_cast<double>(elements);
  for (double t : mu.breakpoints()) {
    const double s = t * static_cast<double>(elements);
    if (std::abs(s - std::round(s)) > 1e-9 * std::max(1.0, s)) {
      throw ConfigError("FEM mesh does not resolve measure breakpoint " + std::to_string(t));
    }
  }
  std::vector<double> density(elements);
  for (std::size_t e = 0; e < elements; ++e) {
    density[e] = mu.density(mu.locate((static_cast<double>(e) + 0.5) * h));
  }
  auto node_mass = [&](std::size_t i) {
    double m = 0.0;
    if (i > 0) m += density[i - 1] * h / 3.0;
    if (i < elements) m += density[i] * h / 3.0;
    return m;
  };

  const std::size_t first = boundary == Boundary::dirichlet ? 1 : 0;
  const std::size_t last = boundary == Boundary::dirichlet ? elements - 1 : elements;
  std::vector<std::size_t> nodes;
  for (std::size_t i = first; i <= last && elements >= 2 * first; ++i) {
    if (node_mass(i) > 0.0) nodes.push_back(i);
  }

  TridiagonalPencil out;
  const std::size_t n = nodes.size();
  out.k_diag.assign(n, 0.0);
  out.m_diag.resize(n);
  out.k_off.resize(n > 0 ? n - 1 : 0);
  out.m_off.resize(n > 0 ? n - 1 : 0);
  for (std::size_t j = 0; j < n; ++j) out.m_diag[j] = node_mass(nodes[j]);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const std::size_t a = nodes[j], b = nodes[j + 1];
    const double spring = 1.0 / (static_cast<double>(b - a) * h);
    out.k_diag[j] += spring;
    out.k_diag[j + 1] += spring;
    out.k_off[j] = -spring;
    out.m_off[j] = b == a + 1 ? density[a] * h / 6.0 : 0.0;
  }
  // Massless end chains: free ends drop out, clamped ends leave a spring to ground.
  if (boundary == Boundary::dirichlet && n > 0) {
    out.k_diag.front() += 1.0 / (static_cast<double>(nodes.front()) * h);
    out.k_diag.back() += 1.0 / (static_cast<double>(elements - nodes.back()) * h);
  }
  return out;
}

/// Lowest `count` generalized eigenvalues of the FEM pencil, by Sturm-count bisection.
inline std::vector<double> fem_oracle(const Measure& mu, std::size_t elements, std::size_t count,
                                      Boundary boundary = Boundary::neumann) {
  const auto pencil = assemble_fem(mu, elements, boundary);
  if (count > pencil.size()) {
    throw ConfigError("FEM mesh too coarse: only " + std::to_string(pencil.size()) +
                      " nodes carry mass, " + std::to_string(count) + " eigenvalues requested");
  }
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    double lo = out.empty() ? 0.0 : out.back() * (1.0 - 1e-12);
    double hi = std::max(1.0, 2.0 * lo);
    while (pencil.count_below(hi) <= k) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (pencil.count_below(mid) > k ? hi : lo) = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

}  // namespace kfeller
