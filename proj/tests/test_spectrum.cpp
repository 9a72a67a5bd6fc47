#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kfeller/fem_oracle.hpp"
#include "kfeller/spectrum.hpp"
#include "support/oracles.hpp"

using namespace kfeller;

namespace {

const double pi = std::numbers::pi;

// Roots of the oracle's sine function by bisection on a fine scan.
std::vector<double> oracle_roots(const Measure& mu, Boundary b, std::size_t count) {
  const auto ps = oracle::pieces_of(mu);
  auto f = [&](double z) {
    const auto t = oracle::trig(ps, static_cast<oracle::LD>(z));
    return static_cast<double>(b == Boundary::neumann ? t.sp : t.sq);
  };
  std::vector<double> roots;
  double lo = 1e-3, flo = f(lo);
  for (double hi = lo + 1e-3; roots.size() < count; hi += 1e-3) {
    const double fhi = f(hi);
    if ((flo < 0) != (fhi < 0)) {
      double a = hi - 1e-3, c = hi;
      for (int i = 0; i < 80; ++i) {
        const double m = 0.5 * (a + c);
        ((f(m) < 0) == (f(a) < 0) ? a : c) = m;
      }
      roots.push_back(0.5 * (a + c));
    }
    flo = fhi;
  }
  return roots;
}

}  // namespace

TEST(FindEigenvalues, LebesgueNeumann) {
  const auto s = find_eigenvalues(Measure::lebesgue(), Boundary::neumann, 5);
  ASSERT_EQ(s.records.size(), 5u);
  EXPECT_EQ(s.records[0].lambda, 0.0);
  EXPECT_EQ(s.records[0].index, 0);
  for (int m = 1; m <= 4; ++m) {
    EXPECT_EQ(s.records[m].index, m);
    EXPECT_NEAR(s.records[m].lambda, m * m * pi * pi, 1e-9);
  }
}

TEST(FindEigenvalues, LebesgueDirichlet) {
  const auto s = find_eigenvalues(Measure::lebesgue(), Boundary::dirichlet, 3);
  ASSERT_EQ(s.records.size(), 3u);
  const double expected[] = {9.8696044010893586, 39.478417604357434, 88.826439609804229};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(s.records[i].index, i + 1);
    EXPECT_NEAR(s.records[i].lambda, expected[i], 1e-9);
  }
}

TEST(FindEigenvalues, CantorLevelTwoAgainstFem) {
  const auto mu = cantor_approximant({WeightVector(0.5), 2});
  const auto s = find_eigenvalues(mu, Boundary::neumann, 7);
  const auto fem = fem_oracle(mu, 6561, 7);
  for (std::size_t i = 1; i <= 6; ++i) {
    EXPECT_NEAR(s.records[i].lambda, fem[i], 1e-4 * fem[i]) << i;
  }
}

TEST(FindEigenvalues, MatchesOdeOracleRoots) {
  for (double w : {0.5, 1.0 / 3.0, 0.2}) {
    for (int n : {1, 3, 5}) {
      const auto mu = cantor_approximant({WeightVector(w), n});
      for (auto b : {Boundary::neumann, Boundary::dirichlet}) {
        const std::size_t offset = b == Boundary::neumann ? 1 : 0;
        const auto s = find_eigenvalues(mu, b, 5 + offset);
        const auto roots = oracle_roots(mu, b, 5);
        for (std::size_t i = 0; i < 5; ++i) {
          EXPECT_NEAR(s.records[i + offset].z, roots[i], 1e-10 * roots[i])
              << w << " " << n << " " << to_string(b) << " " << i;
        }
      }
    }
  }
}

TEST(FindEigenvalues, StrictlyIncreasingWithCertifiedBrackets) {
  for (double w : {0.5, 0.25}) {
    const auto mu = cantor_approximant({WeightVector(w), 4});
    for (auto b : {Boundary::neumann, Boundary::dirichlet}) {
      const auto s = find_eigenvalues(mu, b, 10);
      const auto f = sine_of(b);
      for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        EXPECT_DOUBLE_EQ(r.lambda, r.z * r.z);
        if (i > 0) EXPECT_GT(r.lambda, s.records[i - 1].lambda);
        if (r.index == 0) continue;
        EXPECT_LE(r.bracket_lo, r.z);
        EXPECT_GE(r.bracket_hi, r.z);
        EXPECT_LE(r.bracket_hi - r.bracket_lo, 1e-12 * std::max(1.0, r.z) * (1 + 1e-9));
        EXPECT_GE(r.error_bound, r.bracket_hi - r.bracket_lo);
        const auto lo = evaluate(*s.table, f, r.bracket_lo, {1e-12});
        const auto hi = evaluate(*s.table, f, r.bracket_hi, {1e-12});
        // Sign change survives widening by the certificates.
        EXPECT_LT((lo.value + std::copysign(lo.certificate.tail_bound, lo.value)) *
                      (hi.value + std::copysign(hi.certificate.tail_bound, hi.value)),
                  0.0);
        const double slope = std::abs(evaluate_prime(*s.table, f, r.z, {1e-12}).value);
        EXPECT_LE(r.residual, slope * (r.bracket_hi - r.bracket_lo) * 1.01 + 1e-14);
        EXPECT_NEAR(r.residual, std::abs(evaluate(*s.table, f, r.z, {1e-12}).value), 1e-15);
      }
    }
  }
}

TEST(FindEigenvalues, NeumannDirichletInterlaceByMinMax) {
  // Min-max with two endpoint constraints: N_{m-1} <= D_m <= N_{m+1}.
  for (double w : {1.0 / 3.0, 0.5}) {
    const auto mu = cantor_approximant({WeightVector(w), 4});
    const auto n = find_eigenvalues(mu, Boundary::neumann, 10);
    const auto d = find_eigenvalues(mu, Boundary::dirichlet, 8);
    for (std::size_t m = 1; m <= 8; ++m) {
      EXPECT_LT(n.records[m - 1].lambda, d.records[m - 1].lambda);
      EXPECT_LE(d.records[m - 1].lambda, n.records[m + 1].lambda * (1 + 1e-12));
    }
  }
}

TEST(FindEigenvalues, GrowsTheTableFromATinyOrder) {
  const auto mu = cantor_approximant({WeightVector(0.5), 3});
  auto tiny = std::make_shared<const TrigTable<Extended>>(mu, 2);
  const auto s = find_eigenvalues<Extended>(tiny, Boundary::dirichlet, 6, {});
  EXPECT_GT(s.table->order(), 2u);
  const auto ref = find_eigenvalues(mu, Boundary::dirichlet, 6);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(s.records[i].z, ref.records[i].z, 1e-11 * ref.records[i].z);
}

TEST(FindEigenvalues, FixedOrderCapRaisesPrecisionError) {
  RootOptions opts;
  opts.max_order = 10;
  auto table = std::make_shared<const TrigTable<Extended>>(Measure::lebesgue(), 10);
  try {
    (void)find_eigenvalues<Extended>(table, Boundary::neumann, 20, opts);
    FAIL() << "expected a precision error";
  } catch (const PrecisionError& e) {
    EXPECT_GT(e.required_order(), 10u);
  }
}

TEST(FindEigenvalues, RejectsBadOptions) {
  RootOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW((void)find_eigenvalues(Measure::lebesgue(), Boundary::neumann, 2, bad), ConfigError);
  EXPECT_THROW(parse_boundary("periodic"), ConfigError);
  EXPECT_EQ(parse_boundary("D"), Boundary::dirichlet);
  EXPECT_EQ(parse_boundary("neumann"), Boundary::neumann);
}

TEST(Eigenfunction, Examples) {
  const auto leb = find_eigenvalues(Measure::lebesgue(), Boundary::neumann, 4);
  const auto f1 = eigenfunction(leb, 1);
  EXPECT_NEAR(eigenfunction_eval(f1, 0.5), 0.0, 1e-12);
  EXPECT_NEAR(eigenfunction_eval(f1, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(eigenfunction_eval(f1, 1.0), -1.0, 1e-12);
  EXPECT_THROW((void)eigenfunction_eval(f1, 1.01), DomainError);
  EXPECT_THROW((void)eigenfunction_eval(f1, -0.01), DomainError);

  const auto mu = cantor_approximant({WeightVector(0.5), 2});
  const auto d = find_eigenvalues(mu, Boundary::dirichlet, 2);
  const auto g = eigenfunction(d, 0);
  EXPECT_EQ(eigenfunction_eval(g, 0.0), 0.0);
  EXPECT_NEAR(eigenfunction_eval(g, 1.0), 0.0, 1e-10);
  EXPECT_NEAR(g.derivative(0.0), d.records[0].z, 1e-12 * d.records[0].z);
}

TEST(Eigenfunction, MatchesOdeOracle) {
  const auto mu = cantor_approximant({WeightVector(0.3), 3});
  const auto ps = oracle::pieces_of(mu);
  for (auto b : {Boundary::neumann, Boundary::dirichlet}) {
    const auto s = find_eigenvalues(mu, b, 4);
    for (const auto& r : s.records) {
      if (r.index == 0) continue;
      const Eigenfunction<Extended> ef(r, s.table);
      for (int k = 0; k <= 100; ++k) {
        const double x = k / 100.0;
        const auto o = oracle::trig(ps, static_cast<oracle::LD>(r.z), static_cast<oracle::LD>(x));
        const double expected = static_cast<double>(b == Boundary::neumann ? o.cp : o.sq);
        EXPECT_NEAR(ef(x), expected, 1e-10);
      }
    }
  }
}

TEST(Eigenfunction, BoundaryConditions) {
  for (double w : {0.5, 0.25}) {
    const auto mu = cantor_approximant({WeightVector(w), 4});
    const auto n = find_eigenvalues(mu, Boundary::neumann, 5);
    for (std::size_t i = 1; i < n.records.size(); ++i) {
      const auto ef = eigenfunction(n, i);
      EXPECT_EQ(ef(0.0), 1.0);
      EXPECT_NEAR(ef.derivative(0.0), 0.0, 1e-15);
      // f'(1) = -z sp_z(1) = 0 at a root.
      EXPECT_NEAR(ef.derivative(1.0), 0.0, 1e-8 * n.records[i].lambda);
    }
    const auto d = find_eigenvalues(mu, Boundary::dirichlet, 5);
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      const auto ef = eigenfunction(d, i);
      EXPECT_EQ(ef(0.0), 0.0);
      EXPECT_NEAR(ef(1.0), 0.0, 1e-9);
    }
  }
}

TEST(L2Norm, Examples) {
  const auto leb = find_eigenvalues(Measure::lebesgue(), Boundary::neumann, 4);
  for (std::size_t m = 1; m <= 3; ++m) {
    EXPECT_NEAR(eigenfunction_l2_norm(eigenfunction(leb, m)), std::sqrt(0.5), 1e-12);
  }
  EXPECT_THROW((void)eigenfunction_l2_norm(eigenfunction(leb, 0)), ConfigError);
  const auto dir = find_eigenvalues(Measure::lebesgue(), Boundary::dirichlet, 1);
  EXPECT_THROW((void)eigenfunction_l2_norm(eigenfunction(dir, 0)), ConfigError);

  const auto mu = cantor_approximant({WeightVector(0.5), 1});
  const auto s = find_eigenvalues(mu, Boundary::neumann, 2);
  const auto ps = oracle::pieces_of(mu);
  const double q = std::sqrt(static_cast<double>(oracle::l2_squared(ps, s.records[1].z, true)));
  EXPECT_NEAR(eigenfunction_l2_norm(eigenfunction(s, 1)), q, 1e-7);
}

TEST(L2Norm, IdentityAgainstQuadratureAndExactIntegral) {
  for (double w : {0.5, 1.0 / 3.0, 0.25}) {
    for (int n = 0; n <= 4; ++n) {
      const auto mu = cantor_approximant({WeightVector(w), n});
      const auto ps = oracle::pieces_of(mu);
      const auto s = find_eigenvalues(mu, Boundary::neumann, 7);
      for (std::size_t m = 1; m <= 6; ++m) {
        const auto ef = eigenfunction(s, m);
        const double id = eigenfunction_l2_norm(ef);
        const double quad = std::sqrt(static_cast<double>(oracle::l2_squared(ps, s.records[m].z, true)));
        EXPECT_NEAR(id, quad, 1e-6 * quad) << w << " " << n << " " << m;
        EXPECT_NEAR(id, eigenfunction_l2_norm_exact(ef), 1e-9 * quad);
      }
    }
  }
}

TEST(CountZeros, Examples) {
  const auto leb = find_eigenvalues(Measure::lebesgue(), Boundary::neumann, 4);
  EXPECT_EQ(count_zeros(eigenfunction(leb, 0)), 0);
  EXPECT_EQ(count_zeros(eigenfunction(leb, 1)), 1);
  EXPECT_EQ(count_zeros(eigenfunction(leb, 3)), 3);
  const auto dir = find_eigenvalues(Measure::lebesgue(), Boundary::dirichlet, 2);
  EXPECT_EQ(count_zeros(eigenfunction(dir, 1)), 3);
  EXPECT_THROW((void)count_zeros(eigenfunction(dir, 1), 1), ConfigError);
}

TEST(CountZeros, OscillationCountsOnCantorLevels) {
  for (double w : {0.5, 1.0 / 3.0}) {
    for (int n : {2, 5}) {
      const auto mu = cantor_approximant({WeightVector(w), n});
      const auto ns = find_eigenvalues(mu, Boundary::neumann, 9);
      for (std::size_t m = 0; m <= 8; ++m) EXPECT_EQ(count_zeros(eigenfunction(ns, m)), static_cast<int>(m));
      const auto ds = find_eigenvalues(mu, Boundary::dirichlet, 8);
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(count_zeros(eigenfunction(ds, i)), static_cast<int>(i) + 2);
      }
    }
  }
}
