#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "kfeller/convergence.hpp"
#include "kfeller/spectrum.hpp"
#include "kfeller/trig_table.hpp"
#include "support/oracles.hpp"

using namespace kfeller;

namespace {

const double pi = std::numbers::pi;

const TrigTable<Extended>& lebesgue_table() {
  static const TrigTable<Extended> t(Measure::lebesgue(), bounds::required_order(32.0, 1e-15));
  return t;
}

const TrigTable<Extended>& mu1_table() {
  static const TrigTable<Extended> t(cantor_approximant({WeightVector(0.5), 1}),
                                     bounds::required_order(16.0, 1e-15));
  return t;
}

double factorial(std::size_t n) { return std::tgamma(static_cast<double>(n) + 1.0); }

}  // namespace

TEST(BuildTable, LebesgueCoefficientsAreInverseFactorials) {
  const auto& t = lebesgue_table();
  for (std::size_t n = 0; n < 40; ++n) {
    EXPECT_NEAR(to_double(t.p_one(n)) * factorial(n), 1.0, 1e-14) << n;
    EXPECT_NEAR(to_double(t.q_one(n)) * factorial(n), 1.0, 1e-14) << n;
  }
  EXPECT_EQ(t.size(), 2 * t.order() + 2);
}

TEST(BuildTable, StructuralInvariants) {
  for (double w : {0.5, 0.2}) {
    const TrigTable<Extended> t(cantor_approximant({WeightVector(w), 3}), 8);
    EXPECT_NEAR(to_double(t.p_one(1)), 1.0, 1e-15);
    for (std::size_t n = 0; n < t.size(); ++n) {
      const double zero = n == 0 ? 1.0 : 0.0;
      EXPECT_EQ(to_double(t.p(n)(Extended(0))), zero);
      EXPECT_EQ(to_double(t.q(n)(Extended(0))), zero);
      EXPECT_GE(to_double(t.p_one(n)), 0.0);
      EXPECT_GE(to_double(t.q_one(n)), 0.0);
    }
    for (std::size_t i = 0; i < t.p(0).pieces().size(); ++i) {
      EXPECT_EQ(t.p(0).piece(i).size(), 1u);
      EXPECT_EQ(to_double(t.p(0).piece(i)[0]), 1.0);
    }
  }
  EXPECT_THROW(TrigTable<Extended>(Measure::lebesgue(), 0), ConfigError);
}

TEST(BuildTable, FactorialBoundsAtOne) {
  for (double w : {0.5, 1.0 / 3.0, 0.25}) {
    const TrigTable<Extended> t(cantor_approximant({WeightVector(w), 4}), 20);
    const double p2 = to_double(t.p_one(2)), q2 = to_double(t.q_one(2));
    for (std::size_t n = 0; 2 * n + 1 < t.size(); ++n) {
      EXPECT_LE(to_double(t.p_one(2 * n + 1)), std::pow(q2, n) / factorial(n) * (1 + 1e-13));
      EXPECT_LE(to_double(t.p_one(2 * n)), std::pow(p2, n) / factorial(n) * (1 + 1e-13));
      EXPECT_LE(to_double(t.q_one(2 * n + 1)), std::pow(p2, n) / factorial(n) * (1 + 1e-13));
      EXPECT_LE(to_double(t.q_one(2 * n)), std::pow(q2, n) / factorial(n) * (1 + 1e-13));
    }
  }
}

TEST(BuildTable, SecondCoefficientMatchesQuadrature) {
  const auto mu = cantor_approximant({WeightVector(0.5), 1});
  const TrigTable<Extended> t(mu, 2);
  const auto ps = oracle::pieces_of(mu);
  // q_2(1) = int_0^1 t dmu(t); p_2(1) = int_0^1 F(t) dt.
  const auto q2 = oracle::integrate_dmu(ps, [](oracle::LD s) { return s; }, 1);
  const auto p2 = oracle::simpson([&](oracle::LD s) { return oracle::cdf(ps, s); }, 0, 1, 1e-13L);
  EXPECT_NEAR(to_double(t.q_one(2)), static_cast<double>(q2), 1e-10);
  EXPECT_NEAR(to_double(t.p_one(2)), static_cast<double>(p2), 1e-10);
}

TEST(Sinp, Examples) {
  const auto& leb = lebesgue_table();
  const auto v = sinp(leb, pi);
  EXPECT_NEAR(v.value, 0.0, 1e-12 + v.certificate.tail_bound);
  EXPECT_EQ(sinp(mu1_table(), 0.0).value, 0.0);
  EXPECT_EQ(sinq(mu1_table(), 0.0).value, 0.0);
  EXPECT_EQ(cosp(mu1_table(), 0.0).value, 1.0);
  EXPECT_EQ(cosq(mu1_table(), 0.0).value, 1.0);
  EXPECT_EQ(v.certificate.order, leb.order());
  EXPECT_EQ(v.certificate.z, pi);
}

TEST(Sinp, CantorLevelOneMatchesOdeOracle) {
  const auto ps = oracle::pieces_of(cantor_approximant({WeightVector(0.5), 1}));
  const auto o2 = oracle::trig(ps, 2.0L);
  EXPECT_NEAR(sinp(mu1_table(), 2.0).value, static_cast<double>(o2.sp), 1e-9);
  const auto o1 = oracle::trig(ps, 1.0L);
  EXPECT_NEAR(cosq(mu1_table(), 1.0).value, static_cast<double>(o1.cq), 1e-9);
}

TEST(Sinp, AllFunctionsMatchOdeOracleAcrossLevels) {
  for (double w : {0.5, 1.0 / 3.0, 0.25}) {
    for (int n : {1, 2, 4, 6}) {
      const auto mu = cantor_approximant({WeightVector(w), n});
      const TrigTable<Extended> t(mu, bounds::required_order(25.0, 1e-15));
      const auto ps = oracle::pieces_of(mu);
      for (double z = 0.5; z <= 25.0; z += 1.7) {
        const auto o = oracle::trig(ps, static_cast<oracle::LD>(z));
        const double scale = std::max(1.0, std::abs(static_cast<double>(o.sp)));
        EXPECT_NEAR(sinp(t, z).value, static_cast<double>(o.sp), 1e-10 * scale) << w << " " << n << " " << z;
        EXPECT_NEAR(cosp(t, z).value, static_cast<double>(o.cp), 1e-10 * std::max(1.0, std::abs(static_cast<double>(o.cp))));
        EXPECT_NEAR(sinq(t, z).value, static_cast<double>(o.sq), 1e-10 * std::max(1.0, std::abs(static_cast<double>(o.sq))));
        EXPECT_NEAR(cosq(t, z).value, static_cast<double>(o.cq), 1e-10 * std::max(1.0, std::abs(static_cast<double>(o.cq))));
      }
    }
  }
}

TEST(Sinp, LebesgueSpecialization) {
  const auto& t = lebesgue_table();
  for (double z = 0.0; z <= 12.0; z += 0.01) {
    const auto sp = sinp(t, z), sq = sinq(t, z), cp = cosp(t, z), cq = cosq(t, z);
    EXPECT_LE(std::abs(sp.value - std::sin(z)), 1e-10 + sp.certificate.tail_bound);
    EXPECT_LE(std::abs(sq.value - std::sin(z)), 1e-10 + sq.certificate.tail_bound);
    EXPECT_LE(std::abs(cp.value - std::cos(z)), 1e-10 + cp.certificate.tail_bound);
    EXPECT_LE(std::abs(cq.value - std::cos(z)), 1e-10 + cq.certificate.tail_bound);
  }
}

TEST(Certificate, BoundsTheActualTruncationError) {
  // Low orders so the truncation error is visible above rounding.
  const auto mu = cantor_approximant({WeightVector(1.0 / 3.0), 3});
  const auto ps = oracle::pieces_of(mu);
  for (std::size_t order : {3u, 6u, 10u, 16u}) {
    const TrigTable<Extended> t(mu, order);
    for (double z = 0.25; z <= 8.0; z += 0.25) {
      const auto o = oracle::trig(ps, static_cast<oracle::LD>(z));
      const EvalOptions any{std::numeric_limits<double>::infinity()};
      const auto sp = sinp(t, z, any), cq = cosq(t, z, any);
      EXPECT_LE(std::abs(sp.value - static_cast<double>(o.sp)),
                sp.certificate.tail_bound + 1e-13) << order << " " << z;
      EXPECT_LE(std::abs(cq.value - static_cast<double>(o.cq)),
                cq.certificate.tail_bound + 1e-13) << order << " " << z;
    }
  }
}

TEST(Certificate, UnreachableToleranceReportsOrder) {
  const TrigTable<Extended> t(Measure::lebesgue(), 5);
  try {
    (void)sinp(t, 20.0);
    FAIL() << "expected a precision error";
  } catch (const PrecisionError& e) {
    EXPECT_GT(e.required_order(), 5u);
    const TrigTable<Extended> enough(Measure::lebesgue(), e.required_order());
    EXPECT_NO_THROW((void)sinp(enough, 20.0));
  }
}

TEST(Certificate, RequiredOrderIsSufficient) {
  for (double z : {1.0, 5.0, 12.0, 30.0}) {
    const auto order = bounds::required_order(z, 1e-15);
    const TrigTable<Extended> t(cantor_approximant({WeightVector(0.5), 2}), order);
    EXPECT_LE(sinp(t, z).certificate.tail_bound, 1e-15);
    EXPECT_LE(cosq_prime(t, z).certificate.tail_bound, 1e-15);
    EXPECT_GE(t.certified_range(1e-15), z * (1 - 1e-9));
  }
}

TEST(Derivatives, Examples) {
  const auto& leb = lebesgue_table();
  for (double z : {0.3, 1.0, 2.5, 7.0, 11.0}) {
    EXPECT_NEAR(sinp_prime(leb, z).value, std::cos(z), 1e-12);
    EXPECT_NEAR(sinq_prime(leb, z).value, std::cos(z), 1e-12);
    EXPECT_NEAR(cosp_prime(leb, z).value, -std::sin(z), 1e-12);
    EXPECT_NEAR(cosq_prime(leb, z).value, -std::sin(z), 1e-12);
  }
  EXPECT_EQ(sinp_prime(mu1_table(), 0.0).value, 1.0);
  const double h = 1e-5;
  const double fd = (sinp(mu1_table(), 3.0 + h).value - sinp(mu1_table(), 3.0 - h).value) / (2 * h);
  EXPECT_NEAR(sinp_prime(mu1_table(), 3.0).value, fd, 1e-7);
}

TEST(Derivatives, MatchCentralDifferences) {
  const TrigTable<Extended> t(cantor_approximant({WeightVector(0.3), 3}),
                              bounds::required_order(12.0, 1e-15));
  const double h = 1e-5;
  for (double z = 0.1; z <= 12.0; z += 0.37) {
    for (auto f : {TrigFunction::sinp, TrigFunction::sinq, TrigFunction::cosp, TrigFunction::cosq}) {
      const double fd = (evaluate(t, f, z + h).value - evaluate(t, f, z - h).value) / (2 * h);
      EXPECT_NEAR(evaluate_prime(t, f, z).value, fd, 1e-6) << to_string(f) << " " << z;
    }
  }
}

TEST(XSeries, Examples) {
  const auto& leb = lebesgue_table();
  for (int m = 1; m <= 5; ++m) {
    for (double x = 0.0; x <= 1.0; x += 0.05) {
      EXPECT_NEAR(cp_eval(leb, m * pi, x).value, std::cos(m * pi * x), 1e-11);
      EXPECT_NEAR(sq_eval(leb, m * pi, x).value, std::sin(m * pi * x), 1e-11);
    }
  }
  for (double z : {0.7, 3.0, 9.0}) {
    EXPECT_EQ(cp_eval(mu1_table(), z, 0.0).value, 1.0);
    EXPECT_EQ(sq_eval(mu1_table(), z, 0.0).value, 0.0);
  }
  EXPECT_THROW((void)cp_eval(mu1_table(), 1.0, 1.5), DomainError);
}

TEST(XSeries, DirichletConditionAtComputedEigenvalue) {
  auto table = std::make_shared<const TrigTable<Extended>>(mu1_table());
  const auto s = find_eigenvalues<Extended>(table, Boundary::dirichlet, 1, {});
  const double z = s.records[0].z;
  const double slope = std::abs(sinq_prime(*s.table, z).value);
  EXPECT_NEAR(sq_eval(*s.table, z, 1.0).value, 0.0, 1e-12 * z * slope + 1e-14);
}

TEST(XSeries, MatchesOdeOracleInX) {
  const auto mu = cantor_approximant({WeightVector(0.25), 3});
  const TrigTable<Extended> t(mu, bounds::required_order(15.0, 1e-15));
  const auto ps = oracle::pieces_of(mu);
  for (double z : {1.0, 6.5, 14.0}) {
    for (double x = 0.0; x <= 1.0; x += 1.0 / 64) {
      const auto o = oracle::trig(ps, static_cast<oracle::LD>(z), static_cast<oracle::LD>(x));
      EXPECT_NEAR(cp_eval(t, z, x).value, static_cast<double>(o.cp), 1e-10);
      EXPECT_NEAR(sq_eval(t, z, x).value, static_cast<double>(o.sq), 1e-10);
      EXPECT_NEAR(sp_eval(t, z, x).value, static_cast<double>(o.sp), 1e-10);
      EXPECT_NEAR(cq_eval(t, z, x).value, static_cast<double>(o.cq), 1e-10);
    }
  }
}

TEST(Identities, NullSumsVanishAtNeumannEigenvalues) {
  for (double w : {0.5, 1.0 / 3.0}) {
    for (int n : {0, 2, 4}) {
      const auto mu = cantor_approximant({WeightVector(w), n});
      const auto s = find_eigenvalues<Extended>(mu, Boundary::neumann, 7);
      for (std::size_t i = 1; i < s.records.size(); ++i) {
        const auto ns = neumann_null_sums(*s.table, s.records[i].z);
        // A root error dz moves the sums by about their z-derivative times dz.
        const double root_noise = 1e-9 * s.records[i].z;
        EXPECT_LE(std::abs(ns.first), 1e-8 + ns.tail_bound + root_noise) << w << " " << n << " " << i;
        EXPECT_LE(std::abs(ns.second), 1e-8 + ns.tail_bound + root_noise) << w << " " << n << " " << i;
      }
    }
  }
}

TEST(Identities, WeightedOddSumAgreesWithDerivativeAtZeros) {
  const auto mu = cantor_approximant({WeightVector(0.5), 3});
  const auto s = find_eigenvalues<Extended>(mu, Boundary::neumann, 6);
  const auto& t = *s.table;
  auto weighted_sum = [&](double z) {
    // sum_k (-1)^k 2k z^{2k} p_{2k+1}(1)
    Extended sum = 0, pow = 1;
    const Extended z2 = Extended(z) * Extended(z);
    for (std::size_t k = 0; k <= t.order(); ++k) {
      const Extended term = Extended(2.0 * k) * pow * t.p_one(2 * k + 1);
      sum += k % 2 == 0 ? term : -term;
      pow *= z2;
    }
    return to_double(sum);
  };
  for (std::size_t i = 1; i < s.records.size(); ++i) {
    const double z = s.records[i].z;
    EXPECT_NEAR(weighted_sum(z), sinp_prime(t, z).value, 1e-9 * std::max(1.0, z));
  }
  // Away from zeros the two expressions differ by sinp(z)/z.
  const double z = 0.5 * (s.records[1].z + s.records[2].z);
  EXPECT_NEAR(sinp_prime(t, z).value - weighted_sum(z), sinp(t, z).value / z, 1e-9);
  EXPECT_GT(std::abs(sinp(t, z).value / z), 1e-3);
}

TEST(GapBounds, CoefficientGapsAtOne) {
  for (double w : {0.5, 1.0 / 3.0, 0.25}) {
    const WeightVector wv(w);
    std::vector<TrigTable<Extended>> tables;
    std::vector<Measure> ms;
    for (int n = 0; n <= 5; ++n) {
      ms.push_back(cantor_approximant({wv, n}));
      tables.emplace_back(ms.back(), 20);
    }
    for (std::size_t a = 0; a < ms.size(); ++a) {
      for (std::size_t b = a + 1; b < ms.size(); ++b) {
        const double d = cdf_sup_distance(ms[a], ms[b]);
        for (std::size_t n = 1; 2 * n + 1 < tables[a].size(); ++n) {
          const double bound = 2.0 * d / factorial(n - 1) * (1 + 1e-12) + 1e-16;
          auto gap = [&](auto get) { return std::abs(to_double(get(tables[a]) - get(tables[b]))); };
          EXPECT_LE(gap([&](const auto& t) { return t.q_one(2 * n); }), bound);
          EXPECT_LE(gap([&](const auto& t) { return t.p_one(2 * n); }), bound);
          EXPECT_LE(gap([&](const auto& t) { return t.q_one(2 * n + 1); }), bound);
          EXPECT_LE(gap([&](const auto& t) { return t.p_one(2 * n + 1); }), bound);
        }
      }
    }
  }
}

TEST(GapBounds, CosqConstantOnXGrid) {
  const WeightVector w(1.0 / 3.0);
  const auto m2 = cantor_approximant({w, 2}), m5 = cantor_approximant({w, 5});
  const std::size_t order = bounds::required_order(12.0, 1e-15);
  const TrigTable<Extended> a(m2, order), b(m5, order);
  const double d = cdf_sup_distance(m2, m5);
  for (double z : {0.1, 0.5, 1.0, 3.0, 8.0, 12.0}) {
    double sup = 0.0;
    for (int k = 0; k <= 243; ++k) {
      const double x = k / 243.0;
      sup = std::max(sup, std::abs(cq_eval(a, z, x).value - cq_eval(b, z, x).value));
    }
    EXPECT_LE(sup, cq_gap_constant(z) * d) << z;
  }
}

TEST(GapBounds, SharedConstantFailsForSpAtSmallFrequency) {
  // sp_z keeps the first-order term z (F - F_m), which the cq constant
  // 2 z^2 e^{z^2} cannot bound as z -> 0. The termwise constant does.
  const WeightVector w(0.5);
  const auto m0 = cantor_approximant({w, 0}), m1 = cantor_approximant({w, 1});
  const TrigTable<Extended> a(m0, 20), b(m1, 20);
  const double d = cdf_sup_distance(m0, m1);
  const double z = 0.1;
  double sup = 0.0;
  for (int k = 0; k <= 270; ++k) {
    const double x = k / 270.0;
    sup = std::max(sup, std::abs(sp_eval(a, z, x).value - sp_eval(b, z, x).value));
  }
  EXPECT_GT(sup, cq_gap_constant(z) * d);
  EXPECT_LE(sup, termwise_gap_constant(TrigFunction::sinp, z) * d);
}

TEST(CoefficientDump, Csv) {
  const TrigTable<Extended> t(Measure::lebesgue(), 1);
  std::ostringstream os;
  write_coefficients_csv(os, t);
  EXPECT_EQ(os.str(),
            "n,p_n(1),q_n(1)\r\n"
            "0,1,1\r\n"
            "1,1,1\r\n"
            "2,0.5,0.5\r\n"
            "3,0.16666666666666666,0.16666666666666666\r\n");
}
