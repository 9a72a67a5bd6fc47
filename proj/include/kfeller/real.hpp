#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>

namespace kfeller {

/// Extended-precision scalar used for series coefficients. The alternating
/// series for the sine functions reach intermediate magnitudes of order e^z,
/// so double precision loses all accuracy near z ~ 30.
using Extended = __float128;

template <class Real>
inline constexpr bool is_supported_real_v =
    std::is_same_v<Real, double> || std::is_same_v<Real, long double> ||
    std::is_same_v<Real, Extended>;

template <class Real>
constexpr Real abs_value(Real x) {
  return x < Real(0) ? -x : x;
}

template <class Real>
constexpr double to_double(Real x) {
  return static_cast<double>(x);
}

template <class Real>
constexpr Real from_double(double x) {
  return static_cast<Real>(x);
}

/// Neumaier's variant of Kahan summation. Terms are accumulated in call
/// order, so results are reproducible for a fixed input sequence.
template <class Real>
class CompensatedSum {
 public:
  constexpr CompensatedSum() = default;
  constexpr explicit CompensatedSum(Real initial) : sum_(initial) {}

  constexpr void add(Real term) {
    const Real t = sum_ + term;
    if (abs_value(sum_) >= abs_value(term)) {
      compensation_ += (sum_ - t) + term;
    } else {
      compensation_ += (term - t) + sum_;
    }
    sum_ = t;
  }

  constexpr CompensatedSum& operator+=(Real term) {
    add(term);
    return *this;
  }

  constexpr Real value() const { return sum_ + compensation_; }

 private:
  Real sum_{0};
  Real compensation_{0};
};

/// Integer power 3^n as an exact 64-bit integer (n <= 39).
constexpr std::int64_t pow3(int n) {
  std::int64_t r = 1;
  for (int i = 0; i < n; ++i) r *= 3;
  return r;
}

}  // namespace kfeller
