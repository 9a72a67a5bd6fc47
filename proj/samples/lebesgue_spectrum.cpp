// First Neumann and Dirichlet eigenvalues of the level-0 measure (Lebesgue),
// next to the closed form (m pi)^2.

#include <cmath>
#include <cstdio>
#include <numbers>

#include "kfeller/spectrum.hpp"

int main() {
  using namespace kfeller;
  const auto mu = Measure::lebesgue();
  for (auto b : {Boundary::neumann, Boundary::dirichlet}) {
    const auto s = find_eigenvalues(mu, b, 5);
    std::printf("%s\n", to_string(b));
    for (const auto& r : s.records) {
      const double exact = r.index * r.index * std::numbers::pi * std::numbers::pi;
      std::printf("  m=%d  lambda=%.15f  (m pi)^2=%.15f  zeros=%d\n", r.index, r.lambda, exact,
                  count_zeros(eigenfunction(s, static_cast<std::size_t>(&r - s.records.data()))));
    }
  }
}
