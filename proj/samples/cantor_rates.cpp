// Eigenvalue gaps between Cantor levels for w = (1/2, 1/2) and their fitted
// log-slope against log w2.

#include <cstdio>

#include "kfeller/convergence.hpp"

int main() {
  using namespace kfeller;
  const WeightVector w(0.5);
  const auto r = eigenvalue_rate_experiment(w, {1, 2, 3, 4, 5, 6}, Boundary::neumann, 3);
  for (std::size_t i = 0; i < r.indices.size(); ++i) {
    std::printf("m=%d\n", r.indices[i]);
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
      std::printf("  level %d  lambda=%.12f", r.levels[k], r.lambdas[i][k]);
      if (k + 1 < r.levels.size()) std::printf("  gap=%.3e", r.successive_gaps[i][k]);
      std::printf("\n");
    }
    std::printf("  slope %.3f  (log w2 %.3f)\n", r.fits[i].slope, r.reference_slope());
  }
}
