// Calibrates the constant C in m = C mu^2 (log ell + log M + log 1/delta).
//
// Setup: n = 256, a union of 20 random 5-dimensional subspaces, DFT rows,
// optimized sampling, delta = 0.1. For each C on a grid it reports the RIP
// hold rate over 200 sample seeds at m(C) and at m(C)/8.
//
//   calibrate_rip [--seeds 200] [--union-seed 1]

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>

#include "vdcs/coherence.hpp"
#include "vdcs/config.hpp"
#include "vdcs/recovery.hpp"
#include "vdcs/rng.hpp"

int main(int argc, char** argv) {
  CLI::App app{"RIP sample-complexity calibration"};
  int seeds = 200;
  std::uint64_t union_seed = 1;
  app.add_option("--seeds", seeds)->check(CLI::PositiveNumber);
  app.add_option("--union-seed", union_seed);
  CLI11_PARSE(app, argc, argv);

  using namespace vdcs;
  const Index n = 256, ell = 5;
  const std::size_t M = 20;
  const double delta = 0.1;
  const SubspaceUnion T = random_subspace_union(n, M, ell, union_seed);
  const UnitaryOperator F = make_dft_operator(n);
  const Vec alpha = coherence_vector(F, T).alpha;
  const SamplingPlan plan = optimized_probabilities(alpha);
  const double mu = alpha.norm();
  std::printf("|alpha|_2 = %.6f  (current constant %.4g)\n", mu, kCalibratedRipConstant);
  std::printf("%8s %6s %10s %8s %10s\n", "C", "m", "hold(m)", "m/8", "hold(m/8)");

  auto hold_rate = [&](Index m) {
    int holds = 0;
    for (int s = 0; s < seeds; ++s)
      if (rip_check(plan, draw_sample(plan, m, derive_seed(0xca1, {std::uint64_t(s)})), F, T).holds) ++holds;
    return double(holds) / seeds;
  };
  for (double C : {0.25, 0.5, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0, 1.25, 1.5}) {
    const Index m = sample_complexity(mu, ell, std::log(double(M)), delta, C);
    const Index m8 = std::max<Index>(1, m / 8);
    std::printf("%8.3f %6ld %10.3f %8ld %10.3f\n", C, long(m), hold_rate(m), long(m8), hold_rate(m8));
  }
  return 0;
}
