#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "lazsl/exact_ot.hpp"
#include "lazsl/rng.hpp"
#include "lazsl/sinkhorn.hpp"

namespace lazsl {

struct OtCheckConfig {
  std::size_t instances = 200;
  std::size_t max_cells = 25;  // N * M bound per instance
  std::size_t max_side = 6;
  SolverConfig solver{0.005, 200'000, 1e-9, SinkhornDomain::Log};
  double cost_gap_tol = 1e-3;  // |sinkhorn cost - exact cost|
  double undershoot_tol = 1e-9;  // sinkhorn cost may not fall below exact by more
  std::uint64_t seed = 0;
};

struct OtCheckSummary {
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::size_t non_converged = 0;
  double max_gap = 0.0;  // max of sinkhorn - exact
  double min_gap = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool passed() const noexcept { return failures == 0; }
};

/// Random cost in [0, 2] with uniform marginals, compared against exact_ot.
[[nodiscard]] inline OtCheckSummary ot_check(const OtCheckConfig& config) {
  SplitMix64 rng(config.seed);
  OtCheckSummary out;
  for (std::size_t k = 0; k < config.instances; ++k) {
    std::size_t n = 0;
    std::size_t m = 0;
    do {
      n = static_cast<std::size_t>(rng.uniform_int(1, config.max_side));
      m = static_cast<std::size_t>(rng.uniform_int(1, config.max_side));
    } while (n * m > std::min(config.max_cells, kExactOtMaxCells));

    CostMatrix cost(n, m);
    for (double& x : cost.data()) x = rng.uniform(0.0, 2.0);
    const Marginal r = Marginal::uniform(n);
    const Marginal c = Marginal::uniform(m);

    const TransportPlan plan = sinkhorn(cost, r, c, config.solver);
    const ExactOtResult exact = exact_ot(cost, r, c);
    const double gap = transport_cost(plan, cost) - exact.value;

    ++out.instances;
    out.non_converged += plan.converged ? 0 : 1;
    out.max_gap = std::max(out.max_gap, gap);
    out.min_gap = std::min(out.min_gap, gap);
    if (std::abs(gap) > config.cost_gap_tol || gap < -config.undershoot_tol) ++out.failures;
  }
  return out;
}

}  // namespace lazsl
