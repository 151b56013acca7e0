#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "semra/generators.hpp"
#include "semra/optimizer.hpp"

namespace semra {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Relative excess of `value` over the reference optimum.
inline double relative_gap(double value, double optimum) {
  return (value - optimum) / std::max(std::abs(optimum), 1e-12);
}

/// Oracle and property checks against the exhaustive solver.
inline std::vector<CheckResult> verify_suite(std::size_t instances = 200, std::uint64_t seed = 0) {
  std::vector<CheckResult> out;
  {
    std::size_t bad = 0;
    std::size_t weak = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
      const auto inst = mixed_instance(seed + k);
      const auto opt = brute_force(inst);
      DualOptions o;
      o.trace = true;
      for (const auto& r : {dual_ascent(inst, o), primal_dual_kkt(inst, o)}) {
        const double g = relative_gap(r.objective, opt.objective);
        worst = std::max(worst, g);
        bad += (g > 0.05 || !r.feasible) ? 1 : 0;
        for (const auto& p : r.trace) weak += p.dual_value > opt.objective + 1e-8 ? 1 : 0;
      }
    }
    out.push_back({"dual solvers within 5% of brute force", bad == 0,
                   std::to_string(bad) + " misses, worst gap " + std::to_string(worst)});
    out.push_back({"weak duality along dual traces", weak == 0, std::to_string(weak) + " violations"});
  }
  {
    std::size_t bad = 0;
    double worst = 1.0;
    const double bound = 1.0 - 1.0 / std::exp(1.0) - 0.01;
    for (std::size_t k = 0; k < instances; ++k) {
      const auto inst = monotone_instance(seed + k);
      const double base = primal_objective(inst, SelectionVector(inst.size(), 0));
      const double best = base - brute_force(inst).objective;
      const double got = base - greedy_select(inst).objective;
      const double ratio = best > 0.0 ? got / best : 1.0;
      worst = std::min(worst, ratio);
      bad += ratio < bound ? 1 : 0;
    }
    out.push_back({"greedy ratio >= 1 - 1/e - 0.01", bad == 0,
                   std::to_string(bad) + " violations, worst ratio " + std::to_string(worst)});
  }
  {
    const auto rep = diminishing_returns_check(nonnegative_instance(seed), 500, seed);
    out.push_back({"diminishing returns", rep.passed(), std::to_string(rep.violations) + " violations"});
  }
  return out;
}

}  // namespace semra
