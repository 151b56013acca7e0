#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semra/error.hpp"
#include "semra/problem.hpp"
#include "semra/qp.hpp"
#include "semra/rng.hpp"

namespace semra {

inline constexpr std::size_t kBruteForceLimit = 22;

// --- Exhaustive oracle ---------------------------------------------------------

/// Feasible minimizer of the selection objective over all binary vectors
/// respecting the bounds. Ties prefer fewer tokens, then the
/// lexicographically smallest vector.
inline SolveReport brute_force(const ProblemInstance& inst) {
  inst.validate();
  const std::size_t n = inst.size();
  if (n > kBruteForceLimit) {
    throw PreconditionError("brute_force: n = " + std::to_string(n) + " exceeds the limit of " +
                            std::to_string(kBruteForceLimit));
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (inst.admissible(i)) pool.push_back(i);
  }
  const Eigen::MatrixXd gram = inst.U.transpose() * inst.U;
  const Eigen::VectorXd proj = inst.U.transpose() * inst.phi;
  const double base = inst.phi.squaredNorm();
  const auto& cp = inst.cost;

  SolveReport best;
  best.selection.assign(n, 0);
  double best_value = std::numeric_limits<double>::infinity();
  std::size_t best_count = 0;
  bool found = false;
  std::vector<std::size_t> chosen;
  const std::uint64_t total = std::uint64_t{1} << pool.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    chosen.clear();
    for (std::size_t b = 0; b < pool.size(); ++b) {
      if (mask >> b & 1U) chosen.push_back(pool[b]);
    }
    if (chosen.size() > inst.constraints.k_max) continue;
    bool ok = true;
    for (std::size_t a = 0; a < chosen.size() && ok; ++a) {
      for (std::size_t b = a + 1; b < chosen.size() && ok; ++b) ok = !inst.redundant(chosen[a], chosen[b]);
    }
    if (!ok) continue;
    double quad = 0.0;
    double lin = 0.0;
    double cost = 0.0;
    for (std::size_t a : chosen) {
      const auto ia = static_cast<Eigen::Index>(a);
      lin += proj(ia);
      cost += inst.costs(ia);
      for (std::size_t b : chosen) quad += gram(ia, static_cast<Eigen::Index>(b));
    }
    const double value = cp.lambda1 * (base - 2.0 * lin + quad) + cp.lambda2 * cost;
    const double tie = 1e-12 * (1.0 + std::abs(value));
    bool better = !found || value < best_value - tie;
    if (!better && std::abs(value - best_value) <= tie) {
      if (chosen.size() != best_count) {
        better = chosen.size() < best_count;
      } else {
        SelectionVector cand(n, 0);
        for (std::size_t a : chosen) cand[a] = 1;
        better = cand < best.selection;
      }
    }
    if (better) {
      found = true;
      best_value = value;
      best_count = chosen.size();
      best.selection.assign(n, 0);
      for (std::size_t a : chosen) best.selection[a] = 1;
    }
  }
  best.iterations = static_cast<std::size_t>(total);
  finalize(best, inst);
  if (!found) {
    best.selection.assign(n, 0);
    best.feasible = false;
  }
  return best;
}

// --- Greedy --------------------------------------------------------------------

/// Greedy multi-constraint selection: filter candidates by the per-token
/// constraints, then repeatedly add the redundancy-compatible candidate with
/// the largest positive marginal gain until the budget is spent.
inline SolveReport greedy_select(const ProblemInstance& inst) {
  inst.validate();
  const std::size_t n = inst.size();
  const auto& cp = inst.cost;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (inst.admissible(i)) candidates.push_back(i);
  }
  SolveReport r;
  r.selection.assign(n, 0);
  std::vector<std::size_t> chosen;
  Eigen::VectorXd residual = inst.phi;
  while (chosen.size() < inst.constraints.k_max && !candidates.empty()) {
    ++r.iterations;
    std::optional<std::size_t> best;
    double best_gain = 0.0;
    for (std::size_t i : candidates) {
      const bool diverse = std::none_of(chosen.begin(), chosen.end(),
                                        [&](std::size_t j) { return inst.redundant(i, j); });
      if (!diverse) continue;
      const auto col = inst.U.col(static_cast<Eigen::Index>(i));
      const double after = (residual - col).squaredNorm();
      const double gain = cp.lambda1 * (residual.squaredNorm() - after) -
                          cp.lambda2 * inst.costs(static_cast<Eigen::Index>(i));
      if (!best || gain > best_gain) {
        best = i;
        best_gain = gain;
      }
    }
    if (!best || best_gain <= 0.0) break;
    chosen.push_back(*best);
    r.selection[*best] = 1;
    residual -= inst.U.col(static_cast<Eigen::Index>(*best));
    candidates.erase(std::find(candidates.begin(), candidates.end(), *best));
  }
  finalize(r, inst);
  return r;
}

// --- Lagrangian machinery ------------------------------------------------------

/// Values of the relaxed constraints at s. Each entry is <= 0 when satisfied.
struct RelaxedConstraints {
  double budget = 0.0;           // sum s - k_max
  Eigen::VectorXd divergence;    // (KL_i - delta) s_i
  Eigen::MatrixXd redundancy;    // s_i + s_j - 1 - tau'_ij, upper triangle
  Eigen::VectorXd recon;         // (E_i - eps) s_i
  Eigen::VectorXd reliability;   // (gamma_min - SNR_i) s_i

  [[nodiscard]] double max_violation() const {
    double m = budget;
    if (divergence.size() > 0) {
      m = std::max({m, divergence.maxCoeff(), recon.maxCoeff(), reliability.maxCoeff()});
    }
    for (Eigen::Index i = 0; i < redundancy.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < redundancy.cols(); ++j) m = std::max(m, redundancy(i, j));
    }
    return m;
  }
};

inline RelaxedConstraints relaxed_constraints(const ProblemInstance& inst, const Eigen::VectorXd& s) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  const auto& c = inst.constraints;
  RelaxedConstraints out;
  out.budget = s.sum() - static_cast<double>(c.k_max);
  out.divergence = ((inst.kl.array() - c.delta) * s.array()).matrix();
  out.recon = ((inst.recon.array() - c.epsilon) * s.array()).matrix();
  out.reliability = ((c.gamma_min - inst.snr.array()) * s.array()).matrix();
  out.redundancy = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out.redundancy(i, j) = s(i) + s(j) - 1.0 - inst.tau_prime_at(static_cast<std::size_t>(i),
                                                                   static_cast<std::size_t>(j));
    }
  }
  return out;
}

/// Largest |multiplier x constraint value| over every constraint.
inline double complementary_slackness(const Multipliers& m, const RelaxedConstraints& c) {
  double worst = std::abs(m.lambda * c.budget);
  if (c.divergence.size() > 0) {
    worst = std::max({worst, (m.mu.array() * c.divergence.array()).abs().maxCoeff(),
                      (m.eta.array() * c.recon.array()).abs().maxCoeff(),
                      (m.theta.array() * c.reliability.array()).abs().maxCoeff()});
  }
  for (Eigen::Index i = 0; i < m.nu.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.nu.cols(); ++j) {
      worst = std::max(worst, std::abs(m.nu(i, j) * c.redundancy(i, j)));
    }
  }
  return worst;
}

/// Coefficient of s_i in the Lagrangian apart from the quadratic term.
inline Eigen::VectorXd lagrangian_linear(const ProblemInstance& inst, const Multipliers& m) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  const auto& c = inst.constraints;
  Eigen::VectorXd lin = inst.cost.lambda2 * inst.costs;
  lin.array() += m.lambda;
  lin.array() += m.mu.array() * (inst.kl.array() - c.delta);
  lin.array() += m.eta.array() * (inst.recon.array() - c.epsilon);
  lin.array() += m.theta.array() * (c.gamma_min - inst.snr.array());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      lin(i) += m.nu(i, j);
      lin(j) += m.nu(i, j);
    }
  }
  return lin;
}

inline double lagrangian_constant(const ProblemInstance& inst, const Multipliers& m) {
  double k = inst.cost.lambda1 * inst.phi.squaredNorm() - m.lambda * static_cast<double>(inst.constraints.k_max);
  const auto n = static_cast<Eigen::Index>(inst.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      k -= m.nu(i, j) * (1.0 + inst.tau_prime_at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }
  }
  return k;
}

/// Lagrangian of the relaxed problem at (s, m).
inline double lagrangian(const ProblemInstance& inst, const Eigen::VectorXd& s, const Multipliers& m) {
  return primal_objective(inst, s) + m.lambda * (s.sum() - static_cast<double>(inst.constraints.k_max)) +
         [&] {
           const auto rc = relaxed_constraints(inst, s);
           double v = m.mu.dot(rc.divergence) + m.eta.dot(rc.recon) + m.theta.dot(rc.reliability);
           for (Eigen::Index i = 0; i < rc.redundancy.rows(); ++i) {
             for (Eigen::Index j = i + 1; j < rc.redundancy.cols(); ++j) v += m.nu(i, j) * rc.redundancy(i, j);
           }
           return v;
         }();
}

/// Stationarity gradient: -2 lambda1 u_i'r + lambda2 c_i + lambda + sum_j nu_ij
/// + mu_i (KL_i - delta) + eta_i (E_i - eps) + theta_i (gamma_min - SNR_i),
/// with r = phi - U s.
inline Eigen::VectorXd lagrangian_gradient(const ProblemInstance& inst, const Eigen::VectorXd& s,
                                           const Multipliers& m) {
  const Eigen::VectorXd r = inst.phi - inst.U * s;
  return -2.0 * inst.cost.lambda1 * (inst.U.transpose() * r) + lagrangian_linear(inst, m);
}

/// Box of the relaxation. A token failing a per-token constraint (importance,
/// reconstruction, divergence, reliability) is pinned at 0 in addition to its
/// grounding bound; the matching multiplier updates still run and stay at 0.
inline Eigen::VectorXd relaxed_upper(const ProblemInstance& inst) {
  Eigen::VectorXd up(static_cast<Eigen::Index>(inst.size()));
  for (std::size_t i = 0; i < inst.size(); ++i) up(static_cast<Eigen::Index>(i)) = inst.admissible(i) ? 1.0 : 0.0;
  return up;
}

/// The Lagrangian as a QP in s over the box (and optionally the budget).
inline BoxQp lagrangian_qp(const ProblemInstance& inst, const Multipliers& m, bool budget_in_set) {
  BoxQp qp;
  qp.hessian = 2.0 * inst.cost.lambda1 * (inst.U.transpose() * inst.U);
  qp.linear = -2.0 * inst.cost.lambda1 * (inst.U.transpose() * inst.phi) + lagrangian_linear(inst, m);
  qp.upper = relaxed_upper(inst);
  if (budget_in_set) qp.budget = static_cast<double>(inst.constraints.k_max);
  return qp;
}

/// Minimize the Lagrangian over the relaxation box for fixed multipliers,
/// starting from s = 0.
inline RelaxedSelection solve_relaxed_qp(const ProblemInstance& inst, const Multipliers& mult) {
  inst.validate();
  detail::require(mult.nonnegative(), "solve_relaxed_qp: multipliers must be nonnegative");
  const auto qp = lagrangian_qp(inst, mult, false);
  return solve_box_qp(qp, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inst.size()))).s;
}

// --- Rounding --------------------------------------------------------------------

/// Threshold at 1/2, keep the k_max largest relaxed values (ties to the lower
/// index), drop tokens failing a per-token constraint, then keep a redundancy
/// conflict-free subset by scanning in decreasing relaxed value.
inline SelectionVector round_and_repair(const ProblemInstance& inst, const RelaxedSelection& s) {
  const std::size_t n = inst.size();
  detail::require(static_cast<std::size_t>(s.size()) == n, "round_and_repair: length mismatch");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (s(static_cast<Eigen::Index>(i)) >= 0.5) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s(static_cast<Eigen::Index>(a)) > s(static_cast<Eigen::Index>(b));
  });
  if (order.size() > inst.constraints.k_max) order.resize(inst.constraints.k_max);
  SelectionVector out(n, 0);
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (!inst.admissible(i)) continue;
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) { return inst.redundant(i, j); });
    if (clash) continue;
    kept.push_back(i);
    out[i] = 1;
  }
  return out;
}

/// Best-improvement 1-swap local search over feasible selections: add a
/// token, drop one, or exchange a selected token for an unselected one.
/// Objective changes are evaluated incrementally from the Gram matrix.
inline SelectionVector local_search(const ProblemInstance& inst, SelectionVector sel,
                                    std::size_t max_passes = 1000) {
  const auto n = static_cast<Eigen::Index>(inst.size());
  if (!check_feasible(inst, sel).feasible()) return sel;
  const Eigen::MatrixXd gram = inst.U.transpose() * inst.U;
  const Eigen::VectorXd proj = inst.U.transpose() * inst.phi;
  const double l1 = inst.cost.lambda1;
  const double l2 = inst.cost.lambda2;
  Eigen::VectorXd gs = gram * to_vector(sel);
  std::size_t count = static_cast<std::size_t>(std::count(sel.begin(), sel.end(), 1));
  auto add_delta = [&](Eigen::Index j, double gsj) {
    return l1 * (-2.0 * proj(j) + gram(j, j) + 2.0 * gsj) + l2 * inst.costs(j);
  };
  auto drop_delta = [&](Eigen::Index i) {
    return l1 * (2.0 * proj(i) + gram(i, i) - 2.0 * gs(i)) - l2 * inst.costs(i);
  };
  auto compatible = [&](Eigen::Index j, Eigen::Index except) {
    if (!inst.admissible(static_cast<std::size_t>(j))) return false;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != except && sel[static_cast<std::size_t>(k)] &&
          inst.redundant(static_cast<std::size_t>(j), static_cast<std::size_t>(k))) {
        return false;
      }
    }
    return true;
  };
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    const double scale = 1e-12 * (1.0 + std::abs(primal_objective(inst, sel)));
    double best = -scale;
    Eigen::Index in = -1;
    Eigen::Index out = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (sel[static_cast<std::size_t>(j)]) {
        if (const double d = drop_delta(j); d < best) {
          best = d;
          in = -1;
          out = j;
        }
        continue;
      }
      if (count < inst.constraints.k_max && compatible(j, -1)) {
        if (const double d = add_delta(j, gs(j)); d < best) {
          best = d;
          in = j;
          out = -1;
        }
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!sel[static_cast<std::size_t>(i)] || !compatible(j, i)) continue;
        if (const double d = drop_delta(i) + add_delta(j, gs(j) - gram(j, i)); d < best) {
          best = d;
          in = j;
          out = i;
        }
      }
    }
    if (in < 0 && out < 0) break;
    if (out >= 0) {
      sel[static_cast<std::size_t>(out)] = 0;
      gs -= gram.col(out);
      --count;
    }
    if (in >= 0) {
      sel[static_cast<std::size_t>(in)] = 1;
      gs += gram.col(in);
      ++count;
    }
  }
  return sel;
}

struct RoundingOptions {
  std::size_t samples = 16;
  std::uint64_t seed = 0;
};

/// Rounding used by the dual solvers. Candidates: round_and_repair of the
/// relaxed point, every top-k prefix of the relaxed ranking, and seeded
/// randomized roundings with P(s_i = 1) = s_i. Each candidate is repaired,
/// polished by local_search, and the lowest objective wins (earliest
/// candidate on ties).
inline SelectionVector round_relaxed(const ProblemInstance& inst, const RelaxedSelection& x,
                                     const RoundingOptions& opts = {}) {
  const std::size_t n = inst.size();
  SelectionVector best = local_search(inst, round_and_repair(inst, x));
  double best_value = primal_objective(inst, best);
  auto consider = [&](const SelectionVector& cand) {
    auto polished = local_search(inst, cand);
    const double v = primal_objective(inst, polished);
    if (v < best_value - 1e-12 * (1.0 + std::abs(best_value))) {
      best_value = v;
      best = std::move(polished);
    }
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x(static_cast<Eigen::Index>(a)) > x(static_cast<Eigen::Index>(b));
  });
  SelectionVector prefix(n, 0);
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (kept.size() >= inst.constraints.k_max || x(static_cast<Eigen::Index>(i)) <= 0.0) break;
    if (!inst.admissible(i)) continue;
    if (std::any_of(kept.begin(), kept.end(), [&](std::size_t j) { return inst.redundant(i, j); })) continue;
    kept.push_back(i);
    prefix[i] = 1;
    consider(prefix);
  }
  const CounterRng rng(opts.seed, 0x70d);
  std::uint64_t ctr = 0;
  for (std::size_t k = 0; k < opts.samples; ++k) {
    RelaxedSelection draw(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      draw(static_cast<Eigen::Index>(i)) = rng.uniform(ctr++) < x(static_cast<Eigen::Index>(i)) ? 1.0 : 0.0;
    }
    consider(round_and_repair(inst, draw));
  }
  return best;
}

// --- Dual methods ------------------------------------------------------------------

struct DualOptions {
  double step = 0.05;
  std::size_t max_iterations = 5000;
  double multiplier_tol = 1e-6;
  double kkt_tol = 1e-6;
  double constraint_tol = 1e-6;
  double qp_tol = 1e-8;
  bool trace = false;
  bool record_multipliers = false;
  RoundingOptions rounding;
};

namespace detail {

enum class DualMode { ascent, kkt };

inline Multipliers ascend(const Multipliers& m, const RelaxedConstraints& c, double step) {
  Multipliers out = m;
  out.step = step;
  out.lambda = std::max(0.0, m.lambda + step * c.budget);
  out.mu = (m.mu + step * c.divergence).cwiseMax(0.0);
  out.eta = (m.eta + step * c.recon).cwiseMax(0.0);
  out.theta = (m.theta + step * c.reliability).cwiseMax(0.0);
  for (Eigen::Index i = 0; i < out.nu.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < out.nu.cols(); ++j) {
      out.nu(i, j) = std::max(0.0, m.nu(i, j) + step * c.redundancy(i, j));
    }
  }
  return out;
}

inline double max_change(const Multipliers& a, const Multipliers& b) {
  double d = std::abs(a.lambda - b.lambda);
  if (a.mu.size() > 0) {
    d = std::max({d, (a.mu - b.mu).cwiseAbs().maxCoeff(), (a.eta - b.eta).cwiseAbs().maxCoeff(),
                  (a.theta - b.theta).cwiseAbs().maxCoeff(), (a.nu - b.nu).cwiseAbs().maxCoeff()});
  }
  return d;
}

struct PrimalStep {
  Eigen::VectorXd s;
  double dual = 0.0;       // certified lower bound on the dual function
  double lagrangian = 0.0; // Lagrangian at the computed minimizer
  double stationarity = 0.0;
};

inline PrimalStep minimize_lagrangian(const ProblemInstance& inst, const Multipliers& m, bool budget_in_set,
                                      const Eigen::VectorXd& warm, double tol) {
  const auto qp = lagrangian_qp(inst, m, budget_in_set);
  auto res = solve_box_qp(qp, warm, tol);
  PrimalStep out;
  const double k = lagrangian_constant(inst, m);
  out.dual = std::min(certified_lower_bound(qp, res.s), qp.value(res.s)) + k;
  out.lagrangian = qp.value(res.s) + k;
  out.stationarity = res.residual;
  out.s = std::move(res.s);
  if (!std::isfinite(out.dual)) {
    throw NumericalError("dual value became non-finite (dual step " + std::to_string(m.step) + ")");
  }
  return out;
}

inline SolveReport run_dual(const ProblemInstance& inst, const DualOptions& opts, DualMode mode) {
  inst.validate();
  detail::require(opts.step > 0.0, "dual step must be positive");
  const std::size_t n = inst.size();
  const bool budget_in_set = mode == DualMode::kkt;
  double step = opts.step;
  Multipliers m = Multipliers::zero(n, step);
  auto cur = minimize_lagrangian(inst, m, budget_in_set, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)),
                                 opts.qp_tol);
  SolveReport r;
  r.converged = false;
  auto record = [&](std::size_t it) {
    if (!opts.trace) return;
    TracePoint p;
    p.iteration = it;
    p.primal_objective = primal_objective(inst, cur.s);
    p.dual_value = cur.dual;
    p.stationarity = cur.stationarity;
    p.step = step;
    if (opts.record_multipliers) p.multipliers = m;
    r.trace.push_back(std::move(p));
  };
  auto kkt_satisfied = [&](const RelaxedConstraints& c) {
    return cur.stationarity <= opts.kkt_tol && c.max_violation() <= opts.constraint_tol &&
           complementary_slackness(m, c) <= opts.constraint_tol;
  };
  record(0);

  std::size_t it = 0;
  RelaxedConstraints cons = relaxed_constraints(inst, cur.s);
  if (mode == DualMode::kkt && kkt_satisfied(cons)) r.converged = true;
  while (!r.converged && it < opts.max_iterations) {
    ++it;
    const Multipliers proposal = ascend(m, cons, step);
    if (mode == DualMode::ascent && max_change(proposal, m) < opts.multiplier_tol) {
      r.converged = true;
      break;
    }
    auto next = minimize_lagrangian(inst, proposal, budget_in_set, cur.s, opts.qp_tol);
    if (next.lagrangian < cur.lagrangian - 1e-12 * (1.0 + std::abs(cur.lagrangian)) && step > 1e-12) {
      step *= 0.5;
      continue;
    }
    m = proposal;
    cur = std::move(next);
    cons = relaxed_constraints(inst, cur.s);
    record(it);
    if (mode == DualMode::kkt && kkt_satisfied(cons)) r.converged = true;
  }
  m.step = step;
  r.iterations = it;
  r.dual_value = cur.dual;
  r.kkt_residual = cur.stationarity;
  r.relaxed = cur.s;
  r.multipliers = m;
  r.selection = round_relaxed(inst, cur.s, opts.rounding);
  finalize(r, inst);
  return r;
}

}  // namespace detail

/// Lagrangian dual ascent: alternate the box-constrained QP with projected
/// multiplier updates until the multipliers settle, then round.
inline SolveReport dual_ascent(const ProblemInstance& inst, DualOptions opts = {}) {
  return detail::run_dual(inst, opts, detail::DualMode::ascent);
}

/// Primal-dual iteration with the budget kept in the primal set; stops once
/// stationarity, primal feasibility and complementary slackness all hold.
inline SolveReport primal_dual_kkt(const ProblemInstance& inst, DualOptions opts = {}) {
  if (opts.max_iterations == DualOptions{}.max_iterations) opts.max_iterations = 10000;
  return detail::run_dual(inst, opts, detail::DualMode::kkt);
}

// --- Submodularity probe -----------------------------------------------------------

struct DiminishingReturnsReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_gap = 0.0;  // min over trials of Delta_j(S) - Delta_j(T)
  [[nodiscard]] bool passed() const noexcept { return violations == 0; }
};

/// Marginal gain of adding u_j to the aggregate of `set`:
/// 2 phi'u_j - 2 (sum_{i in set} u_i)'u_j - ||u_j||^2.
inline double marginal_gain(const ProblemInstance& inst, const std::vector<std::size_t>& set, std::size_t j) {
  const auto uj = inst.U.col(static_cast<Eigen::Index>(j));
  Eigen::VectorXd agg = Eigen::VectorXd::Zero(inst.U.rows());
  for (std::size_t i : set) agg += inst.U.col(static_cast<Eigen::Index>(i));
  return 2.0 * inst.phi.dot(uj) - 2.0 * agg.dot(uj) - uj.squaredNorm();
}

inline DiminishingReturnsReport diminishing_returns_check(const ProblemInstance& inst, std::size_t trials,
                                                          std::uint64_t seed, double tol = 1e-9) {
  const std::size_t n = inst.size();
  const Eigen::MatrixXd gram = inst.U.transpose() * inst.U;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      if (i != j && gram(i, j) < -1e-12) {
        throw PreconditionError("diminishing_returns_check: embeddings " + std::to_string(i) + " and " +
                                std::to_string(j) + " have a negative inner product");
      }
    }
  }
  DiminishingReturnsReport rep;
  rep.worst_gap = std::numeric_limits<double>::infinity();
  if (n < 1) return rep;
  const CounterRng rng(seed, 0xd1);
  std::uint64_t ctr = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto j = static_cast<std::size_t>(rng.uniform(ctr++) * static_cast<double>(n));
    std::vector<std::size_t> small;
    std::vector<std::size_t> large;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const double u = rng.uniform(ctr++);
      if (u < 1.0 / 3.0) {
        small.push_back(i);
        large.push_back(i);
      } else if (u < 2.0 / 3.0) {
        large.push_back(i);
      }
    }
    const double gap = marginal_gain(inst, small, j) - marginal_gain(inst, large, j);
    rep.worst_gap = std::min(rep.worst_gap, gap);
    if (gap < -tol) ++rep.violations;
    ++rep.trials;
  }
  return rep;
}

// --- Matroid augmentation ------------------------------------------------------------

/// Partition matroid: element e belongs to group[e]; a set is independent
/// when no group holds more than its capacity.
struct PartitionMatroid {
  std::vector<std::size_t> group;
  std::vector<std::size_t> capacity;

  [[nodiscard]] bool independent(const std::vector<std::size_t>& set) const {
    std::vector<std::size_t> load(capacity.size(), 0);
    for (std::size_t e : set) {
      if (e >= group.size()) return false;
      if (++load[group[e]] > capacity[group[e]]) return false;
    }
    return true;
  }
};

/// Redundancy matroid: connected components of the graph Sim > tau_sim, each
/// holding at most one selected token.
inline PartitionMatroid diversity_matroid(const ProblemInstance& inst) {
  const std::size_t n = inst.size();
  std::vector<std::size_t> comp(n);
  std::iota(comp.begin(), comp.end(), std::size_t{0});
  auto root = [&](std::size_t x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (inst.redundant(i, j)) comp[root(j)] = root(i);
    }
  }
  PartitionMatroid m;
  std::vector<std::size_t> label(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = root(i);
    if (label[r] == n) {
      label[r] = m.capacity.size();
      m.capacity.push_back(1);
    }
    m.group.push_back(label[r]);
  }
  return m;
}

/// Relational-consistency matroid: tokens within the divergence threshold are
/// free; tokens above it are loops (capacity-0 group).
inline PartitionMatroid consistency_matroid(const ProblemInstance& inst) {
  PartitionMatroid m;
  m.capacity = {inst.size(), 0};
  for (std::size_t i = 0; i < inst.size(); ++i) {
    m.group.push_back(inst.kl(static_cast<Eigen::Index>(i)) <= inst.constraints.delta ? 0 : 1);
  }
  return m;
}

struct Augmentation {
  enum class Kind { augment, exchange, none };
  Kind kind = Kind::none;
  std::size_t element = 0;
};

/// Find b in B\A with A+b independent in both matroids (lowest index first);
/// failing that, a in A\B with B+a independent in both. Returns Kind::none
/// when neither exists.
inline Augmentation matroid_augment(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                                    const PartitionMatroid& first, const PartitionMatroid& second) {
  if (!first.independent(a) || !second.independent(a)) {
    throw PreconditionError("matroid_augment: A must be independent in both matroids");
  }
  if (!first.independent(b)) throw PreconditionError("matroid_augment: B must be independent in the first matroid");
  if (b.size() <= a.size()) throw PreconditionError("matroid_augment: requires |B| > |A|");
  auto contains = [](const std::vector<std::size_t>& v, std::size_t e) {
    return std::find(v.begin(), v.end(), e) != v.end();
  };
  std::vector<std::size_t> sb(b);
  std::sort(sb.begin(), sb.end());
  for (std::size_t e : sb) {
    if (contains(a, e)) continue;
    auto grown = a;
    grown.push_back(e);
    if (first.independent(grown) && second.independent(grown)) return {Augmentation::Kind::augment, e};
  }
  std::vector<std::size_t> sa(a);
  std::sort(sa.begin(), sa.end());
  for (std::size_t e : sa) {
    if (contains(b, e)) continue;
    auto grown = b;
    grown.push_back(e);
    if (first.independent(grown) && second.independent(grown)) return {Augmentation::Kind::exchange, e};
  }
  return {};
}

}  // namespace semra
