#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "semra/error.hpp"

namespace semra {

/// min 1/2 s'Hs + l's  subject to 0 <= s <= upper and, optionally, sum(s) <= budget.
/// H must be symmetric positive semidefinite.
struct BoxQp {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::VectorXd upper;
  std::optional<double> budget;

  [[nodiscard]] double value(const Eigen::VectorXd& s) const {
    return 0.5 * s.dot(hessian * s) + linear.dot(s);
  }
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& s) const { return hessian * s + linear; }
};

struct QpResult {
  Eigen::VectorXd s;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Euclidean projection onto {0 <= s <= upper, sum(s) <= budget}. The budget
/// part bisects on the shift t in clip(y - t, 0, upper).
inline Eigen::VectorXd project_feasible(const BoxQp& qp, const Eigen::VectorXd& y) {
  Eigen::VectorXd s = y.cwiseMax(0.0).cwiseMin(qp.upper);
  if (!qp.budget || s.sum() <= *qp.budget) return s;
  const double k = std::max(0.0, *qp.budget);
  auto mass = [&](double t) { return (y.array() - t).cwiseMax(0.0).cwiseMin(qp.upper.array()).sum(); };
  double lo = 0.0;
  double hi = std::max(0.0, y.maxCoeff());
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mass(mid) > k ? lo : hi) = mid;
  }
  return (y.array() - hi).cwiseMax(0.0).cwiseMin(qp.upper.array()).matrix();
}

/// Gradient-projection residual ||s - P(s - grad)||_inf; zero exactly at a
/// minimizer of a convex problem over the feasible set.
inline double projection_residual(const BoxQp& qp, const Eigen::VectorXd& s, const Eigen::VectorXd& grad) {
  if (s.size() == 0) return 0.0;
  return (s - project_feasible(qp, s - grad)).lpNorm<Eigen::Infinity>();
}

/// Lower bound on the minimum from a feasible point via the linearization
/// f(s) + min_{x feasible} grad'(x - s). Exact for the set because its
/// vertices are 0/upper vectors with at most `budget` ones.
inline double certified_lower_bound(const BoxQp& qp, const Eigen::VectorXd& s) {
  const Eigen::VectorXd g = qp.gradient(s);
  double best = 0.0;
  if (!qp.budget) {
    for (Eigen::Index i = 0; i < g.size(); ++i) best += std::min(0.0, g(i) * qp.upper(i));
  } else {
    std::vector<double> gains;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (qp.upper(i) > 0.0 && g(i) < 0.0) gains.push_back(g(i) * qp.upper(i));
    }
    std::sort(gains.begin(), gains.end());
    const double k = std::max(0.0, *qp.budget);
    const auto whole = static_cast<std::size_t>(std::floor(k));
    for (std::size_t i = 0; i < gains.size() && i < whole; ++i) best += gains[i];
    if (whole < gains.size()) best += (k - static_cast<double>(whole)) * gains[whole];
  }
  return qp.value(s) + best - g.dot(s);
}

namespace detail {

/// Solve the equality-constrained subproblem on the current free set and
/// return the candidate point, or nothing if the active set is empty-free.
inline std::optional<Eigen::VectorXd> polish_active_set(const BoxQp& qp, const Eigen::VectorXd& s) {
  const Eigen::Index n = s.size();
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s(i) > 0.0 && s(i) < qp.upper(i)) free.push_back(i);
  }
  if (free.empty()) return std::nullopt;
  const bool budget_active = qp.budget && std::abs(s.sum() - *qp.budget) <= 1e-10;
  const auto m = static_cast<Eigen::Index>(free.size());
  const Eigen::Index dim = m + (budget_active ? 1 : 0);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  Eigen::VectorXd fixed = s;
  for (Eigen::Index a : free) fixed(a) = 0.0;
  const Eigen::VectorXd hf = qp.hessian * fixed;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) K(a, b) = qp.hessian(free[a], free[b]);
    rhs(a) = -qp.linear(free[a]) - hf(free[a]);
  }
  if (budget_active) {
    for (Eigen::Index a = 0; a < m; ++a) K(a, m) = K(m, a) = 1.0;
    rhs(m) = *qp.budget - fixed.sum();
  }
  const Eigen::VectorXd x = K.completeOrthogonalDecomposition().solve(rhs);
  if (!x.allFinite()) return std::nullopt;
  Eigen::VectorXd cand = s;
  for (Eigen::Index a = 0; a < m; ++a) cand(free[a]) = x(a);
  return cand;
}

}  // namespace detail

/// Projected gradient with Barzilai-Borwein trial steps and backtracking
/// line search, plus an active-set polish whenever the active set is stable.
inline QpResult solve_box_qp(const BoxQp& qp, const Eigen::VectorXd& start, double tol = 1e-8,
                             std::size_t max_iter = 20000) {
  const Eigen::Index n = qp.linear.size();
  if (!qp.hessian.allFinite() || !qp.linear.allFinite() || !qp.upper.allFinite()) {
    throw ValidationError("qp: non-finite problem data");
  }
  QpResult res;
  res.s = project_feasible(qp, start.size() == n ? start : Eigen::VectorXd::Zero(n));
  if (n == 0) {
    res.converged = true;
    return res;
  }
  Eigen::VectorXd g = qp.gradient(res.s);
  double f = qp.value(res.s);
  const double lipschitz = std::max(qp.hessian.cwiseAbs().rowwise().sum().maxCoeff(), 1e-12);
  double step = 1.0 / lipschitz;
  std::vector<int> last_pattern;
  auto pattern_of = [&](const Eigen::VectorXd& s) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      p[static_cast<std::size_t>(i)] = s(i) <= 0.0 ? -1 : (s(i) >= qp.upper(i) ? 1 : 0);
    }
    return p;
  };

  for (std::size_t it = 0; it < max_iter; ++it) {
    res.residual = projection_residual(qp, res.s, g);
    res.iterations = it;
    if (res.residual <= tol) {
      res.converged = true;
      return res;
    }
    auto pattern = pattern_of(res.s);
    if (pattern == last_pattern) {
      if (auto cand = detail::polish_active_set(qp, res.s)) {
        const Eigen::VectorXd c = project_feasible(qp, *cand);
        const Eigen::VectorXd gc = qp.gradient(c);
        const double fc = qp.value(c);
        const double rc = projection_residual(qp, c, gc);
        if (fc <= f + 1e-14 * (1.0 + std::abs(f)) && rc < res.residual) {
          res.s = c;
          g = gc;
          f = fc;
          last_pattern.clear();
          continue;
        }
      }
    }
    last_pattern = std::move(pattern);

    double t = step;
    Eigen::VectorXd next;
    double fn = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      next = project_feasible(qp, res.s - t * g);
      fn = qp.value(next);
      const Eigen::VectorXd d = next - res.s;
      if (fn <= f + g.dot(d) + d.squaredNorm() / (2.0 * t) + 1e-15 * (1.0 + std::abs(f))) break;
      t *= 0.5;
    }
    const Eigen::VectorXd ds = next - res.s;
    const Eigen::VectorXd gn = qp.gradient(next);
    const double curv = ds.dot(gn - g);
    step = curv > 1e-300 ? std::clamp(ds.squaredNorm() / curv, 1e-3 / lipschitz, 1e6 / lipschitz)
                         : 1.0 / lipschitz;
    res.s = std::move(next);
    g = gn;
    f = fn;
  }
  res.residual = projection_residual(qp, res.s, g);
  res.iterations = max_iter;
  res.converged = res.residual <= tol;
  return res;
}

}  // namespace semra
