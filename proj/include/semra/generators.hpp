#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "semra/problem.hpp"
#include "semra/rng.hpp"

namespace semra {

/// Sequential draws from a counter-based stream.
class DrawStream {
 public:
  DrawStream(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

  double uniform() { return rng_.uniform(next_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [lo, hi].
  std::size_t integer(std::size_t lo, std::size_t hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    return lo + std::min(hi - lo, static_cast<std::size_t>(uniform() * span));
  }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() { return rng_.normal_pair(next_++).first; }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

namespace detail {

inline ProblemInstance slack_instance(Eigen::MatrixXd U, Eigen::VectorXd phi) {
  const auto n = U.cols();
  ProblemInstance inst;
  inst.U = std::move(U);
  inst.phi = std::move(phi);
  inst.costs = Eigen::VectorXd::Zero(n);
  inst.alpha = Eigen::VectorXd::Ones(n);
  inst.recon = Eigen::VectorXd::Zero(n);
  inst.snr = Eigen::VectorXd::Constant(n, 10.0);
  inst.kl = Eigen::VectorXd::Zero(n);
  inst.pair_sim = cosine_matrix(inst.U);
  inst.bounds.assign(static_cast<std::size_t>(n), 1);
  inst.constraints.k_max = static_cast<std::size_t>(n);
  inst.constraints.tau_alpha = 0.0;
  inst.constraints.epsilon = 1.0;
  inst.constraints.delta = 1.0;
  inst.constraints.tau_sim = 1.0;
  inst.constraints.gamma_min = 1.0;
  inst.cost.lambda1 = 1.0;
  inst.cost.lambda2 = 0.0;
  return inst;
}

}  // namespace detail

struct MixedInstanceOptions {
  std::size_t n_min = 4;
  std::size_t n_max = 12;
  /// Embedding dimension is drawn from [n * dim_lo, n * dim_hi].
  double dim_lo = 1.0;
  double dim_hi = 2.0;
};

/// Random instance with Gaussian embeddings (full column rank almost surely),
/// target phi = U alpha, and each side constraint independently active or
/// slack.
inline ProblemInstance mixed_instance(std::uint64_t seed, const MixedInstanceOptions& opt = {}) {
  DrawStream r(seed, 0x1001);
  const std::size_t n = r.integer(opt.n_min, opt.n_max);
  const auto lo = static_cast<std::size_t>(std::ceil(opt.dim_lo * static_cast<double>(n)));
  const auto hi = std::max(lo, static_cast<std::size_t>(std::floor(opt.dim_hi * static_cast<double>(n))));
  const std::size_t d = r.integer(lo, hi);
  const auto N = static_cast<Eigen::Index>(n);
  const auto D = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd U(D, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index i = 0; i < D; ++i) U(i, j) = r.normal() / std::sqrt(static_cast<double>(d));
  }
  Eigen::VectorXd alpha(N);
  for (Eigen::Index i = 0; i < N; ++i) alpha(i) = r.uniform();
  ProblemInstance inst = detail::slack_instance(U, U * alpha);
  inst.alpha = alpha;
  for (Eigen::Index i = 0; i < N; ++i) {
    inst.costs(i) = r.uniform(0.0, 2.0);
    inst.recon(i) = r.uniform();
    inst.kl(i) = r.uniform(0.0, 0.5);
    inst.snr(i) = r.uniform(0.5, 20.0);
    inst.bounds[static_cast<std::size_t>(i)] = r.bernoulli(0.85) ? 1 : 0;
  }
  auto& c = inst.constraints;
  c.k_max = r.integer(1, n);
  c.tau_alpha = r.bernoulli(0.5) ? 0.2 : 0.0;
  c.epsilon = r.bernoulli(0.5) ? 0.7 : 1.0;
  c.delta = r.bernoulli(0.5) ? 0.35 : 1.0;
  c.gamma_min = r.bernoulli(0.5) ? 2.0 : 0.1;
  c.tau_sim = r.bernoulli(0.5) ? r.uniform(0.3, 0.7) : 1.0;
  inst.cost.lambda1 = 1.0;
  inst.cost.lambda2 = r.uniform(0.05, 0.5);
  inst.validate();
  return inst;
}

/// Monotone instance for the greedy ratio: nonnegative unit embeddings,
/// phi = sum_i w_i u_i with w_i in [1, 2], zero costs, cardinality budget
/// only.
inline ProblemInstance monotone_instance(std::uint64_t seed, std::size_t n_min = 4, std::size_t n_max = 15) {
  DrawStream r(seed, 0x2002);
  const std::size_t n = r.integer(n_min, n_max);
  const std::size_t d = r.integer(n, 2 * n);
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd U(static_cast<Eigen::Index>(d), N);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index i = 0; i < U.rows(); ++i) U(i, j) = r.uniform();
    U.col(j).normalize();
  }
  Eigen::VectorXd w(N);
  for (Eigen::Index i = 0; i < N; ++i) w(i) = r.uniform(1.0, 2.0);
  ProblemInstance inst = detail::slack_instance(U, U * w);
  inst.constraints.k_max = r.integer(1, std::max<std::size_t>(1, n - 1));
  inst.validate();
  return inst;
}

/// Nonnegative embeddings with an arbitrary nonnegative target; satisfies
/// the pairwise-similarity hypothesis of the diminishing-returns property.
inline ProblemInstance nonnegative_instance(std::uint64_t seed, std::size_t n = 10, std::size_t d = 8) {
  DrawStream r(seed, 0x3003);
  Eigen::MatrixXd U(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    for (Eigen::Index i = 0; i < U.rows(); ++i) U(i, j) = r.uniform();
  }
  Eigen::VectorXd phi(U.rows());
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = r.uniform(0.0, 3.0);
  auto inst = detail::slack_instance(U, phi);
  inst.validate();
  return inst;
}

}  // namespace semra
