#pragma once

// Reference implementations written independently of the library, used as
// test oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semra/problem.hpp"

namespace oracle {

/// Depth-first enumeration of every binary vector; constraints are checked
/// from the raw instance fields rather than through the library helpers.
struct Enumerated {
  std::vector<std::uint8_t> best;
  double value = INFINITY;
  bool found = false;
};

inline double direct_objective(const semra::ProblemInstance& p, const std::vector<std::uint8_t>& s) {
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(p.phi.size());
  double cost = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i]) {
      psi += p.U.col(static_cast<Eigen::Index>(i));
      cost += p.costs(static_cast<Eigen::Index>(i));
    }
  }
  return p.cost.lambda1 * (p.phi - psi).squaredNorm() + p.cost.lambda2 * cost;
}

inline bool raw_feasible(const semra::ProblemInstance& p, const std::vector<std::uint8_t>& s) {
  std::size_t count = 0;
  const auto& c = p.constraints;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i]) continue;
    ++count;
    const auto k = static_cast<Eigen::Index>(i);
    if (!p.bounds[i] || p.alpha(k) < c.tau_alpha || p.recon(k) > c.epsilon || p.kl(k) > c.delta ||
        p.snr(k) < c.gamma_min) {
      return false;
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (s[j] && p.pair_sim(k, static_cast<Eigen::Index>(j)) > c.tau_sim) return false;
    }
  }
  return count <= c.k_max;
}

inline void enumerate(const semra::ProblemInstance& p, std::vector<std::uint8_t>& s, std::size_t i, Enumerated& out) {
  if (i == s.size()) {
    if (!raw_feasible(p, s)) return;
    const double v = direct_objective(p, s);
    if (!out.found || v < out.value) {
      out.value = v;
      out.best = s;
      out.found = true;
    }
    return;
  }
  s[i] = 0;
  enumerate(p, s, i + 1, out);
  s[i] = 1;
  enumerate(p, s, i + 1, out);
  s[i] = 0;
}

inline Enumerated exhaustive(const semra::ProblemInstance& p) {
  Enumerated out;
  std::vector<std::uint8_t> s(p.size(), 0);
  enumerate(p, s, 0, out);
  return out;
}

/// Sentence BLEU with the length term min(1 - cand/ref, 0) and uniform
/// weights over the orders the candidate is long enough to contain,
/// computed with plain loops over string n-grams.
inline double bleu(const std::vector<std::string>& ref, const std::vector<std::string>& cand, int order) {
  double log_sum = 0.0;
  const int usable = std::min(order, static_cast<int>(cand.size()));
  for (int n = 1; n <= usable; ++n) {
    std::map<std::string, int> rc, cc;
    auto key = [](const std::vector<std::string>& v, std::size_t at, int n) {
      std::string k;
      for (int t = 0; t < n; ++t) k += v[at + static_cast<std::size_t>(t)] + '\x1f';
      return k;
    };
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ref.size(); ++i) ++rc[key(ref, i, n)];
    int total = 0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= cand.size(); ++i) {
      ++cc[key(cand, i, n)];
      ++total;
    }
    int hit = 0;
    for (auto& [k, v] : cc) hit += std::min(v, rc.count(k) ? rc[k] : 0);
    if (hit == 0) return 0.0;
    log_sum += std::log(static_cast<double>(hit) / total) / usable;
  }
  const double bp = std::min(1.0 - static_cast<double>(cand.size()) / static_cast<double>(ref.size()), 0.0);
  return std::exp(bp + log_sum);
}

}  // namespace oracle
