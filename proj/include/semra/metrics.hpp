#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semra/error.hpp"

namespace semra {

using TokenList = std::span<const std::string>;

/// Brevity term of the BLEU log-score.
///   paper:     min(1 - N_hat/N, 0)  -- penalizes decoded output longer than the original
///   classical: min(1 - N/N_hat, 0)  -- penalizes decoded output shorter than the original
enum class BrevityMode { paper, classical };

struct MetricsReport {
  double bleu = 0.0;
  double similarity = 0.0;
  double accuracy = 0.0;
  double completeness = 0.0;
  std::size_t ngram_order = 4;
  std::vector<double> weights;
};

inline std::vector<double> uniform_weights(std::size_t order) {
  return std::vector<double>(order, 1.0 / static_cast<double>(order));
}

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(TokenList tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

inline std::map<std::string, std::size_t> token_counts(TokenList tokens) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return counts;
}

/// Sum over tokens in either list of min(count_a, count_b).
inline std::size_t clipped_matches(TokenList a, TokenList b) {
  const auto ca = token_counts(a);
  const auto cb = token_counts(b);
  std::size_t total = 0;
  for (const auto& [tok, n] : ca) {
    if (auto it = cb.find(tok); it != cb.end()) total += std::min(n, it->second);
  }
  return total;
}

}  // namespace detail

/// Clipped n-gram precision: matched candidate n-grams over candidate n-grams.
/// Returns 0 when the candidate has no n-grams of this order.
inline double ngram_precision(TokenList original, TokenList decoded, std::size_t n) {
  const auto cand = detail::ngram_counts(decoded, n);
  const auto ref = detail::ngram_counts(original, n);
  std::size_t matched = 0;
  std::size_t total = 0;
  for (const auto& [gram, count] : cand) {
    total += count;
    if (auto it = ref.find(gram); it != ref.end()) matched += std::min(count, it->second);
  }
  return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
}

inline double bleu(TokenList original, TokenList decoded, std::size_t order,
                   std::span<const double> weights, BrevityMode mode = BrevityMode::paper) {
  detail::require(!original.empty() && !decoded.empty(), "bleu: token lists must be nonempty");
  detail::require(order >= 1, "bleu: order must be at least 1");
  detail::require(weights.size() == order, "bleu: need one weight per n-gram order");
  double wsum = 0.0;
  for (double w : weights) {
    detail::require(w >= 0.0, "bleu: weights must be nonnegative");
    wsum += w;
  }
  detail::require(std::abs(wsum - 1.0) <= 1e-9, "bleu: weights must sum to 1");

  // Orders longer than the decoded sentence have no candidate n-grams; they
  // are skipped and the remaining weights renormalized.
  double log_score = 0.0;
  double used = 0.0;
  for (std::size_t n = 1; n <= std::min(order, decoded.size()); ++n) {
    const double p = ngram_precision(original, decoded, n);
    if (p == 0.0) return 0.0;
    log_score += weights[n - 1] * std::log(p);
    used += weights[n - 1];
  }
  if (used <= 0.0) return 0.0;
  log_score /= used;
  const double ratio = mode == BrevityMode::paper
                           ? static_cast<double>(decoded.size()) / static_cast<double>(original.size())
                           : static_cast<double>(original.size()) / static_cast<double>(decoded.size());
  log_score += std::min(1.0 - ratio, 0.0);
  return std::clamp(std::exp(log_score), 0.0, 1.0);
}

inline double bleu(TokenList original, TokenList decoded, std::size_t order = 4,
                   BrevityMode mode = BrevityMode::paper) {
  const auto w = uniform_weights(order);
  return bleu(original, decoded, order, w, mode);
}

/// Cosine similarity clamped to [0, 1].
inline double semantic_similarity(const Eigen::VectorXd& phi_x, const Eigen::VectorXd& phi_xhat) {
  detail::require(phi_x.size() == phi_xhat.size(), "similarity: dimension mismatch");
  const double nx = phi_x.norm();
  const double ny = phi_xhat.norm();
  detail::require(nx > 0.0 && ny > 0.0, "similarity: zero embedding vector");
  return std::clamp(phi_x.dot(phi_xhat) / (nx * ny), 0.0, 1.0);
}

/// Token-level precision with clipped counts.
inline double semantic_accuracy(TokenList original, TokenList decoded) {
  detail::require(!decoded.empty(), "accuracy: decoded sentence is empty");
  return static_cast<double>(detail::clipped_matches(decoded, original)) /
         static_cast<double>(decoded.size());
}

/// Token-level recall with clipped counts.
inline double semantic_completeness(TokenList original, TokenList decoded) {
  detail::require(!original.empty(), "completeness: original sentence is empty");
  return static_cast<double>(detail::clipped_matches(decoded, original)) /
         static_cast<double>(original.size());
}

}  // namespace semra
