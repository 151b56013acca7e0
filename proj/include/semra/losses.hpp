#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "semra/corpus.hpp"
#include "semra/error.hpp"

namespace semra {

struct CostParams {
  double kappa = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 0.1;

  void validate() const {
    detail::require(kappa >= 0.0 && lambda1 >= 0.0 && lambda2 >= 0.0,
                    "cost parameters must be nonnegative");
  }
};

/// Information-representability loss ||phi - psi||^2.
inline double loss_ir(const Eigen::VectorXd& phi_x, const Eigen::VectorXd& psi_s) {
  detail::require(phi_x.size() == psi_s.size(), "loss_ir: dimension mismatch");
  return (phi_x - psi_s).squaredNorm();
}

/// c_i = beta_i (E_i + kappa / SNR_i)
inline double token_cost(double recon_error, double snr, double beta, double kappa) {
  detail::require(snr > 0.0, "token_cost: snr must be positive");
  detail::require(recon_error >= 0.0 && beta >= 0.0 && kappa >= 0.0,
                  "token_cost: negative input");
  return beta * (recon_error + kappa / snr);
}

inline std::vector<double> token_costs(const AnnotatedSentence& s, double kappa) {
  std::vector<double> c(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    c[i] = token_cost(s.recon_error[i], s.token_snr[i], s.beta[i], kappa);
  }
  return c;
}

/// Distortion-criticality loss summed over every token of the sentence.
inline double loss_dc(const AnnotatedSentence& s, double kappa) {
  double total = 0.0;
  for (double c : token_costs(s, kappa)) total += c;
  return total;
}

/// lambda1 * ||phi - psi||^2 + lambda2 * sum_i c_i s_i
inline double objective(const Eigen::VectorXd& phi_x, const Eigen::VectorXd& psi_s,
                        std::span<const double> costs, std::span<const double> selection,
                        const CostParams& params) {
  detail::require(costs.size() == selection.size(), "objective: costs and selection differ in length");
  double cost_term = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) cost_term += costs[i] * selection[i];
  return params.lambda1 * loss_ir(phi_x, psi_s) + params.lambda2 * cost_term;
}

}  // namespace semra
