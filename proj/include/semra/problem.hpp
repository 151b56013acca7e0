#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "semra/corpus.hpp"
#include "semra/error.hpp"
#include "semra/losses.hpp"

namespace semra {

/// Thresholds of the selection problem: bandwidth budget, importance,
/// reconstruction, relational consistency, redundancy and reliability.
struct ConstraintParams {
  std::size_t k_max = 0;
  double tau_alpha = 0.3;
  double epsilon = 1.0;
  double delta = 1.0;
  double tau_sim = 0.9;
  double gamma_min = 1.0;  // linear SNR

  void validate() const {
    detail::require(tau_alpha >= 0.0 && tau_alpha <= 1.0, "tau_alpha outside [0,1]");
    detail::require(epsilon >= 0.0, "epsilon must be nonnegative");
    detail::require(delta >= 0.0, "delta must be nonnegative");
    detail::require(gamma_min > 0.0, "gamma_min must be positive");
  }
};

using SelectionVector = std::vector<std::uint8_t>;
using RelaxedSelection = Eigen::VectorXd;

struct ProblemInstance {
  Eigen::MatrixXd U;  // d x n, columns are token embeddings
  Eigen::VectorXd phi;
  Eigen::VectorXd costs;
  Eigen::VectorXd alpha;
  Eigen::VectorXd recon;
  Eigen::VectorXd snr;
  Eigen::VectorXd kl;
  Eigen::MatrixXd pair_sim;
  std::vector<std::uint8_t> bounds;
  ConstraintParams constraints;
  CostParams cost;
  /// Optional explicit relaxation offsets for the pairwise redundancy
  /// constraint s_i + s_j <= 1 + tau'_ij. Empty means: 1 where the pair is
  /// not redundant, 0 where Sim > tau_sim.
  Eigen::MatrixXd tau_prime;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(U.cols()); }

  [[nodiscard]] double tau_prime_at(std::size_t i, std::size_t j) const {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    if (tau_prime.size() != 0) return tau_prime(a, b);
    return pair_sim(a, b) > constraints.tau_sim ? 0.0 : 1.0;
  }

  [[nodiscard]] bool redundant(std::size_t i, std::size_t j) const {
    return pair_sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > constraints.tau_sim;
  }

  /// Token passes every per-token constraint (bound, importance,
  /// reconstruction, relational divergence, reliability).
  [[nodiscard]] bool admissible(std::size_t i) const {
    const auto k = static_cast<Eigen::Index>(i);
    return bounds[i] && alpha(k) >= constraints.tau_alpha && recon(k) <= constraints.epsilon &&
           kl(k) <= constraints.delta && snr(k) >= constraints.gamma_min;
  }

  void validate() const {
    const auto n = U.cols();
    detail::require(phi.size() == U.rows(), "instance: phi dimension differs from embeddings");
    detail::require(costs.size() == n && alpha.size() == n && recon.size() == n && snr.size() == n &&
                        kl.size() == n && static_cast<Eigen::Index>(bounds.size()) == n,
                    "instance: per-token lists differ in length");
    detail::require(pair_sim.rows() == n && pair_sim.cols() == n, "instance: pair_sim must be n x n");
    detail::require(U.allFinite() && phi.allFinite() && costs.allFinite() && alpha.allFinite() &&
                        recon.allFinite() && snr.allFinite() && kl.allFinite() && pair_sim.allFinite(),
                    "instance: non-finite values");
    for (Eigen::Index i = 0; i < n; ++i) {
      detail::require(bounds[static_cast<std::size_t>(i)] <= 1, "instance: bounds must be 0 or 1");
      for (Eigen::Index j = 0; j < n; ++j) {
        detail::require(std::abs(pair_sim(i, j) - pair_sim(j, i)) <= 1e-12,
                        "instance: pair_sim must be symmetric");
      }
      detail::require(std::abs(pair_sim(i, i) - 1.0) <= 1e-12, "instance: pair_sim needs unit diagonal");
    }
    if (tau_prime.size() != 0) {
      detail::require(tau_prime.rows() == n && tau_prime.cols() == n, "instance: tau_prime must be n x n");
    }
    constraints.validate();
    cost.validate();
  }
};

/// Embedding objective lambda1 ||phi - U s||^2 + lambda2 c.s for any s.
inline double primal_objective(const ProblemInstance& inst, const Eigen::VectorXd& s) {
  return inst.cost.lambda1 * (inst.phi - inst.U * s).squaredNorm() + inst.cost.lambda2 * inst.costs.dot(s);
}

inline Eigen::VectorXd to_vector(const SelectionVector& sel) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(sel.size()));
  for (std::size_t i = 0; i < sel.size(); ++i) v(static_cast<Eigen::Index>(i)) = sel[i];
  return v;
}

inline double primal_objective(const ProblemInstance& inst, const SelectionVector& sel) {
  return primal_objective(inst, to_vector(sel));
}

/// Signed violation of each constraint for a binary selection; positive
/// means violated. Per-token constraints report the worst selected token and
/// are 0 when nothing is selected.
struct FeasibilityReport {
  double budget = 0.0;
  double importance = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double redundancy = 0.0;
  double snr = 0.0;
  double bound = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> redundant_pairs;

  [[nodiscard]] bool feasible(double tol = 0.0) const noexcept {
    return budget <= tol && importance <= tol && recon <= tol && kl <= tol && snr <= tol &&
           bound <= tol && redundant_pairs.empty();
  }

  [[nodiscard]] double max_violation() const noexcept {
    return std::max({budget, importance, recon, kl, redundancy, snr, bound});
  }
};

inline FeasibilityReport check_feasible(const ProblemInstance& inst, const SelectionVector& sel) {
  detail::require(sel.size() == inst.size(), "check_feasible: selection length differs from instance");
  const auto& c = inst.constraints;
  FeasibilityReport r;
  const double lowest = -std::numeric_limits<double>::infinity();
  r.importance = r.recon = r.kl = r.redundancy = r.snr = r.bound = lowest;
  std::size_t count = 0;
  for (std::size_t i = 0; i < sel.size(); ++i) {
    if (!sel[i]) continue;
    ++count;
    const auto k = static_cast<Eigen::Index>(i);
    r.importance = std::max(r.importance, c.tau_alpha - inst.alpha(k));
    r.recon = std::max(r.recon, inst.recon(k) - c.epsilon);
    r.kl = std::max(r.kl, inst.kl(k) - c.delta);
    r.snr = std::max(r.snr, c.gamma_min - inst.snr(k));
    r.bound = std::max(r.bound, 1.0 - static_cast<double>(inst.bounds[i]));
    for (std::size_t j = i + 1; j < sel.size(); ++j) {
      if (!sel[j]) continue;
      const double sim = inst.pair_sim(k, static_cast<Eigen::Index>(j));
      r.redundancy = std::max(r.redundancy, sim - c.tau_sim);
      if (sim > c.tau_sim) r.redundant_pairs.emplace_back(i, j);
    }
  }
  for (double* v : {&r.importance, &r.recon, &r.kl, &r.redundancy, &r.snr, &r.bound}) {
    if (*v == lowest) *v = 0.0;
  }
  r.budget = static_cast<double>(count) - static_cast<double>(c.k_max);
  return r;
}

/// Dual variables: lambda (budget), mu (relational divergence), nu
/// (pairwise redundancy, upper triangle), eta (reconstruction), theta
/// (reliability), and the dual step size.
struct Multipliers {
  double lambda = 0.0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd nu;
  Eigen::VectorXd eta;
  Eigen::VectorXd theta;
  double step = 0.05;

  static Multipliers zero(std::size_t n, double step = 0.05) {
    const auto k = static_cast<Eigen::Index>(n);
    return {0.0, Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k),
            Eigen::VectorXd::Zero(k), step};
  }

  [[nodiscard]] bool nonnegative() const {
    return lambda >= 0.0 && (mu.array() >= 0.0).all() && (nu.array() >= 0.0).all() &&
           (eta.array() >= 0.0).all() && (theta.array() >= 0.0).all();
  }
};

struct TracePoint {
  std::size_t iteration = 0;
  double primal_objective = 0.0;
  double dual_value = 0.0;
  double stationarity = 0.0;
  double step = 0.0;
  std::optional<Multipliers> multipliers;
};

struct SolveReport {
  SelectionVector selection;
  double objective = 0.0;
  std::optional<double> dual_value;
  std::size_t iterations = 0;
  std::optional<double> kkt_residual;
  FeasibilityReport violations;
  bool feasible = false;
  bool converged = true;
  std::optional<RelaxedSelection> relaxed;
  std::optional<Multipliers> multipliers;
  std::vector<TracePoint> trace;

  [[nodiscard]] std::size_t selected_count() const noexcept {
    return static_cast<std::size_t>(std::count(selection.begin(), selection.end(), 1));
  }
};

/// Fill objective, violations and feasibility for a binary selection.
inline void finalize(SolveReport& r, const ProblemInstance& inst) {
  r.objective = primal_objective(inst, r.selection);
  r.violations = check_feasible(inst, r.selection);
  r.feasible = r.violations.feasible();
}

// --- Instance construction ----------------------------------------------------

/// Cosine similarity matrix of the columns of U with unit diagonal.
inline Eigen::MatrixXd cosine_matrix(const Eigen::MatrixXd& U) {
  const auto n = U.cols();
  Eigen::VectorXd norms = U.colwise().norm().transpose();
  Eigen::MatrixXd sim = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double denom = norms(i) * norms(j);
      const double v = denom > 0.0 ? U.col(i).dot(U.col(j)) / denom : 0.0;
      sim(i, j) = sim(j, i) = v;
    }
  }
  return sim;
}

struct InstanceOptions {
  GroundingMode grounding = GroundingMode::hard;
  /// Cost multiplier applied to ungrounded tokens in soft grounding mode.
  double soft_penalty = 2.0;
};

inline ProblemInstance make_instance(const AnnotatedSentence& s, const KnowledgeGraph& kg,
                                     const ConstraintParams& constraints, const CostParams& cost,
                                     const InstanceOptions& opts = {}) {
  s.validate();
  const auto n = static_cast<Eigen::Index>(s.size());
  ProblemInstance inst;
  inst.U = s.embeddings;
  inst.phi = sentence_embedding(s);
  const auto mask = grounding_mask(s, kg, constraints.tau_alpha, opts.grounding);
  inst.bounds = mask.bounds;
  const auto c = token_costs(s, cost.kappa);
  const auto kl = token_kl(s, kg);
  inst.costs.resize(n);
  inst.alpha.resize(n);
  inst.recon.resize(n);
  inst.snr.resize(n);
  inst.kl.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const bool penalize = opts.grounding == GroundingMode::soft && !mask.grounded[k];
    inst.costs(i) = c[k] * (penalize ? opts.soft_penalty : 1.0);
    inst.alpha(i) = s.attention[k];
    inst.recon(i) = s.recon_error[k];
    inst.snr(i) = s.token_snr[k];
    inst.kl(i) = kl[k];
  }
  inst.pair_sim = cosine_matrix(inst.U);
  inst.constraints = constraints;
  inst.cost = cost;
  inst.validate();
  return inst;
}

// --- JSON ----------------------------------------------------------------------

namespace detail {

inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline nlohmann::json mat_rows_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    out.push_back(std::move(row));
  }
  return out;
}

inline Eigen::VectorXd json_vec(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw ParseError(std::string("instance: missing array '") + field + "'");
  }
  const auto v = j[field].get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd json_rows(const nlohmann::json& rows, const char* field) {
  if (!rows.is_array()) throw ParseError(std::string("instance: '") + field + "' must be a matrix");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != c) {
      throw ParseError(std::string("instance: ragged matrix '") + field + "'");
    }
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
  }
  return m;
}

}  // namespace detail

/// `U` is written as a list of token embeddings (columns of U).
inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
  nlohmann::json j;
  j["U"] = detail::mat_rows_json(inst.U.transpose());
  j["phi"] = detail::vec_json(inst.phi);
  j["costs"] = detail::vec_json(inst.costs);
  j["alpha"] = detail::vec_json(inst.alpha);
  j["recon"] = detail::vec_json(inst.recon);
  j["snr"] = detail::vec_json(inst.snr);
  j["kl"] = detail::vec_json(inst.kl);
  j["pair_sim"] = detail::mat_rows_json(inst.pair_sim);
  j["bounds"] = inst.bounds;
  const auto& c = inst.constraints;
  j["constraints"] = {{"k_max", c.k_max},         {"tau_alpha", c.tau_alpha}, {"epsilon", c.epsilon},
                      {"delta", c.delta},         {"tau_sim", c.tau_sim},     {"gamma_min", c.gamma_min}};
  j["cost"] = {{"kappa", inst.cost.kappa}, {"lambda1", inst.cost.lambda1}, {"lambda2", inst.cost.lambda2}};
  if (inst.tau_prime.size() != 0) j["tau_prime"] = detail::mat_rows_json(inst.tau_prime);
  return j;
}

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  try {
    ProblemInstance inst;
    if (!j.contains("U")) throw ParseError("instance: missing 'U'");
    inst.U = detail::json_rows(j["U"], "U").transpose();
    inst.phi = detail::json_vec(j, "phi");
    inst.costs = detail::json_vec(j, "costs");
    inst.alpha = detail::json_vec(j, "alpha");
    inst.recon = detail::json_vec(j, "recon");
    inst.snr = detail::json_vec(j, "snr");
    inst.kl = detail::json_vec(j, "kl");
    if (!j.contains("pair_sim")) throw ParseError("instance: missing 'pair_sim'");
    inst.pair_sim = detail::json_rows(j["pair_sim"], "pair_sim");
    inst.bounds = j.at("bounds").get<std::vector<std::uint8_t>>();
    const auto& c = j.at("constraints");
    inst.constraints.k_max = c.at("k_max").get<std::size_t>();
    inst.constraints.tau_alpha = c.at("tau_alpha").get<double>();
    inst.constraints.epsilon = c.at("epsilon").get<double>();
    inst.constraints.delta = c.at("delta").get<double>();
    inst.constraints.tau_sim = c.at("tau_sim").get<double>();
    inst.constraints.gamma_min = c.at("gamma_min").get<double>();
    const auto& p = j.at("cost");
    inst.cost.kappa = p.at("kappa").get<double>();
    inst.cost.lambda1 = p.at("lambda1").get<double>();
    inst.cost.lambda2 = p.at("lambda2").get<double>();
    if (j.contains("tau_prime")) inst.tau_prime = detail::json_rows(j["tau_prime"], "tau_prime");
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance: ") + e.what());
  }
}

inline nlohmann::json multipliers_to_json(const Multipliers& m) {
  auto nu = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.nu.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.nu.cols(); ++j) {
      if (m.nu(i, j) != 0.0) nu.push_back({i, j, m.nu(i, j)});
    }
  }
  return {{"lambda", m.lambda},
          {"mu", detail::vec_json(m.mu)},
          {"nu", std::move(nu)},
          {"eta", detail::vec_json(m.eta)},
          {"theta", detail::vec_json(m.theta)},
          {"step", m.step}};
}

inline nlohmann::json feasibility_to_json(const FeasibilityReport& f) {
  return {{"budget", f.budget},       {"importance", f.importance}, {"recon", f.recon},
          {"kl", f.kl},               {"redundancy", f.redundancy}, {"snr", f.snr},
          {"bound", f.bound},         {"redundant_pairs", f.redundant_pairs}};
}

inline nlohmann::json report_to_json(const SolveReport& r, bool with_trace = false) {
  nlohmann::json j;
  j["selection"] = r.selection;
  j["objective"] = r.objective;
  j["dual_value"] = r.dual_value ? nlohmann::json(*r.dual_value) : nlohmann::json(nullptr);
  j["iterations"] = r.iterations;
  j["kkt_residual"] = r.kkt_residual ? nlohmann::json(*r.kkt_residual) : nlohmann::json(nullptr);
  j["violations"] = feasibility_to_json(r.violations);
  j["feasible"] = r.feasible;
  j["converged"] = r.converged;
  if (r.multipliers) j["multipliers"] = multipliers_to_json(*r.multipliers);
  if (with_trace) {
    auto t = nlohmann::json::array();
    for (const auto& p : r.trace) {
      nlohmann::json row = {{"iteration", p.iteration},
                            {"primal_objective", p.primal_objective},
                            {"dual_value", p.dual_value},
                            {"stationarity", p.stationarity},
                            {"step", p.step}};
      if (p.multipliers) row["multipliers"] = multipliers_to_json(*p.multipliers);
      t.push_back(std::move(row));
    }
    j["trace"] = std::move(t);
  }
  return j;
}

}  // namespace semra
