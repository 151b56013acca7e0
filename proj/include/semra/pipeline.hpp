#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "semra/channel.hpp"
#include "semra/corpus.hpp"
#include "semra/error.hpp"
#include "semra/metrics.hpp"
#include "semra/optimizer.hpp"
#include "semra/problem.hpp"
#include "semra/synthetic.hpp"

namespace semra {

enum class SolverKind { greedy, dual_ascent, kkt, brute };

inline std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::greedy: return "greedy";
    case SolverKind::dual_ascent: return "dual_ascent";
    case SolverKind::kkt: return "kkt";
    case SolverKind::brute: return "brute";
  }
  return "greedy";
}

inline SolverKind parse_solver(const std::string& name) {
  if (name == "greedy") return SolverKind::greedy;
  if (name == "dual_ascent" || name == "dual") return SolverKind::dual_ascent;
  if (name == "kkt") return SolverKind::kkt;
  if (name == "brute") return SolverKind::brute;
  throw ValidationError("unknown solver '" + name + "' (expected greedy, dual_ascent, kkt or brute)");
}

struct RunConfig {
  /// Corpus file; the literal "synthetic" generates the bundled corpus in memory.
  std::string corpus = "synthetic";
  ChannelConfig channel;
  ConstraintParams constraints;
  CostParams cost;
  /// Budget per sentence: k_max = ceil(budget_ratio * N_i) unless k_max is set.
  double budget_ratio = 0.75;
  std::optional<std::size_t> k_max;
  SolverKind solver = SolverKind::greedy;
  GroundingMode grounding = GroundingMode::hard;
  double soft_penalty = 2.0;
  BrevityMode bleu_mode = BrevityMode::paper;
  std::size_t bleu_order = 4;
  std::vector<double> sweep = {0.0, 5.0, 10.0, 15.0, 20.0};
  std::vector<std::uint64_t> seeds = {1};
  std::string output;
  bool retransmit = false;
  double retransmit_floor = 0.5;
  /// Use only the first `limit` sentences when set.
  std::optional<std::size_t> limit;
  std::size_t trace_sentence = 0;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const {
    channel.validate();
    constraints.validate();
    cost.validate();
    detail::require(!sweep.empty(), "config: sweep must list at least one SNR");
    detail::require(!seeds.empty(), "config: seeds must list at least one seed");
    detail::require(budget_ratio >= 0.0 && budget_ratio <= 1.0, "config: budget_ratio outside [0,1]");
    detail::require(bleu_order >= 1, "config: bleu_order must be at least 1");
    detail::require(soft_penalty >= 0.0, "config: soft_penalty must be nonnegative");
  }

  [[nodiscard]] std::size_t budget_for(std::size_t n) const {
    if (k_max) return std::min(*k_max, n);
    return std::min(n, static_cast<std::size_t>(std::ceil(budget_ratio * static_cast<double>(n) - 1e-12)));
  }
};

// --- Config I/O --------------------------------------------------------------------

inline RunConfig config_from_json(const nlohmann::json& j, RunConfig cfg = {}) {
  if (!j.is_object()) throw ParseError("config: top level must be an object");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("corpus", cfg.corpus);
    if (j.contains("channel")) cfg.channel.model = parse_channel_model(j["channel"].get<std::string>());
    get("block_len", cfg.channel.block_len);
    get("base_err", cfg.channel.base_err);
    if (j.contains("solver")) cfg.solver = parse_solver(j["solver"].get<std::string>());
    if (j.contains("grounding")) {
      const auto g = j["grounding"].get<std::string>();
      if (g != "hard" && g != "soft") throw ValidationError("config: grounding must be hard or soft");
      cfg.grounding = g == "soft" ? GroundingMode::soft : GroundingMode::hard;
    }
    get("soft_penalty", cfg.soft_penalty);
    if (j.contains("bleu")) {
      const auto b = j["bleu"].get<std::string>();
      if (b != "paper" && b != "classical") throw ValidationError("config: bleu must be paper or classical");
      cfg.bleu_mode = b == "classical" ? BrevityMode::classical : BrevityMode::paper;
    }
    get("bleu_order", cfg.bleu_order);
    get("sweep", cfg.sweep);
    get("seeds", cfg.seeds);
    get("output", cfg.output);
    get("retransmit", cfg.retransmit);
    get("retransmit_floor", cfg.retransmit_floor);
    get("budget_ratio", cfg.budget_ratio);
    if (j.contains("k_max")) cfg.k_max = j["k_max"].get<std::size_t>();
    if (j.contains("limit")) cfg.limit = j["limit"].get<std::size_t>();
    get("trace_sentence", cfg.trace_sentence);
    get("threads", cfg.threads);
    auto& c = cfg.constraints;
    get("tau_alpha", c.tau_alpha);
    get("epsilon", c.epsilon);
    get("delta", c.delta);
    get("tau_sim", c.tau_sim);
    get("gamma_min", c.gamma_min);
    get("kappa", cfg.cost.kappa);
    get("lambda1", cfg.cost.lambda1);
    get("lambda2", cfg.cost.lambda2);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what() + " (configs are JSON)");
  }
  return config_from_json(j);
}

inline Corpus load_corpus(const RunConfig& cfg) {
  Corpus c = cfg.corpus == "synthetic" ? synthetic_corpus() : ingest_corpus(cfg.corpus);
  if (cfg.limit && *cfg.limit < c.entries.size()) c.entries.resize(*cfg.limit);
  detail::require(!c.entries.empty(), "corpus is empty");
  return c;
}

// --- Single sentence -----------------------------------------------------------------

struct SentenceResult {
  std::vector<std::string> decoded;
  MetricsReport metrics;
  SolveReport solve;
  std::size_t k_max = 0;
  double compression = 0.0;  // |S| / N_i
  bool retransmitted = false;
};

inline SolveReport solve_instance(const ProblemInstance& inst, SolverKind kind, bool trace = false) {
  DualOptions o;
  o.trace = trace;
  switch (kind) {
    case SolverKind::greedy: return greedy_select(inst);
    case SolverKind::dual_ascent: return dual_ascent(inst, o);
    case SolverKind::kkt: return primal_dual_kkt(inst, o);
    case SolverKind::brute: return brute_force(inst);
  }
  return greedy_select(inst);
}

/// Attention-weighted bag of codebook embeddings over the given positions.
inline Eigen::VectorXd codebook_embedding(const Corpus& corpus, const AnnotatedSentence& s,
                                          const std::vector<std::size_t>& positions,
                                          const std::vector<TokenId>& ids) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(corpus.codebook.rows());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    v += s.attention[positions[k]] * corpus.codebook.col(static_cast<Eigen::Index>(ids[k]));
  }
  return v;
}

inline MetricsReport score(const Corpus& corpus, const AnnotatedSentence& s, const std::vector<std::size_t>& positions,
                           const std::vector<TokenId>& received, const RunConfig& cfg) {
  MetricsReport m;
  m.ngram_order = cfg.bleu_order;
  m.weights = uniform_weights(cfg.bleu_order);
  if (received.empty()) return m;
  std::vector<std::string> decoded;
  for (TokenId id : received) decoded.push_back(corpus.vocabulary.token(id));
  m.bleu = bleu(s.tokens, decoded, cfg.bleu_order, m.weights, cfg.bleu_mode);
  m.accuracy = semantic_accuracy(s.tokens, decoded);
  m.completeness = semantic_completeness(s.tokens, decoded);
  std::vector<std::size_t> all(s.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Eigen::VectorXd phi_x = codebook_embedding(corpus, s, all, s.token_ids);
  const Eigen::VectorXd phi_xhat = codebook_embedding(corpus, s, positions, received);
  m.similarity = phi_x.norm() > 0.0 && phi_xhat.norm() > 0.0 ? semantic_similarity(phi_x, phi_xhat) : 0.0;
  return m;
}

/// One pass of the workflow for a single budget: annotate with the
/// distortion oracle, ground, solve, transmit the selected tokens in their
/// original order and score the reassembled sentence.
inline SentenceResult run_once(const Corpus& corpus, const CorpusEntry& entry, const RunConfig& cfg,
                               const ChannelConfig& channel, std::size_t k_max, std::uint64_t stream,
                               bool trace = false) {
  const auto annotated = oracle_annotate(entry.sentence, channel, stream);
  ConstraintParams cons = cfg.constraints;
  cons.k_max = k_max;
  const auto inst = make_instance(annotated, entry.graph, cons, cfg.cost, {cfg.grounding, cfg.soft_penalty});
  SentenceResult out;
  out.k_max = k_max;
  out.solve = solve_instance(inst, cfg.solver, trace);
  std::vector<std::size_t> positions;
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < out.solve.selection.size(); ++i) {
    if (out.solve.selection[i]) {
      positions.push_back(i);
      ids.push_back(entry.sentence.token_ids[i]);
    }
  }
  Eigen::MatrixXd tx(corpus.codebook.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    tx.col(static_cast<Eigen::Index>(k)) = corpus.codebook.col(static_cast<Eigen::Index>(ids[k]));
  }
  const auto rx = transmit(tx, ids, corpus.codebook, channel, stream);
  for (TokenId id : rx.received) out.decoded.push_back(corpus.vocabulary.token(id));
  out.metrics = score(corpus, entry.sentence, positions, rx.received, cfg);
  out.compression = static_cast<double>(positions.size()) / static_cast<double>(entry.sentence.size());
  return out;
}

/// Retransmission streams are offset so the retry sees fresh channel draws.
inline constexpr std::uint64_t kRetryStreamOffset = std::uint64_t{1} << 40;

inline SentenceResult run_sentence(const Corpus& corpus, const CorpusEntry& entry, const RunConfig& cfg,
                                   double snr_db, std::uint64_t seed, std::uint64_t stream = 0) {
  ChannelConfig channel = cfg.channel;
  channel.snr_db = snr_db;
  channel.seed = seed;
  const std::size_t n = entry.sentence.size();
  const std::size_t k = cfg.budget_for(n);
  auto first = run_once(corpus, entry, cfg, channel, k, stream);
  const double fidelity = std::min(first.metrics.accuracy, first.metrics.completeness);
  if (cfg.retransmit && fidelity < cfg.retransmit_floor && k < n) {
    auto retry = run_once(corpus, entry, cfg, channel, std::min(n, std::max<std::size_t>(1, 2 * k)),
                          stream + kRetryStreamOffset);
    retry.retransmitted = true;
    return retry;
  }
  return first;
}

// --- Sweeps -------------------------------------------------------------------------

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

inline Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

struct SweepRow {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::size_t sentences = 0;
  Moments bleu, similarity, accuracy, completeness;
  double compression = 0.0;
  double objective = 0.0;
  std::size_t retransmissions = 0;
};

namespace detail {

/// Run `count` independent jobs on up to `threads` workers; results land by
/// index, so output order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

inline SweepRow run_grid_point(const Corpus& corpus, const RunConfig& cfg, double snr_db, std::uint64_t seed) {
  std::vector<double> b, s, a, c, ratio, obj;
  SweepRow row;
  row.snr_db = snr_db;
  row.seed = seed;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto r = run_sentence(corpus, corpus.entries[i], cfg, snr_db, seed, i);
    b.push_back(r.metrics.bleu);
    s.push_back(r.metrics.similarity);
    a.push_back(r.metrics.accuracy);
    c.push_back(r.metrics.completeness);
    ratio.push_back(r.compression);
    obj.push_back(r.solve.objective);
    row.retransmissions += r.retransmitted ? 1 : 0;
  }
  row.sentences = corpus.entries.size();
  row.bleu = moments(b);
  row.similarity = moments(s);
  row.accuracy = moments(a);
  row.completeness = moments(c);
  row.compression = moments(ratio).mean;
  row.objective = moments(obj).mean;
  return row;
}

/// One row per (snr, seed) grid point, SNR-major.
inline std::vector<SweepRow> run_sweep(const Corpus& corpus, const RunConfig& cfg) {
  cfg.validate();
  const std::size_t points = cfg.sweep.size() * cfg.seeds.size();
  std::vector<SweepRow> rows(points);
  detail::parallel_for(points, cfg.threads, [&](std::size_t p) {
    rows[p] = run_grid_point(corpus, cfg, cfg.sweep[p / cfg.seeds.size()], cfg.seeds[p % cfg.seeds.size()]);
  });
  return rows;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "snr_db,seed,sentences,bleu_mean,bleu_std,similarity_mean,similarity_std,accuracy_mean,accuracy_std,"
        "completeness_mean,completeness_std,compression_mean,objective_mean,retransmissions\n";
  for (const auto& r : rows) {
    os << format_number(r.snr_db) << ',' << r.seed << ',' << r.sentences;
    for (const auto* m : {&r.bleu, &r.similarity, &r.accuracy, &r.completeness}) {
      os << ',' << format_number(m->mean) << ',' << format_number(m->stddev);
    }
    os << ',' << format_number(r.compression) << ',' << format_number(r.objective) << ',' << r.retransmissions
       << '\n';
  }
  return os.str();
}

/// Opens `path` for writing up front so an unwritable destination fails
/// before any computation.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) : path_(path) {
    if (path_.empty() || path_ == "-") return;
    file_.open(path_, std::ios::out | std::ios::trunc);
    if (!file_) throw std::ios_base::failure("cannot open output file '" + path_ + "' for writing");
  }
  void write(const std::string& text) {
    if (file_.is_open()) {
      file_ << text;
      file_.flush();
      if (!file_) throw std::ios_base::failure("write to '" + path_ + "' failed");
    } else {
      std::fwrite(text.data(), 1, text.size(), stdout);
    }
  }

 private:
  std::string path_;
  std::ofstream file_;
};

// --- Compression histogram --------------------------------------------------------------

struct Histogram {
  std::vector<std::size_t> counts = std::vector<std::size_t>(10, 0);
  double mean_ratio = 0.0;
  [[nodiscard]] std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
};

inline std::size_t ratio_bucket(double ratio, std::size_t buckets = 10) {
  const auto b = static_cast<std::size_t>(std::floor(std::clamp(ratio, 0.0, 1.0) * static_cast<double>(buckets)));
  return std::min(b, buckets - 1);
}

/// Selection-only pass at the first configured SNR and seed.
inline Histogram compression_histogram(const Corpus& corpus, const RunConfig& cfg) {
  cfg.validate();
  ChannelConfig channel = cfg.channel;
  channel.snr_db = cfg.sweep.front();
  channel.seed = cfg.seeds.front();
  std::vector<double> ratios(corpus.entries.size());
  detail::parallel_for(corpus.entries.size(), cfg.threads, [&](std::size_t i) {
    const auto& e = corpus.entries[i];
    const auto annotated = oracle_annotate(e.sentence, channel, i);
    ConstraintParams cons = cfg.constraints;
    cons.k_max = cfg.budget_for(e.sentence.size());
    const auto inst = make_instance(annotated, e.graph, cons, cfg.cost, {cfg.grounding, cfg.soft_penalty});
    const auto rep = solve_instance(inst, cfg.solver);
    ratios[i] = static_cast<double>(rep.selected_count()) / static_cast<double>(e.sentence.size());
  });
  Histogram h;
  for (double r : ratios) ++h.counts[ratio_bucket(r)];
  h.mean_ratio = moments(ratios).mean;
  return h;
}

inline std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os << "bucket_lo,bucket_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    os << format_number(static_cast<double>(b) / 10.0) << ',' << format_number(static_cast<double>(b + 1) / 10.0)
       << ',' << h.counts[b] << '\n';
  }
  return os.str();
}

// --- Convergence trace -----------------------------------------------------------------

inline SolveReport convergence_trace(const Corpus& corpus, const RunConfig& cfg) {
  cfg.validate();
  if (cfg.solver != SolverKind::dual_ascent && cfg.solver != SolverKind::kkt) {
    throw ValidationError("trace: solver must be dual_ascent or kkt");
  }
  detail::require(cfg.trace_sentence < corpus.entries.size(), "trace: trace_sentence outside the corpus");
  const auto& e = corpus.entries[cfg.trace_sentence];
  ChannelConfig channel = cfg.channel;
  channel.snr_db = cfg.sweep.front();
  channel.seed = cfg.seeds.front();
  const auto annotated = oracle_annotate(e.sentence, channel, cfg.trace_sentence);
  ConstraintParams cons = cfg.constraints;
  cons.k_max = cfg.budget_for(e.sentence.size());
  const auto inst = make_instance(annotated, e.graph, cons, cfg.cost, {cfg.grounding, cfg.soft_penalty});
  return solve_instance(inst, cfg.solver, true);
}

inline std::string trace_csv(const SolveReport& r) {
  std::ostringstream os;
  os << "iteration,primal_objective,dual_value,stationarity\n";
  for (const auto& p : r.trace) {
    os << p.iteration << ',' << format_number(p.primal_objective) << ',' << format_number(p.dual_value) << ','
       << format_number(p.stationarity) << '\n';
  }
  return os.str();
}

// --- Component ablation ------------------------------------------------------------------

struct AblationRow {
  std::string component;
  double bleu = 0.0;
  double similarity = 0.0;
  double accuracy = 0.0;
  double completeness = 0.0;
  double compression = 0.0;
};

/// Proxy component-effectiveness scores: the change in each mean metric
/// when one component is disabled, at the first configured SNR and seed.
/// Positive values mean the component helps.
inline std::vector<AblationRow> ablation(const Corpus& corpus, const RunConfig& cfg) {
  RunConfig base = cfg;
  base.sweep = {cfg.sweep.front()};
  base.seeds = {cfg.seeds.front()};
  auto mean_row = [&](const RunConfig& c) { return run_grid_point(corpus, c, c.sweep.front(), c.seeds.front()); };
  const SweepRow ref = mean_row(base);

  std::vector<std::pair<std::string, RunConfig>> variants;
  RunConfig v = base;
  v.budget_ratio = 1.0;
  v.k_max.reset();
  v.cost.lambda2 = 0.0;
  v.constraints.tau_alpha = 0.0;
  v.constraints.epsilon = std::numeric_limits<double>::max();
  v.constraints.gamma_min = std::numeric_limits<double>::min();
  v.constraints.delta = std::numeric_limits<double>::max();
  v.grounding = GroundingMode::soft;
  v.soft_penalty = 1.0;
  variants.emplace_back("semantic_selection", v);
  v = base;
  v.grounding = GroundingMode::soft;
  v.soft_penalty = 1.0;
  v.constraints.delta = std::numeric_limits<double>::max();
  variants.emplace_back("knowledge_graph", v);
  v = base;
  v.cost.kappa = 0.0;
  v.constraints.gamma_min = std::numeric_limits<double>::min();
  variants.emplace_back("channel_awareness", v);
  v = base;
  v.channel.base_err = 0.0;
  v.constraints.epsilon = std::numeric_limits<double>::max();
  variants.emplace_back("reconstruction_quality", v);

  std::vector<AblationRow> out;
  for (const auto& [name, c] : variants) {
    const SweepRow r = mean_row(c);
    out.push_back({name, ref.bleu.mean - r.bleu.mean, ref.similarity.mean - r.similarity.mean,
                   ref.accuracy.mean - r.accuracy.mean, ref.completeness.mean - r.completeness.mean,
                   ref.compression - r.compression});
  }
  return out;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "component,proxy_bleu_delta,proxy_similarity_delta,proxy_accuracy_delta,proxy_completeness_delta,"
        "compression_delta\n";
  for (const auto& r : rows) {
    os << r.component << ',' << format_number(r.bleu) << ',' << format_number(r.similarity) << ','
       << format_number(r.accuracy) << ',' << format_number(r.completeness) << ',' << format_number(r.compression)
       << '\n';
  }
  return os.str();
}

}  // namespace semra
