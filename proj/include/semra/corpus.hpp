#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "semra/error.hpp"
#include "semra/rng.hpp"

namespace semra {

using TokenId = std::size_t;

/// Half-open token-index range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
  [[nodiscard]] bool empty() const noexcept { return size() == 0; }
  [[nodiscard]] bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  [[nodiscard]] bool overlaps(const Span& o) const noexcept {
    return begin < o.end && o.begin < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Entity {
  Span span;
  std::string label;
};

/// One (head, relation, tail) fact. `relation` indexes the graph's catalog;
/// `relation_phrase` is where the relation's tokens occur in the sentence
/// (empty when the phrase is not surfaced verbatim).
struct SemanticTriple {
  Entity head;
  std::size_t relation = 0;
  std::size_t relation_tokens = 2;
  Span relation_phrase;
  Entity tail;

  [[nodiscard]] std::size_t token_count() const noexcept {
    return head.span.size() + relation_tokens + tail.span.size();
  }
};

/// Directed relation instance between two entities of the same graph.
/// (head, tail) and (tail, head) are distinct instances.
struct RelationInstance {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::size_t label = 0;
};

class Vocabulary {
 public:
  TokenId add(const std::string& token) {
    if (auto it = index_.find(token); it != index_.end()) return it->second;
    tokens_.push_back(token);
    index_.emplace(token, tokens_.size() - 1);
    return tokens_.size() - 1;
  }

  [[nodiscard]] std::optional<TokenId> find(const std::string& token) const {
    if (auto it = index_.find(token); it != index_.end()) return it->second;
    return std::nullopt;
  }

  [[nodiscard]] const std::string& token(TokenId id) const {
    detail::require(id < tokens_.size(), "token id out of vocabulary range");
    return tokens_[id];
  }

  [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
  [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct KnowledgeGraph {
  std::vector<Entity> entities;
  std::vector<RelationInstance> relations;
  std::vector<SemanticTriple> triples;
  std::vector<std::string> catalog;

  [[nodiscard]] bool empty() const noexcept { return triples.empty(); }

  void validate() const {
    for (const auto& t : triples) {
      detail::require(!(t.head.span == t.tail.span), "triple head and tail spans coincide");
      detail::require(t.relation < catalog.size(), "triple relation label outside the catalog");
    }
    for (const auto& r : relations) {
      detail::require(r.head < entities.size() && r.tail < entities.size(),
                      "relation instance references an unknown entity");
      detail::require(r.label < catalog.size(), "relation label outside the catalog");
    }
    for (std::size_t a = 0; a < entities.size(); ++a) {
      for (std::size_t b = a + 1; b < entities.size(); ++b) {
        detail::require(!entities[a].span.overlaps(entities[b].span),
                        "entity spans overlap");
      }
    }
  }

  /// Assemble entities and relation instances from a triple list.
  static KnowledgeGraph from_triples(std::vector<SemanticTriple> triples,
                                     std::vector<std::string> catalog) {
    KnowledgeGraph kg;
    kg.catalog = std::move(catalog);
    auto entity_index = [&kg](const Entity& e) {
      for (std::size_t k = 0; k < kg.entities.size(); ++k) {
        if (kg.entities[k].span == e.span) return k;
      }
      kg.entities.push_back(e);
      return kg.entities.size() - 1;
    };
    for (const auto& t : triples) {
      const std::size_t h = entity_index(t.head);
      const std::size_t tl = entity_index(t.tail);
      kg.relations.push_back({h, tl, t.relation});
    }
    kg.triples = std::move(triples);
    kg.validate();
    return kg;
  }
};

/// Smoothed probability mass over a relation catalog.
struct RelationDistribution {
  std::vector<double> probabilities;
};

struct AnnotatedSentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<TokenId> token_ids;
  Eigen::MatrixXd embeddings;  // d x N, column i is u_i
  std::vector<double> attention;
  std::vector<double> recon_error;
  std::vector<double> token_snr;
  std::vector<double> beta;

  [[nodiscard]] std::size_t size() const noexcept { return tokens.size(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return embeddings.rows(); }

  void validate() const {
    const std::size_t n = tokens.size();
    const std::string where = "sentence '" + id + "': ";
    detail::require(n >= 1, where + "needs at least one token");
    detail::require(token_ids.size() == n && attention.size() == n && recon_error.size() == n &&
                        token_snr.size() == n && beta.size() == n &&
                        static_cast<std::size_t>(embeddings.cols()) == n,
                    where + "per-token lists differ in length");
    detail::require(embeddings.rows() >= 1, where + "embedding dimension must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      detail::require(attention[i] >= 0.0 && attention[i] <= 1.0,
                      where + "attention outside [0,1] at token " + std::to_string(i));
      detail::require(recon_error[i] >= 0.0, where + "negative recon_error");
      detail::require(token_snr[i] > 0.0, where + "token_snr must be positive");
      detail::require(beta[i] >= 0.0, where + "negative beta");
    }
    detail::require(embeddings.allFinite(), where + "non-finite embedding");
  }
};

/// Rule set for the pattern-based triple extractor.
struct ExtractionRules {
  std::vector<std::vector<std::string>> entity_phrases;
  /// Token sequence -> catalog label.
  std::vector<std::pair<std::vector<std::string>, std::string>> relation_phrases;
  /// Treat maximal runs of non-stopword, non-relation tokens as entities.
  bool content_runs_as_entities = true;
  std::set<std::string> stopwords = {
      "a",    "an",   "the",  "is",   "are", "was",  "were", "be",    "been", "and",
      "or",   "of",   "to",   "in",   "on",  "for",  "with", "this",  "that", "it",
      "its",  "as",   "by",   "at",   "which", "also", "very", "has", "have", "had",
      "will", "can",  "not",  "but",  "from", "these", "those", "their", "there", "then",
      ".",    ",",    ";",    ":",    "!",   "?",    "(",    ")",     "'",    "\""};

  /// Relation phrases default to the catalog labels split on whitespace.
  static ExtractionRules from_catalog(const std::vector<std::string>& catalog);
};

struct CorpusEntry {
  AnnotatedSentence sentence;
  KnowledgeGraph graph;
};

struct Corpus {
  std::size_t dim = 0;
  std::vector<std::string> catalog;
  Vocabulary vocabulary;
  Eigen::MatrixXd codebook;  // d x |V|, unit-norm columns
  std::vector<CorpusEntry> entries;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
};

// ---------------------------------------------------------------------------

inline std::vector<std::string> split_whitespace(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

/// Whitespace split with punctuation peeled off into separate tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
  static const std::string punct = ".,;:!?()\"";
  std::vector<std::string> out;
  for (const auto& word : split_whitespace(text)) {
    std::size_t b = 0;
    std::size_t e = word.size();
    std::vector<std::string> tail;
    while (b < e && punct.find(word[b]) != std::string::npos) out.emplace_back(1, word[b++]);
    while (e > b && punct.find(word[e - 1]) != std::string::npos) tail.emplace_back(1, word[--e]);
    if (e > b) out.push_back(word.substr(b, e - b));
    out.insert(out.end(), tail.rbegin(), tail.rend());
  }
  return out;
}

inline ExtractionRules ExtractionRules::from_catalog(const std::vector<std::string>& catalog) {
  ExtractionRules rules;
  for (const auto& label : catalog) rules.relation_phrases.emplace_back(split_whitespace(label), label);
  return rules;
}

/// Test-only stand-in for a learned encoder: a unit vector seeded by the
/// token's surface string.
inline Eigen::VectorXd stub_embedding(const std::string& token, std::size_t dim) {
  detail::require(dim >= 1, "stub embedding dimension must be positive");
  const CounterRng rng(fnv1a(token), 0x5eed);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; k += 2) {
    const auto [a, b] = rng.normal_pair(k / 2);
    v(static_cast<Eigen::Index>(k)) = a;
    if (k + 1 < dim) v(static_cast<Eigen::Index>(k + 1)) = b;
  }
  return v / v.norm();
}

/// Z(G) = sum over triples of head + relation + tail token counts.
inline std::size_t semantic_token_count(const KnowledgeGraph& kg) noexcept {
  std::size_t z = 0;
  for (const auto& t : kg.triples) z += t.token_count();
  return z;
}

/// Phi(X) = sum_i alpha_i u_i.
inline Eigen::VectorXd sentence_embedding(const AnnotatedSentence& s) {
  const Eigen::Map<const Eigen::VectorXd> alpha(s.attention.data(),
                                                static_cast<Eigen::Index>(s.attention.size()));
  return s.embeddings * alpha;
}

/// Psi(S) = sum_i s_i u_i for binary or relaxed selections.
inline Eigen::VectorXd aggregate_selected(const AnnotatedSentence& s, std::span<const double> sel) {
  detail::require(sel.size() == s.size(), "selection length differs from sentence length");
  for (double v : sel) detail::require(v >= 0.0 && v <= 1.0, "selection entry outside [0,1]");
  const Eigen::Map<const Eigen::VectorXd> w(sel.data(), static_cast<Eigen::Index>(sel.size()));
  return s.embeddings * w;
}

enum class GroundingMode { hard, soft };

struct GroundingMask {
  std::vector<std::uint8_t> bounds;    // b_i
  std::vector<std::uint8_t> grounded;  // token lies in an entity span or relation phrase
};

inline std::vector<std::uint8_t> grounded_tokens(const AnnotatedSentence& s, const KnowledgeGraph& kg) {
  std::vector<std::uint8_t> g(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (const auto& e : kg.entities) g[i] |= e.span.contains(i);
    for (const auto& t : kg.triples) {
      g[i] |= t.head.span.contains(i) || t.tail.span.contains(i) || t.relation_phrase.contains(i);
    }
  }
  return g;
}

/// b_i = 1 iff alpha_i >= tau_alpha and (hard mode) the token is grounded in
/// the graph. In soft mode grounding does not gate b_i; callers price
/// ungrounded tokens through their cost instead.
inline GroundingMask grounding_mask(const AnnotatedSentence& s, const KnowledgeGraph& kg,
                                    double tau_alpha, GroundingMode mode = GroundingMode::hard) {
  detail::require(tau_alpha >= 0.0 && tau_alpha <= 1.0, "tau_alpha outside [0,1]");
  GroundingMask m;
  m.grounded = grounded_tokens(s, kg);
  m.bounds.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool important = s.attention[i] >= tau_alpha;
    m.bounds[i] = important && (mode == GroundingMode::soft || m.grounded[i]);
  }
  return m;
}

/// Add-one smoothed relative frequency of `labels` over a catalog of size k.
inline RelationDistribution smoothed_distribution(std::span<const std::size_t> labels, std::size_t k) {
  detail::require(k >= 1, "relation catalog is empty");
  std::vector<double> counts(k, 1.0);
  for (std::size_t l : labels) {
    detail::require(l < k, "relation label outside the catalog");
    counts[l] += 1.0;
  }
  const double total = static_cast<double>(labels.size() + k);
  for (double& c : counts) c /= total;
  return {std::move(counts)};
}

inline RelationDistribution relation_distribution(const KnowledgeGraph& kg) {
  std::vector<std::size_t> labels;
  labels.reserve(kg.relations.size());
  for (const auto& r : kg.relations) labels.push_back(r.label);
  return smoothed_distribution(labels, kg.catalog.size());
}

inline double kl_divergence(const RelationDistribution& p, const RelationDistribution& q) {
  detail::require(p.probabilities.size() == q.probabilities.size(),
                  "distributions over different catalogs");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.probabilities.size(); ++k) {
    const double pk = p.probabilities[k];
    if (pk > 0.0) {
      detail::require(q.probabilities[k] > 0.0, "KL undefined: q has a zero where p does not");
      kl += pk * std::log(pk / q.probabilities[k]);
    }
  }
  return std::max(0.0, kl);
}

/// Per-token relational divergence KL_i: the distribution of relations
/// incident to token i (through an entity span or relation phrase) against
/// the whole message graph's distribution, both add-one smoothed. Tokens with
/// no incident relation compare the uniform distribution against the graph.
inline std::vector<double> token_kl(const AnnotatedSentence& s, const KnowledgeGraph& kg) {
  std::vector<double> out(s.size(), 0.0);
  if (kg.catalog.empty()) return out;
  const auto dest = relation_distribution(kg);
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::vector<std::size_t> incident;
    for (const auto& t : kg.triples) {
      if (t.head.span.contains(i) || t.tail.span.contains(i) || t.relation_phrase.contains(i)) {
        incident.push_back(t.relation);
      }
    }
    out[i] = kl_divergence(smoothed_distribution(incident, kg.catalog.size()), dest);
  }
  return out;
}

namespace detail {

inline bool match_at(const std::vector<std::string>& tokens, std::size_t at,
                     const std::vector<std::string>& phrase) {
  if (phrase.empty() || at + phrase.size() > tokens.size()) return false;
  return std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(at));
}

/// Keep non-overlapping spans, preferring longer, then earlier.
inline std::vector<Span> resolve_overlaps(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.begin < b.begin;
  });
  std::vector<Span> kept;
  for (const auto& s : spans) {
    if (std::none_of(kept.begin(), kept.end(), [&](const Span& k) { return k.overlaps(s); })) {
      kept.push_back(s);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  return kept;
}

inline std::string join(const std::vector<std::string>& tokens, Span span) {
  std::string out;
  for (std::size_t i = span.begin; i < span.end; ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline std::optional<std::size_t> catalog_index(const std::vector<std::string>& catalog,
                                                const std::string& label) {
  auto it = std::find(catalog.begin(), catalog.end(), label);
  if (it == catalog.end()) return std::nullopt;
  return static_cast<std::size_t>(it - catalog.begin());
}

/// Locate a relation label's phrase, preferring an occurrence between the
/// head and tail spans.
inline Span locate_phrase(const std::vector<std::string>& tokens, const std::string& label,
                          Span head, Span tail) {
  const auto phrase = split_whitespace(label);
  std::optional<Span> first;
  const std::size_t lo = std::min(head.end, tail.end);
  const std::size_t hi = std::max(head.begin, tail.begin);
  for (std::size_t at = 0; at + phrase.size() <= tokens.size(); ++at) {
    if (!match_at(tokens, at, phrase)) continue;
    Span s{at, at + phrase.size()};
    if (s.overlaps(head) || s.overlaps(tail)) continue;
    if (at >= lo && s.end <= hi) return s;
    if (!first) first = s;
  }
  return first.value_or(Span{});
}

}  // namespace detail

/// Pattern-based stand-in for neural entity/relation extraction. Each matched
/// relation phrase links the nearest entity ending before it to the nearest
/// entity starting after it.
inline KnowledgeGraph toy_extract_triples(const AnnotatedSentence& s, const ExtractionRules& rules,
                                          const std::vector<std::string>& catalog) {
  const auto& tok = s.tokens;
  std::vector<Span> rel_spans;
  std::vector<std::size_t> rel_labels;
  {
    std::vector<std::pair<Span, std::size_t>> found;
    for (const auto& [phrase, label] : rules.relation_phrases) {
      const auto idx = detail::catalog_index(catalog, label);
      if (!idx) continue;
      for (std::size_t at = 0; at < tok.size(); ++at) {
        if (detail::match_at(tok, at, phrase)) found.push_back({{at, at + phrase.size()}, *idx});
      }
    }
    std::vector<Span> spans;
    for (const auto& f : found) spans.push_back(f.first);
    for (const auto& kept : detail::resolve_overlaps(spans)) {
      for (const auto& f : found) {
        if (f.first == kept) {
          rel_spans.push_back(kept);
          rel_labels.push_back(f.second);
          break;
        }
      }
    }
  }
  auto in_relation = [&](std::size_t i) {
    return std::any_of(rel_spans.begin(), rel_spans.end(), [i](const Span& r) { return r.contains(i); });
  };

  std::vector<Span> candidates;
  for (const auto& phrase : rules.entity_phrases) {
    for (std::size_t at = 0; at < tok.size(); ++at) {
      if (detail::match_at(tok, at, phrase)) candidates.push_back({at, at + phrase.size()});
    }
  }
  if (rules.content_runs_as_entities) {
    std::size_t i = 0;
    while (i < tok.size()) {
      if (rules.stopwords.contains(tok[i]) || in_relation(i)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < tok.size() && !rules.stopwords.contains(tok[j]) && !in_relation(j)) ++j;
      candidates.push_back({i, j});
      i = j;
    }
  }
  std::vector<Span> entities;
  for (const auto& e : detail::resolve_overlaps(candidates)) {
    const bool clash = std::any_of(rel_spans.begin(), rel_spans.end(),
                                   [&](const Span& r) { return r.overlaps(e); });
    if (!clash) entities.push_back(e);
  }

  std::vector<SemanticTriple> triples;
  for (std::size_t r = 0; r < rel_spans.size(); ++r) {
    const Span rel = rel_spans[r];
    std::optional<Span> head;
    std::optional<Span> tail;
    for (const auto& e : entities) {
      if (e.end <= rel.begin) head = e;
      if (e.begin >= rel.end && !tail) tail = e;
    }
    if (!head || !tail) continue;
    SemanticTriple t;
    t.head = {*head, detail::join(tok, *head)};
    t.tail = {*tail, detail::join(tok, *tail)};
    t.relation = rel_labels[r];
    t.relation_tokens = rel.size();
    t.relation_phrase = rel;
    triples.push_back(std::move(t));
  }
  return KnowledgeGraph::from_triples(std::move(triples), catalog);
}

// --- Ingestion --------------------------------------------------------------

namespace detail {

inline std::vector<double> number_list(const nlohmann::json& j, const std::string& field,
                                       const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": field '" + field + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError(where + ": field '" + field + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Span parse_span(const nlohmann::json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer() ||
      j[0].get<long long>() < 0 || j[1].get<long long>() < 0) {
    throw ParseError(where + ": span must be [begin, end]");
  }
  Span s{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  if (s.begin >= s.end || s.end > n) throw ParseError(where + ": span out of range");
  return s;
}

}  // namespace detail

/// Build the vocabulary-level codebook: each column is the normalized mean of
/// the embeddings ingested for that surface string.
inline Eigen::MatrixXd build_codebook(const Corpus& corpus) {
  const auto d = static_cast<Eigen::Index>(corpus.dim);
  const auto v = static_cast<Eigen::Index>(corpus.vocabulary.size());
  Eigen::MatrixXd cb = Eigen::MatrixXd::Zero(d, v);
  for (const auto& e : corpus.entries) {
    for (std::size_t i = 0; i < e.sentence.size(); ++i) {
      cb.col(static_cast<Eigen::Index>(e.sentence.token_ids[i])) +=
          e.sentence.embeddings.col(static_cast<Eigen::Index>(i));
    }
  }
  for (Eigen::Index k = 0; k < v; ++k) {
    const double norm = cb.col(k).norm();
    if (norm > 1e-12) {
      cb.col(k) /= norm;
    } else {
      cb.col(k) = stub_embedding(corpus.vocabulary.token(static_cast<TokenId>(k)), corpus.dim);
    }
  }
  return cb;
}

inline Corpus parse_corpus(const nlohmann::json& doc, const std::string& source = "corpus") {
  using nlohmann::json;
  if (!doc.is_object()) throw ParseError(source + ": top level must be an object");
  if (!doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long long>() <= 0) {
    throw ParseError(source + ": 'dim' must be a positive integer");
  }
  if (!doc.contains("sentences") || !doc["sentences"].is_array()) {
    throw ParseError(source + ": 'sentences' must be an array");
  }
  Corpus corpus;
  corpus.dim = doc["dim"].get<std::size_t>();
  if (doc.contains("relations")) {
    if (!doc["relations"].is_array()) throw ParseError(source + ": 'relations' must be an array");
    for (const auto& r : doc["relations"]) {
      if (!r.is_string()) throw ParseError(source + ": relation labels must be strings");
      corpus.catalog.push_back(r.get<std::string>());
    }
  }
  const auto rules = ExtractionRules::from_catalog(corpus.catalog);

  std::size_t index = 0;
  for (const auto& rec : doc["sentences"]) {
    const std::string where = source + ": sentence #" + std::to_string(index++) +
                              (rec.contains("id") && rec["id"].is_string()
                                   ? " ('" + rec["id"].get<std::string>() + "')"
                                   : std::string{});
    if (!rec.is_object()) throw ParseError(where + ": record must be an object");
    if (!rec.contains("id") || !rec["id"].is_string()) throw ParseError(where + ": missing string 'id'");
    if (!rec.contains("tokens") || !rec["tokens"].is_array() || rec["tokens"].empty()) {
      throw ParseError(where + ": 'tokens' must be a nonempty array");
    }
    AnnotatedSentence s;
    s.id = rec["id"].get<std::string>();
    for (const auto& t : rec["tokens"]) {
      if (!t.is_string()) throw ParseError(where + ": tokens must be strings");
      s.tokens.push_back(t.get<std::string>());
      s.token_ids.push_back(corpus.vocabulary.add(s.tokens.back()));
    }
    const std::size_t n = s.tokens.size();
    const auto nn = static_cast<Eigen::Index>(n);

    if (rec.contains("alpha")) {
      s.attention = detail::number_list(rec["alpha"], "alpha", where);
      if (s.attention.size() != n) throw ParseError(where + ": 'alpha' length differs from tokens");
    } else {
      s.attention.assign(n, 1.0 / static_cast<double>(n));
    }
    if (rec.contains("beta")) {
      s.beta = detail::number_list(rec["beta"], "beta", where);
      if (s.beta.size() != n) throw ParseError(where + ": 'beta' length differs from tokens");
    } else {
      s.beta.assign(n, 1.0);
    }
    s.recon_error.assign(n, 0.0);
    s.token_snr.assign(n, 1.0);

    s.embeddings.resize(static_cast<Eigen::Index>(corpus.dim), nn);
    if (rec.contains("embeddings")) {
      const auto& emb = rec["embeddings"];
      if (!emb.is_array() || emb.size() != n) {
        throw ParseError(where + ": 'embeddings' must hold one vector per token");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = detail::number_list(emb[i], "embeddings", where);
        if (row.size() != corpus.dim) {
          throw ValidationError(where + ": embedding dimension " + std::to_string(row.size()) +
                                " differs from corpus dim " + std::to_string(corpus.dim));
        }
        for (std::size_t k = 0; k < corpus.dim; ++k) {
          s.embeddings(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = row[k];
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        s.embeddings.col(static_cast<Eigen::Index>(i)) = stub_embedding(s.tokens[i], corpus.dim);
      }
    }
    try {
      s.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }

    KnowledgeGraph kg;
    if (rec.contains("triples")) {
      if (!rec["triples"].is_array()) throw ParseError(where + ": 'triples' must be an array");
      std::vector<SemanticTriple> triples;
      for (const auto& tj : rec["triples"]) {
        if (!tj.is_object() || !tj.contains("head") || !tj.contains("rel") || !tj.contains("tail") ||
            !tj["rel"].is_string()) {
          throw ParseError(where + ": triple needs 'head', 'rel' and 'tail'");
        }
        SemanticTriple t;
        t.head.span = detail::parse_span(tj["head"], n, where);
        t.tail.span = detail::parse_span(tj["tail"], n, where);
        t.head.label = detail::join(s.tokens, t.head.span);
        t.tail.label = detail::join(s.tokens, t.tail.span);
        const auto label = tj["rel"].get<std::string>();
        const auto idx = detail::catalog_index(corpus.catalog, label);
        if (!idx) throw ParseError(where + ": relation '" + label + "' is not in the catalog");
        t.relation = *idx;
        t.relation_tokens = split_whitespace(label).size();
        t.relation_phrase = detail::locate_phrase(s.tokens, label, t.head.span, t.tail.span);
        triples.push_back(std::move(t));
      }
      try {
        kg = KnowledgeGraph::from_triples(std::move(triples), corpus.catalog);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    } else {
      kg = toy_extract_triples(s, rules, corpus.catalog);
    }
    corpus.entries.push_back({std::move(s), std::move(kg)});
  }
  corpus.codebook = build_codebook(corpus);
  return corpus;
}

inline Corpus ingest_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in || std::filesystem::is_directory(path)) throw ParseError("cannot open corpus file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_corpus(doc, path);
}

/// Serialize a corpus back to the ingestion schema. Embeddings are written
/// only when `with_embeddings` is set.
inline nlohmann::json corpus_to_json(const Corpus& corpus, bool with_embeddings = false) {
  nlohmann::json doc;
  doc["dim"] = corpus.dim;
  doc["relations"] = corpus.catalog;
  doc["sentences"] = nlohmann::json::array();
  for (const auto& e : corpus.entries) {
    const auto& s = e.sentence;
    nlohmann::json rec;
    rec["id"] = s.id;
    rec["tokens"] = s.tokens;
    rec["alpha"] = s.attention;
    rec["beta"] = s.beta;
    if (with_embeddings) {
      auto emb = nlohmann::json::array();
      for (Eigen::Index i = 0; i < s.embeddings.cols(); ++i) {
        emb.push_back(std::vector<double>(s.embeddings.col(i).data(),
                                          s.embeddings.col(i).data() + s.embeddings.rows()));
      }
      rec["embeddings"] = std::move(emb);
    }
    auto triples = nlohmann::json::array();
    for (const auto& t : e.graph.triples) {
      triples.push_back({{"head", {t.head.span.begin, t.head.span.end}},
                         {"rel", corpus.catalog[t.relation]},
                         {"tail", {t.tail.span.begin, t.tail.span.end}}});
    }
    rec["triples"] = std::move(triples);
    doc["sentences"].push_back(std::move(rec));
  }
  return doc;
}

}  // namespace semra
