#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semra/corpus.hpp"
#include "semra/generators.hpp"

namespace semra {

struct SyntheticOptions {
  std::size_t sentences = 500;
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 30;
  std::size_t dim = 16;
  std::uint64_t seed = 2024;
};

namespace detail {

inline const std::vector<std::string>& synthetic_relations() {
  static const std::vector<std::string> r = {
      "trained on", "part of",  "located in", "used for",  "based on",  "connected to",
      "derived from", "made of", "known as",  "leads to",  "built with", "depends on"};
  return r;
}

inline const std::vector<std::vector<std::string>>& synthetic_entities() {
  static const std::vector<std::vector<std::string>> e = {
      {"deep", "neural", "network"}, {"large", "dataset"},     {"base", "station"},
      {"channel", "encoder"},        {"semantic", "decoder"},  {"knowledge", "graph"},
      {"user", "device"},            {"edge", "server"},       {"signal"},
      {"antenna", "array"},          {"transformer", "model"}, {"fading", "channel"},
      {"spectrum"},                  {"receiver"},             {"sensor", "network"},
      {"attention", "module"},       {"codebook"},             {"bandwidth"},
      {"power", "budget"},           {"relay", "node"},        {"generator"},
      {"discriminator"},             {"embedding", "layer"},   {"token", "sequence"},
      {"satellite", "link"},         {"city", "grid"},         {"vehicle"},
      {"drone", "swarm"},            {"camera", "feed"},       {"traffic", "map"}};
  return e;
}

inline const std::vector<std::string>& synthetic_fillers() {
  static const std::vector<std::string> f = {"the",   "a",     "is",       "was",   "very",  "also",
                                             "which", "this",  "often",    "now",   "then",  "still",
                                             "quite", "just",  "usually",  "here",  "there", "really"};
  return f;
}

}  // namespace detail

/// Template-generated corpus in the ingestion schema: each sentence is a
/// run of "entity relation entity" clauses joined by "and", padded with
/// filler words at clause boundaries, and closed by ".". Triples are
/// explicit; embeddings are omitted so the loader uses the stub.
inline nlohmann::json synthetic_corpus_json(const SyntheticOptions& opt = {}) {
  const auto& rels = detail::synthetic_relations();
  const auto& ents = detail::synthetic_entities();
  const auto& fill = detail::synthetic_fillers();
  DrawStream r(opt.seed, 0x5e17);
  nlohmann::json doc;
  doc["dim"] = opt.dim;
  doc["relations"] = rels;
  doc["sentences"] = nlohmann::json::array();

  for (std::size_t s = 0; s < opt.sentences; ++s) {
    const std::size_t target = r.integer(opt.min_tokens, opt.max_tokens);
    struct Clause {
      std::vector<std::string> head, tail;
      std::size_t rel;
    };
    std::vector<Clause> clauses;
    std::size_t used = 1;  // final "."
    for (;;) {
      Clause c{ents[r.integer(0, ents.size() - 1)], {}, r.integer(0, rels.size() - 1)};
      do {
        c.tail = ents[r.integer(0, ents.size() - 1)];
      } while (c.tail == c.head);
      const std::size_t cost = c.head.size() + 2 + c.tail.size() + (clauses.empty() ? 0 : 1);
      if (used + cost > target) break;
      used += cost;
      clauses.push_back(std::move(c));
    }
    if (clauses.empty()) {
      // Shortest clause: single-token head and tail.
      Clause c{{"signal"}, {"receiver"}, r.integer(0, rels.size() - 1)};
      used += 4;
      clauses.push_back(std::move(c));
    }
    // Filler slots: before each clause and before the final period.
    std::vector<std::size_t> pad(clauses.size() + 1, 0);
    for (std::size_t k = used; k < target; ++k) ++pad[r.integer(0, pad.size() - 1)];

    nlohmann::json rec;
    std::vector<std::string> tokens;
    std::vector<double> alpha;
    auto push = [&](const std::string& t, double a) {
      tokens.push_back(t);
      alpha.push_back(a);
    };
    auto push_fillers = [&](std::size_t count) {
      for (std::size_t k = 0; k < count; ++k) push(fill[r.integer(0, fill.size() - 1)], r.uniform(0.05, 0.45));
    };
    nlohmann::json triples = nlohmann::json::array();
    for (std::size_t c = 0; c < clauses.size(); ++c) {
      if (c > 0) push("and", r.uniform(0.05, 0.45));
      push_fillers(pad[c]);
      const std::size_t h0 = tokens.size();
      for (const auto& t : clauses[c].head) push(t, r.uniform(0.55, 1.0));
      const std::size_t h1 = tokens.size();
      for (const auto& t : split_whitespace(rels[clauses[c].rel])) push(t, r.uniform(0.5, 0.9));
      const std::size_t t0 = tokens.size();
      for (const auto& t : clauses[c].tail) push(t, r.uniform(0.55, 1.0));
      triples.push_back({{"head", {h0, h1}}, {"rel", rels[clauses[c].rel]}, {"tail", {t0, tokens.size()}}});
    }
    push_fillers(pad.back());
    push(".", r.uniform(0.05, 0.45));

    rec["id"] = "syn-" + std::to_string(s);
    rec["tokens"] = tokens;
    rec["alpha"] = alpha;
    rec["triples"] = std::move(triples);
    doc["sentences"].push_back(std::move(rec));
  }
  return doc;
}

inline Corpus synthetic_corpus(const SyntheticOptions& opt = {}) {
  return parse_corpus(synthetic_corpus_json(opt), "synthetic");
}

}  // namespace semra
