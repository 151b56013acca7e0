#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "semra/corpus.hpp"
#include "semra/synthetic.hpp"

using semra::AnnotatedSentence;
using semra::KnowledgeGraph;
using nlohmann::json;

namespace {

const std::vector<std::string> kCatalog = {"trained on", "part of"};

AnnotatedSentence sentence_of(const std::vector<std::string>& tokens, std::vector<double> alpha = {},
                              std::size_t dim = 4) {
  json rec = {{"id", "t"}, {"tokens", tokens}, {"triples", json::array()}};
  if (!alpha.empty()) rec["alpha"] = alpha;
  json doc = {{"dim", dim}, {"relations", kCatalog}, {"sentences", {rec}}};
  return semra::parse_corpus(doc).entries.front().sentence;
}

KnowledgeGraph extract(const std::vector<std::string>& tokens) {
  const auto s = sentence_of(tokens);
  return semra::toy_extract_triples(s, semra::ExtractionRules::from_catalog(kCatalog), kCatalog);
}

semra::SemanticTriple triple(std::size_t h0, std::size_t h1, std::size_t r0, std::size_t r1, std::size_t t0,
                             std::size_t t1, std::size_t label = 0) {
  semra::SemanticTriple t;
  t.head.span = {h0, h1};
  t.relation = label;
  t.relation_phrase = {r0, r1};
  t.relation_tokens = r1 - r0;
  t.tail.span = {t0, t1};
  return t;
}

std::string write_temp(const json& doc) {
  static int counter = 0;
  const std::string path = ::testing::TempDir() + "corpus_" + std::to_string(counter++) + ".json";
  std::ofstream(path) << doc.dump();
  return path;
}

}  // namespace

// --- ingest_corpus -------------------------------------------------------------

TEST(IngestCorpus, SingleSentenceRoundTrip) {
  json emb = json::array();
  for (int i = 0; i < 7; ++i) emb.push_back({1.0 * i, 0.5, 0.0, 1.0});
  json doc = {{"dim", 4},
              {"relations", kCatalog},
              {"sentences", {{{"id", "s0"}, {"tokens", {"a", "b", "c", "d", "e", "f", "g"}}, {"embeddings", emb}}}}};
  const auto corpus = semra::ingest_corpus(write_temp(doc));
  ASSERT_EQ(corpus.entries.size(), 1U);
  const auto& s = corpus.entries[0].sentence;
  EXPECT_EQ(s.size(), 7U);
  EXPECT_EQ(s.dim(), 4);
  EXPECT_DOUBLE_EQ(s.embeddings(0, 3), 3.0);
  EXPECT_DOUBLE_EQ(s.attention[0], 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(s.beta[6], 1.0);
}

TEST(IngestCorpus, AttentionAboveOneIsValidationError) {
  json doc = {{"dim", 2}, {"sentences", {{{"id", "bad"}, {"tokens", {"x", "y"}}, {"alpha", {0.5, 1.2}}}}}};
  EXPECT_THROW(semra::parse_corpus(doc), semra::ValidationError);
}

TEST(IngestCorpus, PaperSampleSentenceHasSevenTokens) {
  const auto tokens = semra::tokenize("DNN is trained on large dataset.");
  ASSERT_EQ(tokens.size(), 7U);
  EXPECT_EQ(tokens.back(), ".");
  EXPECT_EQ(tokens[5], "dataset");
}

TEST(IngestCorpus, SchemaViolationNamesRecord) {
  json doc = {{"dim", 2}, {"sentences", {{{"id", "ok"}, {"tokens", {"x"}}}, {{"id", "broken"}, {"tokens", 3}}}}};
  try {
    semra::parse_corpus(doc, "file.json");
    FAIL() << "expected a parse error";
  } catch (const semra::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("#1"), std::string::npos);
  }
}

TEST(IngestCorpus, DimensionMismatchIsValidationError) {
  json doc = {{"dim", 3}, {"sentences", {{{"id", "d"}, {"tokens", {"x"}}, {"embeddings", {{1.0, 2.0}}}}}}};
  EXPECT_THROW(semra::parse_corpus(doc), semra::ValidationError);
}

TEST(IngestCorpus, MissingFileIsParseError) {
  EXPECT_THROW(semra::ingest_corpus("/nonexistent/corpus.json"), semra::ParseError);
}

TEST(IngestCorpus, ExplicitTriplesAndUnknownRelation) {
  json doc = {{"dim", 2},
              {"relations", kCatalog},
              {"sentences",
               {{{"id", "t"},
                 {"tokens", {"dnn", "trained", "on", "data"}},
                 {"triples", {{{"head", {0, 1}}, {"rel", "trained on"}, {"tail", {3, 4}}}}}}}}};
  const auto c = semra::parse_corpus(doc);
  const auto& kg = c.entries[0].graph;
  ASSERT_EQ(kg.triples.size(), 1U);
  EXPECT_EQ(kg.triples[0].relation_phrase, (semra::Span{1, 3}));
  EXPECT_EQ(semra::semantic_token_count(kg), 4U);
  doc["sentences"][0]["triples"][0]["rel"] = "eats";
  EXPECT_THROW(semra::parse_corpus(doc), semra::ParseError);
}

TEST(IngestCorpus, CodebookColumnsAreUnitNorm) {
  const auto c = semra::synthetic_corpus({.sentences = 20});
  EXPECT_EQ(c.codebook.cols(), static_cast<Eigen::Index>(c.vocabulary.size()));
  for (Eigen::Index v = 0; v < c.codebook.cols(); ++v) EXPECT_NEAR(c.codebook.col(v).norm(), 1.0, 1e-12);
}

TEST(IngestCorpus, SerializationRoundTrip) {
  const auto c = semra::synthetic_corpus({.sentences = 5});
  const auto back = semra::parse_corpus(semra::corpus_to_json(c, true));
  ASSERT_EQ(back.entries.size(), 5U);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.entries[i].sentence.tokens, c.entries[i].sentence.tokens);
    EXPECT_EQ(back.entries[i].sentence.attention, c.entries[i].sentence.attention);
    EXPECT_EQ(back.entries[i].graph.triples.size(), c.entries[i].graph.triples.size());
    EXPECT_TRUE(back.entries[i].sentence.embeddings.isApprox(c.entries[i].sentence.embeddings));
  }
}

// --- toy_extract_triples ----------------------------------------------------------

TEST(ToyExtract, PaperExampleTrainedOn) {
  const auto kg = extract({"DNN", "is", "trained", "on", "large", "dataset"});
  ASSERT_EQ(kg.triples.size(), 1U);
  const auto& t = kg.triples[0];
  EXPECT_EQ(t.head.label, "DNN");
  EXPECT_EQ(kg.catalog[t.relation], "trained on");
  EXPECT_EQ(t.tail.label, "large dataset");
}

TEST(ToyExtract, NoMatchGivesEmptyGraph) {
  const auto kg = extract({"the", "sky", "is", "blue"});
  EXPECT_TRUE(kg.triples.empty());
  EXPECT_EQ(semra::semantic_token_count(kg), 0U);
}

TEST(ToyExtract, MultiTokenSpans) {
  const auto kg = extract({"deep", "neural", "network", "trained", "on", "large", "dataset"});
  ASSERT_EQ(kg.triples.size(), 1U);
  const auto& t = kg.triples[0];
  EXPECT_EQ(t.head.span.size(), 3U);
  EXPECT_EQ(t.relation_tokens, 2U);
  EXPECT_EQ(t.tail.span.size(), 2U);
  EXPECT_EQ(t.token_count(), 7U);
}

TEST(ToyExtract, OverlapsPreferLongerThenEarlier) {
  semra::ExtractionRules rules = semra::ExtractionRules::from_catalog(kCatalog);
  rules.content_runs_as_entities = false;
  rules.entity_phrases = {{"neural", "network"}, {"deep", "neural", "network"}, {"large", "dataset"}, {"dataset"}};
  const auto s = sentence_of({"deep", "neural", "network", "trained", "on", "large", "dataset"});
  const auto kg = semra::toy_extract_triples(s, rules, kCatalog);
  ASSERT_EQ(kg.triples.size(), 1U);
  EXPECT_EQ(kg.triples[0].head.span, (semra::Span{0, 3}));
  EXPECT_EQ(kg.triples[0].tail.span, (semra::Span{5, 7}));
}

// --- semantic_token_count ---------------------------------------------------------------

TEST(SemanticTokenCount, EmptyGraph) { EXPECT_EQ(semra::semantic_token_count(KnowledgeGraph{}), 0U); }

TEST(SemanticTokenCount, PaperSpanSizes) {
  const auto kg = KnowledgeGraph::from_triples({triple(0, 3, 3, 5, 5, 7)}, kCatalog);
  EXPECT_EQ(semra::semantic_token_count(kg), 7U);
}

TEST(SemanticTokenCount, TwoTriplesSum) {
  const auto kg = KnowledgeGraph::from_triples({triple(0, 3, 3, 5, 5, 7), triple(7, 8, 8, 10, 10, 12, 1)}, kCatalog);
  EXPECT_EQ(semra::semantic_token_count(kg), 12U);
}

// --- sentence_embedding / aggregate_selected ------------------------------------------

TEST(SentenceEmbedding, OneTokenIdentityWeight) {
  auto s = sentence_of({"x"}, {1.0}, 2);
  s.embeddings.col(0) << 2.0, 0.0;
  EXPECT_TRUE(semra::sentence_embedding(s).isApprox(Eigen::Vector2d(2.0, 0.0)));
}

TEST(SentenceEmbedding, TwoTokenAverage) {
  auto s = sentence_of({"x", "y"}, {0.5, 0.5}, 2);
  s.embeddings << 1.0, 0.0, 0.0, 1.0;
  EXPECT_TRUE(semra::sentence_embedding(s).isApprox(Eigen::Vector2d(0.5, 0.5)));
}

TEST(SentenceEmbedding, ZeroAttentionGivesZero) {
  const auto s = sentence_of({"x", "y", "z"}, {0.0, 0.0, 0.0});
  EXPECT_EQ(semra::sentence_embedding(s).norm(), 0.0);
}

TEST(AggregateSelected, EmptySelectionIsZero) {
  const auto s = sentence_of({"x", "y"});
  const std::vector<double> sel = {0.0, 0.0};
  EXPECT_EQ(semra::aggregate_selected(s, sel).norm(), 0.0);
}

TEST(AggregateSelected, FullSelectionWithUnitAttentionMatchesPhi) {
  const auto s = sentence_of({"x", "y", "z"}, {1.0, 1.0, 1.0});
  const std::vector<double> sel = {1.0, 1.0, 1.0};
  EXPECT_TRUE(semra::aggregate_selected(s, sel).isApprox(semra::sentence_embedding(s)));
}

TEST(AggregateSelected, SingleSelectedColumn) {
  auto s = sentence_of({"x", "y"}, {}, 2);
  s.embeddings.col(0) << 3.0, 4.0;
  const std::vector<double> sel = {1.0, 0.0};
  EXPECT_TRUE(semra::aggregate_selected(s, sel).isApprox(Eigen::Vector2d(3.0, 4.0)));
}

TEST(AggregateSelected, LengthMismatchThrows) {
  const auto s = sentence_of({"x", "y"});
  const std::vector<double> sel = {1.0};
  EXPECT_THROW(semra::aggregate_selected(s, sel), semra::ValidationError);
}

TEST(AggregateSelected, LinearOnDisjointSupports) {
  const auto s = sentence_of({"a", "b", "c", "d"});
  const std::vector<double> p = {0.3, 0.0, 1.0, 0.0};
  const std::vector<double> q = {0.0, 0.7, 0.0, 0.2};
  const std::vector<double> sum = {0.3, 0.7, 1.0, 0.2};
  EXPECT_TRUE(semra::aggregate_selected(s, sum).isApprox(semra::aggregate_selected(s, p) +
                                                          semra::aggregate_selected(s, q)));
}

// --- grounding_mask -------------------------------------------------------------------

namespace {
struct Grounded {
  AnnotatedSentence s;
  KnowledgeGraph kg;
};
Grounded grounded_case(std::vector<double> alpha) {
  // "dnn trained on data now": entities dnn and data, relation "trained on", "now" ungrounded.
  auto s = sentence_of({"dnn", "trained", "on", "data", "now"}, std::move(alpha));
  auto kg = KnowledgeGraph::from_triples({triple(0, 1, 1, 3, 3, 4)}, kCatalog);
  return {s, kg};
}
}  // namespace

TEST(GroundingMask, BoundaryAttentionIncluded) {
  const auto g = grounded_case({0.3, 0.5, 0.5, 0.5, 0.5});
  EXPECT_EQ(semra::grounding_mask(g.s, g.kg, 0.3).bounds[0], 1);
}

TEST(GroundingMask, LowAttentionExcludedEvenIfGrounded) {
  const auto g = grounded_case({0.29, 0.5, 0.5, 0.5, 0.5});
  EXPECT_EQ(semra::grounding_mask(g.s, g.kg, 0.3).bounds[0], 0);
}

TEST(GroundingMask, UngroundedTokenExcludedInHardMode) {
  const auto g = grounded_case({0.9, 0.9, 0.9, 0.9, 0.9});
  const auto m = semra::grounding_mask(g.s, g.kg, 0.3);
  EXPECT_EQ(m.bounds, (std::vector<std::uint8_t>{1, 1, 1, 1, 0}));
  const auto soft = semra::grounding_mask(g.s, g.kg, 0.3, semra::GroundingMode::soft);
  EXPECT_EQ(soft.bounds[4], 1);
  EXPECT_EQ(soft.grounded[4], 0);
}

TEST(GroundingMask, MonotoneInThreshold) {
  const auto g = grounded_case({0.1, 0.35, 0.6, 0.8, 0.95});
  auto prev = semra::grounding_mask(g.s, g.kg, 0.0).bounds;
  for (double tau = 0.05; tau <= 1.0; tau += 0.05) {
    const auto cur = semra::grounding_mask(g.s, g.kg, tau).bounds;
    for (std::size_t i = 0; i < cur.size(); ++i) EXPECT_LE(cur[i], prev[i]);
    prev = cur;
  }
}

// --- relation_distribution ----------------------------------------------------------------

TEST(RelationDistribution, AddOneSmoothing) {
  const std::vector<std::size_t> labels = {0, 0};
  const auto d = semra::smoothed_distribution(labels, 2);
  EXPECT_DOUBLE_EQ(d.probabilities[0], 0.75);
  EXPECT_DOUBLE_EQ(d.probabilities[1], 0.25);
}

TEST(RelationDistribution, EmptyIsUniform) {
  KnowledgeGraph kg;
  kg.catalog = {"a", "b", "c", "d"};
  for (double p : semra::relation_distribution(kg).probabilities) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(RelationDistribution, SingleLabel) {
  KnowledgeGraph kg = KnowledgeGraph::from_triples({triple(0, 1, 1, 2, 2, 3)}, {"a"});
  ASSERT_EQ(semra::relation_distribution(kg).probabilities.size(), 1U);
  EXPECT_DOUBLE_EQ(semra::relation_distribution(kg).probabilities[0], 1.0);
}

TEST(RelationDistribution, EmptyCatalogThrows) {
  EXPECT_THROW(semra::relation_distribution(KnowledgeGraph{}), semra::ValidationError);
}

TEST(RelationDistribution, SumsToOneAndStrictlyPositive) {
  const auto corpus = semra::synthetic_corpus({.sentences = 100});
  for (const auto& e : corpus.entries) {
    const auto d = semra::relation_distribution(e.graph);
    double total = 0.0;
    for (double p : d.probabilities) {
      EXPECT_GT(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(TokenKl, FiniteNonnegativeAndZeroForUngroundedInSingleRelationGraph) {
  KnowledgeGraph kg = KnowledgeGraph::from_triples({triple(0, 1, 1, 3, 3, 4)}, kCatalog);
  const auto s = sentence_of({"dnn", "trained", "on", "data", "now"});
  const auto kl = semra::token_kl(s, kg);
  for (double v : kl) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
  // Grounded tokens see exactly the graph's distribution.
  EXPECT_NEAR(kl[0], 0.0, 1e-15);
  EXPECT_GT(kl[4], 0.0);
}

// --- corpus-level properties ----------------------------------------------------------------

TEST(SemanticCompression, ToyExtractorNeverExceedsSentenceLength) {
  const std::vector<std::string> texts = {
      "DNN is trained on large dataset .",
      "the deep neural network trained on large dataset is part of the system .",
      "a wheel part of the car and the engine part of the car .",
      "nothing to see here ."};
  for (const auto& text : texts) {
    const auto tokens = semra::tokenize(text);
    const auto kg = extract(tokens);
    EXPECT_LE(semra::semantic_token_count(kg), tokens.size()) << text;
  }
  const auto paper = semra::tokenize("DNN is trained on large dataset .");
  EXPECT_LT(semra::semantic_token_count(extract(paper)), paper.size());
}

TEST(SemanticCompression, SyntheticCorpusTriplesFitInsideSentences) {
  const auto corpus = semra::synthetic_corpus();
  ASSERT_EQ(corpus.entries.size(), 500U);
  for (const auto& e : corpus.entries) {
    EXPECT_GE(e.sentence.size(), 5U);
    EXPECT_LE(e.sentence.size(), 30U);
    EXPECT_LT(semra::semantic_token_count(e.graph), e.sentence.size());
  }
}

TEST(StubEmbedding, DeterministicUnitVectors) {
  const auto a = semra::stub_embedding("token", 16);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_EQ(a, semra::stub_embedding("token", 16));
  EXPECT_NE(a, semra::stub_embedding("other", 16));
}
