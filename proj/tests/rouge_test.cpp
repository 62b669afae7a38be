#include <gtest/gtest.h>

#include <random>

#include "planforge/porter.hpp"
#include "planforge/rouge.hpp"
#include "support/oracles.hpp"

using namespace planforge;

namespace {

constexpr double kTol = 1e-9;

void expect_score(const rouge::Score& s, const oracle::PRF& o, const std::string& what) {
  EXPECT_NEAR(s.precision, o.p, kTol) << what;
  EXPECT_NEAR(s.recall, o.r, kTol) << what;
  EXPECT_NEAR(s.f1, o.f, kTol) << what;
}

std::vector<rouge::Tokens> random_sentences(std::mt19937_64& g, std::size_t max_tokens, std::size_t vocab) {
  const auto n = g() % (max_tokens + 1);
  std::vector<rouge::Tokens> sents(1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!sents.back().empty() && g() % 6 == 0) sents.emplace_back();
    sents.back().push_back("t" + std::to_string(g() % vocab));
  }
  if (sents.back().empty()) sents.pop_back();
  return sents;
}

rouge::Tokens flat(const std::vector<rouge::Tokens>& s) {
  rouge::Tokens out;
  for (const auto& x : s) out.insert(out.end(), x.begin(), x.end());
  return out;
}

}  // namespace

TEST(RougeTokenize, LowercaseAsciiAlnum) {
  EXPECT_EQ(rouge::tokenize("The Cat-sat, 42 times!"), (rouge::Tokens{"the", "cat", "sat", "42", "times"}));
  EXPECT_EQ(rouge::tokenize("caf\xC3\xA9 au lait"), (rouge::Tokens{"caf", "au", "lait"}));
  EXPECT_TRUE(rouge::tokenize("  ... ").empty());
}

TEST(RougeTokenize, StemAndStopwords) {
  rouge::Options o;
  o.stem = true;
  EXPECT_EQ(rouge::tokenize("Running ponies", o), (rouge::Tokens{"run", "poni"}));
  o.remove_stopwords = true;
  EXPECT_EQ(rouge::tokenize("the ponies and the cats", o), (rouge::Tokens{"poni", "cat"}));
}

TEST(RougeN, WorkedExample) {
  const auto s = rouge::rouge_n("the cat", "the cat sat", 1);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 2.0 / 3.0);
  EXPECT_NEAR(s.f1, 0.8, 1e-15);
  const auto b = rouge::rouge_n("the cat", "the cat sat", 2);
  EXPECT_DOUBLE_EQ(b.precision, 1.0);
  EXPECT_DOUBLE_EQ(b.recall, 0.5);
}

TEST(RougeN, ClippedCounts) {
  const auto s = rouge::rouge_n("the the the", "the cat", 1);
  EXPECT_DOUBLE_EQ(s.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
}

TEST(RougeN, EmptySidesScoreZero) {
  const auto s = rouge::rouge_n("", "the cat", 1);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.f1, 0.0);
  EXPECT_EQ(rouge::rouge_n("one", "one", 2).f1, 0.0);
}

TEST(RougeL, WorkedExample) {
  const auto s = rouge::rouge_l("a b c", "a c b");
  EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 2.0 / 3.0);
}

TEST(RougeLsum, UnionOverCandidateSentences) {
  // reference "a b c d e" against candidate sentences "a b" and "c d"
  const auto s = rouge::rouge_lsum(std::vector<rouge::Tokens>{{"a", "b"}, {"c", "d"}},
                                   std::vector<rouge::Tokens>{{"a", "b", "c", "d", "e"}});
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.8);
  const auto t = rouge::rouge_lsum("A b. C d.", "A b c d e.");
  EXPECT_DOUBLE_EQ(t.recall, 0.8);
}

TEST(RougeLsum, HitsClippedByCounts) {
  // reference sentence repeated; candidate has one copy
  const auto s = rouge::rouge_lsum(std::vector<rouge::Tokens>{{"x", "y"}},
                                   std::vector<rouge::Tokens>{{"x", "y"}, {"x", "y"}});
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
}

TEST(Lcs, BranchAndBoundOracleAgreesWithEnumeration) {
  std::mt19937_64 g(3);
  for (int i = 0; i < 300; ++i) {
    const auto a = flat(random_sentences(g, 12, 4));
    const auto b = flat(random_sentences(g, 12, 4));
    ASSERT_EQ(oracle::lcs(a, b), oracle::lcs_enumerate(a, b));
  }
}

TEST(Lcs, MatchesOracle) {
  std::mt19937_64 g(4);
  for (int i = 0; i < 300; ++i) {
    const auto a = flat(random_sentences(g, 30, 6));
    const auto b = flat(random_sentences(g, 30, 6));
    ASSERT_EQ(rouge::lcs_length(a, b), oracle::lcs(a, b));
  }
}

TEST(Rouge, AllComponentsMatchOracleOnRandomPairs) {
  std::mt19937_64 g(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t vocab = 2 + g() % 10;
    const auto cs = random_sentences(g, 30, vocab);
    const auto rs = random_sentences(g, 30, vocab);
    const auto c = flat(cs), r = flat(rs);
    const auto tag = "pair " + std::to_string(i);
    expect_score(rouge::rouge_n(c, r, 1), oracle::rouge_n(c, r, 1), tag + " r1");
    expect_score(rouge::rouge_n(c, r, 2), oracle::rouge_n(c, r, 2), tag + " r2");
    expect_score(rouge::rouge_l(c, r), oracle::rouge_l(c, r), tag + " rL");
    expect_score(rouge::rouge_lsum(cs, rs), oracle::rouge_lsum(cs, rs), tag + " rLsum");
  }
}

TEST(Rouge, PrecisionRecallSwapUnderArgumentSwap) {
  std::mt19937_64 g(6);
  for (int i = 0; i < 200; ++i) {
    const auto c = flat(random_sentences(g, 25, 5));
    const auto r = flat(random_sentences(g, 25, 5));
    for (std::size_t n : {1, 2}) {
      EXPECT_DOUBLE_EQ(rouge::rouge_n(c, r, n).precision, rouge::rouge_n(r, c, n).recall);
    }
    EXPECT_DOUBLE_EQ(rouge::rouge_l(c, r).precision, rouge::rouge_l(r, c).recall);
  }
}

TEST(Rouge, IdenticalTextScoresOne) {
  const auto s = rouge::score_pair("The storm hit. Power failed.", "The storm hit. Power failed.");
  for (const auto& x : {s.rouge1, s.rouge2, s.rouge_l, s.rouge_lsum}) EXPECT_DOUBLE_EQ(x.f1, 1.0);
}

TEST(Rouge, CorpusScoreIsMeanOfPairs) {
  const std::vector<std::pair<std::string, std::string>> pairs = {{"the cat", "the cat sat"}, {"a b c", "a c b"}};
  const auto m = rouge::corpus_rouge(pairs);
  const auto a = rouge::score_pair(pairs[0].first, pairs[0].second);
  const auto b = rouge::score_pair(pairs[1].first, pairs[1].second);
  EXPECT_DOUBLE_EQ(m.rouge1.f1, (a.rouge1.f1 + b.rouge1.f1) / 2);
  EXPECT_DOUBLE_EQ(m.rouge_lsum.recall, (a.rouge_lsum.recall + b.rouge_lsum.recall) / 2);
}

TEST(Porter, ReferenceVocabulary) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"caresses", "caress"},   {"ponies", "poni"},         {"ties", "ti"},           {"caress", "caress"},
      {"cats", "cat"},          {"feed", "feed"},           {"agreed", "agre"},       {"plastered", "plaster"},
      {"motoring", "motor"},    {"sing", "sing"},           {"conflated", "conflat"}, {"troubled", "troubl"},
      {"sized", "size"},        {"hopping", "hop"},         {"falling", "fall"},      {"filing", "file"},
      {"happy", "happi"},       {"relational", "relat"},    {"conditional", "condit"}, {"rational", "ration"},
      {"digitizer", "digit"},   {"operator", "oper"},       {"feudalism", "feudal"},  {"decisiveness", "decis"},
      {"hopefulness", "hope"},  {"callousness", "callous"}, {"triplicate", "triplic"}, {"formative", "form"},
      {"formalize", "formal"},  {"electrical", "electr"},   {"hopeful", "hope"},      {"goodness", "good"},
      {"revival", "reviv"},     {"allowance", "allow"},     {"inference", "infer"},   {"airliner", "airlin"},
      {"adjustable", "adjust"}, {"defensible", "defens"},   {"irritant", "irrit"},    {"replacement", "replac"},
      {"adjustment", "adjust"}, {"dependent", "depend"},    {"adoption", "adopt"},    {"communism", "commun"},
      {"activate", "activ"},    {"effective", "effect"},    {"probate", "probat"},    {"rate", "rate"},
      {"cease", "ceas"},        {"controlling", "control"}, {"roll", "roll"},         {"generalizations", "gener"}};
  for (const auto& [w, s] : cases) EXPECT_EQ(porter::stem(w), s) << w;
}
