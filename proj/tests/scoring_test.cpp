#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "planforge/scoring.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace planforge;

namespace {

Document source(std::string body) {
  Document d;
  d.id = "src";
  d.body = std::move(body);
  refresh_counts(d);
  return d;
}

CandidateScore with_quality(double q) {
  CandidateScore s;
  s.quality = q;
  return s;
}

}  // namespace

TEST(Ratios, WordsAndSentences) {
  Document d;
  d.id = "x";
  d.word_count = 1000;
  d.sentence_count = 50;
  std::string cand;
  for (int i = 0; i < 100; ++i) cand += (i % 20 == 19) ? "w.\n" : "w ";
  const auto r = ratios(cand, d);
  EXPECT_DOUBLE_EQ(r.word_ratio, 0.1);
  EXPECT_DOUBLE_EQ(r.sentence_ratio, 5.0 / 50.0);
}

TEST(Ratios, DegenerateSourceIsScoringError) {
  Document d;
  d.id = "empty";
  try {
    ratios("x", d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Scoring);
    EXPECT_NE(std::string(e.what()).find("empty"), std::string::npos);
  }
}

TEST(LengthScore, WorkedValues) {
  const LengthParams p{0.1, 0.1};
  EXPECT_EQ(length_score(0.1, 0.1, p), 1.0);
  EXPECT_NEAR(length_score(0.05, 0.1, p), std::sin(std::numbers::pi / 4), 1e-15);
  EXPECT_NEAR(length_score(0.15, 0.1, p), std::sin(std::numbers::pi / 4), 1e-15);
  EXPECT_EQ(length_score(0.2, 0.1, p), 0.0);
  EXPECT_EQ(length_score(0.35, 0.1, p), 0.0);
  EXPECT_EQ(length_score(0.0, 0.1, p), 0.0);
  EXPECT_NEAR(length_score(0.05, 0.05, p), 0.5, 1e-15);
}

TEST(LengthScore, InvalidInputs) {
  const LengthParams p{0.1, 0.1};
  EXPECT_THROW(length_score(-0.1, 0.1, p), Error);
  EXPECT_THROW(length_score(std::nan(""), 0.1, p), Error);
  EXPECT_THROW(length_score(INFINITY, 0.1, p), Error);
  EXPECT_THROW(length_score(0.1, 0.1, LengthParams{0.0, 0.1}), Error);
}

TEST(LengthScore, DefaultTargets) {
  EXPECT_EQ(default_length_params(StepKind::Summary).target_word_ratio, 0.10);
  EXPECT_EQ(default_length_params(StepKind::Outline).target_sentence_ratio, 0.05);
  EXPECT_EQ(default_length_params(StepKind::KeyInformation).target_word_ratio, 0.08);
}

TEST(LengthScore, PropertiesOnRandomRatios) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(0.0, 0.5), t(0.01, 0.3);
  for (int i = 0; i < 20000; ++i) {
    const LengthParams p{t(g), t(g)};
    const double rw = u(g), rs = u(g);
    const double v = length_score(rw, rs, p);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_NEAR(v, oracle::shape(rw, p.target_word_ratio) * oracle::shape(rs, p.target_sentence_ratio), 1e-12);
    // symmetric about the target inside [0, 2r*]
    const double d = u(g) * p.target_word_ratio;
    ASSERT_NEAR(length_shape(p.target_word_ratio - d, p.target_word_ratio),
                length_shape(p.target_word_ratio + d, p.target_word_ratio), 1e-12);
  }
}

TEST(Entailment, WorkedExamples) {
  LexicalEntailmentScorer lex;
  const auto same = entailment_score("The cat sat on the mat.", "The cat sat on the mat.", lex);
  EXPECT_EQ(same.forward, 1.0);
  EXPECT_EQ(same.backward, 1.0);
  EXPECT_EQ(same.sum, 2.0);
  const auto disjoint = entailment_score("alpha beta", "gamma delta", lex);
  EXPECT_EQ(disjoint.sum, 0.0);
  const auto half = entailment_score("the cat", "the cat the cat", lex);
  EXPECT_EQ(half.forward, 0.5);
  EXPECT_EQ(half.backward, 1.0);
}

TEST(Entailment, ScorerFailureNamesDirectionAndDocument) {
  struct Broken final : EntailmentScorer {
    double score(std::string_view, std::string_view) override { return 1.5; }
  } broken;
  try {
    entailment_score("a", "b", broken, "doc-9");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Scoring);
    EXPECT_NE(std::string(e.what()).find("forward"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("doc-9"), std::string::npos);
  }
  LexicalEntailmentScorer lex;
  EXPECT_THROW(entailment_score("", "b", lex), Error);
}

TEST(Entailment, JudgeReplyParsing) {
  EXPECT_EQ(LlmEntailmentScorer::parse_probability("0.75"), 0.75);
  EXPECT_EQ(LlmEntailmentScorer::parse_probability("Probability: .5"), 0.5);
  EXPECT_EQ(LlmEntailmentScorer::parse_probability("1"), 1.0);
  EXPECT_FALSE(LlmEntailmentScorer::parse_probability("2.5"));
  EXPECT_FALSE(LlmEntailmentScorer::parse_probability("yes"));
}

TEST(Selection, ArgmaxLowestIndexOnTies) {
  EXPECT_EQ(argmax_quality({with_quality(0.2), with_quality(0.7), with_quality(0.7)}), 1u);
  EXPECT_EQ(argmax_quality({with_quality(0.0), with_quality(0.0)}), 0u);
  EXPECT_EQ(argmax_quality({with_quality(0.1), with_quality(0.3), with_quality(0.2)}), 1u);
}

TEST(Selection, EmptyCandidatesScoreZeroAndAllEmptyFails) {
  std::mt19937_64 g(1);
  const auto doc = source(fixture::article_body(g, 300));
  LexicalEntailmentScorer lex;
  const auto params = default_length_params(StepKind::Summary);
  CandidateSet set{doc.id, StepKind::Summary, {"", "  ", std::string(text::split_sentences(doc.body)[2])}};
  const auto step = select_best(set, doc, params, lex);
  EXPECT_EQ(step.chosen_index, 2u);
  EXPECT_EQ(step.all_scores[0].quality, 0.0);
  EXPECT_EQ(step.all_scores.size(), 3u);
  CandidateSet empty{doc.id, StepKind::Summary, {"", ""}};
  try {
    select_best(empty, doc, params, lex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Selection);
  }
}

TEST(Selection, MatchesExhaustiveRescoring) {
  std::mt19937_64 g(8);
  LexicalEntailmentScorer lex;
  for (int i = 0; i < 60; ++i) {
    const auto doc = fixture::document(i, 300);
    const auto sents = text::split_sentences(doc.body);
    std::vector<std::string> cands;
    for (int k = 0; k < 4; ++k) {
      std::string c;
      const auto stride = 2 + g() % 15;
      for (std::size_t j = g() % 3; j < sents.size(); j += stride) c += std::string(sents[j]) + " ";
      cands.push_back(c);
    }
    if (i % 3 == 0) cands.push_back(cands[g() % cands.size()]);  // exact tie
    const auto kind = kAllStepKinds[i % 3];
    const auto p = default_length_params(kind);
    const auto step = select_best({doc.id, kind, cands}, doc, p, lex);
    ASSERT_EQ(step.chosen_index, oracle::best_index(cands, doc.body, p.target_word_ratio, p.target_sentence_ratio));
    EXPECT_EQ(step.text, cands[step.chosen_index]);
    // selected quality is maximal
    for (const auto& s : step.all_scores) EXPECT_LE(s.quality, step.score.quality);
  }
}

TEST(Selection, RecordsRoundTrip) {
  const auto doc = fixture::document(3, 300);
  LexicalEntailmentScorer lex;
  const auto sents = text::split_sentences(doc.body);
  const CandidateSet set{doc.id, StepKind::Outline, {std::string(sents[1]), std::string(sents[4])}};
  const auto step = select_best(set, doc, default_length_params(StepKind::Outline), lex);
  fixture::TempDir dir("steps");
  {
    std::ofstream out(dir / "steps.jsonl");
    out << to_record(step).dump() << '\n';
  }
  const auto store = read_steps((dir / "steps.jsonl").string());
  const auto& back = store.at(doc.id).at(StepKind::Outline);
  EXPECT_EQ(back.text, step.text);
  EXPECT_EQ(back.chosen_index, step.chosen_index);
  EXPECT_EQ(back.score.quality, step.score.quality);
}
