#pragma once

// Candidate scoring and selection: length adherence via a clamped sine,
// bidirectional entailment, their product as quality, argmax selection.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "planforge/corpus.hpp"
#include "planforge/error.hpp"
#include "planforge/llmclient.hpp"
#include "planforge/rouge.hpp"
#include "planforge/synthesis.hpp"

namespace planforge {

struct CandidateScore {
  double word_ratio = 0.0;
  double sentence_ratio = 0.0;
  double length_score = 0.0;
  double entailment_forward = 0.0;
  double entailment_backward = 0.0;
  double entailment_score = 0.0;
  double quality = 0.0;

  bool operator==(const CandidateScore&) const = default;
};

struct IntermediateStep {
  std::string doc_id;
  StepKind kind = StepKind::Summary;
  std::string text;
  std::size_t chosen_index = 0;
  CandidateScore score;
  std::vector<CandidateScore> all_scores;
};

/// Target length ratios (candidate / source) at which the length score peaks.
struct LengthParams {
  double target_word_ratio = 0.10;
  double target_sentence_ratio = 0.10;
};

inline LengthParams default_length_params(StepKind kind) {
  switch (kind) {
    case StepKind::Summary: return {0.10, 0.10};
    case StepKind::Outline: return {0.05, 0.05};
    case StepKind::KeyInformation: return {0.08, 0.08};
  }
  return {};
}

using LengthTargets = std::map<StepKind, LengthParams>;

inline LengthTargets default_length_targets() {
  LengthTargets t;
  for (const auto k : kAllStepKinds) t[k] = default_length_params(k);
  return t;
}

struct Ratios {
  double word_ratio = 0.0;
  double sentence_ratio = 0.0;
};

inline Ratios ratios(std::string_view candidate, const Document& source) {
  if (source.word_count == 0 || source.sentence_count == 0) {
    throw Error(ErrorKind::Scoring, "degenerate source '" + source.id + "': zero words or sentences");
  }
  return {static_cast<double>(count_words(candidate)) / static_cast<double>(source.word_count),
          static_cast<double>(count_sentences(candidate)) / static_cast<double>(source.sentence_count)};
}

/// Single-ratio shape: sin(π/2 · u) with u = clamp(min(r/r*, 2 − r/r*), 0, 1).
/// Rises from 0 at r = 0 to 1 at r = r*, falls back to 0 at r = 2r*, and
/// stays 0 beyond.
inline double length_shape(double ratio, double target) {
  const double x = ratio / target;
  const double u = std::clamp(std::min(x, 2.0 - x), 0.0, 1.0);
  return std::sin(std::numbers::pi / 2.0 * u);
}

inline double length_score(double word_ratio, double sentence_ratio, const LengthParams& params) {
  if (!std::isfinite(word_ratio) || !std::isfinite(sentence_ratio)) {
    throw Error(ErrorKind::Validation, "length ratios must be finite");
  }
  if (word_ratio < 0.0 || sentence_ratio < 0.0) throw Error(ErrorKind::Validation, "length ratios must be >= 0");
  if (!(params.target_word_ratio > 0.0) || !(params.target_sentence_ratio > 0.0)) {
    throw Error(ErrorKind::Validation, "length targets must be positive");
  }
  return length_shape(word_ratio, params.target_word_ratio) *
         length_shape(sentence_ratio, params.target_sentence_ratio);
}

/// Degree in [0, 1] to which `premise` supports `hypothesis`.
class EntailmentScorer {
 public:
  virtual ~EntailmentScorer() = default;
  virtual double score(std::string_view premise, std::string_view hypothesis) = 0;
};

/// Clipped unigram containment: the share of hypothesis tokens (as a
/// multiset) that also occur in the premise.
class LexicalEntailmentScorer final : public EntailmentScorer {
 public:
  explicit LexicalEntailmentScorer(rouge::Options options = {}) : options_(options) {}

  double score(std::string_view premise, std::string_view hypothesis) override {
    const auto p = rouge::tokenize(premise, options_);
    const auto h = rouge::tokenize(hypothesis, options_);
    if (h.empty()) return 0.0;
    std::unordered_map<std::string_view, std::size_t> available;
    for (const auto& t : p) ++available[t];
    std::size_t hits = 0;
    for (const auto& t : h) {
      if (auto it = available.find(t); it != available.end() && it->second > 0) {
        --it->second;
        ++hits;
      }
    }
    return static_cast<double>(hits) / static_cast<double>(h.size());
  }

 private:
  rouge::Options options_;
};

/// Asks a judge model for a support probability and parses the first number
/// in its reply.
class LlmEntailmentScorer final : public EntailmentScorer {
 public:
  LlmEntailmentScorer(CompletionClient& client, std::string model_id, std::uint64_t seed = 0)
      : client_(client), model_id_(std::move(model_id)), seed_(seed) {}

  static std::string build_prompt(std::string_view premise, std::string_view hypothesis) {
    std::string p =
        "Decide whether the PREMISE supports every statement in the HYPOTHESIS. Reply with a single "
        "number between 0 and 1: the probability that the hypothesis is fully supported by the premise.\n\n";
    p += "[PREMISE]\n";
    p += premise;
    p += "\n[HYPOTHESIS]\n";
    p += hypothesis;
    p += "\n[PROBABILITY]\n";
    return p;
  }

  static std::optional<double> parse_probability(std::string_view reply) {
    for (std::size_t i = 0; i < reply.size(); ++i) {
      const char c = reply[i];
      if ((c >= '0' && c <= '9') || (c == '.' && i + 1 < reply.size() && reply[i + 1] >= '0' && reply[i + 1] <= '9')) {
        std::size_t j = i;
        while (j < reply.size() && ((reply[j] >= '0' && reply[j] <= '9') || reply[j] == '.')) ++j;
        try {
          const double v = std::stod(std::string(reply.substr(i, j - i)));
          if (v >= 0.0 && v <= 1.0) return v;
        } catch (const std::exception&) {
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  double score(std::string_view premise, std::string_view hypothesis) override {
    const auto reply = client_.complete({model_id_, build_prompt(premise, hypothesis), 16, 0.0, seed_});
    const auto p = parse_probability(reply.text);
    if (!p) throw Error(ErrorKind::Scoring, "judge reply is not a probability: '" + reply.text + "'");
    return *p;
  }

 private:
  CompletionClient& client_;
  std::string model_id_;
  std::uint64_t seed_;
};

struct EntailmentResult {
  double forward = 0.0;
  double backward = 0.0;
  double sum = 0.0;
};

/// forward: the article supports the candidate (no hallucination);
/// backward: the candidate covers the article.
inline EntailmentResult entailment_score(std::string_view article, std::string_view candidate, EntailmentScorer& scorer,
                                         std::string_view doc_id = {}) {
  if (text::trim(article).empty() || text::trim(candidate).empty()) {
    throw Error(ErrorKind::Validation, "entailment needs non-empty article and candidate");
  }
  const auto run = [&](const char* direction, std::string_view premise, std::string_view hypothesis) {
    double v = 0.0;
    try {
      v = scorer.score(premise, hypothesis);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Scoring, std::string(direction) + " entailment failed for '" + std::string(doc_id) +
                                          "': " + e.what());
    }
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::Scoring, std::string(direction) + " entailment for '" + std::string(doc_id) +
                                          "' outside [0,1]: " + std::to_string(v));
    }
    return v;
  };
  EntailmentResult r;
  r.forward = run("forward", article, candidate);
  r.backward = run("backward", candidate, article);
  r.sum = r.forward + r.backward;
  return r;
}

/// Full score for one candidate. Empty candidates score zero everywhere.
inline CandidateScore score_candidate(std::string_view candidate, const Document& source, const LengthParams& params,
                                      EntailmentScorer& scorer) {
  CandidateScore s;
  const auto rs = ratios(candidate, source);
  s.word_ratio = rs.word_ratio;
  s.sentence_ratio = rs.sentence_ratio;
  if (text::trim(candidate).empty()) return s;
  s.length_score = length_score(s.word_ratio, s.sentence_ratio, params);
  const auto ent = entailment_score(source.body, candidate, scorer, source.id);
  s.entailment_forward = ent.forward;
  s.entailment_backward = ent.backward;
  s.entailment_score = ent.sum;
  s.quality = s.length_score * s.entailment_score;
  return s;
}

/// Index of the highest quality; the lowest index wins exact ties.
inline std::size_t argmax_quality(const std::vector<CandidateScore>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].quality > scores[best].quality) best = i;
  }
  return best;
}

inline IntermediateStep select_best(const CandidateSet& set, const Document& source, const LengthParams& params,
                                    EntailmentScorer& scorer) {
  if (set.candidates.empty()) throw Error(ErrorKind::Selection, "no candidates for '" + set.doc_id + "'");
  bool any = false;
  for (const auto& c : set.candidates) any = any || !text::trim(c).empty();
  if (!any) {
    throw Error(ErrorKind::Selection, std::string("all ") + to_string(set.kind) + " candidates for '" + set.doc_id +
                                          "' are empty");
  }
  IntermediateStep step;
  step.doc_id = set.doc_id;
  step.kind = set.kind;
  step.all_scores.reserve(set.candidates.size());
  for (const auto& c : set.candidates) step.all_scores.push_back(score_candidate(c, source, params, scorer));
  step.chosen_index = argmax_quality(step.all_scores);
  step.score = step.all_scores[step.chosen_index];
  step.text = set.candidates[step.chosen_index];
  return step;
}

// Score tables: one record per candidate,
// {doc_id, kind, index, word_ratio, sentence_ratio, length_score, ent_fwd, ent_bwd, quality}.
inline void append_score_records(std::ostream& out, const IntermediateStep& step) {
  for (std::size_t i = 0; i < step.all_scores.size(); ++i) {
    const auto& s = step.all_scores[i];
    out << nlohmann::json{{"doc_id", step.doc_id},
                          {"kind", to_string(step.kind)},
                          {"index", i},
                          {"word_ratio", s.word_ratio},
                          {"sentence_ratio", s.sentence_ratio},
                          {"length_score", s.length_score},
                          {"ent_fwd", s.entailment_forward},
                          {"ent_bwd", s.entailment_backward},
                          {"quality", s.quality}}
               .dump()
        << '\n';
  }
}

inline nlohmann::json to_record(const IntermediateStep& step) {
  return nlohmann::json{{"doc_id", step.doc_id},
                        {"kind", to_string(step.kind)},
                        {"chosen_index", step.chosen_index},
                        {"text", step.text},
                        {"quality", step.score.quality}};
}

/// Steps for one document, keyed by kind.
using StepMap = std::map<StepKind, IntermediateStep>;
using StepStore = std::map<std::string, StepMap>;

inline StepStore read_steps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open steps file " + path);
  StepStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      const auto r = nlohmann::json::parse(line);
      IntermediateStep s;
      s.doc_id = r.at("doc_id").get<std::string>();
      s.kind = parse_step_kind(r.at("kind").get<std::string>());
      s.chosen_index = r.at("chosen_index").get<std::size_t>();
      s.text = r.at("text").get<std::string>();
      s.score.quality = r.at("quality").get<double>();
      store[s.doc_id][s.kind] = std::move(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, path + ": " + e.what());
    }
  }
  return store;
}

}  // namespace planforge
