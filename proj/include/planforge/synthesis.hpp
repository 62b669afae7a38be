#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "planforge/corpus.hpp"
#include "planforge/error.hpp"
#include "planforge/llmclient.hpp"
#include "planforge/random.hpp"
#include "planforge/tokens.hpp"

namespace planforge {

enum class StepKind { Summary, Outline, KeyInformation };

inline constexpr std::array<StepKind, 3> kAllStepKinds = {StepKind::Summary, StepKind::Outline,
                                                          StepKind::KeyInformation};

inline const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::Summary: return "summary";
    case StepKind::Outline: return "outline";
    case StepKind::KeyInformation: return "key_information";
  }
  return "summary";
}

inline StepKind parse_step_kind(std::string_view s) {
  for (const auto k : kAllStepKinds) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::Parse, "unknown step kind '" + std::string(s) + "'");
}

/// The K sampled candidates for one (document, kind); index k is the k-th
/// request in generation order.
struct CandidateSet {
  std::string doc_id;
  StepKind kind = StepKind::Summary;
  std::vector<std::string> candidates;

  std::size_t k() const { return candidates.size(); }
  bool operator==(const CandidateSet&) const = default;
};

struct Exemplar {
  std::string article;
  std::string step;
};

// ---------------------------------------------------------------------------
// Extraction prompt, template version "extraction-v1". Golden copies live in
// tests/golden/extraction_*.txt; change both together and bump the version.

inline constexpr std::string_view kExtractionTemplateVersion = "extraction-v1";

inline std::string_view extraction_instruction(StepKind kind) {
  switch (kind) {
    case StepKind::Summary:
      return "Read the article below and write a short summary of it. The summary should state the "
             "article's central message and its main points in a few sentences and leave out minor "
             "details. Reply with the summary only.";
    case StepKind::Outline:
      return "Read the article below and write its high-level outline. List the article's sections "
             "and the main point of each, in the order they appear, so the organization of the "
             "article is visible. Reply with the outline only.";
    case StepKind::KeyInformation:
      return "Read the article below and list its key information as short snippets: the facts, "
             "figures, findings and claims a reader must come away with. Reply with the list only.";
  }
  return "";
}

inline std::string_view step_sentinel(StepKind kind) {
  switch (kind) {
    case StepKind::Summary: return "[SUMMARY]";
    case StepKind::Outline: return "[OUTLINE]";
    case StepKind::KeyInformation: return "[KEY INFORMATION]";
  }
  return "";
}

inline constexpr std::string_view kArticleSentinel = "[ARTICLE]";

/// Every scaffold marker that may appear in an extraction prompt.
inline constexpr std::array<std::string_view, 6> kExtractionSentinels = {
    "[ARTICLE]", "[SUMMARY]", "[OUTLINE]", "[KEY INFORMATION]", "[EXAMPLE ", "[END]"};

struct ExtractionLimits {
  std::size_t max_input_tokens = 32000;
};

namespace detail {

inline std::string render_extraction(StepKind kind, const std::vector<Exemplar>& exemplars, std::string_view article) {
  std::string out(extraction_instruction(kind));
  out += "\n\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    const auto n = std::to_string(i + 1);
    out += "[EXAMPLE " + n + " ARTICLE]\n";
    out += exemplars[i].article;
    out += "\n[EXAMPLE " + n + " " + std::string(step_sentinel(kind)).substr(1) + "\n";
    out += exemplars[i].step;
    out += "\n[END]\n\n";
  }
  out += kArticleSentinel;
  out += "\n";
  out += article;
  out += "\n";
  out += step_sentinel(kind);
  out += "\n";
  return out;
}

}  // namespace detail

/// Few-shot extraction prompt: instruction, exemplars, then the article. An
/// article that would push the prompt past the input limit is cut back to
/// its last full sentence that fits.
inline std::string build_extraction_prompt(const Document& doc, StepKind kind, const std::vector<Exemplar>& exemplars,
                                           const ExtractionLimits& limits = {},
                                           const TokenEstimator& estimate = estimate_tokens) {
  if (text::trim(doc.body).empty()) throw Error(ErrorKind::Validation, "document '" + doc.id + "' has an empty body");
  for (const auto& ex : exemplars) {
    if (text::trim(ex.article).empty() || text::trim(ex.step).empty()) {
      throw Error(ErrorKind::Validation, std::string("malformed ") + to_string(kind) + " exemplar");
    }
  }
  const auto fits = [&](std::string_view article) {
    return estimate(detail::render_extraction(kind, exemplars, article)) <= limits.max_input_tokens;
  };
  const auto article = fit_prefix_at_sentence(doc.body, fits);
  if (article.empty()) {
    throw Error(ErrorKind::Validation, "extraction prompt for '" + doc.id + "' cannot fit the input limit");
  }
  return detail::render_extraction(kind, exemplars, article);
}

/// Strips any echoed scaffolding from a completion: a leading copy of the
/// step header and everything from the first sentinel onwards.
inline std::string clean_candidate(std::string_view completion, StepKind kind) {
  auto t = text::trim(completion);
  const auto own = step_sentinel(kind);
  if (t.substr(0, own.size()) == own) t = text::trim(t.substr(own.size()));
  std::size_t cut = t.size();
  for (const auto s : kExtractionSentinels) cut = std::min(cut, t.find(s));
  return std::string(text::trim(t.substr(0, cut)));
}

struct SamplerParams {
  std::string model_id = "default";
  double temperature = 0.8;
  int max_output_tokens = 2048;
  std::uint64_t seed = 0;
};

inline std::uint64_t candidate_seed(const SamplerParams& p, std::string_view doc_id, StepKind kind, std::size_t index) {
  std::string key(doc_id);
  key += '/';
  key += to_string(kind);
  key += '/';
  key += std::to_string(index);
  return fnv1a(key) ^ p.seed;
}

/// Samples k candidates, one request per candidate with its own seed. An
/// empty completion is retried once under a derived seed and then kept as an
/// empty candidate (it scores zero downstream).
inline CandidateSet generate_candidates(const Document& doc, StepKind kind, std::size_t k, const SamplerParams& params,
                                        CompletionClient& client, const std::vector<Exemplar>& exemplars = {},
                                        const ExtractionLimits& limits = {}) {
  if (k < 1) throw Error(ErrorKind::Validation, "k must be at least 1");
  const auto prompt = build_extraction_prompt(doc, kind, exemplars, limits);
  CandidateSet set{doc.id, kind, {}};
  set.candidates.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    CompletionRequest req{params.model_id, prompt, params.max_output_tokens, params.temperature,
                          candidate_seed(params, doc.id, kind, i)};
    try {
      auto text = clean_candidate(client.complete(req).text, kind);
      if (text.empty()) {
        req.seed ^= 0x9E3779B97F4A7C15ULL;
        text = clean_candidate(client.complete(req).text, kind);
      }
      set.candidates.push_back(std::move(text));
    } catch (const Error& e) {
      throw Error(e.kind(), "document '" + doc.id + "': " + e.what());
    }
  }
  return set;
}

// Candidate files: one record per line, {doc_id, kind, index, text}.

inline void append_candidate_records(std::ostream& out, const CandidateSet& set) {
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    out << nlohmann::json{{"doc_id", set.doc_id}, {"kind", to_string(set.kind)}, {"index", i},
                          {"text", set.candidates[i]}}
               .dump()
        << '\n';
  }
}

using CandidateKey = std::pair<std::string, StepKind>;

inline std::map<CandidateKey, CandidateSet> read_candidate_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open candidate file " + path);
  std::map<CandidateKey, CandidateSet> sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto r = nlohmann::json::parse(line);
      const auto doc_id = r.at("doc_id").get<std::string>();
      const auto kind = parse_step_kind(r.at("kind").get<std::string>());
      const auto index = r.at("index").get<std::size_t>();
      auto& set = sets[{doc_id, kind}];
      set.doc_id = doc_id;
      set.kind = kind;
      if (index != set.candidates.size()) throw Error(ErrorKind::Parse, "candidate index out of order");
      set.candidates.push_back(r.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return sets;
}

/// Exemplar files: one record per line, {kind, article, step}.
inline std::map<StepKind, std::vector<Exemplar>> read_exemplars(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open exemplar file " + path);
  std::map<StepKind, std::vector<Exemplar>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      const auto r = nlohmann::json::parse(line);
      out[parse_step_kind(r.at("kind").get<std::string>())].push_back(
          {r.at("article").get<std::string>(), r.at("step").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, path + ": " + e.what());
    }
  }
  return out;
}

}  // namespace planforge
