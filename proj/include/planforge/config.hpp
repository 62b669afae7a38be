#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "planforge/corpus.hpp"
#include "planforge/error.hpp"
#include "planforge/llmclient.hpp"
#include "planforge/mixture.hpp"
#include "planforge/scoring.hpp"
#include "planforge/synthesis.hpp"
#include "planforge/sxs.hpp"

namespace planforge {

struct CorpusConfig {
  std::vector<std::string> paths;
  std::vector<std::string> eval_paths;  // optional separate evaluation corpus
  std::size_t min_words = 1000;
  bool require_sections = true;
  SplitSizes sizes;
  std::uint64_t seed = 0;
  SectionRules section_rules;
};

struct SynthesisConfig {
  std::size_t k = 4;
  SamplerParams sampler;
  std::size_t max_input_tokens = 32000;
  std::string exemplars;  // optional exemplar file
  std::vector<std::string> splits = {"train", "validation"};
  std::size_t concurrency = 1;
};

struct ScoringConfig {
  std::string scorer = "lexical";  // lexical | llm
  std::string judge_model = "default";
  bool remove_stopwords = false;
  LengthTargets targets = default_length_targets();
};

struct MixtureConfig {
  std::vector<TaskForm> tasks = {TaskForm::Direct, TaskForm::PlanThenWrite, TaskForm::PlanAsInput};
  std::map<TaskForm, double> weights = {
      {TaskForm::Direct, 1.0}, {TaskForm::PlanThenWrite, 1.0}, {TaskForm::PlanAsInput, 1.0}};
  std::size_t input_limit = 0;   // 0: family default
  std::size_t output_limit = 0;  // 0: family default
  std::uint64_t seed = 0;
  std::vector<StepKind> plan_order = {StepKind::Summary, StepKind::Outline, StepKind::KeyInformation};
  std::vector<std::string> splits = {"train", "validation"};
};

struct EvalConfig {
  std::string outputs;       // {doc_id, output} records for ROUGE
  std::string test_outputs;  // {doc_id, output} records, test system
  std::string base_outputs;  // {doc_id, output} records, baseline
  std::string human_verdicts;  // optional item_id,dimension,choice CSV
  std::string rater_model = "default";
  std::uint64_t seed = 0;
  std::vector<std::string> rubric = sxs::default_rubric();
  bool stem = false;
  bool remove_stopwords = false;
};

struct ClientConfig {
  std::string endpoint;
  std::string cache_dir = "cache";
  std::string mode = "live";
  double requests_per_second = 0.0;
  double burst = 1.0;
  int max_attempts = 5;
};

/// Whole-pipeline configuration. Relative paths resolve against `base_dir`
/// (the directory holding the config file).
struct PipelineConfig {
  std::filesystem::path base_dir = ".";
  std::string work_dir = "work";
  DatasetFamily family = DatasetFamily::News;
  CorpusConfig corpus;
  SynthesisConfig synthesis;
  ScoringConfig scoring;
  MixtureConfig mixture;
  EvalConfig eval;
  ClientConfig client;

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
  std::filesystem::path work() const { return resolve(work_dir); }

  MixtureSpec mixture_spec() const {
    auto spec = MixtureSpec::for_family(family);
    spec.weights = mixture.weights;
    if (mixture.input_limit) spec.input_limit = mixture.input_limit;
    if (mixture.output_limit) spec.output_limit = mixture.output_limit;
    spec.interleave_seed = mixture.seed;
    spec.plan_order = mixture.plan_order;
    return spec;
  }
};

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& into) {
  if (const auto it = j.find(key); it != j.end() && !it->is_null()) into = it->get<T>();
}

inline nlohmann::json kinds_json(const std::vector<StepKind>& kinds) {
  auto a = nlohmann::json::array();
  for (const auto k : kinds) a.push_back(to_string(k));
  return a;
}

inline std::vector<StepKind> kinds_from(const nlohmann::json& j) {
  std::vector<StepKind> out;
  for (const auto& v : j) out.push_back(parse_step_kind(v.get<std::string>()));
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json targets = nlohmann::json::object();
  for (const auto& [k, p] : c.scoring.targets) {
    targets[to_string(k)] = {{"word", p.target_word_ratio}, {"sentence", p.target_sentence_ratio}};
  }
  auto tasks = nlohmann::json::array();
  for (const auto t : c.mixture.tasks) tasks.push_back(to_string(t));
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [t, w] : c.mixture.weights) weights[to_string(t)] = w;
  return {
      {"work_dir", c.work_dir},
      {"family", to_string(c.family)},
      {"corpus",
       {{"paths", c.corpus.paths},
        {"eval_paths", c.corpus.eval_paths},
        {"min_words", c.corpus.min_words},
        {"require_sections", c.corpus.require_sections},
        {"sizes", {c.corpus.sizes.train, c.corpus.sizes.validation, c.corpus.sizes.evaluation}},
        {"seed", c.corpus.seed},
        {"heading_pattern", c.corpus.section_rules.heading_pattern},
        {"title_case_headings", c.corpus.section_rules.title_case_lines}}},
      {"synthesis",
       {{"k", c.synthesis.k},
        {"model_id", c.synthesis.sampler.model_id},
        {"temperature", c.synthesis.sampler.temperature},
        {"max_output_tokens", c.synthesis.sampler.max_output_tokens},
        {"seed", c.synthesis.sampler.seed},
        {"max_input_tokens", c.synthesis.max_input_tokens},
        {"exemplars", c.synthesis.exemplars},
        {"splits", c.synthesis.splits},
        {"concurrency", c.synthesis.concurrency}}},
      {"scoring",
       {{"scorer", c.scoring.scorer},
        {"judge_model", c.scoring.judge_model},
        {"remove_stopwords", c.scoring.remove_stopwords},
        {"targets", targets}}},
      {"mixture",
       {{"tasks", tasks},
        {"weights", weights},
        {"input_limit", c.mixture.input_limit},
        {"output_limit", c.mixture.output_limit},
        {"seed", c.mixture.seed},
        {"plan_order", detail::kinds_json(c.mixture.plan_order)},
        {"splits", c.mixture.splits}}},
      {"eval",
       {{"outputs", c.eval.outputs},
        {"test_outputs", c.eval.test_outputs},
        {"base_outputs", c.eval.base_outputs},
        {"human_verdicts", c.eval.human_verdicts},
        {"rater_model", c.eval.rater_model},
        {"seed", c.eval.seed},
        {"rubric", c.eval.rubric},
        {"stem", c.eval.stem},
        {"remove_stopwords", c.eval.remove_stopwords}}},
      {"client",
       {{"endpoint", c.client.endpoint},
        {"cache_dir", c.client.cache_dir},
        {"mode", c.client.mode},
        {"requests_per_second", c.client.requests_per_second},
        {"burst", c.client.burst},
        {"max_attempts", c.client.max_attempts}}},
  };
}

/// Missing keys keep their defaults.
inline PipelineConfig config_from_json(const nlohmann::json& j, std::filesystem::path base_dir = ".") {
  PipelineConfig c;
  c.base_dir = std::move(base_dir);
  try {
    detail::read_opt(j, "work_dir", c.work_dir);
    if (j.contains("family")) c.family = parse_dataset_family(j.at("family").get<std::string>());
    if (const auto it = j.find("corpus"); it != j.end()) {
      const auto& s = *it;
      detail::read_opt(s, "paths", c.corpus.paths);
      detail::read_opt(s, "eval_paths", c.corpus.eval_paths);
      detail::read_opt(s, "min_words", c.corpus.min_words);
      detail::read_opt(s, "require_sections", c.corpus.require_sections);
      if (s.contains("sizes")) {
        const auto v = s.at("sizes").get<std::vector<std::size_t>>();
        if (v.size() != 3) throw Error(ErrorKind::Validation, "corpus.sizes needs three entries");
        c.corpus.sizes = {v[0], v[1], v[2]};
      }
      detail::read_opt(s, "seed", c.corpus.seed);
      detail::read_opt(s, "heading_pattern", c.corpus.section_rules.heading_pattern);
      detail::read_opt(s, "title_case_headings", c.corpus.section_rules.title_case_lines);
    }
    if (const auto it = j.find("synthesis"); it != j.end()) {
      const auto& s = *it;
      detail::read_opt(s, "k", c.synthesis.k);
      detail::read_opt(s, "model_id", c.synthesis.sampler.model_id);
      detail::read_opt(s, "temperature", c.synthesis.sampler.temperature);
      detail::read_opt(s, "max_output_tokens", c.synthesis.sampler.max_output_tokens);
      detail::read_opt(s, "seed", c.synthesis.sampler.seed);
      detail::read_opt(s, "max_input_tokens", c.synthesis.max_input_tokens);
      detail::read_opt(s, "exemplars", c.synthesis.exemplars);
      detail::read_opt(s, "splits", c.synthesis.splits);
      detail::read_opt(s, "concurrency", c.synthesis.concurrency);
    }
    if (const auto it = j.find("scoring"); it != j.end()) {
      const auto& s = *it;
      detail::read_opt(s, "scorer", c.scoring.scorer);
      detail::read_opt(s, "judge_model", c.scoring.judge_model);
      detail::read_opt(s, "remove_stopwords", c.scoring.remove_stopwords);
      if (const auto t = s.find("targets"); t != s.end()) {
        for (const auto& [name, v] : t->items()) {
          auto& p = c.scoring.targets[parse_step_kind(name)];
          detail::read_opt(v, "word", p.target_word_ratio);
          detail::read_opt(v, "sentence", p.target_sentence_ratio);
        }
      }
    }
    if (const auto it = j.find("mixture"); it != j.end()) {
      const auto& s = *it;
      if (s.contains("tasks")) {
        c.mixture.tasks.clear();
        for (const auto& t : s.at("tasks")) c.mixture.tasks.push_back(parse_task_form(t.get<std::string>()));
      }
      if (s.contains("weights")) {
        c.mixture.weights.clear();
        for (const auto& [name, w] : s.at("weights").items()) c.mixture.weights[parse_task_form(name)] = w.get<double>();
      }
      detail::read_opt(s, "input_limit", c.mixture.input_limit);
      detail::read_opt(s, "output_limit", c.mixture.output_limit);
      detail::read_opt(s, "seed", c.mixture.seed);
      if (s.contains("plan_order")) c.mixture.plan_order = detail::kinds_from(s.at("plan_order"));
      detail::read_opt(s, "splits", c.mixture.splits);
    }
    if (const auto it = j.find("eval"); it != j.end()) {
      const auto& s = *it;
      detail::read_opt(s, "outputs", c.eval.outputs);
      detail::read_opt(s, "test_outputs", c.eval.test_outputs);
      detail::read_opt(s, "base_outputs", c.eval.base_outputs);
      detail::read_opt(s, "human_verdicts", c.eval.human_verdicts);
      detail::read_opt(s, "rater_model", c.eval.rater_model);
      detail::read_opt(s, "seed", c.eval.seed);
      detail::read_opt(s, "rubric", c.eval.rubric);
      detail::read_opt(s, "stem", c.eval.stem);
      detail::read_opt(s, "remove_stopwords", c.eval.remove_stopwords);
    }
    if (const auto it = j.find("client"); it != j.end()) {
      const auto& s = *it;
      detail::read_opt(s, "endpoint", c.client.endpoint);
      detail::read_opt(s, "cache_dir", c.client.cache_dir);
      detail::read_opt(s, "mode", c.client.mode);
      detail::read_opt(s, "requests_per_second", c.client.requests_per_second);
      detail::read_opt(s, "burst", c.client.burst);
      detail::read_opt(s, "max_attempts", c.client.max_attempts);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("bad config: ") + e.what());
  }
  if (c.synthesis.k < 1) throw Error(ErrorKind::Validation, "synthesis.k must be at least 1");
  parse_client_mode(c.client.mode);
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace planforge
