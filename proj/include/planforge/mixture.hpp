#pragma once

// Training-task construction (x→y, x→z⊕y, x⊕z→y), seeded interleaving into
// a mixture, and article extraction from plan-then-write outputs.

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planforge/corpus.hpp"
#include "planforge/digest.hpp"
#include "planforge/error.hpp"
#include "planforge/random.hpp"
#include "planforge/scoring.hpp"
#include "planforge/synthesis.hpp"
#include "planforge/tokens.hpp"

namespace planforge {

enum class TaskForm { Direct, PlanThenWrite, PlanAsInput };

inline constexpr std::array<TaskForm, 3> kAllTaskForms = {TaskForm::Direct, TaskForm::PlanThenWrite,
                                                          TaskForm::PlanAsInput};

inline const char* to_string(TaskForm t) {
  switch (t) {
    case TaskForm::Direct: return "direct";
    case TaskForm::PlanThenWrite: return "plan_out";
    case TaskForm::PlanAsInput: return "plan_in";
  }
  return "direct";
}

inline TaskForm parse_task_form(std::string_view s) {
  for (const auto t : kAllTaskForms) {
    if (s == to_string(t)) return t;
  }
  throw Error(ErrorKind::Validation, "unknown task '" + std::string(s) + "' (expected direct, plan_out, plan_in)");
}

enum class DatasetFamily { News, Encyclopedia };

inline const char* to_string(DatasetFamily f) { return f == DatasetFamily::News ? "news" : "encyclopedia"; }

inline DatasetFamily parse_dataset_family(std::string_view s) {
  if (s == "news") return DatasetFamily::News;
  if (s == "encyclopedia") return DatasetFamily::Encyclopedia;
  throw Error(ErrorKind::Validation, "unknown dataset family '" + std::string(s) + "'");
}

/// Model input = instruction + "\n\n" + input_prefix + payload.
struct PromptTemplate {
  std::string_view name;
  std::string_view instruction;
  std::string_view input_prefix;
  std::string_view placeholder;

  std::string render(std::string_view payload) const {
    std::string out(instruction);
    out += "\n\n";
    out += input_prefix;
    out += payload;
    return out;
  }
};

inline constexpr PromptTemplate kNewsDirect{
    "news_direct", "Given the body of the academic paper, generate a whole news article.",
    "Academic paper body: ", "{input_paper}"};

inline constexpr PromptTemplate kNewsPlanThenWrite{
    "news_plan_then_write",
    "Given the academic paper's full text, first generate a news article's summary, the high-level outline and "
    "detailed key information snippets, then leverage those information to generate a complete news article with "
    "title and body.",
    "Academic paper body: ", "{input_paper}"};

inline constexpr PromptTemplate kEncyclopediaDirect{
    "encyclopedia_direct", "Generate a comprehensive Wikipedia page about the specified topic.", "Topic: ",
    "{input_topic}"};

inline constexpr PromptTemplate kEncyclopediaPlanThenWrite{
    "encyclopedia_plan_then_write",
    "Given a specific topic, you are asked to write a comprehensive Wikipedia page about this topic. Let's write "
    "step by step. First generate a summary, a high-level outline and a list of detailed key information snippets. "
    "Then, follow the summary, high-level outline and detailed key information snippets, generate a Wikipedia page "
    "about this topic.",
    "Topic: ", "{input_topic}"};

inline constexpr std::array<const PromptTemplate*, 4> kRegisteredTemplates = {
    &kNewsDirect, &kNewsPlanThenWrite, &kEncyclopediaDirect, &kEncyclopediaPlanThenWrite};

/// Plan-as-input reuses the direct instruction; the plan rides in the input.
inline const PromptTemplate& template_for(TaskForm task, DatasetFamily family) {
  const bool plan = task == TaskForm::PlanThenWrite;
  if (family == DatasetFamily::News) return plan ? kNewsPlanThenWrite : kNewsDirect;
  return plan ? kEncyclopediaPlanThenWrite : kEncyclopediaDirect;
}

inline bool is_registered_instruction(std::string_view instruction) {
  for (const auto* t : kRegisteredTemplates) {
    if (t->instruction == instruction) return true;
  }
  return false;
}

struct TrainingExample {
  TaskForm task = TaskForm::Direct;
  std::string instruction;
  std::string input_text;
  std::string target_text;
  std::string doc_id;
  bool truncated = false;

  std::string prompt() const { return instruction + "\n\n" + input_text; }
  bool operator==(const TrainingExample&) const = default;
};

struct MixtureSpec {
  DatasetFamily family = DatasetFamily::News;
  std::map<TaskForm, double> weights = {
      {TaskForm::Direct, 1.0}, {TaskForm::PlanThenWrite, 1.0}, {TaskForm::PlanAsInput, 1.0}};
  std::size_t input_limit = 16000;
  std::size_t output_limit = 4000;
  std::uint64_t interleave_seed = 0;
  std::vector<StepKind> plan_order = {StepKind::Summary, StepKind::Outline, StepKind::KeyInformation};
  TokenEstimator estimate = estimate_tokens;

  static MixtureSpec for_family(DatasetFamily family) {
    MixtureSpec s;
    s.family = family;
    if (family == DatasetFamily::Encyclopedia) {
      s.input_limit = 1000;
      s.output_limit = 6000;
    }
    return s;
  }

  void validate() const {
    bool positive = false;
    for (const auto& [t, w] : weights) {
      if (!(w >= 0.0)) throw Error(ErrorKind::Validation, std::string("negative weight for ") + to_string(t));
      positive = positive || w > 0.0;
    }
    if (!positive) throw Error(ErrorKind::Validation, "mixture needs at least one positive weight");
    if (input_limit == 0 || output_limit == 0) throw Error(ErrorKind::Validation, "token limits must be positive");
  }

  double weight(TaskForm t) const {
    const auto it = weights.find(t);
    return it == weights.end() ? 0.0 : it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json w = nlohmann::json::object();
    for (const auto& [t, v] : weights) w[to_string(t)] = v;
    nlohmann::json order = nlohmann::json::array();
    for (const auto k : plan_order) order.push_back(to_string(k));
    return {{"family", to_string(family)}, {"weights", w},         {"input_limit", input_limit},
            {"output_limit", output_limit}, {"interleave_seed", interleave_seed}, {"plan_order", order}};
  }

  std::string checksum() const { return sha256_hex(to_json().dump()); }
};

inline std::string_view plan_header(StepKind kind) {
  switch (kind) {
    case StepKind::Summary: return "## Summary";
    case StepKind::Outline: return "## Outline";
    case StepKind::KeyInformation: return "## Key Information";
  }
  return "";
}

inline constexpr std::string_view kArticleHeader = "## Article";

/// Plan block: one "## <Kind>" section per requested kind, in order,
/// separated by blank lines.
inline std::string serialize_plan(const StepMap& steps, const std::vector<StepKind>& order) {
  std::string out;
  for (const auto kind : order) {
    const auto it = steps.find(kind);
    if (it == steps.end()) {
      throw Error(ErrorKind::Validation, std::string("plan is missing the ") + to_string(kind) + " step");
    }
    if (!out.empty()) out += "\n\n";
    out += plan_header(kind);
    out += '\n';
    out += text::trim(it->second.text);
  }
  return out;
}

namespace detail {

// Offsets of lines that are exactly `header`.
inline std::vector<std::size_t> header_lines(std::string_view s, std::string_view header) {
  std::vector<std::size_t> out;
  for (auto pos = s.find(header); pos != std::string_view::npos; pos = s.find(header, pos + 1)) {
    const bool line_start = pos == 0 || s[pos - 1] == '\n';
    const auto after = pos + header.size();
    const bool line_end = after == s.size() || s[after] == '\n' || s[after] == '\r';
    if (line_start && line_end) out.push_back(pos);
  }
  return out;
}

}  // namespace detail

/// Recovers the article from a model output: everything after the last
/// "## Article" line, or the whole output when there is none.
inline std::string extract_article(std::string_view output) {
  const auto headers = detail::header_lines(output, kArticleHeader);
  std::string_view body = output;
  if (!headers.empty()) body = output.substr(headers.back() + kArticleHeader.size());
  const auto trimmed = text::trim(body);
  if (trimmed.empty()) throw Error(ErrorKind::Extraction, "no article text in model output");
  return std::string(trimmed);
}

struct BuildResult {
  std::optional<TrainingExample> example;
  std::string drop_reason;
};

inline std::string_view payload_for(const Document& doc, DatasetFamily family) {
  if (family == DatasetFamily::News) return doc.context;
  if (doc.title.empty()) {
    throw Error(ErrorKind::Validation, "encyclopedia document '" + doc.id + "' has no title to use as topic");
  }
  return doc.title;
}

/// One training example. Inputs over budget are cut at a sentence boundary
/// and flagged; targets over budget drop the example.
inline BuildResult build_example(const Document& doc, const StepMap* steps, TaskForm task, const MixtureSpec& spec) {
  const auto& tmpl = template_for(task, spec.family);
  std::string plan;
  if (task != TaskForm::Direct) {
    if (steps == nullptr) {
      throw Error(ErrorKind::Validation, std::string("task ") + to_string(task) + " needs steps for '" + doc.id + "'");
    }
    plan = serialize_plan(*steps, spec.plan_order);
  }

  TrainingExample ex;
  ex.task = task;
  ex.doc_id = doc.id;
  ex.instruction = std::string(tmpl.instruction);
  ex.target_text = task == TaskForm::PlanThenWrite ? plan + "\n\n" + std::string(kArticleHeader) + "\n" + doc.body
                                                   : doc.body;
  if (text::trim(ex.target_text).empty()) return {std::nullopt, "empty_target"};
  if (spec.estimate(ex.target_text) > budget_for(spec.output_limit)) return {std::nullopt, "target_over_limit"};

  const std::string suffix = task == TaskForm::PlanAsInput ? "\n\n" + plan : std::string();
  const auto input_for = [&](std::string_view payload) {
    std::string in(tmpl.input_prefix);
    in += payload;
    in += suffix;
    return in;
  };
  const auto input_budget = budget_for(spec.input_limit);
  const auto fits = [&](std::string_view payload) {
    return spec.estimate(ex.instruction + "\n\n" + input_for(payload)) <= input_budget;
  };
  const auto payload = payload_for(doc, spec.family);
  const auto kept = fit_prefix_at_sentence(payload, fits);
  if (kept.empty()) return {std::nullopt, "input_over_limit"};
  ex.truncated = kept.size() != payload.size();
  ex.input_text = input_for(kept);
  return {std::move(ex), {}};
}

struct MixtureReport {
  std::map<TaskForm, std::size_t> attempted;
  std::map<TaskForm, std::size_t> emitted;
  std::map<std::string, std::size_t> dropped;
  std::size_t truncated = 0;

  std::size_t total_emitted() const {
    std::size_t n = 0;
    for (const auto& [t, c] : emitted) n += c;
    return n;
  }
  std::size_t total_dropped() const {
    std::size_t n = 0;
    for (const auto& [r, c] : dropped) n += c;
    return n;
  }
};

struct Mixture {
  std::vector<TrainingExample> examples;
  MixtureReport report;
};

/// Builds every requested task for every document, then merges the per-task
/// streams by seeded weighted choice (probability ∝ weight among streams
/// that still have examples). Tasks with weight 0 are skipped.
inline Mixture assemble_mixture(const std::vector<Document>& docs, const StepStore& steps, const MixtureSpec& spec,
                                const std::set<TaskForm>& tasks) {
  spec.validate();
  Mixture out;
  std::vector<std::vector<TrainingExample>> streams;
  std::vector<double> weights;
  for (const auto task : tasks) {
    const double w = spec.weight(task);
    if (w <= 0.0) continue;
    std::vector<TrainingExample> stream;
    for (const auto& doc : docs) {
      ++out.report.attempted[task];
      const StepMap* doc_steps = nullptr;
      if (const auto it = steps.find(doc.id); it != steps.end()) doc_steps = &it->second;
      bool have_steps = task == TaskForm::Direct || doc_steps != nullptr;
      for (const auto kind : spec.plan_order) {
        if (have_steps && task != TaskForm::Direct) have_steps = doc_steps->count(kind) != 0;
      }
      if (!have_steps) {
        ++out.report.dropped["missing_steps"];
        continue;
      }
      auto r = build_example(doc, doc_steps, task, spec);
      if (!r.example) {
        ++out.report.dropped[r.drop_reason];
        continue;
      }
      if (r.example->truncated) ++out.report.truncated;
      ++out.report.emitted[task];
      stream.push_back(std::move(*r.example));
    }
    streams.push_back(std::move(stream));
    weights.push_back(w);
  }

  std::vector<std::size_t> next(streams.size(), 0);
  Rng rng(spec.interleave_seed);
  while (true) {
    double total = 0.0;
    for (std::size_t i = 0; i < streams.size(); ++i) {
      if (next[i] < streams[i].size()) total += weights[i];
    }
    if (total <= 0.0) break;
    double pick = rng.uniform() * total;
    std::size_t chosen = streams.size();
    for (std::size_t i = 0; i < streams.size(); ++i) {
      if (next[i] >= streams[i].size()) continue;
      chosen = i;
      if (pick < weights[i]) break;
      pick -= weights[i];
    }
    out.examples.push_back(std::move(streams[chosen][next[chosen]++]));
  }
  if (out.examples.empty()) throw Error(ErrorKind::Assembly, "mixture has zero eligible examples");
  return out;
}

// Mixture files: one record per line,
// {task, instruction, input, target, doc_id, truncated}.

inline nlohmann::json to_record(const TrainingExample& ex) {
  return {{"task", to_string(ex.task)}, {"instruction", ex.instruction}, {"input", ex.input_text},
          {"target", ex.target_text},   {"doc_id", ex.doc_id},           {"truncated", ex.truncated}};
}

inline TrainingExample example_from_record(const nlohmann::json& r) {
  TrainingExample ex;
  ex.task = parse_task_form(r.at("task").get<std::string>());
  ex.instruction = r.at("instruction").get<std::string>();
  ex.input_text = r.at("input").get<std::string>();
  ex.target_text = r.at("target").get<std::string>();
  ex.doc_id = r.at("doc_id").get<std::string>();
  ex.truncated = r.at("truncated").get<bool>();
  return ex;
}

/// Writes the mixture and returns the SHA-256 of the written bytes.
inline std::string write_mixture(const std::string& path, const std::vector<TrainingExample>& examples) {
  Sha256 digest;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path);
  for (const auto& ex : examples) {
    const auto line = to_record(ex).dump() + "\n";
    digest.update(line);
    out << line;
  }
  return digest.hex();
}

inline std::vector<TrainingExample> read_mixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open mixture file " + path);
  std::vector<TrainingExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(example_from_record(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, path + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json manifest_json(const MixtureReport& report, const MixtureSpec& spec,
                                    const std::string& file_checksum) {
  nlohmann::json per_task = nlohmann::json::object(), attempted = nlohmann::json::object();
  for (const auto& [t, c] : report.emitted) per_task[to_string(t)] = c;
  for (const auto& [t, c] : report.attempted) attempted[to_string(t)] = c;
  nlohmann::json dropped = nlohmann::json::object();
  for (const auto& [r, c] : report.dropped) dropped[r] = c;
  return {{"per_task", per_task},
          {"attempted", attempted},
          {"dropped", dropped},
          {"truncated", report.truncated},
          {"examples", report.total_emitted()},
          {"spec", spec.to_json()},
          {"spec_checksum", spec.checksum()},
          {"file_checksum", file_checksum}};
}

/// Read-back audit: ids of examples whose instruction is unregistered or
/// whose re-estimated lengths exceed the raw limits.
inline std::vector<std::string> audit_examples(const std::vector<TrainingExample>& examples, const MixtureSpec& spec) {
  std::vector<std::string> problems;
  for (const auto& ex : examples) {
    if (!is_registered_instruction(ex.instruction)) problems.push_back(ex.doc_id + ": unregistered instruction");
    if (spec.estimate(ex.prompt()) > spec.input_limit) problems.push_back(ex.doc_id + ": input over limit");
    if (spec.estimate(ex.target_text) > spec.output_limit) problems.push_back(ex.doc_id + ": target over limit");
    if (ex.target_text.empty()) problems.push_back(ex.doc_id + ": empty target");
  }
  return problems;
}

}  // namespace planforge
