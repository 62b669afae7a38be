#pragma once

// Stage driver. Each stage reads its upstream outputs, writes its own files
// under <work_dir>/<stage>/, and records a manifest
// {stage, inputs_digest, config_digest, outputs_digest, counts, duration_ms}.
// A rerun with unchanged digests is a no-op; changed digests are refused
// unless forced.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planforge/config.hpp"
#include "planforge/corpus.hpp"
#include "planforge/digest.hpp"
#include "planforge/error.hpp"
#include "planforge/llmclient.hpp"
#include "planforge/mixture.hpp"
#include "planforge/rouge.hpp"
#include "planforge/scoring.hpp"
#include "planforge/sxs.hpp"
#include "planforge/synthesis.hpp"

namespace planforge {

enum class Stage { Ingest, Plan, Score, Mixture, EvalRouge, EvalSxs, Report };

inline constexpr std::array<Stage, 7> kAllStages = {Stage::Ingest,    Stage::Plan,    Stage::Score, Stage::Mixture,
                                                    Stage::EvalRouge, Stage::EvalSxs, Stage::Report};

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Plan: return "plan";
    case Stage::Score: return "score";
    case Stage::Mixture: return "mixture";
    case Stage::EvalRouge: return "eval_rouge";
    case Stage::EvalSxs: return "eval_sxs";
    case Stage::Report: return "report";
  }
  return "ingest";
}

inline Stage parse_stage(std::string_view s) {
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), '-', '_');
  for (const auto st : kAllStages) {
    if (norm == to_string(st)) return st;
  }
  throw Error(ErrorKind::Validation, "unknown stage '" + std::string(s) + "'");
}

struct StageManifest {
  std::string stage;
  std::string inputs_digest;
  std::string config_digest;
  std::string outputs_digest;
  nlohmann::json counts = nlohmann::json::object();
  std::vector<std::string> outputs;  // relative to the stage directory
  std::int64_t duration_ms = 0;
  bool skipped = false;  // set in memory when a rerun was a no-op

  nlohmann::json to_json() const {
    return {{"stage", stage},           {"inputs_digest", inputs_digest}, {"config_digest", config_digest},
            {"outputs_digest", outputs_digest}, {"counts", counts},      {"outputs", outputs},
            {"duration_ms", duration_ms}};
  }

  static StageManifest from_json(const nlohmann::json& j) {
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.inputs_digest = j.at("inputs_digest").get<std::string>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.outputs_digest = j.at("outputs_digest").get<std::string>();
    m.counts = j.at("counts");
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.duration_ms = j.at("duration_ms").get<std::int64_t>();
    return m;
  }
};

/// Runtime knobs that are not part of the config digest.
struct RunOptions {
  bool force = false;
  /// Overrides the HTTP transport (tests, embedding). When null the CLI's
  /// factory decides; with neither, only cache hits can succeed.
  std::shared_ptr<Transport> transport;
  std::shared_ptr<Clock> clock;
  std::function<void(std::string_view)> log = [](std::string_view msg) { std::cerr << msg << '\n'; };
};

namespace detail {

inline std::string file_digest(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Validation, "cannot read " + p.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

inline void require_file(const std::filesystem::path& p, std::string_view what) {
  if (!std::filesystem::exists(p)) {
    throw Error(ErrorKind::Validation, std::string(what) + " not found: " + p.string());
  }
}

inline std::string json_digest(const nlohmann::json& j) { return sha256_hex(j.dump()); }

struct OutputRecord {
  std::string doc_id;
  std::string output;
};

inline std::vector<OutputRecord> read_outputs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open outputs file " + path.string());
  std::vector<OutputRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      const auto r = nlohmann::json::parse(line);
      out.push_back({r.at("doc_id").get<std::string>(), r.at("output").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
  }
  return out;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline void write_text(const std::filesystem::path& path, std::string_view s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path.string());
  out << s;
}

inline nlohmann::json score_json(const rouge::Score& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

inline nlohmann::json rouge_json(const rouge::RougeScores& r) {
  return {{"rouge1", score_json(r.rouge1)},
          {"rouge2", score_json(r.rouge2)},
          {"rougeL", score_json(r.rouge_l)},
          {"rougeLsum", score_json(r.rouge_lsum)}};
}

}  // namespace detail

inline std::filesystem::path stage_dir(const PipelineConfig& cfg, Stage s) { return cfg.work() / to_string(s); }

inline std::filesystem::path manifest_path(const PipelineConfig& cfg, Stage s) {
  return stage_dir(cfg, s) / "manifest.json";
}

inline std::optional<StageManifest> load_manifest(const PipelineConfig& cfg, Stage s) {
  std::ifstream in(manifest_path(cfg, s));
  if (!in) return std::nullopt;
  try {
    nlohmann::json j;
    in >> j;
    return StageManifest::from_json(j);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

inline StageManifest require_manifest(const PipelineConfig& cfg, Stage upstream, Stage for_stage) {
  auto m = load_manifest(cfg, upstream);
  if (!m) {
    throw Error(ErrorKind::Dependency, std::string("stage '") + to_string(for_stage) + "' needs the '" +
                                           to_string(upstream) + "' manifest; run '" + to_string(upstream) +
                                           "' first");
  }
  return *m;
}

/// Config slice each stage depends on. Editing another stage's section does
/// not invalidate this one.
inline nlohmann::json stage_config(const PipelineConfig& cfg, Stage s) {
  const auto all = to_json(cfg);
  switch (s) {
    case Stage::Ingest: return {{"family", all["family"]}, {"corpus", all["corpus"]}};
    case Stage::Plan: return {{"synthesis", all["synthesis"]}};
    case Stage::Score: return {{"scoring", all["scoring"]}};
    case Stage::Mixture: return {{"family", all["family"]}, {"mixture", all["mixture"]}};
    case Stage::EvalRouge:
      return {{"outputs", all["eval"]["outputs"]},
              {"stem", all["eval"]["stem"]},
              {"remove_stopwords", all["eval"]["remove_stopwords"]}};
    case Stage::EvalSxs:
      return {{"test_outputs", all["eval"]["test_outputs"]}, {"base_outputs", all["eval"]["base_outputs"]},
              {"human_verdicts", all["eval"]["human_verdicts"]}, {"rater_model", all["eval"]["rater_model"]},
              {"seed", all["eval"]["seed"]}, {"rubric", all["eval"]["rubric"]}};
    case Stage::Report: return nlohmann::json::object();
  }
  return nlohmann::json::object();
}

inline std::vector<Stage> upstream_of(Stage s) {
  switch (s) {
    case Stage::Ingest: return {};
    case Stage::Plan: return {Stage::Ingest};
    case Stage::Score: return {Stage::Ingest, Stage::Plan};
    case Stage::Mixture: return {Stage::Ingest, Stage::Score};
    case Stage::EvalRouge: return {Stage::Ingest};
    case Stage::EvalSxs: return {Stage::Ingest};
    case Stage::Report: return {Stage::Mixture};
  }
  return {};
}

/// External files a stage reads besides upstream outputs.
inline std::vector<std::filesystem::path> external_inputs(const PipelineConfig& cfg, Stage s) {
  std::vector<std::filesystem::path> out;
  const auto add = [&](const std::string& p) {
    if (!p.empty()) out.push_back(cfg.resolve(p));
  };
  switch (s) {
    case Stage::Ingest:
      for (const auto& p : cfg.corpus.paths) add(p);
      for (const auto& p : cfg.corpus.eval_paths) add(p);
      break;
    case Stage::Plan: add(cfg.synthesis.exemplars); break;
    case Stage::EvalRouge: add(cfg.eval.outputs); break;
    case Stage::EvalSxs:
      add(cfg.eval.test_outputs);
      add(cfg.eval.base_outputs);
      add(cfg.eval.human_verdicts);
      break;
    default: break;
  }
  return out;
}

inline std::shared_ptr<CompletionClient> make_client(const PipelineConfig& cfg, const RunOptions& opts) {
  ClientSettings s;
  s.endpoint = cfg.client.endpoint;
  s.cache_dir = cfg.resolve(cfg.client.cache_dir).string();
  s.mode = parse_client_mode(cfg.client.mode);
  s.requests_per_second = cfg.client.requests_per_second;
  s.burst = cfg.client.burst;
  s.retry.max_attempts = cfg.client.max_attempts;
  s.apply_environment();
  auto clock = opts.clock ? opts.clock : std::make_shared<SystemClock>();
  return std::make_shared<CompletionClient>(s, opts.transport, clock);
}

namespace detail {

inline std::vector<Document> load_split(const PipelineConfig& cfg, const std::string& split) {
  if (split != "train" && split != "validation" && split != "evaluation") {
    throw Error(ErrorKind::Validation, "unknown split '" + split + "'");
  }
  return read_corpus((stage_dir(cfg, Stage::Ingest) / (split + ".jsonl")).string());
}

inline std::map<std::string, Document> load_all_splits(const PipelineConfig& cfg) {
  std::map<std::string, Document> out;
  for (const char* s : {"train", "validation", "evaluation"}) {
    for (auto& d : load_split(cfg, s)) out.emplace(d.id, std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------

inline nlohmann::json run_ingest(const PipelineConfig& cfg, std::vector<std::string>& outputs) {
  if (cfg.corpus.paths.empty()) throw Error(ErrorKind::Validation, "corpus.paths is empty");
  const SectionDetector detector(cfg.corpus.section_rules);
  const auto load = [&](const std::vector<std::string>& paths) {
    // one worker per file; order fixed by the id sort below
    std::vector<std::future<std::vector<Document>>> jobs;
    for (const auto& p : paths) {
      const auto path = cfg.resolve(p).string();
      jobs.push_back(std::async(std::launch::async, [&detector, path] { return read_corpus(path, detector); }));
    }
    std::vector<Document> docs;
    for (auto& j : jobs) {
      auto part = j.get();
      std::move(part.begin(), part.end(), std::back_inserter(docs));
    }
    check_unique_ids(docs);
    std::sort(docs.begin(), docs.end(), by_id);
    return docs;
  };

  const auto docs = load(cfg.corpus.paths);
  const auto kept = filter_corpus(docs, cfg.corpus.min_words, cfg.corpus.require_sections);
  nlohmann::json counts = {{"docs_in", docs.size()}, {"kept", kept.size()}, {"filtered", docs.size() - kept.size()}};

  CorpusSplit split;
  if (cfg.corpus.eval_paths.empty()) {
    split = split_corpus(kept, cfg.corpus.sizes, cfg.corpus.seed);
  } else {
    auto main = cfg.corpus.sizes;
    main.evaluation = 0;
    split = split_corpus(kept, main, cfg.corpus.seed);
    const auto eval_docs = load(cfg.corpus.eval_paths);
    const auto eval_kept = filter_corpus(eval_docs, cfg.corpus.min_words, cfg.corpus.require_sections);
    counts["eval_docs_in"] = eval_docs.size();
    counts["eval_kept"] = eval_kept.size();
    counts["eval_filtered"] = eval_docs.size() - eval_kept.size();
    split.evaluation = split_corpus(eval_kept, {0, 0, cfg.corpus.sizes.evaluation}, cfg.corpus.seed).evaluation;
  }
  const auto dir = stage_dir(cfg, Stage::Ingest);
  write_corpus((dir / "train.jsonl").string(), split.train);
  write_corpus((dir / "validation.jsonl").string(), split.validation);
  write_corpus((dir / "evaluation.jsonl").string(), split.evaluation);
  outputs = {"train.jsonl", "validation.jsonl", "evaluation.jsonl"};
  counts["train"] = split.train.size();
  counts["validation"] = split.validation.size();
  counts["evaluation"] = split.evaluation.size();
  return counts;
}

inline nlohmann::json run_plan(const PipelineConfig& cfg, const RunOptions& opts, std::vector<std::string>& outputs) {
  std::vector<Document> docs;
  for (const auto& s : cfg.synthesis.splits) {
    auto part = load_split(cfg, s);
    std::move(part.begin(), part.end(), std::back_inserter(docs));
  }
  std::map<StepKind, std::vector<Exemplar>> exemplars;
  if (!cfg.synthesis.exemplars.empty()) exemplars = read_exemplars(cfg.resolve(cfg.synthesis.exemplars).string());
  const auto client = make_client(cfg, opts);
  const ExtractionLimits limits{cfg.synthesis.max_input_tokens};

  std::vector<std::vector<CandidateSet>> per_doc(docs.size());
  const auto work = [&](std::size_t i) {
    for (const auto kind : kAllStepKinds) {
      per_doc[i].push_back(generate_candidates(docs[i], kind, cfg.synthesis.k, cfg.synthesis.sampler, *client,
                                               exemplars[kind], limits));
    }
  };
  const auto workers = std::max<std::size_t>(1, cfg.synthesis.concurrency);
  if (workers == 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < docs.size(); i = next++) work(i);
      }));
    }
    for (auto& f : pool) f.get();
  }

  std::ofstream out(stage_dir(cfg, Stage::Plan) / "candidates.jsonl", std::ios::binary | std::ios::trunc);
  std::size_t sets = 0, candidates = 0, empty = 0;
  for (const auto& doc_sets : per_doc) {
    for (const auto& set : doc_sets) {
      append_candidate_records(out, set);
      ++sets;
      candidates += set.candidates.size();
      for (const auto& c : set.candidates) empty += c.empty() ? 1 : 0;
    }
  }
  outputs = {"candidates.jsonl"};
  return {{"docs", docs.size()}, {"candidate_sets", sets}, {"candidates", candidates}, {"empty_candidates", empty},
          {"network_calls", client->network_calls()}};
}

inline nlohmann::json run_score(const PipelineConfig& cfg, const RunOptions& opts, std::vector<std::string>& outputs,
                                const std::function<void(std::string_view)>& log) {
  const auto docs = load_all_splits(cfg);
  const auto sets = read_candidate_records((stage_dir(cfg, Stage::Plan) / "candidates.jsonl").string());
  std::unique_ptr<EntailmentScorer> scorer;
  std::shared_ptr<CompletionClient> client;
  if (cfg.scoring.scorer == "lexical") {
    rouge::Options o;
    o.remove_stopwords = cfg.scoring.remove_stopwords;
    scorer = std::make_unique<LexicalEntailmentScorer>(o);
  } else if (cfg.scoring.scorer == "llm") {
    client = make_client(cfg, opts);
    scorer = std::make_unique<LlmEntailmentScorer>(*client, cfg.scoring.judge_model);
  } else {
    throw Error(ErrorKind::Validation, "unknown scorer '" + cfg.scoring.scorer + "'");
  }

  const auto dir = stage_dir(cfg, Stage::Score);
  std::ofstream scores(dir / "scores.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream steps(dir / "steps.jsonl", std::ios::binary | std::ios::trunc);
  std::size_t selected = 0, unscorable = 0;
  for (const auto& [key, set] : sets) {
    const auto doc = docs.find(set.doc_id);
    if (doc == docs.end()) throw Error(ErrorKind::Validation, "candidates for unknown document '" + set.doc_id + "'");
    const auto params = cfg.scoring.targets.at(set.kind);
    try {
      const auto step = select_best(set, doc->second, params, *scorer);
      append_score_records(scores, step);
      steps << to_record(step).dump() << '\n';
      ++selected;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Selection) throw;
      log(e.what());
      ++unscorable;
    }
  }
  outputs = {"scores.jsonl", "steps.jsonl"};
  return {{"candidate_sets", sets.size()}, {"selected", selected}, {"unscorable", unscorable}};
}

inline nlohmann::json run_mixture(const PipelineConfig& cfg, std::vector<std::string>& outputs) {
  const auto store = read_steps((stage_dir(cfg, Stage::Score) / "steps.jsonl").string());
  const auto base = cfg.mixture_spec();
  const std::set<TaskForm> tasks(cfg.mixture.tasks.begin(), cfg.mixture.tasks.end());
  nlohmann::json counts = nlohmann::json::object();
  const auto dir = stage_dir(cfg, Stage::Mixture);
  for (const auto& split : cfg.mixture.splits) {
    const auto docs = load_split(cfg, split);
    auto spec = base;
    spec.interleave_seed = base.interleave_seed ^ fnv1a(split);
    const auto mixture = assemble_mixture(docs, store, spec, tasks);
    const auto checksum = write_mixture((dir / (split + ".jsonl")).string(), mixture.examples);
    const auto manifest = manifest_json(mixture.report, spec, checksum);
    write_json(dir / (split + ".manifest.json"), manifest);
    outputs.push_back(split + ".jsonl");
    outputs.push_back(split + ".manifest.json");
    std::size_t attempted = 0;
    for (const auto& [t, c] : mixture.report.attempted) attempted += c;
    counts[split] = {{"examples", mixture.examples.size()},
                     {"attempted", attempted},
                     {"dropped", mixture.report.total_dropped()},
                     {"truncated", mixture.report.truncated},
                     {"per_task", manifest["per_task"]}};
  }
  return counts;
}

inline nlohmann::json run_eval_rouge(const PipelineConfig& cfg, std::vector<std::string>& outputs) {
  if (cfg.eval.outputs.empty()) throw Error(ErrorKind::Validation, "eval.outputs is not set");
  const auto refs = load_split(cfg, "evaluation");
  std::map<std::string, const Document*> by_id;
  for (const auto& d : refs) by_id[d.id] = &d;
  auto records = read_outputs(cfg.resolve(cfg.eval.outputs));
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  rouge::Options opts;
  opts.stem = cfg.eval.stem;
  opts.remove_stopwords = cfg.eval.remove_stopwords;
  std::vector<rouge::RougeScores> per_pair;
  std::size_t extraction_failures = 0, unknown = 0;
  for (const auto& r : records) {
    const auto it = by_id.find(r.doc_id);
    if (it == by_id.end()) {
      ++unknown;
      continue;
    }
    std::string article;
    try {
      article = extract_article(r.output);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Extraction) throw;
      ++extraction_failures;  // scored as an empty article
    }
    per_pair.push_back(rouge::score_pair(article, it->second->body, opts));
  }
  const auto mean = rouge::mean(per_pair);
  nlohmann::json report = detail::rouge_json(mean);
  report["n_pairs"] = per_pair.size();
  report["extraction_failures"] = extraction_failures;
  report["unknown_doc_ids"] = unknown;
  write_json(stage_dir(cfg, Stage::EvalRouge) / "rouge_report.json", report);
  outputs = {"rouge_report.json"};
  return {{"n_pairs", per_pair.size()}, {"extraction_failures", extraction_failures}, {"unknown_doc_ids", unknown}};
}

inline nlohmann::json run_eval_sxs(const PipelineConfig& cfg, const RunOptions& opts,
                                   std::vector<std::string>& outputs) {
  if (cfg.eval.test_outputs.empty() || cfg.eval.base_outputs.empty()) {
    throw Error(ErrorKind::Validation, "eval.test_outputs and eval.base_outputs must be set");
  }
  const auto refs = load_split(cfg, "evaluation");
  std::map<std::string, std::string> test, base;
  for (auto& r : read_outputs(cfg.resolve(cfg.eval.test_outputs))) test[r.doc_id] = std::move(r.output);
  for (auto& r : read_outputs(cfg.resolve(cfg.eval.base_outputs))) base[r.doc_id] = std::move(r.output);
  std::vector<std::string> test_articles, base_articles, contexts;
  std::size_t skipped = 0;
  for (const auto& d : refs) {
    const auto t = test.find(d.id);
    const auto b = base.find(d.id);
    if (t == test.end() || b == base.end()) {
      ++skipped;
      continue;
    }
    try {
      test_articles.push_back(extract_article(t->second));
      base_articles.push_back(extract_article(b->second));
      contexts.push_back(d.context);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Extraction) throw;
      if (test_articles.size() > base_articles.size()) test_articles.pop_back();
      ++skipped;
    }
  }
  const auto items = sxs::make_pairs(test_articles, base_articles, contexts, cfg.eval.seed, cfg.eval.rubric);
  const auto dir = stage_dir(cfg, Stage::EvalSxs);
  {
    std::ofstream out(dir / "items.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& it : items) out << sxs::to_record(it).dump() << '\n';
    std::ofstream csv(dir / "export.csv", std::ios::binary | std::ios::trunc);
    sxs::export_items(csv, items);
  }
  std::vector<sxs::Verdict> verdicts;
  std::size_t unrated = 0;
  if (!cfg.eval.human_verdicts.empty()) {
    std::ifstream in(cfg.resolve(cfg.eval.human_verdicts), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    auto imported = sxs::import_verdicts(ss.str(), items);
    verdicts = std::move(imported.verdicts);
    unrated = imported.unrated;
  } else {
    const auto client = make_client(cfg, opts);
    auto run = sxs::rate_with_client(items, *client, cfg.eval.rater_model, cfg.eval.seed);
    verdicts = std::move(run.verdicts);
    unrated = run.unrated_ids.size();
  }
  if (verdicts.empty()) throw Error(ErrorKind::Validation, "no parseable verdicts");
  const auto report = sxs::aggregate(verdicts, unrated);
  write_json(dir / "sxs_report.json", sxs::to_json(report));
  write_text(dir / "sxs_report.txt", sxs::format_table(report));
  outputs = {"items.jsonl", "export.csv", "sxs_report.json", "sxs_report.txt"};
  return {{"items", items.size()}, {"rated", verdicts.size()}, {"unrated", unrated}, {"skipped", skipped}};
}

inline nlohmann::json run_report(const PipelineConfig& cfg, std::vector<std::string>& outputs) {
  nlohmann::json report = nlohmann::json::object();
  std::ostringstream txt;
  const auto mixture = require_manifest(cfg, Stage::Mixture, Stage::Report);
  report["mixture"] = mixture.counts;
  txt << "Mixtures\n";
  for (const auto& [split, c] : mixture.counts.items()) {
    txt << "  " << split << ": " << c["examples"].get<std::size_t>() << " examples (" << c["dropped"].get<std::size_t>()
        << " dropped, " << c["truncated"].get<std::size_t>() << " truncated)";
    for (const auto& [task, n] : c["per_task"].items()) txt << "  " << task << "=" << n.get<std::size_t>();
    txt << "\n";
    const auto sidecar = stage_dir(cfg, Stage::Mixture) / (split + ".manifest.json");
    std::ifstream in(sidecar);
    nlohmann::json m;
    in >> m;
    report["mixture"][split]["file_checksum"] = m["file_checksum"];
  }
  if (load_manifest(cfg, Stage::EvalRouge)) {
    std::ifstream in(stage_dir(cfg, Stage::EvalRouge) / "rouge_report.json");
    nlohmann::json r;
    in >> r;
    report["rouge"] = r;
    txt << "\nROUGE (" << r["n_pairs"].get<std::size_t>() << " pairs)\n";
    txt << "  metric        P        R        F1\n";
    for (const char* m : {"rouge1", "rouge2", "rougeL", "rougeLsum"}) {
      char line[128];
      std::snprintf(line, sizeof line, "  %-10s %8.4f %8.4f %8.4f\n", m, r[m]["precision"].get<double>(),
                    r[m]["recall"].get<double>(), r[m]["f1"].get<double>());
      txt << line;
    }
  }
  if (load_manifest(cfg, Stage::EvalSxs)) {
    std::ifstream in(stage_dir(cfg, Stage::EvalSxs) / "sxs_report.json");
    nlohmann::json r;
    in >> r;
    report["sxs"] = r;
    std::ifstream t(stage_dir(cfg, Stage::EvalSxs) / "sxs_report.txt");
    txt << "\nSide-by-side\n" << t.rdbuf();
  }
  const auto dir = stage_dir(cfg, Stage::Report);
  write_json(dir / "report.json", report);
  write_text(dir / "report.txt", txt.str());
  outputs = {"report.json", "report.txt"};
  return {{"sections", report.size()}};
}

}  // namespace detail

/// Runs one stage, or returns the existing manifest (with `skipped` set)
/// when its recorded digests still match.
inline StageManifest run_stage(Stage stage, const PipelineConfig& cfg, const RunOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto up : upstream_of(stage)) {
    const auto m = require_manifest(cfg, up, stage);
    inputs.push_back({{"stage", m.stage}, {"outputs_digest", m.outputs_digest}});
  }
  if (stage == Stage::Report) {
    for (const auto opt : {Stage::EvalRouge, Stage::EvalSxs}) {
      if (const auto m = load_manifest(cfg, opt)) inputs.push_back({{"stage", m->stage}, {"outputs_digest", m->outputs_digest}});
    }
  }
  for (const auto& p : external_inputs(cfg, stage)) {
    detail::require_file(p, "input file");
    inputs.push_back({{"file", p.filename().string()}, {"digest", detail::file_digest(p)}});
  }
  const auto inputs_digest = detail::json_digest(inputs);
  const auto config_digest = detail::json_digest(stage_config(cfg, stage));

  if (const auto prev = load_manifest(cfg, stage); prev && !opts.force) {
    if (prev->inputs_digest == inputs_digest && prev->config_digest == config_digest) {
      bool intact = true;
      for (const auto& o : prev->outputs) intact = intact && std::filesystem::exists(stage_dir(cfg, stage) / o);
      if (intact) {
        auto m = *prev;
        m.skipped = true;
        opts.log(std::string(to_string(stage)) + ": up to date");
        return m;
      }
    } else {
      throw Error(ErrorKind::StaleInput, std::string("stage '") + to_string(stage) +
                                             "' has outputs from different inputs or config; rerun with --force");
    }
  }

  const auto dir = stage_dir(cfg, stage);
  std::filesystem::create_directories(dir);
  std::filesystem::remove(manifest_path(cfg, stage));
  StageManifest m;
  m.stage = to_string(stage);
  m.inputs_digest = inputs_digest;
  m.config_digest = config_digest;
  switch (stage) {
    case Stage::Ingest: m.counts = detail::run_ingest(cfg, m.outputs); break;
    case Stage::Plan: m.counts = detail::run_plan(cfg, opts, m.outputs); break;
    case Stage::Score: m.counts = detail::run_score(cfg, opts, m.outputs, opts.log); break;
    case Stage::Mixture: m.counts = detail::run_mixture(cfg, m.outputs); break;
    case Stage::EvalRouge: m.counts = detail::run_eval_rouge(cfg, m.outputs); break;
    case Stage::EvalSxs: m.counts = detail::run_eval_sxs(cfg, opts, m.outputs); break;
    case Stage::Report: m.counts = detail::run_report(cfg, m.outputs); break;
  }
  nlohmann::json out_digests = nlohmann::json::array();
  for (const auto& o : m.outputs) out_digests.push_back({o, detail::file_digest(dir / o)});
  m.outputs_digest = detail::json_digest(out_digests);
  m.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  detail::write_json(manifest_path(cfg, stage), m.to_json());
  opts.log(std::string(to_string(stage)) + ": " + m.counts.dump());
  return m;
}

}  // namespace planforge
