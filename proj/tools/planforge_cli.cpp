// planforge <stage> --config path [--force] [--seed n]
// planforge rouge (--candidates f --references f | --pairs f)

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "planforge/http_transport.hpp"
#include "planforge/planforge.hpp"

namespace {

using namespace planforge;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> min_words;
  std::optional<bool> require_sections;
  std::string sizes;
  std::string tasks;
  std::string weights;
  std::string limits;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (b <= s.size()) {
    auto e = s.find(',', b);
    if (e == std::string::npos) e = s.size();
    const auto piece = std::string(text::trim(std::string_view(s).substr(b, e - b)));
    if (!piece.empty()) out.push_back(piece);
    b = e + 1;
  }
  return out;
}

void apply(const Overrides& o, Stage stage, PipelineConfig& cfg) {
  if (o.min_words) cfg.corpus.min_words = *o.min_words;
  if (o.require_sections) cfg.corpus.require_sections = *o.require_sections;
  if (!o.sizes.empty()) cfg.corpus.sizes = parse_sizes(o.sizes);
  if (!o.tasks.empty()) {
    cfg.mixture.tasks.clear();
    for (const auto& t : split_list(o.tasks)) cfg.mixture.tasks.push_back(parse_task_form(t));
  }
  if (!o.weights.empty()) {
    // "direct=1,plan_out=0.5"
    cfg.mixture.weights.clear();
    for (const auto& kv : split_list(o.weights)) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Validation, "weights take task=value pairs");
      try {
        cfg.mixture.weights[parse_task_form(kv.substr(0, eq))] = std::stod(kv.substr(eq + 1));
      } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::Validation, "bad weight '" + kv + "'");
      }
    }
  }
  if (!o.limits.empty()) {
    // "input,output" in tokens
    const auto parts = split_list(o.limits);
    if (parts.size() != 2) throw Error(ErrorKind::Validation, "limits take input,output");
    try {
      cfg.mixture.input_limit = std::stoul(parts[0]);
      cfg.mixture.output_limit = std::stoul(parts[1]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Validation, "bad limits '" + o.limits + "'");
    }
  }
  if (o.seed) {
    switch (stage) {
      case Stage::Ingest: cfg.corpus.seed = *o.seed; break;
      case Stage::Plan: cfg.synthesis.sampler.seed = *o.seed; break;
      case Stage::Mixture: cfg.mixture.seed = *o.seed; break;
      case Stage::EvalSxs: cfg.eval.seed = *o.seed; break;
      default: break;
    }
  }
}

RunOptions run_options(const PipelineConfig& cfg, bool force) {
  RunOptions opts;
  opts.force = force;
  ClientSettings s;
  s.endpoint = cfg.client.endpoint;
  s.apply_environment();
  if (!s.endpoint.empty()) opts.transport = std::make_shared<HttpTransport>(s.endpoint, s.api_key);
  return opts;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

int eval_rouge_files(const std::string& candidates, const std::string& references, const std::string& pairs,
                     const rouge::Options& opts, const std::string& output) {
  std::vector<std::pair<std::string, std::string>> items;
  if (!pairs.empty()) {
    std::ifstream in(pairs);
    if (!in) throw Error(ErrorKind::Validation, "cannot open " + pairs);
    std::string line;
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      try {
        const auto r = nlohmann::json::parse(line);
        items.emplace_back(r.at("candidate").get<std::string>(), r.at("reference").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, pairs + ": " + e.what());
      }
    }
  } else {
    const auto c = read_lines(candidates);
    const auto r = read_lines(references);
    if (c.size() != r.size()) {
      throw Error(ErrorKind::Validation, "candidate and reference files differ in line count (" +
                                             std::to_string(c.size()) + " vs " + std::to_string(r.size()) + ")");
    }
    for (std::size_t i = 0; i < c.size(); ++i) items.emplace_back(c[i], r[i]);
  }
  const auto scores = rouge::corpus_rouge(items, opts);
  auto report = detail::rouge_json(scores);
  report["n_pairs"] = items.size();
  if (output.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    detail::write_json(output, report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planforge: planning-augmented long-form data pipeline and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  bool force = false;
  Overrides overrides;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_flag("--force", force, "Rerun even when outputs exist for other inputs");
    sub->add_option("--seed", overrides.seed, "Override this stage's seed");
  };

  std::vector<std::pair<Stage, CLI::App*>> stage_cmds;
  for (const auto stage : kAllStages) {
    auto* sub = app.add_subcommand(to_string(stage), std::string("Run the ") + to_string(stage) + " stage");
    add_common(sub);
    if (stage == Stage::Ingest) {
      sub->add_option("--min-words", overrides.min_words, "Minimum article length in words");
      sub->add_option("--require-sections", overrides.require_sections, "Drop articles without sections (true|false)");
      sub->add_option("--sizes", overrides.sizes, "Split sizes train,validation,evaluation");
    }
    if (stage == Stage::Mixture) {
      sub->add_option("--tasks", overrides.tasks, "Task forms: direct,plan_out,plan_in");
      sub->add_option("--weights", overrides.weights, "Interleave weights, e.g. direct=1,plan_out=1");
      sub->add_option("--limits", overrides.limits, "Token limits input,output");
    }
    stage_cmds.emplace_back(stage, sub);
  }
  auto* all = app.add_subcommand("all", "Run every stage in order");
  add_common(all);

  std::string candidates, references, pairs, rouge_out;
  rouge::Options rouge_opts;
  auto* eval_rouge = app.add_subcommand("rouge", "ROUGE-1/2/L/Lsum over aligned files or a pair file");
  eval_rouge->add_option("--candidates", candidates, "One model output per line");
  eval_rouge->add_option("--references", references, "One reference per line");
  eval_rouge->add_option("--pairs", pairs, "Records {candidate, reference}");
  eval_rouge->add_flag("--stem", rouge_opts.stem, "Porter-stem tokens");
  eval_rouge->add_flag("--remove-stopwords", rouge_opts.remove_stopwords, "Drop English stopwords");
  eval_rouge->add_option("--output", rouge_out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (eval_rouge->parsed()) {
      if (pairs.empty() && (candidates.empty() || references.empty())) {
        throw Error(ErrorKind::Validation, "rouge needs --pairs or both --candidates and --references");
      }
      return eval_rouge_files(candidates, references, pairs, rouge_opts, rouge_out);
    }
    std::vector<Stage> stages;
    if (all->parsed()) {
      stages.assign(kAllStages.begin(), kAllStages.end());
    } else {
      for (const auto& [stage, sub] : stage_cmds) {
        if (sub->parsed()) stages.push_back(stage);
      }
    }
    for (const auto stage : stages) {
      auto cfg = load_config(config_path);
      apply(overrides, stage, cfg);
      const auto m = run_stage(stage, cfg, run_options(cfg, force));
      std::cout << to_string(stage) << (m.skipped ? " (no-op) " : " ") << m.counts.dump() << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
