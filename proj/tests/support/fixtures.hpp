#pragma once

// Synthetic documents, a deterministic stub model, and scratch directories.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>
#include <unistd.h>

#include "planforge/planforge.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> v = {
      "model",    "data",     "study",   "result",  "method",   "network", "signal",  "energy",   "cell",
      "protein",  "climate",  "ocean",   "city",    "market",   "policy",  "system",  "theory",   "sample",
      "growth",   "pattern",  "effect",  "team",    "survey",   "field",   "river",   "sensor",   "language",
      "memory",   "light",    "surface", "species", "forest",   "record",  "process", "measure",  "structure",
      "increase", "decrease", "observe", "report",  "suggest",  "reveal",  "compare", "estimate", "predict",
      "the",      "a",        "of",      "in",      "and",      "with",    "from",    "for",      "to",
      "new",      "large",    "small",   "early",   "recent",   "global",  "local",   "strong",   "weak"};
  return v;
}

inline std::string capitalized(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

inline std::string sentence(std::mt19937_64& g, std::size_t min_words = 6, std::size_t max_words = 16) {
  const auto& v = vocabulary();
  const auto n = min_words + g() % (max_words - min_words + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    auto w = v[g() % v.size()];
    if (i == 0) w = capitalized(w);
    if (!s.empty()) s += ' ';
    s += w;
  }
  s += '.';
  return s;
}

inline std::string paragraph(std::mt19937_64& g, std::size_t sentences) {
  std::string p;
  for (std::size_t i = 0; i < sentences; ++i) {
    if (!p.empty()) p += ' ';
    p += sentence(g);
  }
  return p;
}

/// Body with markdown section headings and at least `min_words` words.
inline std::string article_body(std::mt19937_64& g, std::size_t min_words, std::size_t sections = 4) {
  std::string body;
  std::size_t sec = 0;
  while (planforge::text::count_words(body) < min_words || sec < sections) {
    if (!body.empty()) body += "\n\n";
    body += "## Section " + std::to_string(++sec) + "\n\n";
    body += paragraph(g, 5 + g() % 4) + "\n\n" + paragraph(g, 4 + g() % 4);
  }
  return body;
}

inline planforge::Document document(std::size_t i, std::size_t min_words = 1000, std::uint64_t salt = 0) {
  std::mt19937_64 g(0x5eed0000 + i * 7919 + salt);
  planforge::Document d;
  d.id = "doc-" + std::to_string(100000 + i);
  d.title = "Topic " + std::to_string(i);
  d.context = paragraph(g, 12);
  d.body = article_body(g, min_words);
  d.sections = planforge::detect_sections(d.body);
  planforge::refresh_counts(d);
  return d;
}

inline std::vector<planforge::Document> corpus(std::size_t n, std::size_t min_words = 1000) {
  std::vector<planforge::Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(document(i, min_words));
  return docs;
}

// ---------------------------------------------------------------------------

/// Deterministic stand-in for a completion service. Extraction prompts get a
/// seed-dependent selection of the article's sentences; rater prompts prefer
/// the longer article; judge prompts get a fixed probability.
struct StubModel {
  std::atomic<std::size_t> calls{0};

  planforge::CompletionResponse operator()(const planforge::CompletionRequest& r) {
    ++calls;
    return {answer(r), planforge::FinishReason::Complete, 0, false};
  }

  static std::string between(const std::string& s, const std::string& a, const std::string& b) {
    const auto i = s.rfind(a);
    if (i == std::string::npos) return {};
    const auto start = i + a.size();
    const auto j = s.find(b, start);
    return s.substr(start, j == std::string::npos ? std::string::npos : j - start);
  }

  static std::string answer(const planforge::CompletionRequest& r) {
    using namespace planforge;
    const auto& p = r.prompt;
    if (p.rfind("You are comparing", 0) == 0) {
      const auto a = between(p, "[ARTICLE A]\n", "\n\n[ARTICLE B]");
      const auto b = between(p, "[ARTICLE B]\n", "\n\nCriteria:");
      const auto wa = text::count_words(a), wb = text::count_words(b);
      const std::string pick = wa > wb ? "A" : wb > wa ? "B" : "Tie";
      std::string out;
      for (const auto& d : sxs::default_rubric()) out += d + ": " + pick + "\n";
      return out + "Overall: " + pick + "\n";
    }
    for (const auto kind : kAllStepKinds) {
      if (p.rfind(std::string(extraction_instruction(kind)), 0) != 0) continue;
      const auto article = between(p, "[ARTICLE]\n", "\n" + std::string(step_sentinel(kind)) + "\n");
      std::vector<std::string> sents;
      for (const auto s : text::split_sentences(article)) {
        if (s.rfind("## ", 0) != 0) sents.emplace_back(s);
      }
      const std::size_t stride = 4 + r.seed % 13;
      std::string out;
      for (std::size_t i = r.seed % 3; i < sents.size(); i += stride) {
        if (!out.empty()) out += kind == StepKind::Summary ? " " : "\n";
        out += kind == StepKind::Summary ? sents[i] : "- " + sents[i];
      }
      return out;
    }
    return "0.5";
  }
};

inline std::shared_ptr<planforge::Transport> stub_transport(std::shared_ptr<StubModel> model) {
  return std::make_shared<planforge::FunctionTransport>(
      [model](const planforge::CompletionRequest& r) { return (*model)(r); });
}

// ---------------------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("planforge-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& p) const { return path_ / p; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

// ---------------------------------------------------------------------------

/// A full pipeline workspace: corpus, eval outputs, and a config using the
/// stub model through a cache directory.
struct Workspace {
  fs::path root;
  planforge::PipelineConfig cfg;
};

inline Workspace make_workspace(const fs::path& root, std::size_t n_docs = 10, const std::string& mode = "live") {
  Workspace w{root, {}};
  const auto docs = corpus(n_docs);
  {
    std::ofstream out(root / "corpus.jsonl", std::ios::binary);
    for (const auto& d : docs) out << planforge::to_record(d).dump() << '\n';
  }
  // Test system output: plan block then the reference article lightly cut;
  // baseline: the first half of the article.
  {
    std::ofstream outs(root / "outputs.jsonl", std::ios::binary);
    std::ofstream test(root / "test_outputs.jsonl", std::ios::binary);
    std::ofstream base(root / "base_outputs.jsonl", std::ios::binary);
    for (const auto& d : docs) {
      const auto sents = planforge::text::split_sentences(d.body);
      std::string head, most;
      for (std::size_t i = 0; i < sents.size(); ++i) {
        if (i < sents.size() / 2) head += std::string(sents[i]) + "\n";
        if (i % 5 != 4) most += std::string(sents[i]) + "\n";
      }
      const std::string planned = "## Summary\n" + std::string(sents[1]) + "\n\n## Article\n" + most;
      outs << nlohmann::json{{"doc_id", d.id}, {"output", planned}}.dump() << '\n';
      test << nlohmann::json{{"doc_id", d.id}, {"output", planned}}.dump() << '\n';
      base << nlohmann::json{{"doc_id", d.id}, {"output", head}}.dump() << '\n';
    }
  }
  auto& c = w.cfg;
  c.base_dir = root;
  c.work_dir = "work";
  c.family = planforge::DatasetFamily::News;
  c.corpus.paths = {"corpus.jsonl"};
  c.corpus.sizes = {n_docs - n_docs / 5 - n_docs / 10, n_docs / 10, n_docs / 5};
  c.corpus.seed = 7;
  c.synthesis.k = 3;
  c.synthesis.sampler.seed = 11;
  c.synthesis.sampler.model_id = "stub";
  c.mixture.seed = 13;
  c.eval.outputs = "outputs.jsonl";
  c.eval.test_outputs = "test_outputs.jsonl";
  c.eval.base_outputs = "base_outputs.jsonl";
  c.eval.rater_model = "stub";
  c.eval.seed = 17;
  c.client.cache_dir = "cache";
  c.client.mode = mode;
  {
    std::ofstream out(root / "config.json", std::ios::binary);
    out << planforge::to_json(c).dump(2) << '\n';
  }
  return w;
}

inline void run_all(const planforge::PipelineConfig& cfg, std::shared_ptr<planforge::Transport> transport) {
  planforge::RunOptions opts;
  opts.transport = std::move(transport);
  opts.log = [](std::string_view) {};
  for (const auto s : planforge::kAllStages) planforge::run_stage(s, cfg, opts);
}

}  // namespace fixture
