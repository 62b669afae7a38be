#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "planforge/digest.hpp"
#include "planforge/error.hpp"
#include "planforge/random.hpp"
#include "planforge/text.hpp"

namespace planforge {

using text::count_sentences;
using text::count_words;

/// One article (the target) and the context it should be generated from.
struct Document {
  std::string id;
  std::string title;
  std::string body;
  std::string context;
  std::vector<std::string> sections;
  std::size_t word_count = 0;
  std::size_t sentence_count = 0;

  bool operator==(const Document&) const = default;
};

struct CorpusSplit {
  std::vector<Document> train;
  std::vector<Document> validation;
  std::vector<Document> evaluation;
  std::uint64_t seed = 0;
};

/// Heading detection. A line is a section heading when it matches
/// `heading_pattern` (markdown `#` headings and wiki `== x ==` headings by
/// default), or, with `title_case_lines`, when it is a short title-case line
/// standing alone between blank lines (or at the start of the body).
struct SectionRules {
  std::string heading_pattern = R"(^\s*(?:#{1,6}\s+(.+?)\s*#*|={2,6}\s*(.+?)\s*={2,6})\s*$)";
  bool title_case_lines = true;
  std::size_t max_title_words = 12;
};

class SectionDetector {
 public:
  explicit SectionDetector(SectionRules rules = {})
      : rules_(std::move(rules)), heading_(rules_.heading_pattern, std::regex::ECMAScript) {}

  std::vector<std::string> detect(std::string_view body) const {
    const auto lines = text::split_lines(body);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto& line = lines[i];
      std::smatch m;
      if (std::regex_match(line, m, heading_)) {
        for (std::size_t g = 1; g < m.size(); ++g) {
          if (m[g].matched) {
            out.emplace_back(text::trim(m[g].str()));
            break;
          }
        }
        continue;
      }
      if (!rules_.title_case_lines) continue;
      const bool prev_blank = i == 0 || text::trim(lines[i - 1]).empty();
      const bool next_blank = i + 1 < lines.size() && text::trim(lines[i + 1]).empty();
      if (prev_blank && next_blank && is_title_case(line)) out.emplace_back(text::trim(line));
    }
    return out;
  }

 private:
  bool is_title_case(std::string_view line) const {
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) return false;
    const auto words = text::split_words(trimmed);
    if (words.size() > rules_.max_title_words) return false;
    if (std::string_view(".!?:;,").find(trimmed.back()) != std::string_view::npos) return false;
    const auto upper = [](char c) { return c >= 'A' && c <= 'Z'; };
    if (!upper(words.front().front())) return false;
    for (const auto w : words) {
      const char c = w.front();
      const bool letter = upper(c) || (c >= 'a' && c <= 'z');
      if (letter && w.size() > 3 && !upper(c)) return false;
    }
    return true;
  }

  SectionRules rules_;
  std::regex heading_;
};

inline std::vector<std::string> detect_sections(std::string_view body, const SectionRules& rules = {}) {
  return SectionDetector(rules).detect(body);
}

inline constexpr std::string_view kTopicInstruction =
    "Generate a comprehensive Wikipedia page about the specified topic.";

/// Input context for encyclopedia articles, built from the topic alone.
inline std::string make_topic_context(std::string_view topic) {
  const auto t = text::trim(topic);
  if (t.empty()) throw Error(ErrorKind::Validation, "topic must be non-empty");
  std::string out(kTopicInstruction);
  out += "\nTopic: ";
  out += t;
  return out;
}

inline void refresh_counts(Document& doc) {
  doc.word_count = count_words(doc.body);
  doc.sentence_count = count_sentences(doc.body);
}

namespace detail {

inline std::optional<std::string> string_field(const nlohmann::json& record, const char* name) {
  const auto it = record.find(name);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorKind::Parse, std::string("field '") + name + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace detail

/// Builds a Document from one corpus record
/// `{id?, title?, context?, body, sections?}`. Title-only records get the
/// topic prompt as context; records without sections get detected ones.
inline Document parse_paired_record(const nlohmann::json& record, const SectionDetector& detector) {
  if (!record.is_object()) throw Error(ErrorKind::Parse, "record is not an object");
  const auto body = detail::string_field(record, "body");
  if (!body) throw Error(ErrorKind::Parse, "missing field 'body'");
  const auto title = detail::string_field(record, "title");
  const auto context = detail::string_field(record, "context");
  if (!context && !title) throw Error(ErrorKind::Parse, "missing field 'context' (or 'title')");

  Document doc;
  doc.body = std::string(text::trim(*body));
  if (doc.body.empty()) throw Error(ErrorKind::Validation, "empty body");
  doc.title = title ? std::string(text::trim(*title)) : std::string();
  if (context && !text::trim(*context).empty()) {
    doc.context = std::string(text::trim(*context));
  } else if (!doc.title.empty()) {
    doc.context = make_topic_context(doc.title);
  } else {
    throw Error(ErrorKind::Validation, "empty context and no title to derive it from");
  }

  if (const auto id = detail::string_field(record, "id"); id && !id->empty()) {
    doc.id = *id;
  } else {
    doc.id = "doc-" + Sha256().update(doc.title).update("\x1f").update(doc.body).hex().substr(0, 16);
  }

  if (const auto it = record.find("sections"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorKind::Parse, "field 'sections' must be an array");
    for (const auto& s : *it) {
      if (!s.is_string()) throw Error(ErrorKind::Parse, "field 'sections' must hold strings");
      doc.sections.push_back(s.get<std::string>());
    }
  } else {
    doc.sections = detector.detect(doc.body);
  }
  refresh_counts(doc);
  return doc;
}

inline Document parse_paired_record(const nlohmann::json& record) {
  static const SectionDetector detector;
  return parse_paired_record(record, detector);
}

inline Document parse_paired_line(std::string_view line, const SectionDetector& detector) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("malformed record: ") + e.what());
  }
  return parse_paired_record(record, detector);
}

inline nlohmann::json to_record(const Document& doc) {
  return nlohmann::json{{"id", doc.id},
                        {"title", doc.title},
                        {"context", doc.context},
                        {"body", doc.body},
                        {"sections", doc.sections}};
}

/// Keeps documents with at least `min_words` words and, when
/// `require_sections`, at least one section. Order is preserved.
inline std::vector<Document> filter_corpus(const std::vector<Document>& docs, std::size_t min_words = 1000,
                                           bool require_sections = true) {
  std::vector<Document> out;
  for (const auto& d : docs) {
    if (d.word_count < min_words) continue;
    if (require_sections && d.sections.empty()) continue;
    out.push_back(d);
  }
  return out;
}

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t evaluation = 0;

  std::size_t total() const { return train + validation + evaluation; }
};

inline bool by_id(const Document& a, const Document& b) { return a.id < b.id; }

/// Samples the three splits without replacement. The result depends only on
/// the set of documents and the seed, not on their input order. Each split
/// is returned sorted by id.
inline CorpusSplit split_corpus(std::vector<Document> docs, SplitSizes sizes, std::uint64_t seed) {
  if (sizes.total() > docs.size()) {
    throw Error(ErrorKind::Size, "requested " + std::to_string(sizes.total()) + " documents but only " +
                                     std::to_string(docs.size()) + " available (short by " +
                                     std::to_string(sizes.total() - docs.size()) + ")");
  }
  std::sort(docs.begin(), docs.end(), by_id);
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  CorpusSplit split;
  split.seed = seed;
  std::size_t next = 0;
  const auto take = [&](std::size_t n, std::vector<Document>& into) {
    into.reserve(n);
    for (std::size_t i = 0; i < n; ++i) into.push_back(std::move(docs[order[next++]]));
    std::sort(into.begin(), into.end(), by_id);
  };
  take(sizes.train, split.train);
  take(sizes.validation, split.validation);
  take(sizes.evaluation, split.evaluation);
  return split;
}

/// Parses sizes given as "a,b,c".
inline SplitSizes parse_sizes(std::string_view spec) {
  std::vector<std::size_t> parts;
  std::size_t b = 0;
  while (b <= spec.size()) {
    auto e = spec.find(',', b);
    if (e == std::string_view::npos) e = spec.size();
    const std::string piece(text::trim(spec.substr(b, e - b)));
    try {
      std::size_t used = 0;
      const auto v = std::stoull(piece, &used);
      if (used != piece.size()) throw std::invalid_argument(piece);
      parts.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Validation, "bad split size '" + piece + "'");
    }
    b = e + 1;
  }
  if (parts.size() != 3) throw Error(ErrorKind::Validation, "sizes must be three comma-separated integers");
  return {parts[0], parts[1], parts[2]};
}

inline std::vector<Document> read_corpus(const std::string& path, const SectionDetector& detector) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open corpus file " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      docs.push_back(parse_paired_line(line, detector));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

inline std::vector<Document> read_corpus(const std::string& path) { return read_corpus(path, SectionDetector()); }

inline void write_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path);
  for (const auto& d : docs) out << to_record(d).dump() << '\n';
}

/// Throws when two documents share an id.
inline void check_unique_ids(const std::vector<Document>& docs) {
  std::set<std::string_view> seen;
  for (const auto& d : docs) {
    if (!seen.insert(d.id).second) throw Error(ErrorKind::Validation, "duplicate document id '" + d.id + "'");
  }
}

}  // namespace planforge
