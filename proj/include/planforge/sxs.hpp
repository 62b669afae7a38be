#pragma once

// Side-by-side comparison: seeded position flipping, rater prompt and answer
// grammar, verdict parsing back into the test/base frame, aggregation, and
// a delimited export/import path for human raters.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planforge/error.hpp"
#include "planforge/llmclient.hpp"
#include "planforge/random.hpp"
#include "planforge/text.hpp"

namespace planforge::sxs {

inline const std::vector<std::string>& default_rubric() {
  static const std::vector<std::string> dims = {"Coherence & Organization", "Relevance & Focus", "Verifiability"};
  return dims;
}

inline constexpr std::string_view kOverall = "Overall";

struct SxSItem {
  std::string item_id;
  std::string context;
  std::string output_a;
  std::string output_b;
  bool flipped = false;  // true: A holds the test system's output
  std::vector<std::string> rubric_dims = default_rubric();
};

enum class Outcome { TestWins, BaseWins, Tie };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::TestWins: return "test_wins";
    case Outcome::BaseWins: return "base_wins";
    case Outcome::Tie: return "tie";
  }
  return "tie";
}

enum class Rater { Auto, Human };

struct Verdict {
  std::string item_id;
  std::map<std::string, Outcome> dimensions;
  Outcome overall = Outcome::Tie;
  Rater rater = Rater::Auto;
};

struct DimensionTally {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  double win_rate = 0.0;
  double wl_ratio = 1.0;
  bool wl_infinite = false;
};

struct SxSReport {
  std::size_t n_items = 0;
  std::size_t unrated = 0;
  std::map<std::string, DimensionTally> dimensions;  // includes "Overall"

  const DimensionTally& overall() const { return dimensions.at(std::string(kOverall)); }
};

/// One item per aligned triple, each flipped by an independent fair coin
/// drawn from `seed`.
inline std::vector<SxSItem> make_pairs(const std::vector<std::string>& test_outputs,
                                       const std::vector<std::string>& base_outputs,
                                       const std::vector<std::string>& contexts, std::uint64_t seed,
                                       const std::vector<std::string>& rubric = default_rubric()) {
  if (test_outputs.size() != base_outputs.size() || test_outputs.size() != contexts.size()) {
    throw Error(ErrorKind::Validation, "test, base and context lists must have equal length");
  }
  Rng rng(seed);
  std::vector<SxSItem> items;
  items.reserve(test_outputs.size());
  const auto width = std::to_string(std::max<std::size_t>(test_outputs.size(), 1) - 1).size();
  for (std::size_t i = 0; i < test_outputs.size(); ++i) {
    if (text::trim(test_outputs[i]).empty() || text::trim(base_outputs[i]).empty()) {
      throw Error(ErrorKind::Validation, "empty output at position " + std::to_string(i));
    }
    std::ostringstream id;
    id << "item-" << std::setw(static_cast<int>(std::max<std::size_t>(width, 4))) << std::setfill('0') << i;
    SxSItem item;
    item.item_id = id.str();
    item.context = contexts[i];
    item.flipped = rng.coin();
    item.output_a = item.flipped ? test_outputs[i] : base_outputs[i];
    item.output_b = item.flipped ? base_outputs[i] : test_outputs[i];
    item.rubric_dims = rubric;
    items.push_back(std::move(item));
  }
  return items;
}

/// Rater prompt. The answer grammar is one `<dimension>: A|B|Tie` line per
/// rubric dimension followed by `Overall: A|B|Tie`.
inline std::string build_rater_prompt(const SxSItem& item, const std::vector<std::string>& rubric) {
  if (rubric.empty()) throw Error(ErrorKind::Validation, "rubric must be non-empty");
  std::string p =
      "You are comparing two articles written for the same request. Judge which article is better on each "
      "criterion below, and then overall. Judge content only; the order in which the articles are shown does "
      "not matter.\n\n";
  p += "[REQUEST]\n" + item.context + "\n\n";
  p += "[ARTICLE A]\n" + item.output_a + "\n\n";
  p += "[ARTICLE B]\n" + item.output_b + "\n\n";
  p += "Criteria:\n";
  for (const auto& d : rubric) p += "- " + d + "\n";
  p += "\nAnswer with exactly one line per criterion and a final overall line, each of the form "
       "\"<criterion>: A\", \"<criterion>: B\" or \"<criterion>: Tie\":\n";
  for (const auto& d : rubric) p += d + ": <A|B|Tie>\n";
  p += std::string(kOverall) + ": <A|B|Tie>\n";
  return p;
}

namespace detail {

enum class Choice { A, B, Tie };

inline std::optional<Choice> parse_choice(std::string_view v) {
  std::string plain;
  for (const char c : v) {
    if (c != '*' && c != '_' && c != '`') plain.push_back(c);
  }
  auto t = text::to_lower_ascii(text::trim(plain));
  while (!t.empty() && t.back() == '.') t.pop_back();
  if (t == "a" || t == "article a") return Choice::A;
  if (t == "b" || t == "article b") return Choice::B;
  if (t == "tie" || t == "equal" || t == "same") return Choice::Tie;
  return std::nullopt;
}

inline Outcome unflip(Choice c, bool flipped) {
  if (c == Choice::Tie) return Outcome::Tie;
  const bool a_wins = c == Choice::A;
  return a_wins == flipped ? Outcome::TestWins : Outcome::BaseWins;
}

inline std::string normalize_label(std::string_view s) {
  std::string out;
  for (const char c : text::to_lower_ascii(text::trim(s))) {
    if (c != '*' && c != '-' && c != ' ') out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Parses the rater grammar (case-insensitive labels, markdown bullets and
/// bold tolerated) and maps A/B back to test/base using `item.flipped`.
/// Every rubric dimension of the item and the overall line are required.
inline Verdict parse_verdict(std::string_view response, const SxSItem& item, Rater rater = Rater::Auto) {
  std::map<std::string, detail::Choice> answers;
  for (const auto& line : text::split_lines(response)) {
    const auto colon = line.rfind(':');
    if (colon == std::string::npos) continue;
    const auto choice = detail::parse_choice(std::string_view(line).substr(colon + 1));
    if (!choice) continue;
    answers[detail::normalize_label(std::string_view(line).substr(0, colon))] = *choice;
  }
  Verdict v;
  v.item_id = item.item_id;
  v.rater = rater;
  const auto overall = answers.find(detail::normalize_label(kOverall));
  if (overall == answers.end()) {
    throw Error(ErrorKind::RatingParse, "no overall verdict for " + item.item_id);
  }
  v.overall = detail::unflip(overall->second, item.flipped);
  for (const auto& dim : item.rubric_dims) {
    const auto it = answers.find(detail::normalize_label(dim));
    if (it == answers.end()) throw Error(ErrorKind::RatingParse, "no '" + dim + "' verdict for " + item.item_id);
    v.dimensions[dim] = detail::unflip(it->second, item.flipped);
  }
  return v;
}

inline DimensionTally tally(std::size_t wins, std::size_t losses, std::size_t ties) {
  DimensionTally t{wins, losses, ties};
  const auto n = wins + losses + ties;
  t.win_rate = n ? static_cast<double>(wins) / static_cast<double>(n) : 0.0;
  if (losses > 0) {
    t.wl_ratio = static_cast<double>(wins) / static_cast<double>(losses);
  } else if (wins > 0) {
    t.wl_ratio = std::numeric_limits<double>::infinity();
    t.wl_infinite = true;
  } else {
    t.wl_ratio = 1.0;
  }
  return t;
}

/// Counts in the test frame. Ties are excluded from W/L and included in the
/// win-rate denominator. `unrated` is carried into the report as-is.
inline SxSReport aggregate(const std::vector<Verdict>& verdicts, std::size_t unrated = 0) {
  if (verdicts.empty()) throw Error(ErrorKind::Validation, "aggregate needs at least one verdict");
  std::map<std::string, std::array<std::size_t, 3>> counts;
  const auto add = [&](const std::string& dim, Outcome o) { ++counts[dim][static_cast<std::size_t>(o)]; };
  for (const auto& v : verdicts) {
    add(std::string(kOverall), v.overall);
    for (const auto& [dim, o] : v.dimensions) add(dim, o);
  }
  SxSReport r;
  r.n_items = verdicts.size();
  r.unrated = unrated;
  for (const auto& [dim, c] : counts) r.dimensions[dim] = tally(c[0], c[1], c[2]);
  return r;
}

inline nlohmann::json to_json(const SxSReport& r) {
  nlohmann::json dims = nlohmann::json::object();
  for (const auto& [name, t] : r.dimensions) {
    dims[name] = {{"wins", t.wins},         {"losses", t.losses},
                  {"ties", t.ties},         {"win_rate", t.win_rate},
                  {"wl_ratio", t.wl_infinite ? nlohmann::json("inf") : nlohmann::json(t.wl_ratio)},
                  {"wl_infinite", t.wl_infinite}};
  }
  return {{"n_items", r.n_items}, {"unrated", r.unrated}, {"dimensions", dims}};
}

inline std::string format_table(const SxSReport& r) {
  std::ostringstream out;
  out << "items rated: " << r.n_items << "  unrated: " << r.unrated << "\n";
  out << std::left << std::setw(28) << "dimension" << std::right << std::setw(6) << "W" << std::setw(6) << "L"
      << std::setw(6) << "T" << std::setw(10) << "win rate" << std::setw(8) << "W/L" << "\n";
  const auto row = [&](const std::string& name, const DimensionTally& t) {
    out << std::left << std::setw(28) << name << std::right << std::setw(6) << t.wins << std::setw(6) << t.losses
        << std::setw(6) << t.ties << std::setw(10) << std::fixed << std::setprecision(3) << t.win_rate
        << std::setw(8);
    if (t.wl_infinite) {
      out << "inf";
    } else {
      out << std::setprecision(2) << t.wl_ratio;
    }
    out << "\n";
  };
  for (const auto& [name, t] : r.dimensions) {
    if (name != kOverall) row(name, t);
  }
  row(std::string(kOverall), r.overall());
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180) for the human-rating round trip.

namespace csv {

inline std::string quote(std::string_view field) {
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << "\r\n";
}

inline std::vector<std::vector<std::string>> parse(std::string_view data) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      row_has_content = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_has_content = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') ++i;
      if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      row_has_content = false;
    } else {
      field += c;
      row_has_content = true;
    }
  }
  if (quoted) throw Error(ErrorKind::Parse, "unterminated quoted field");
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace csv

/// Export for human raters: columns item_id, context, article_1, article_2,
/// where article_1 is position A.
inline void export_items(std::ostream& out, const std::vector<SxSItem>& items) {
  csv::write_row(out, {"item_id", "context", "article_1", "article_2"});
  for (const auto& it : items) csv::write_row(out, {it.item_id, it.context, it.output_a, it.output_b});
}

struct ImportResult {
  std::vector<Verdict> verdicts;
  std::size_t unrated = 0;
};

/// Imports human choices (columns item_id, dimension, choice with choice in
/// {1, 2, tie}) and routes them through the same grammar parser as the
/// autorater.
inline ImportResult import_verdicts(std::string_view data, const std::vector<SxSItem>& items) {
  const auto rows = csv::parse(data);
  if (rows.empty()) throw Error(ErrorKind::Parse, "empty verdict file");
  const auto& header = rows.front();
  if (header.size() < 3 || header[0] != "item_id" || header[1] != "dimension" || header[2] != "choice") {
    throw Error(ErrorKind::Parse, "verdict file header must be item_id,dimension,choice");
  }
  std::map<std::string, std::string> responses;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 3) throw Error(ErrorKind::Parse, "verdict row " + std::to_string(i) + " has too few columns");
    const auto c = text::to_lower_ascii(text::trim(r[2]));
    const std::string letter = c == "1" ? "A" : c == "2" ? "B" : c == "tie" ? "Tie" : c;
    responses[r[0]] += r[1] + ": " + letter + "\n";
  }
  ImportResult out;
  for (const auto& item : items) {
    const auto it = responses.find(item.item_id);
    if (it == responses.end()) {
      ++out.unrated;
      continue;
    }
    try {
      out.verdicts.push_back(parse_verdict(it->second, item, Rater::Human));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RatingParse) throw;
      ++out.unrated;
    }
  }
  return out;
}

struct RatingRun {
  std::vector<Verdict> verdicts;
  std::vector<std::string> unrated_ids;
};

/// Autorater pass: one completion per item, processed in item_id order.
/// Unparseable replies mark the item unrated.
inline RatingRun rate_with_client(std::vector<SxSItem> items, CompletionClient& client, const std::string& model_id,
                                  std::uint64_t seed = 0) {
  std::sort(items.begin(), items.end(), [](const SxSItem& a, const SxSItem& b) { return a.item_id < b.item_id; });
  RatingRun run;
  for (const auto& item : items) {
    const auto reply = client.complete({model_id, build_rater_prompt(item, item.rubric_dims), 256, 0.0, seed});
    try {
      run.verdicts.push_back(parse_verdict(reply.text, item, Rater::Auto));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RatingParse) throw;
      run.unrated_ids.push_back(item.item_id);
    }
  }
  return run;
}

// Item files: one record per line.

inline nlohmann::json to_record(const SxSItem& it) {
  return {{"item_id", it.item_id},   {"context", it.context}, {"output_a", it.output_a},
          {"output_b", it.output_b}, {"flipped", it.flipped}, {"rubric_dims", it.rubric_dims}};
}

inline SxSItem item_from_record(const nlohmann::json& r) {
  SxSItem it;
  it.item_id = r.at("item_id").get<std::string>();
  it.context = r.at("context").get<std::string>();
  it.output_a = r.at("output_a").get<std::string>();
  it.output_b = r.at("output_b").get<std::string>();
  it.flipped = r.at("flipped").get<bool>();
  it.rubric_dims = r.at("rubric_dims").get<std::vector<std::string>>();
  return it;
}

}  // namespace planforge::sxs
