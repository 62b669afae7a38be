#pragma once

// ROUGE-1/2/L/Lsum precision, recall and F1.

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "planforge/error.hpp"
#include "planforge/porter.hpp"
#include "planforge/text.hpp"

namespace planforge::rouge {

struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f_measure(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline Score make_score(double p, double r) { return {p, r, f_measure(p, r)}; }

struct RougeScores {
  Score rouge1;
  Score rouge2;
  Score rouge_l;
  Score rouge_lsum;
};

struct Options {
  bool stem = false;
  bool remove_stopwords = false;
};

inline const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "about", "above", "after", "again", "against", "all",   "am",    "an",    "and",   "any",
      "are",   "as",    "at",    "be",    "because", "been",  "before", "being", "below", "between", "both",
      "but",   "by",    "can",   "could", "did",   "do",      "does",  "doing", "down",  "during", "each",
      "few",   "for",   "from",  "further", "had", "has",     "have",  "having", "he",   "her",   "here",
      "hers",  "herself", "him", "himself", "his", "how",     "i",     "if",    "in",    "into",  "is",
      "it",    "its",   "itself", "just", "me",    "more",    "most",  "my",    "myself", "no",   "nor",
      "not",   "now",   "of",    "off",   "on",    "once",    "only",  "or",    "other", "our",   "ours",
      "ourselves", "out", "over", "own",  "same",  "she",     "should", "so",   "some",  "such",  "than",
      "that",  "the",   "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to",  "too",   "under", "until",   "up",    "very",  "was",   "we",    "were",
      "what",  "when",  "where", "which", "while", "who",     "whom",  "why",   "will",  "with",  "would",
      "you",   "your",  "yours", "yourself", "yourselves"};
  return words;
}

using Tokens = std::vector<std::string>;

/// Lowercases and splits on anything that is not an ASCII letter or digit.
inline Tokens tokenize(std::string_view s, const Options& opts = {}) {
  Tokens out;
  std::string cur;
  const auto flush = [&] {
    if (cur.empty()) return;
    if (opts.remove_stopwords && stopwords().count(cur) != 0) {
      cur.clear();
      return;
    }
    if (opts.stem && cur.size() > 3) cur = porter::stem(cur);
    out.push_back(std::move(cur));
    cur.clear();
  };
  for (const char c : s) {
    if (c >= 'A' && c <= 'Z') {
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace detail {

inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(std::span<const std::string> tokens,
                                                                        std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> counts;
  if (n == 0 || tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[gram];
  }
  return counts;
}

// Full LCS table: table[i][j] = LCS of a[0..i) and b[0..j).
inline std::vector<std::vector<std::size_t>> lcs_table(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t;
}

// Positions in `ref` on one LCS path against `cand`. From the end: take a
// match when tokens agree, else step along cand when that keeps a strictly
// longer LCS, otherwise along ref.
inline std::vector<std::size_t> lcs_positions(std::span<const std::string> ref, std::span<const std::string> cand) {
  const auto t = lcs_table(ref, cand);
  std::vector<std::size_t> pos;
  std::size_t i = ref.size(), j = cand.size();
  while (i > 0 && j > 0) {
    if (ref[i - 1] == cand[j - 1]) {
      pos.push_back(i - 1);
      --i;
      --j;
    } else if (t[i][j - 1] > t[i - 1][j]) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(pos.begin(), pos.end());
  return pos;
}

}  // namespace detail

/// Clipped n-gram overlap.
inline Score rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::Validation, "rouge_n needs n >= 1");
  const auto c = detail::ngram_counts(candidate, n);
  const auto r = detail::ngram_counts(reference, n);
  std::size_t overlap = 0, c_total = 0, r_total = 0;
  for (const auto& [g, cnt] : c) {
    c_total += cnt;
    if (const auto it = r.find(g); it != r.end()) overlap += std::min(cnt, it->second);
  }
  for (const auto& [g, cnt] : r) r_total += cnt;
  const double p = c_total ? static_cast<double>(overlap) / static_cast<double>(c_total) : 0.0;
  const double rec = r_total ? static_cast<double>(overlap) / static_cast<double>(r_total) : 0.0;
  return make_score(p, rec);
}

inline Score rouge_n(std::string_view candidate, std::string_view reference, std::size_t n, const Options& opts = {}) {
  return rouge_n(tokenize(candidate, opts), tokenize(reference, opts), n);
}

/// LCS length in O(|a|·|b|) time and O(min(|a|, |b|)) memory.
inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (const auto& x : a) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = x == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline Score rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) return {};
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  return make_score(lcs / static_cast<double>(candidate.size()), lcs / static_cast<double>(reference.size()));
}

inline Score rouge_l(std::string_view candidate, std::string_view reference, const Options& opts = {}) {
  return rouge_l(tokenize(candidate, opts), tokenize(reference, opts));
}

/// Summary-level union LCS over tokenized sentences.
inline Score rouge_lsum(const std::vector<Tokens>& candidate_sents, const std::vector<Tokens>& reference_sents) {
  std::unordered_map<std::string_view, std::size_t> c_counts, r_counts;
  std::size_t c_total = 0, r_total = 0;
  for (const auto& s : candidate_sents) {
    for (const auto& t : s) ++c_counts[t];
    c_total += s.size();
  }
  for (const auto& s : reference_sents) {
    for (const auto& t : s) ++r_counts[t];
    r_total += s.size();
  }
  if (c_total == 0 || r_total == 0) return {};

  std::size_t hits = 0;
  for (const auto& ref : reference_sents) {
    std::set<std::size_t> uni;
    for (const auto& cand : candidate_sents) {
      for (const auto p : detail::lcs_positions(ref, cand)) uni.insert(p);
    }
    for (const auto p : uni) {
      auto& cc = c_counts[ref[p]];
      auto& rc = r_counts[ref[p]];
      if (cc > 0 && rc > 0) {
        ++hits;
        --cc;
        --rc;
      }
    }
  }
  return make_score(static_cast<double>(hits) / static_cast<double>(c_total),
                    static_cast<double>(hits) / static_cast<double>(r_total));
}

/// Sentences come from the shared segmenter (line breaks always split).
inline std::vector<Tokens> tokenize_sentences(std::string_view s, const Options& opts = {}) {
  std::vector<Tokens> out;
  for (const auto sent : text::split_sentences(s)) {
    auto toks = tokenize(sent, opts);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

inline Score rouge_lsum(std::string_view candidate, std::string_view reference, const Options& opts = {}) {
  return rouge_lsum(tokenize_sentences(candidate, opts), tokenize_sentences(reference, opts));
}

inline RougeScores score_pair(std::string_view candidate, std::string_view reference, const Options& opts = {}) {
  const auto c = tokenize(candidate, opts);
  const auto r = tokenize(reference, opts);
  return {rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r),
          rouge_lsum(tokenize_sentences(candidate, opts), tokenize_sentences(reference, opts))};
}

/// Arithmetic mean of per-pair precision, recall and F1.
inline RougeScores mean(const std::vector<RougeScores>& per_pair) {
  if (per_pair.empty()) throw Error(ErrorKind::Validation, "corpus_rouge needs at least one pair");
  RougeScores acc;
  const auto add = [](Score& into, const Score& s) {
    into.precision += s.precision;
    into.recall += s.recall;
    into.f1 += s.f1;
  };
  for (const auto& s : per_pair) {
    add(acc.rouge1, s.rouge1);
    add(acc.rouge2, s.rouge2);
    add(acc.rouge_l, s.rouge_l);
    add(acc.rouge_lsum, s.rouge_lsum);
  }
  const auto n = static_cast<double>(per_pair.size());
  for (auto* s : {&acc.rouge1, &acc.rouge2, &acc.rouge_l, &acc.rouge_lsum}) {
    s->precision /= n;
    s->recall /= n;
    s->f1 /= n;
  }
  return acc;
}

inline RougeScores corpus_rouge(const std::vector<std::pair<std::string, std::string>>& pairs, const Options& opts = {}) {
  std::vector<RougeScores> per_pair;
  per_pair.reserve(pairs.size());
  for (const auto& [c, r] : pairs) per_pair.push_back(score_pair(c, r, opts));
  return mean(per_pair);
}

}  // namespace planforge::rouge
