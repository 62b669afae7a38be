#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the code paths it checks, apart from shared data types.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// --- segmentation ----------------------------------------------------------

inline std::vector<std::string> ascii_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::size_t word_count(const std::string& s) { return ascii_tokens(s).size(); }

inline const std::set<std::string>& abbreviations() {
  static const std::set<std::string> a = {
      "mr.",  "mrs.", "ms.",  "dr.",  "prof.", "sr.",  "jr.",   "st.",    "vs.",  "etc.", "e.g.",
      "i.e.", "fig.", "figs.", "al.", "no.",   "vol.", "inc.",  "ltd.",   "co.",  "corp.", "dept.",
      "est.", "approx.", "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.",
      "oct.", "nov.", "dec.", "u.s.", "u.k.", "gen.", "col.", "lt.", "rev.", "mt.", "ph.d."};
  return a;
}

// Sentence count over ASCII text: tokens on each line, a boundary between
// consecutive tokens when the left one ends in a terminator run (plus
// closers) that is not a lone abbreviation period, and the right one starts
// with an uppercase letter or digit (possibly behind one opener).
inline std::size_t sentence_count(const std::string& s) {
  std::size_t total = 0;
  std::size_t b = 0;
  while (true) {
    const auto e = s.find('\n', b);
    const auto line = s.substr(b, e == std::string::npos ? std::string::npos : e - b);
    const auto toks = ascii_tokens(line);
    if (!toks.empty()) {
      std::size_t n = 1;
      for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        std::string left = toks[i];
        while (!left.empty() && std::string("\"')]").find(left.back()) != std::string::npos) left.pop_back();
        if (left.empty()) continue;
        const char last = left.back();
        if (last != '.' && last != '!' && last != '?') continue;
        std::string right = toks[i + 1];
        char first = right[0];
        if (std::string("\"'([").find(first) != std::string::npos && right.size() > 1) first = right[1];
        if (!std::isupper(static_cast<unsigned char>(first)) && !std::isdigit(static_cast<unsigned char>(first))) {
          continue;
        }
        const bool lone_period = last == '.' && (left.size() == 1 || std::string(".!?").find(left[left.size() - 2]) == std::string::npos);
        if (lone_period) {
          std::string tok = left;
          while (!tok.empty() && std::string("\"'([").find(tok.front()) != std::string::npos) tok.erase(tok.begin());
          for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          const bool initial = tok.size() == 2 && std::isalpha(static_cast<unsigned char>(tok[0]));
          if (initial || abbreviations().count(tok)) continue;
        }
        ++n;
      }
      total += n;
    }
    if (e == std::string::npos) break;
    b = e + 1;
  }
  return total;
}

// --- ROUGE -----------------------------------------------------------------

using Tokens = std::vector<std::string>;

inline Tokens rouge_tokens(const std::string& s) {
  std::string lower = s;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::regex word("[a-z0-9]+");
  Tokens out;
  for (auto it = std::sregex_iterator(lower.begin(), lower.end(), word); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

struct PRF {
  double p = 0, r = 0, f = 0;
};

inline PRF prf(double p, double r) { return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0}; }

inline std::vector<Tokens> grams(const Tokens& t, std::size_t n) {
  std::vector<Tokens> g;
  for (std::size_t i = 0; i + n <= t.size(); ++i) g.emplace_back(t.begin() + i, t.begin() + i + n);
  return g;
}

// Naive multiset counting: for every distinct n-gram, count occurrences on
// both sides by linear scans.
inline PRF rouge_n(const Tokens& c, const Tokens& r, std::size_t n) {
  const auto cg = grams(c, n), rg = grams(r, n);
  if (cg.empty() || rg.empty()) return {};
  std::vector<Tokens> distinct;
  for (const auto& g : cg) {
    if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
  }
  std::size_t overlap = 0;
  for (const auto& g : distinct) {
    const auto in_c = static_cast<std::size_t>(std::count(cg.begin(), cg.end(), g));
    const auto in_r = static_cast<std::size_t>(std::count(rg.begin(), rg.end(), g));
    overlap += std::min(in_c, in_r);
  }
  return prf(double(overlap) / double(cg.size()), double(overlap) / double(rg.size()));
}

inline bool is_subsequence(const Tokens& sub, const Tokens& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Exhaustive search over subsequences of `a` (depth-first over include /
// exclude), keeping only prefixes that remain subsequences of `b`, with a
// length bound to cut branches that cannot beat the best found.
inline std::size_t lcs(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  std::function<void(std::size_t, std::size_t, std::size_t)> dfs = [&](std::size_t i, std::size_t j, std::size_t len) {
    best = std::max(best, len);
    if (i == a.size() || j == b.size()) return;
    if (len + std::min(a.size() - i, b.size() - j) <= best) return;
    // include a[i]: earliest match in b at or after j
    for (std::size_t k = j; k < b.size(); ++k) {
      if (b[k] == a[i]) {
        dfs(i + 1, k + 1, len + 1);
        break;
      }
    }
    dfs(i + 1, j, len);
  };
  dfs(0, 0, 0);
  return best;
}

// Plain enumeration of every index subset; only for very short inputs.
inline std::size_t lcs_enumerate(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

inline PRF rouge_l(const Tokens& c, const Tokens& r) {
  if (c.empty() || r.empty()) return {};
  const double l = double(lcs(c, r));
  return prf(l / double(c.size()), l / double(r.size()));
}

// LCS positions in `ref` along the canonical path (match when equal, else
// move along cand iff that prefix pair has strictly larger LCS).
inline std::vector<std::size_t> lcs_path(const Tokens& ref, const Tokens& cand) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  const auto L = [&](std::size_t i, std::size_t j) {
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const auto v = lcs(Tokens(ref.begin(), ref.begin() + i), Tokens(cand.begin(), cand.begin() + j));
    memo[key] = v;
    return v;
  };
  std::vector<std::size_t> pos;
  std::size_t i = ref.size(), j = cand.size();
  while (i > 0 && j > 0) {
    if (ref[i - 1] == cand[j - 1]) {
      pos.push_back(i - 1);
      --i;
      --j;
    } else if (L(i, j - 1) > L(i - 1, j)) {
      --j;
    } else {
      --i;
    }
  }
  return pos;
}

inline PRF rouge_lsum(const std::vector<Tokens>& cand, const std::vector<Tokens>& ref) {
  Tokens all_c, all_r;
  for (const auto& s : cand) all_c.insert(all_c.end(), s.begin(), s.end());
  for (const auto& s : ref) all_r.insert(all_r.end(), s.begin(), s.end());
  if (all_c.empty() || all_r.empty()) return {};
  std::map<std::string, long> cc, rc;
  for (const auto& t : all_c) ++cc[t];
  for (const auto& t : all_r) ++rc[t];
  std::size_t hits = 0;
  for (const auto& r : ref) {
    std::set<std::size_t> uni;
    for (const auto& c : cand) {
      for (const auto p : lcs_path(r, c)) uni.insert(p);
    }
    for (const auto p : uni) {
      if (cc[r[p]] > 0 && rc[r[p]] > 0) {
        ++hits;
        --cc[r[p]];
        --rc[r[p]];
      }
    }
  }
  return prf(double(hits) / double(all_c.size()), double(hits) / double(all_r.size()));
}

// --- Algorithm 1 re-scoring ------------------------------------------------

// Length shape written piecewise rather than through the clamp.
inline double shape(double r, double target) {
  if (r <= 0) return 0.0;
  if (r <= target) return std::sin(std::numbers::pi * r / (2 * target));
  if (r < 2 * target) return std::sin(std::numbers::pi * (2 * target - r) / (2 * target));
  return 0.0;
}

inline double containment(const Tokens& premise, const Tokens& hypothesis) {
  if (hypothesis.empty()) return 0.0;
  std::size_t hits = 0;
  std::vector<bool> used(premise.size(), false);
  for (const auto& h : hypothesis) {
    for (std::size_t i = 0; i < premise.size(); ++i) {
      if (!used[i] && premise[i] == h) {
        used[i] = true;
        ++hits;
        break;
      }
    }
  }
  return double(hits) / double(hypothesis.size());
}

inline double quality(const std::string& cand, const std::string& article, double tw, double ts) {
  const double wc = double(word_count(article)), sc = double(sentence_count(article));
  if (ascii_tokens(cand).empty()) return 0.0;
  const double len = shape(double(word_count(cand)) / wc, tw) * shape(double(sentence_count(cand)) / sc, ts);
  const auto a = rouge_tokens(article), c = rouge_tokens(cand);
  return len * (containment(a, c) + containment(c, a));
}

inline std::size_t best_index(const std::vector<std::string>& cands, const std::string& article, double tw,
                              double ts) {
  std::size_t best = 0;
  double best_q = -1;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double q = quality(cands[i], article, tw, ts);
    if (q > best_q) {
      best_q = q;
      best = i;
    }
  }
  return best;
}

}  // namespace oracle
