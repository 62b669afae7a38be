#pragma once

// Shared text segmentation: words, sentences, and sentence-boundary
// truncation. Every module that counts or cuts text goes through here so the
// numbers agree pipeline-wide.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace planforge::text {

struct DecodedChar {
  char32_t code_point;
  std::size_t length;  // bytes consumed; invalid sequences consume one byte
};

/// Decodes one UTF-8 sequence at `pos`. Malformed input yields U+FFFD and
/// advances a single byte so scanning always terminates.
inline DecodedChar decode_utf8(std::string_view s, std::size_t pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char b0 = byte(pos);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (pos + len > s.size()) return {0xFFFD, 1};
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char b = byte(pos + i);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

/// Unicode White_Space property.
inline bool is_space(char32_t cp) {
  if (cp >= 0x09 && cp <= 0x0D) return true;
  switch (cp) {
    case 0x20: case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline std::size_t count_code_points(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); i += decode_utf8(s, i).length) ++n;
  return n;
}

/// Byte offset of the `n`-th code point (or s.size()).
inline std::size_t code_point_offset(std::string_view s, std::size_t n) {
  std::size_t i = 0;
  for (; i < s.size() && n > 0; --n) i += decode_utf8(s, i).length;
  return i;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size()) {
    const auto d = decode_utf8(s, b);
    if (!is_space(d.code_point)) break;
    b += d.length;
  }
  std::size_t e = s.size();
  while (e > b) {
    // step back to the start of the previous code point
    std::size_t p = e - 1;
    while (p > b && (static_cast<unsigned char>(s[p]) & 0xC0) == 0x80) --p;
    if (!is_space(decode_utf8(s, p).code_point)) break;
    e = p;
  }
  return s.substr(b, e - b);
}

/// Words are maximal runs of non-whitespace code points.
inline std::size_t count_words(std::string_view s) {
  std::size_t words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode_utf8(s, i);
    const bool space = is_space(d.code_point);
    if (!space && !in_word) ++words;
    in_word = !space;
    i += d.length;
  }
  return words;
}

inline std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = std::string_view::npos;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto d = decode_utf8(s, i);
    if (is_space(d.code_point)) {
      if (start != std::string_view::npos) out.push_back(s.substr(start, i - start));
      start = std::string_view::npos;
    } else if (start == std::string_view::npos) {
      start = i;
    }
    i += d.length;
  }
  if (start != std::string_view::npos) out.push_back(s.substr(start));
  return out;
}

/// Tokens that end with a period but do not end a sentence. Compared after
/// lowercasing and stripping leading brackets/quotes.
inline constexpr std::array<std::string_view, 44> kAbbreviations = {
    "mr.",    "mrs.", "ms.",  "dr.",   "prof.", "sr.",  "jr.",  "st.",  "vs.",
    "etc.",   "e.g.", "i.e.", "fig.",  "figs.", "al.",  "no.",  "vol.", "inc.",
    "ltd.",   "co.",  "corp.", "dept.", "est.", "approx.", "jan.", "feb.", "mar.",
    "apr.",   "jun.", "jul.", "aug.",  "sep.", "sept.", "oct.", "nov.", "dec.",
    "u.s.",   "u.k.", "gen.", "col.",  "lt.",  "rev.", "mt.",  "ph.d.",
};

namespace detail {

inline bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

inline bool is_opening(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

inline bool is_closing(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

inline bool starts_sentence(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Length in bytes of a UTF-8 right quote (’ or ”) at pos, else 0.
inline std::size_t closing_quote_len(std::string_view s, std::size_t pos) {
  if (pos + 3 <= s.size() && s[pos] == '\xE2' && s[pos + 1] == '\x80' &&
      (s[pos + 2] == '\x99' || s[pos + 2] == '\x9D')) {
    return 3;
  }
  return 0;
}

inline bool is_abbreviation(std::string_view token) {
  while (!token.empty() && is_opening(token.front())) token.remove_prefix(1);
  std::string lower(token);
  for (auto& c : lower) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  // single-letter initials ("J. K. Rowling")
  if (lower.size() == 2 && lower[1] == '.' && lower[0] >= 'a' && lower[0] <= 'z') return true;
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) != kAbbreviations.end();
}

// Appends sentence spans (absolute offsets, trimmed, non-empty) for one line.
inline void segment_line(std::string_view text, std::size_t line_begin, std::size_t line_end,
                         std::vector<std::pair<std::size_t, std::size_t>>& out) {
  const auto emit = [&](std::size_t b, std::size_t e) {
    const auto piece = trim(text.substr(b, e - b));
    if (!piece.empty()) {
      const auto off = static_cast<std::size_t>(piece.data() - text.data());
      out.emplace_back(off, off + piece.size());
    }
  };
  std::size_t sentence_begin = line_begin;
  std::size_t i = line_begin;
  while (i < line_end) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    const std::size_t term_begin = i;
    while (i < line_end && is_terminator(text[i])) ++i;
    const std::size_t term_end = i;
    while (i < line_end) {
      if (is_closing(text[i])) {
        ++i;
      } else if (const auto q = closing_quote_len(text, i); q > 0 && i + q <= line_end) {
        i += q;
      } else {
        break;
      }
    }
    const std::size_t boundary = i;
    if (boundary >= line_end) break;
    std::size_t j = boundary;
    bool saw_space = false;
    while (j < line_end) {
      const auto d = decode_utf8(text, j);
      if (!is_space(d.code_point)) break;
      saw_space = true;
      j += d.length;
    }
    if (!saw_space || j >= line_end) continue;
    char next = text[j];
    if (is_opening(next) && j + 1 < line_end) next = text[j + 1];
    if (!starts_sentence(next)) continue;
    // token holding the terminator, used for the abbreviation check
    std::size_t tok_begin = term_begin;
    while (tok_begin > sentence_begin) {
      std::size_t p = tok_begin - 1;
      while (p > sentence_begin && (static_cast<unsigned char>(text[p]) & 0xC0) == 0x80) --p;
      if (is_space(decode_utf8(text, p).code_point)) break;
      tok_begin = p;
    }
    if (text[term_begin] == '.' && term_end == term_begin + 1 &&
        is_abbreviation(text.substr(tok_begin, term_end - tok_begin))) {
      continue;
    }
    emit(sentence_begin, boundary);
    sentence_begin = boundary;
  }
  emit(sentence_begin, line_end);
}

}  // namespace detail

/// Sentence spans as [begin, end) byte offsets into `s`, trimmed and
/// non-empty, in text order.
///
/// Rules (frozen): every line break ends a sentence; inside a line a run of
/// `.`, `!` or `?` (plus any closing quotes/brackets) ends a sentence when it
/// is followed by whitespace and then an ASCII uppercase letter or digit,
/// optionally behind an opening quote or bracket. A lone `.` closing a token
/// from kAbbreviations, or a single-letter initial, never ends a sentence.
inline std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(std::string_view s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t line_begin = 0;
  while (line_begin <= s.size()) {
    std::size_t line_end = s.find('\n', line_begin);
    if (line_end == std::string_view::npos) line_end = s.size();
    detail::segment_line(s, line_begin, line_end, out);
    if (line_end == s.size()) break;
    line_begin = line_end + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_sentences(std::string_view s) {
  std::vector<std::string_view> out;
  for (const auto& [b, e] : sentence_spans(s)) out.push_back(s.substr(b, e - b));
  return out;
}

inline std::size_t count_sentences(std::string_view s) { return sentence_spans(s).size(); }

/// Longest prefix of `s` that ends at a sentence end and holds at most
/// `max_code_points` code points. Falls back to the last word boundary when
/// not even the first sentence fits. Returns `s` unchanged when it fits.
inline std::string_view truncate_at_sentence(std::string_view s, std::size_t max_code_points) {
  if (count_code_points(s) <= max_code_points) return s;
  const std::size_t limit = code_point_offset(s, max_code_points);
  std::size_t best = 0;
  for (const auto& span : sentence_spans(s)) {
    if (span.second > limit) break;
    best = span.second;
  }
  if (best > 0) return s.substr(0, best);
  std::size_t word_end = 0;
  for (const auto w : split_words(s)) {
    const auto end = static_cast<std::size_t>(w.data() - s.data()) + w.size();
    if (end > limit) break;
    word_end = end;
  }
  return s.substr(0, word_end);
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t b = 0;
  while (true) {
    const auto e = s.find('\n', b);
    auto line = s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return lines;
}

}  // namespace planforge::text
