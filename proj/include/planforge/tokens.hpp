#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "planforge/text.hpp"

namespace planforge {

/// Approximate token count: one token per four code points, rounded up.
inline std::size_t estimate_tokens(std::string_view s) { return (text::count_code_points(s) + 3) / 4; }

using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// Safety margin applied to every configured limit when building.
inline constexpr double kTokenSafetyMargin = 0.05;

inline std::size_t budget_for(std::size_t limit) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(limit) * (1.0 - kTokenSafetyMargin)));
}

/// Longest prefix of `s` ending at a sentence end for which `fits` holds.
/// Falls back to word boundaries when no full sentence fits; returns an
/// empty view when nothing fits. `fits` must be monotone in prefix length.
template <typename Pred>
std::string_view fit_prefix_at_sentence(std::string_view s, Pred&& fits) {
  if (fits(s)) return s;
  const auto cut = [&](const std::vector<std::size_t>& ends) -> std::size_t {
    std::size_t lo = 0, hi = ends.size();  // answer index in [0, hi)
    std::size_t best = 0;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (fits(s.substr(0, ends[mid]))) {
        best = ends[mid];
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return best;
  };
  std::vector<std::size_t> ends;
  for (const auto& span : text::sentence_spans(s)) ends.push_back(span.second);
  if (const auto best = cut(ends); best > 0) return s.substr(0, best);
  ends.clear();
  for (const auto w : text::split_words(s)) ends.push_back(static_cast<std::size_t>(w.data() - s.data()) + w.size());
  return s.substr(0, cut(ends));
}

}  // namespace planforge
