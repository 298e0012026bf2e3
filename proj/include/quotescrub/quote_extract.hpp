#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "quotescrub/bloom_sketch.hpp"
#include "quotescrub/text_normalize.hpp"

namespace quotescrub {

// A detected verbatim quote. Coordinates are codepoint indices; `length` is
// measured in normalized characters and always satisfies
// length == ngram_width + hits - 1 for the window-hit run that produced it.
struct QuoteSpan {
  std::size_t norm_start = 0;
  std::size_t norm_end = 0;  // exclusive
  std::size_t orig_start = 0;
  std::size_t orig_end = 0;  // exclusive
  std::size_t length = 0;
  std::string text;  // original-text excerpt
};

namespace detail {

inline QuoteSpan make_span(const NormalizedText& nt, std::size_t run_start,
                           std::size_t run_hits, std::size_t n) {
  QuoteSpan span;
  span.norm_start = run_start;
  span.norm_end = run_start + n + run_hits - 1;
  span.length = span.norm_end - span.norm_start;
  const OrigSpan orig = to_original_span(nt, span.norm_start, span.norm_end);
  span.orig_start = orig.start;
  span.orig_end = orig.end;
  span.text.assign(nt.original_slice(orig));
  return span;
}

}  // namespace detail

// Slides a width-n window over the normalized response and merges runs of
// consecutive window hits into maximal spans: a run of k hits starting at
// position p becomes one span [p, p + n + k - 1). A single window miss ends
// the run, so spans are structurally disjoint and sorted.
//
// Every substring of the response that occurs verbatim in the indexed corpus
// with normalized length >= n is covered by exactly one returned span (the
// filter has no false negatives); false positives can only add or lengthen
// spans, never drop one.
inline std::vector<QuoteSpan> extract_quotes(const BloomSketch& sk,
                                             const NormalizedText& nt) {
  const std::size_t n = sk.ngram_width();
  std::vector<QuoteSpan> spans;
  std::size_t run_start = 0;
  std::size_t run_hits = 0;
  for_each_char_ngram(nt, n, [&](std::size_t start, std::string_view window) {
    if (sk.contains(window)) {
      if (run_hits == 0) run_start = start;
      ++run_hits;
    } else if (run_hits > 0) {
      spans.push_back(detail::make_span(nt, run_start, run_hits, n));
      run_hits = 0;
    }
  });
  if (run_hits > 0) {
    spans.push_back(detail::make_span(nt, run_start, run_hits, n));
  }
  return spans;
}

inline std::vector<QuoteSpan> extract_quotes(const BloomSketch& sk,
                                             const std::string& response) {
  return extract_quotes(sk, normalize(response));
}

inline std::size_t max_quote_len(const std::vector<QuoteSpan>& spans) {
  std::size_t max_len = 0;
  for (const QuoteSpan& s : spans) max_len = std::max(max_len, s.length);
  return max_len;
}

// True iff any width-tau window of the normalized response is a member of
// the metric sketch. False certifies the absence of any corpus quote of
// length >= tau; true may be a false positive at the filter's FPR.
inline bool contains_quote_longer_than(const BloomSketch& sk_tau,
                                       const NormalizedText& nt) {
  const std::size_t tau = sk_tau.ngram_width();
  bool hit = false;
  if (nt.size() < tau) return false;
  for (std::size_t start = 0; !hit && start + tau <= nt.size(); ++start) {
    hit = sk_tau.contains(nt.norm_slice(start, tau));
  }
  return hit;
}

inline bool contains_quote_longer_than(const BloomSketch& sk_tau,
                                       const std::string& response) {
  return contains_quote_longer_than(sk_tau, normalize(response));
}

}  // namespace quotescrub
