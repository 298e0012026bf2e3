#pragma once

#include <cassert>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "quotescrub/detail/unicode.hpp"
#include "quotescrub/detail/utf8.hpp"

namespace quotescrub {

// A span of characters in the original text, [start, end) in codepoint
// indices.
struct OrigSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

// A document together with its canonical form: lowercased, punctuation- and
// symbol-free, whitespace runs collapsed to single spaces, outer spaces
// stripped. Every normalized character remembers which original character it
// came from, so spans found in normalized space can be excised or highlighted
// in the user-visible text.
//
// "Character" always means Unicode codepoint. Bytes that do not form valid
// UTF-8 are carried through one byte at a time as opaque characters.
class NormalizedText {
 public:
  NormalizedText() = default;

  const std::string& original() const { return original_; }
  const std::string& normalized() const { return normalized_; }

  // Number of normalized characters.
  std::size_t size() const { return offset_map_.size(); }

  // Original-character index that normalized character `i` came from.
  // Strictly increasing in `i`; a collapsed whitespace run maps to its first
  // whitespace character.
  const std::vector<std::size_t>& offset_map() const { return offset_map_; }

  // UTF-8 bytes of normalized characters [pos, pos + count).
  std::string_view norm_slice(std::size_t pos, std::size_t count) const {
    assert(pos + count <= size());
    const std::size_t b0 = norm_char_offsets_[pos];
    return std::string_view(normalized_).substr(
        b0, norm_char_offsets_[pos + count] - b0);
  }

  // UTF-8 bytes of original characters [span.start, span.end).
  std::string_view original_slice(OrigSpan span) const {
    assert(span.start <= span.end && span.end < orig_char_offsets_.size());
    const std::size_t b0 = orig_char_offsets_[span.start];
    return std::string_view(original_).substr(
        b0, orig_char_offsets_[span.end] - b0);
  }

  std::size_t original_char_count() const {
    return orig_char_offsets_.size() - 1;
  }

  friend NormalizedText normalize(std::string_view text);

 private:
  std::string original_;
  std::string normalized_;
  std::vector<std::size_t> offset_map_;
  // Byte offset of each normalized character, plus an end sentinel.
  std::vector<std::size_t> norm_char_offsets_;
  // Byte offset of each original character, plus an end sentinel.
  std::vector<std::size_t> orig_char_offsets_;
};

// Deterministic, idempotent canonicalization: lowercase every character,
// delete punctuation and symbols, collapse whitespace runs to one space,
// strip leading and trailing spaces.
inline NormalizedText normalize(std::string_view text) {
  NormalizedText nt;
  nt.original_.assign(text);
  nt.normalized_.reserve(text.size());
  nt.orig_char_offsets_.reserve(text.size() + 1);

  // Index of the first whitespace character of the pending run, or npos.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t pending_space = kNone;

  std::size_t byte = 0;
  std::size_t char_index = 0;
  while (byte < text.size()) {
    nt.orig_char_offsets_.push_back(byte);
    const detail::DecodedChar dc = detail::decode_utf8(text, byte);
    byte += dc.length;

    if (dc.valid && detail::is_whitespace(dc.cp)) {
      if (pending_space == kNone) pending_space = char_index;
    } else if (dc.valid && detail::is_punct_or_symbol(dc.cp)) {
      // deleted
    } else {
      if (pending_space != kNone && !nt.normalized_.empty()) {
        nt.norm_char_offsets_.push_back(nt.normalized_.size());
        nt.normalized_.push_back(' ');
        nt.offset_map_.push_back(pending_space);
      }
      pending_space = kNone;
      nt.norm_char_offsets_.push_back(nt.normalized_.size());
      if (dc.valid) {
        detail::append_utf8(nt.normalized_, detail::to_lower(dc.cp));
      } else {
        nt.normalized_.push_back(text[byte - 1]);
      }
      nt.offset_map_.push_back(char_index);
    }
    ++char_index;
  }
  nt.orig_char_offsets_.push_back(text.size());
  nt.norm_char_offsets_.push_back(nt.normalized_.size());
  return nt;
}

// All width-n character windows of the normalized text, as (start, bytes)
// pairs. Empty when the text is shorter than n.
template <class F>
void for_each_char_ngram(const NormalizedText& nt, std::size_t n, F&& fn) {
  assert(n >= 1);
  if (nt.size() < n) return;
  for (std::size_t start = 0; start + n <= nt.size(); ++start) {
    fn(start, nt.norm_slice(start, n));
  }
}

inline std::vector<std::pair<std::size_t, std::string_view>> char_ngrams(
    const NormalizedText& nt, std::size_t n) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  if (nt.size() >= n) out.reserve(nt.size() - n + 1);
  for_each_char_ngram(nt, n, [&](std::size_t start, std::string_view window) {
    out.emplace_back(start, window);
  });
  return out;
}

// Maps normalized characters [start, end_exclusive) back to original
// characters. The caller must pass a non-empty in-range span.
inline OrigSpan to_original_span(const NormalizedText& nt, std::size_t start,
                                 std::size_t end_exclusive) {
  assert(start < end_exclusive && end_exclusive <= nt.size());
  return {nt.offset_map()[start], nt.offset_map()[end_exclusive - 1] + 1};
}

}  // namespace quotescrub
