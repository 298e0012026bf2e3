#pragma once

#include <algorithm>
#include <iterator>

#include "quotescrub/detail/unicode_tables.hpp"

namespace quotescrub::detail {

// Unicode White_Space property (PropList.txt).
inline bool is_whitespace(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_punct_or_symbol(char32_t cp) {
  const auto* last = std::end(kPunctSymbolRanges);
  const auto* it = std::upper_bound(
      std::begin(kPunctSymbolRanges), last, cp,
      [](char32_t v, const CodepointRange& r) { return v < r.lo; });
  return it != std::begin(kPunctSymbolRanges) && cp <= std::prev(it)->hi;
}

inline char32_t to_lower(char32_t cp) {
  // ASCII fast path.
  if (cp < 0x80) {
    return (cp >= U'A' && cp <= U'Z') ? cp + 0x20 : cp;
  }
  const auto* last = std::end(kLowercaseMappings);
  const auto* it = std::lower_bound(
      std::begin(kLowercaseMappings), last, cp,
      [](const CaseMapping& m, char32_t v) { return m.from < v; });
  return (it != last && it->from == cp) ? it->to : cp;
}

}  // namespace quotescrub::detail
