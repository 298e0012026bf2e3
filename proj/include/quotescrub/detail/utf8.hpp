#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace quotescrub::detail {

// One decoded unit of a UTF-8 stream. Invalid byte sequences are surfaced
// one byte at a time with `valid == false` so they can be passed through
// untouched; decoding is total over arbitrary byte strings.
struct DecodedChar {
  char32_t cp = 0;       // codepoint, or the raw byte value when !valid
  std::size_t length = 0;  // bytes consumed
  bool valid = false;
};

inline DecodedChar decode_utf8(std::string_view s, std::size_t pos) {
  const auto byte = [&](std::size_t i) -> std::uint8_t {
    return static_cast<std::uint8_t>(s[i]);
  };
  const std::uint8_t b0 = byte(pos);
  if (b0 < 0x80) {
    return {b0, 1, true};
  }
  const auto invalid = [&]() -> DecodedChar { return {b0, 1, false}; };
  const auto cont = [&](std::size_t i) {
    return i < s.size() && (byte(i) & 0xC0) == 0x80;
  };
  if ((b0 & 0xE0) == 0xC0) {
    if (!cont(pos + 1)) return invalid();
    const char32_t cp = (char32_t(b0 & 0x1F) << 6) | (byte(pos + 1) & 0x3F);
    if (cp < 0x80) return invalid();  // overlong
    return {cp, 2, true};
  }
  if ((b0 & 0xF0) == 0xE0) {
    if (!cont(pos + 1) || !cont(pos + 2)) return invalid();
    const char32_t cp = (char32_t(b0 & 0x0F) << 12) |
                        (char32_t(byte(pos + 1) & 0x3F) << 6) |
                        (byte(pos + 2) & 0x3F);
    if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) return invalid();
    return {cp, 3, true};
  }
  if ((b0 & 0xF8) == 0xF0) {
    if (!cont(pos + 1) || !cont(pos + 2) || !cont(pos + 3)) return invalid();
    const char32_t cp = (char32_t(b0 & 0x07) << 18) |
                        (char32_t(byte(pos + 1) & 0x3F) << 12) |
                        (char32_t(byte(pos + 2) & 0x3F) << 6) |
                        (byte(pos + 3) & 0x3F);
    if (cp < 0x10000 || cp > 0x10FFFF) return invalid();
    return {cp, 4, true};
  }
  return invalid();
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace quotescrub::detail
