#!/usr/bin/env python3
"""Regenerates include/quotescrub/detail/unicode_tables.hpp from Python's
unicodedata. Run from the repository root:

    python3 tools/gen_unicode_tables.py > include/quotescrub/detail/unicode_tables.hpp
"""
import sys
import unicodedata


def punct_symbol_ranges():
    ranges = []
    start = None
    for cp in range(0x110000):
        if unicodedata.category(chr(cp))[0] in "PS":
            if start is None:
                start = cp
        elif start is not None:
            ranges.append((start, cp - 1))
            start = None
    if start is not None:
        ranges.append((start, 0x10FFFF))
    return ranges


def simple_lowercase_pairs():
    pairs = []
    for cp in range(0x110000):
        low = chr(cp).lower()
        if low == chr(cp):
            continue
        # U+0130 is the only codepoint whose full lowercase is multi-char;
        # its simple (1:1) mapping is plain 'i'.
        pairs.append((cp, ord(low[0])))
    return pairs


def main():
    out = sys.stdout
    ps = punct_symbol_ranges()
    lc = simple_lowercase_pairs()
    out.write("// Generated by tools/gen_unicode_tables.py (unicodedata %s). Do not edit.\n"
              % unicodedata.unidata_version)
    out.write("#pragma once\n\n#include <cstdint>\n\n")
    out.write("namespace quotescrub::detail {\n\n")
    out.write("struct CodepointRange {\n  char32_t lo;\n  char32_t hi;\n};\n\n")
    out.write("struct CaseMapping {\n  char32_t from;\n  char32_t to;\n};\n\n")
    out.write("// General categories P* (punctuation) and S* (symbol).\n")
    out.write("inline constexpr CodepointRange kPunctSymbolRanges[] = {\n")
    for i, (lo, hi) in enumerate(ps):
        sep = "\n" if i % 4 == 3 or i == len(ps) - 1 else " "
        out.write("    {0x%X, 0x%X},%s" % (lo, hi, sep))
    out.write("};\n\n")
    out.write("// Simple (1:1) lowercase mappings for every codepoint whose\n")
    out.write("// lowercase differs from itself.\n")
    out.write("inline constexpr CaseMapping kLowercaseMappings[] = {\n")
    for i, (f, t) in enumerate(lc):
        sep = "\n" if i % 4 == 3 or i == len(lc) - 1 else " "
        out.write("    {0x%X, 0x%X},%s" % (f, t, sep))
    out.write("};\n\n")
    out.write("}  // namespace quotescrub::detail\n")


if __name__ == "__main__":
    main()
