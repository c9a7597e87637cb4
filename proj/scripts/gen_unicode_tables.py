#!/usr/bin/env python3
"""Regenerates include/fakenews/detail/unicode_tables.hpp from Python's unicodedata."""
import sys
import unicodedata

def ranges(pred):
    out, start = [], None
    for cp in range(0x110000):
        if pred(cp):
            if start is None:
                start = cp
        elif start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, 0x10FFFF))
    return out

def cat(cp):
    return unicodedata.category(chr(cp))

ASCII_SYMBOLS = set(map(ord, "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"))
WHITESPACE = set(range(0x09, 0x0E)) | set(range(0x1C, 0x20)) | {0x20, 0x85, 0x2028, 0x2029}

tables = {
    "kPunctuation": ranges(lambda c: cat(c).startswith("P") or c in ASCII_SYMBOLS),
    "kLetter": ranges(lambda c: cat(c).startswith("L")),
    "kUpper": ranges(lambda c: cat(c) in ("Lu", "Lt")),
    "kLower": ranges(lambda c: cat(c) == "Ll"),
    "kDigit": ranges(lambda c: cat(c) == "Nd"),
    "kSpace": ranges(lambda c: cat(c) == "Zs" or c in WHITESPACE),
}

lower = []
for cp in range(0x110000):
    ch = chr(cp)
    lo = ch.lower()
    if len(lo) == 1 and lo != ch:
        lower.append((cp, ord(lo)))

out = sys.stdout
out.write("// Generated by scripts/gen_unicode_tables.py (Unicode %s). Do not edit.\n" % unicodedata.unidata_version)
out.write("#pragma once\n\n#include <array>\n#include <cstdint>\n#include <utility>\n\n")
out.write("namespace fakenews::detail::unicode {\n\n")
out.write("using Range = std::pair<char32_t, char32_t>;\n\n")
for name, rs in tables.items():
    out.write("inline constexpr std::array<Range, %d> %s{{\n" % (len(rs), name))
    for a, b in rs:
        out.write("    {0x%X, 0x%X},\n" % (a, b))
    out.write("}};\n\n")
out.write("inline constexpr std::array<std::pair<char32_t, char32_t>, %d> kLowerMap{{\n" % len(lower))
for a, b in lower:
    out.write("    {0x%X, 0x%X},\n" % (a, b))
out.write("}};\n\n} // namespace fakenews::detail::unicode\n")
