#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fakenews/detail/unicode_tables.hpp"

namespace fakenews::detail {

/// Decodes UTF-8 into code points. Returns nullopt on any malformed sequence
/// (overlong forms, surrogates and values above U+10FFFF included).
inline std::optional<std::u32string> decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            return std::nullopt;
        }
        if (i + len > s.size()) return std::nullopt;
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) return std::nullopt;
            cp = (cp << 6) | (b & 0x3F);
        }
        static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return std::nullopt;
        out.push_back(cp);
        i += len;
    }
    return out;
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

inline std::string encode_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) append_utf8(out, cp);
    return out;
}

/// Lossy decode: malformed bytes become U+FFFD. Used where the input was
/// already validated upstream but may come from an arbitrary caller.
inline std::u32string decode_utf8_lossy(std::string_view s) {
    if (auto ok = decode_utf8(s)) return *ok;
    std::u32string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto b = static_cast<unsigned char>(s[i]);
        if (b < 0x80) {
            out.push_back(b);
            continue;
        }
        std::size_t len = (b & 0xE0) == 0xC0 ? 2 : (b & 0xF0) == 0xE0 ? 3 : (b & 0xF8) == 0xF0 ? 4 : 1;
        if (len > 1 && i + len <= s.size()) {
            if (auto cp = decode_utf8(s.substr(i, len)); cp && cp->size() == 1) {
                out.push_back((*cp)[0]);
                i += len - 1;
                continue;
            }
        }
        out.push_back(U'\uFFFD');
    }
    return out;
}

namespace unicode {

template <std::size_t N>
constexpr bool in_ranges(const std::array<Range, N>& table, char32_t cp) {
    auto it = std::upper_bound(table.begin(), table.end(), cp,
                               [](char32_t v, const Range& r) { return v < r.first; });
    if (it == table.begin()) return false;
    --it;
    return cp >= it->first && cp <= it->second;
}

inline bool is_punctuation(char32_t cp) { return in_ranges(kPunctuation, cp); }
inline bool is_letter(char32_t cp) { return in_ranges(kLetter, cp); }
inline bool is_upper(char32_t cp) { return in_ranges(kUpper, cp); }
inline bool is_lower(char32_t cp) { return in_ranges(kLower, cp); }
inline bool is_digit(char32_t cp) { return in_ranges(kDigit, cp); }
inline bool is_space(char32_t cp) { return in_ranges(kSpace, cp); }

inline char32_t to_lower(char32_t cp) {
    if (cp < 0x80) return (cp >= U'A' && cp <= U'Z') ? cp + 32 : cp;
    auto it = std::lower_bound(kLowerMap.begin(), kLowerMap.end(), cp,
                               [](const auto& p, char32_t v) { return p.first < v; });
    return (it != kLowerMap.end() && it->first == cp) ? it->second : cp;
}

} // namespace unicode

} // namespace fakenews::detail
