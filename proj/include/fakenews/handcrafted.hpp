#pragma once

// 16 statistical features per post, computed on the raw text.

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fakenews/corpus.hpp"
#include "fakenews/detail/utf8.hpp"
#include "fakenews/preprocess.hpp"

namespace fakenews {

struct WordStats {
    double max_len = 0, min_len = 0, avg_len = 0, len_std = 0;
    std::size_t upper_initial = 0, lower_initial = 0;
};

struct CharStats {
    std::size_t digits = 0, letters = 0, spaces = 0, punct = 0, hashtags = 0;
    std::array<std::size_t, 5> vowels{}; // a, e, i, o, u
};

/// Field order of the 16-dimensional vector.
inline constexpr std::array<std::string_view, 16> kHandcraftedFeatureNames{
    "word_max_len", "word_min_len", "word_avg_len", "word_len_std", "upper_initial_count",
    "lower_initial_count", "digit_count", "letter_count", "space_count", "punct_count",
    "hashtag_count", "vowel_a", "vowel_e", "vowel_i", "vowel_o", "vowel_u"};

using HandcraftedVector = std::array<double, 16>;

/// Words are whitespace-separated; lengths count code points. Population std.
/// A word whose first character is not a cased letter counts toward neither
/// the upper nor the lower initial count. Zero words yields all zeros.
inline WordStats word_stats(std::string_view raw) {
    WordStats s;
    auto words = detail::split_ws(detail::decode_utf8_lossy(raw));
    if (words.empty()) return s;
    double sum = 0;
    s.min_len = static_cast<double>(words.front().size());
    for (const auto& w : words) {
        const auto len = static_cast<double>(w.size());
        s.max_len = std::max(s.max_len, len);
        s.min_len = std::min(s.min_len, len);
        sum += len;
        if (detail::unicode::is_upper(w.front())) ++s.upper_initial;
        else if (detail::unicode::is_lower(w.front())) ++s.lower_initial;
    }
    const auto n = static_cast<double>(words.size());
    s.avg_len = sum / n;
    double ss = 0;
    for (const auto& w : words) {
        const double dev = static_cast<double>(w.size()) - s.avg_len;
        ss += dev * dev;
    }
    s.len_std = std::sqrt(ss / n);
    return s;
}

/// '#' counts only as a hashtag; vowels are case-insensitive and are also letters.
inline CharStats char_stats(std::string_view raw) {
    CharStats s;
    for (char32_t c : detail::decode_utf8_lossy(raw)) {
        namespace u = detail::unicode;
        if (c == U'#') {
            ++s.hashtags;
        } else if (u::is_digit(c)) {
            ++s.digits;
        } else if (u::is_letter(c)) {
            ++s.letters;
            switch (u::to_lower(c)) {
            case U'a': ++s.vowels[0]; break;
            case U'e': ++s.vowels[1]; break;
            case U'i': ++s.vowels[2]; break;
            case U'o': ++s.vowels[3]; break;
            case U'u': ++s.vowels[4]; break;
            default: break;
            }
        } else if (u::is_space(c)) {
            ++s.spaces;
        } else if (u::is_punctuation(c)) {
            ++s.punct;
        }
    }
    return s;
}

inline HandcraftedVector handcrafted_vector(std::string_view raw) {
    const auto w = word_stats(raw);
    const auto c = char_stats(raw);
    auto d = [](std::size_t v) { return static_cast<double>(v); };
    return {w.max_len, w.min_len, w.avg_len, w.len_std, d(w.upper_initial), d(w.lower_initial),
            d(c.digits), d(c.letters), d(c.spaces), d(c.punct), d(c.hashtags),
            d(c.vowels[0]), d(c.vowels[1]), d(c.vowels[2]), d(c.vowels[3]), d(c.vowels[4])};
}

/// N x 16 matrix in dataset order.
inline Eigen::MatrixXd handcrafted_matrix(const Dataset& ds) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ds.size()), 16);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto v = handcrafted_vector(ds.records[i].text);
        for (int j = 0; j < 16; ++j) out(static_cast<Eigen::Index>(i), j) = v[static_cast<std::size_t>(j)];
    }
    return out;
}

} // namespace fakenews
