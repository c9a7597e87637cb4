#pragma once

// Deterministic text cleaning: lowercase, drop hashtag tokens, strip
// punctuation, collapse whitespace, drop stopwords.

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fakenews/detail/utf8.hpp"
#include "fakenews/error.hpp"

namespace fakenews {

namespace stopwords {

/// English list, 179 entries. Entries containing an apostrophe can only
/// match when punctuation stripping is off.
inline constexpr std::string_view kEnglish179Id = "english-179-v1";

inline constexpr std::array<std::string_view, 179> kEnglish179{
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've", "you'll",
    "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "she's",
    "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs",
    "themselves", "what", "which", "who", "whom", "this", "that", "that'll", "these", "those", "am", "is",
    "are", "was", "were", "be", "been", "being", "have", "has", "had", "having", "do", "does", "did",
    "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at",
    "by", "for", "with", "about", "against", "between", "into", "through", "during", "before", "after",
    "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under", "again",
    "further", "then", "once", "here", "there", "when", "where", "why", "how", "all", "any", "both",
    "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same",
    "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've",
    "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn",
    "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't",
    "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't", "shouldn",
    "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't"};

inline const std::unordered_set<std::string_view>& lookup(std::string_view list_id) {
    static const std::unordered_set<std::string_view> english(kEnglish179.begin(), kEnglish179.end());
    static const std::unordered_set<std::string_view> none;
    if (list_id == kEnglish179Id || list_id == "english") return english;
    if (list_id == "none") return none;
    throw StateError("unknown stopword list '" + std::string(list_id) + "'");
}

} // namespace stopwords

struct CleanConfig {
    bool lowercase = true;
    bool strip_hashtags = true;
    bool strip_punctuation = true;
    bool remove_stopwords = true;
    std::string stopword_list_id{stopwords::kEnglish179Id};

    /// Every flag off: clean_text only normalizes whitespace.
    static CleanConfig identity() { return {false, false, false, false, std::string(stopwords::kEnglish179Id)}; }

    /// Stable textual identifier, recorded as preprocessing_id in embedding manifests.
    std::string id() const {
        std::string s = "clean:";
        s += lowercase ? "lower," : "";
        s += strip_hashtags ? "nohashtag," : "";
        s += strip_punctuation ? "nopunct," : "";
        s += remove_stopwords ? "nostop=" + stopword_list_id : std::string("keepstop");
        return s;
    }

    friend bool operator==(const CleanConfig&, const CleanConfig&) = default;
};

namespace detail {

inline std::vector<std::u32string> split_ws(std::u32string_view s) {
    std::vector<std::u32string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && unicode::is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !unicode::is_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

} // namespace detail

/// Steps run in a fixed order: lowercase, hashtag-token removal, punctuation
/// removal, whitespace collapse/trim, stopword removal. Total on any input;
/// invalid UTF-8 bytes are replaced with U+FFFD.
inline std::string clean_text(std::string_view raw, const CleanConfig& cfg = {}) {
    std::u32string text = detail::decode_utf8_lossy(raw);
    if (cfg.lowercase)
        for (auto& c : text) c = detail::unicode::to_lower(c);

    auto tokens = detail::split_ws(text);
    if (cfg.strip_hashtags)
        std::erase_if(tokens, [](const std::u32string& t) { return t.front() == U'#'; });
    if (cfg.strip_punctuation) {
        for (auto& t : tokens) std::erase_if(t, [](char32_t c) { return detail::unicode::is_punctuation(c); });
        std::erase_if(tokens, [](const std::u32string& t) { return t.empty(); });
    }

    const auto* stop = cfg.remove_stopwords ? &stopwords::lookup(cfg.stopword_list_id) : nullptr;
    std::string out;
    for (const auto& t : tokens) {
        std::string word = detail::encode_utf8(t);
        if (stop && stop->contains(word)) continue;
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

/// Splits on runs of whitespace. Never yields empty tokens.
inline std::vector<std::string> tokenize(std::string_view cleaned) {
    std::vector<std::string> out;
    for (const auto& t : detail::split_ws(detail::decode_utf8_lossy(cleaned))) out.push_back(detail::encode_utf8(t));
    return out;
}

} // namespace fakenews
