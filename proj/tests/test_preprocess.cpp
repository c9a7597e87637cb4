#include <random>

#include <gtest/gtest.h>

#include "fakenews/detail/utf8.hpp"
#include "fakenews/preprocess.hpp"
#include "support.hpp"

using namespace fakenews;

TEST(Clean, StepsApplyInOrder) {
    // lowercase -> drop "#fake" -> drop "!" -> "the cure is now" -> drop the/is/now
    EXPECT_EQ(clean_text("The CURE is #fake NOW!"), "cure");
}

TEST(Clean, EmptyInput) { EXPECT_EQ(clean_text(""), ""); }

TEST(Clean, IdentityConfiguration) {
    EXPECT_EQ(clean_text("covid", CleanConfig::identity()), "covid");
    EXPECT_EQ(clean_text("  The  #Covid  cure! ", CleanConfig::identity()), "The #Covid cure!");
}

TEST(Clean, HashtagTokenRemovedWhole) {
    EXPECT_EQ(clean_text("vaccine #BillGates plan"), "vaccine plan");
    CleanConfig keep;
    keep.strip_hashtags = false;
    // '#' is in the punctuation set, so only the tag word survives
    EXPECT_EQ(clean_text("vaccine #BillGates plan", keep), "vaccine billgates plan");
}

TEST(Clean, UrlsSurviveAsTokens) {
    EXPECT_EQ(clean_text("see https://t.co/abc"), "see httpstcoabc");
}

TEST(Clean, UnicodePunctuationAndCase) {
    EXPECT_EQ(clean_text("\xC2\xBFQU\xC3\x89? \xE2\x80\x9C" "Caf\xC3\x89\xE2\x80\x9D \xE2\x80\x94 ok"),
              "qué café ok");
}

TEST(Clean, StopwordsOffKeepsThem) {
    CleanConfig cfg;
    cfg.remove_stopwords = false;
    EXPECT_EQ(clean_text("The CURE is #fake NOW!", cfg), "the cure is now");
    cfg = {};
    cfg.stopword_list_id = "none";
    EXPECT_EQ(clean_text("The CURE is", cfg), "the cure is");
}

TEST(Clean, UnknownStopwordListThrows) {
    CleanConfig cfg;
    cfg.stopword_list_id = "klingon";
    EXPECT_THROW(clean_text("x", cfg), StateError);
}

TEST(Clean, StopwordListHas179UniqueEntries) {
    EXPECT_EQ(stopwords::kEnglish179.size(), 179u);
    EXPECT_EQ(stopwords::lookup("english-179-v1").size(), 179u);
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("a  b"), (std::vector<std::string>{"a", "b"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("covid 19 cases"), (std::vector<std::string>{"covid", "19", "cases"}));
    EXPECT_EQ(tokenize(" \t x \n"), (std::vector<std::string>{"x"}));
}

namespace {

std::string random_post(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces{
        "The", "CURE", "is", "#fake", "NOW", "!", "...", "covid-19", "https://t.co/x", "don't", "\xC3\x89t\xC3\xA9",
        "\xE2\x80\x9Cquote\xE2\x80\x9D", "  ", "\t", "#", "##tag", "a", "I", "5G", "(", ")", "\xF0\x9F\x98\xB7", "it's",
        "\xC2\xA0", "\xE2\x80\x94", "Wuhan", "vaccine,", "'", "\"", "?"};
    std::uniform_int_distribution<std::size_t> len(0, 14), pick(0, pieces.size() - 1);
    std::bernoulli_distribution glue(0.3);
    std::string s;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) {
        if (!s.empty() && !glue(rng)) s += ' ';
        s += pieces[pick(rng)];
    }
    return s;
}

} // namespace

TEST(CleanProperties, IdempotentNoPunctuationNoStopwordsNoEmptyTokens) {
    std::mt19937_64 rng(11);
    const auto& stop = stopwords::lookup(stopwords::kEnglish179Id);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::string raw = random_post(rng);
        const std::string once = clean_text(raw);
        ASSERT_EQ(clean_text(once), once) << raw;
        for (char32_t c : detail::decode_utf8_lossy(once)) ASSERT_FALSE(detail::unicode::is_punctuation(c)) << raw;
        for (const auto& t : tokenize(once)) {
            ASSERT_FALSE(t.empty());
            ASSERT_FALSE(stop.contains(t)) << raw;
        }
        ASSERT_EQ(clean_text(raw), once);
    }
}

TEST(Unicode, PunctuationTableSpotChecks) {
    using detail::unicode::is_punctuation;
    for (char32_t c : std::u32string(U"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~—“¿、"))
        EXPECT_TRUE(is_punctuation(c)) << static_cast<unsigned>(c);
    for (char32_t c : std::u32string(U"aZ09 é\U0001F637"))
        EXPECT_FALSE(is_punctuation(c)) << static_cast<unsigned>(c);
}

TEST(Unicode, StrictDecodeRejectsMalformed) {
    EXPECT_FALSE(detail::decode_utf8("\xC3\x28").has_value());
    EXPECT_FALSE(detail::decode_utf8("\xED\xA0\x80").has_value()); // surrogate
    EXPECT_FALSE(detail::decode_utf8("\xC0\xAF").has_value());     // overlong
    EXPECT_EQ(detail::decode_utf8("\xE2\x82\xAC").value(), U"€");
}
