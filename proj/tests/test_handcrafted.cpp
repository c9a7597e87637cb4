#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fakenews/handcrafted.hpp"
#include "support.hpp"

using namespace fakenews;

TEST(WordStats, GoHomeNowCovid) {
    // lengths {2, 4, 3, 6}: mean 3.75, squared deviations sum 8.75
    const auto s = word_stats("Go home now #covid");
    EXPECT_DOUBLE_EQ(s.max_len, 6);
    EXPECT_DOUBLE_EQ(s.min_len, 2);
    EXPECT_DOUBLE_EQ(s.avg_len, 3.75);
    EXPECT_NEAR(s.len_std, std::sqrt(8.75 / 4), 1e-12);
    EXPECT_NEAR(s.len_std, 1.47902, 1e-5);
    EXPECT_EQ(s.upper_initial, 1u);
    EXPECT_EQ(s.lower_initial, 2u);
}

TEST(WordStats, EmptyIsAllZero) {
    const auto s = word_stats("");
    EXPECT_EQ(s.max_len, 0);
    EXPECT_EQ(s.min_len, 0);
    EXPECT_EQ(s.avg_len, 0);
    EXPECT_EQ(s.len_std, 0);
    EXPECT_EQ(s.upper_initial, 0u);
    EXPECT_EQ(s.lower_initial, 0u);
}

TEST(WordStats, SymmetricCase) {
    const auto s = word_stats("Aa Aa");
    EXPECT_EQ(s.max_len, 2);
    EXPECT_EQ(s.min_len, 2);
    EXPECT_EQ(s.avg_len, 2);
    EXPECT_EQ(s.len_std, 0);
    EXPECT_EQ(s.upper_initial, 2u);
    EXPECT_EQ(s.lower_initial, 0u);
}

TEST(WordStats, LengthsCountCodePoints) {
    const auto s = word_stats("caf\xC3\xA9 \xC3\x89t\xC3\xA9");
    EXPECT_EQ(s.max_len, 4);
    EXPECT_EQ(s.min_len, 3);
    EXPECT_EQ(s.upper_initial, 1u);
    EXPECT_EQ(s.lower_initial, 1u);
}

TEST(CharStats, GoHomeNowCovid) {
    const auto c = char_stats("Go home now #covid");
    EXPECT_EQ(c.digits, 0u);
    EXPECT_EQ(c.letters, 14u);
    EXPECT_EQ(c.spaces, 3u);
    EXPECT_EQ(c.punct, 0u);
    EXPECT_EQ(c.hashtags, 1u);
    EXPECT_EQ(c.vowels, (std::array<std::size_t, 5>{0, 1, 1, 4, 0}));
}

TEST(CharStats, DigitBangLetter) {
    const auto c = char_stats("1!a");
    EXPECT_EQ(c.digits, 1u);
    EXPECT_EQ(c.letters, 1u);
    EXPECT_EQ(c.spaces, 0u);
    EXPECT_EQ(c.punct, 1u);
    EXPECT_EQ(c.hashtags, 0u);
    EXPECT_EQ(c.vowels, (std::array<std::size_t, 5>{1, 0, 0, 0, 0}));
}

TEST(CharStats, EmptyIsAllZero) {
    const auto v = handcrafted_vector("");
    EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
}

TEST(Handcrafted, VectorIsConcatenationInFieldOrder) {
    const auto v = handcrafted_vector("Go home now #covid");
    const HandcraftedVector expected{6, 2, 3.75, std::sqrt(8.75 / 4), 1, 2, 0, 14, 3, 0, 1, 0, 1, 1, 4, 0};
    ASSERT_EQ(v.size(), 16u);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(v[i], expected[i], 1e-12) << kHandcraftedFeatureNames[i];
}

TEST(Handcrafted, MatrixRowsFollowDataset) {
    Dataset ds;
    ds.records = {{"1", "Go home now #covid", Label::real}, {"2", "1!a", Label::fake}};
    const auto M = handcrafted_matrix(ds);
    ASSERT_EQ(M.rows(), 2);
    ASSERT_EQ(M.cols(), 16);
    EXPECT_EQ(M(0, 7), 14);
    EXPECT_EQ(M(1, 6), 1);
}

TEST(HandcraftedProperties, InvariantsAndWordOrderInvariance) {
    const auto ds = test::synthetic_posts(300, 3);
    std::mt19937_64 rng(5);
    for (const auto& r : ds.records) {
        const auto v = handcrafted_vector(r.text);
        const auto total_chars = static_cast<double>(detail::decode_utf8_lossy(r.text).size());
        if (v[0] > 0) {
            EXPECT_LE(v[1], v[2]);
            EXPECT_LE(v[2], v[0]);
        }
        EXPECT_LE(v[11] + v[12] + v[13] + v[14] + v[15], v[7]);
        EXPECT_LE(v[6] + v[7] + v[8] + v[9] + v[10], total_chars);

        auto words = tokenize(r.text);
        std::shuffle(words.begin(), words.end(), rng);
        std::string shuffled;
        for (const auto& w : words) shuffled += (shuffled.empty() ? "" : " ") + w;
        const auto u = handcrafted_vector(shuffled);
        for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(u[i], v[i], 1e-12) << i;
    }
}
