#include <gtest/gtest.h>

#include "fakenews/corpus.hpp"
#include "support.hpp"

using namespace fakenews;

TEST(Corpus, ParsesLabeledTsv) {
    const auto ds = parse_corpus("id\ttweet\tlabel\n1\tCases rise today\treal\n2\tGarlic cures it\tfake\n", CorpusFormat::tsv);
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.records[0].id, "1");
    EXPECT_EQ(ds.records[1].text, "Garlic cures it");
    EXPECT_EQ(ds.labels(), (std::vector<Label>{Label::real, Label::fake}));
    const auto d = label_distribution(ds);
    EXPECT_EQ(d.real, 1u);
    EXPECT_EQ(d.fake, 1u);
}

TEST(Corpus, LabelsAreCaseInsensitive) {
    const auto ds = parse_corpus("id,tweet,label\n1,a,REAL\n2,b,Fake\n", CorpusFormat::csv);
    EXPECT_EQ(ds.labels(), (std::vector<Label>{Label::real, Label::fake}));
}

TEST(Corpus, UnlabeledFileHasNoLabels) {
    const auto ds = parse_corpus("id\ttweet\n1\tsome text\n", CorpusFormat::tsv);
    EXPECT_FALSE(ds.labeled());
    EXPECT_FALSE(ds.records[0].label.has_value());
    EXPECT_THROW(label_distribution(ds), StateError);
}

TEST(Corpus, MissingIdColumnSynthesizesIds) {
    const auto ds = parse_corpus("tweet\tlabel\nx\treal\ny\tfake\n", CorpusFormat::tsv);
    EXPECT_EQ(ds.ids(), (std::vector<std::string>{"1", "2"}));
    EXPECT_FALSE(ds.provenance.empty());
}

TEST(Corpus, QuotedCsvFieldsWithCommasNewlinesAndQuotes) {
    const auto ds = parse_corpus("id,tweet,label\r\n1,\"a, \"\"quoted\"\"\nline\",real\r\n", CorpusFormat::csv);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds.records[0].text, "a, \"quoted\"\nline");
}

TEST(Corpus, DuplicateIdIsRejected) {
    try {
        parse_corpus("id\ttweet\tlabel\n7\ta\treal\n7\tb\tfake\n", CorpusFormat::tsv);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate id '7'"), std::string::npos);
    }
}

TEST(Corpus, UnknownLabelIsRejected) {
    EXPECT_THROW(parse_corpus("id\ttweet\tlabel\n1\ta\tmaybe\n", CorpusFormat::tsv), ValidationError);
}

TEST(Corpus, WrongFieldCountIsFormatError) {
    EXPECT_THROW(parse_corpus("id\ttweet\tlabel\n1\ta\n", CorpusFormat::tsv), FormatError);
}

TEST(Corpus, MissingTweetColumnIsFormatError) {
    EXPECT_THROW(parse_corpus("id\ttext\n1\ta\n", CorpusFormat::tsv), FormatError);
}

TEST(Corpus, InvalidUtf8IsFormatError) {
    EXPECT_THROW(parse_corpus("id\ttweet\n1\tbad \xC3\x28 byte\n", CorpusFormat::tsv), FormatError);
}

TEST(Corpus, EmptyTextIsAWarningNotAnError) {
    const auto ds = parse_corpus("id\ttweet\tlabel\n1\t\treal\n2\tx\tfake\n", CorpusFormat::tsv);
    EXPECT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.warnings.size(), 1u);
}

TEST(Corpus, BomIsStripped) {
    const auto ds = parse_corpus("\xEF\xBB\xBFid\ttweet\n1\tx\n", CorpusFormat::tsv);
    EXPECT_EQ(ds.records[0].id, "1");
}

TEST(Corpus, SerializeRoundTripsBothFormats) {
    Dataset ds;
    ds.records = {{"a", "plain", Label::real},
                  {"b", "tab\there, comma, \"quote\"", Label::fake},
                  {"c", "multi\nline \xF0\x9F\x98\xB7", Label::real}};
    for (auto fmt : {CorpusFormat::tsv, CorpusFormat::csv}) {
        const auto back = parse_corpus(serialize_corpus(ds, fmt), fmt);
        ASSERT_EQ(back.size(), ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            EXPECT_EQ(back.records[i].id, ds.records[i].id);
            EXPECT_EQ(back.records[i].text, ds.records[i].text);
            EXPECT_EQ(back.records[i].label, ds.records[i].label);
        }
    }
}

TEST(Corpus, FileRoundTripUsesExtension) {
    test::TempDir dir;
    const auto ds = test::synthetic_posts(20);
    write_corpus(ds, dir / "x.csv", CorpusFormat::csv);
    const auto back = load_corpus(dir / "x.csv");
    EXPECT_EQ(back.texts(), ds.texts());
    EXPECT_EQ(back.labels(), ds.labels());
}

TEST(Corpus, MergeConcatenatesInOrder) {
    const auto a = parse_corpus("id\ttweet\tlabel\n1\ta\treal\n", CorpusFormat::tsv);
    const auto b = parse_corpus("id\ttweet\tlabel\n2\tb\tfake\n", CorpusFormat::tsv);
    const auto m = merge(a, b);
    EXPECT_EQ(m.ids(), (std::vector<std::string>{"1", "2"}));
    EXPECT_EQ(m.split_name, SplitName::merged);
}

TEST(Corpus, MergeRejectsOverlappingIds) {
    const auto a = parse_corpus("id\ttweet\tlabel\n1\ta\treal\n", CorpusFormat::tsv);
    EXPECT_THROW(merge(a, a), ValidationError);
}

TEST(Corpus, SubsetKeepsRequestedOrder) {
    const auto ds = test::synthetic_dataset(10);
    const std::vector<std::size_t> idx{3, 1, 7};
    const auto s = ds.subset(idx);
    EXPECT_EQ(s.ids(), (std::vector<std::string>{"r3", "r1", "r7"}));
}
