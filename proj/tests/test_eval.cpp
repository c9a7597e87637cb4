#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <gtest/gtest.h>

#include "fakenews/eval.hpp"
#include "support.hpp"

using namespace fakenews;
using namespace fakenews::eval;

namespace {

std::size_t count_real(const Dataset& ds) {
    std::size_t n = 0;
    for (const auto& r : ds.records) n += r.label == Label::real;
    return n;
}

} // namespace

TEST(Tdt, SizesFor8560) {
    const auto ds = test::synthetic_dataset(8560);
    const auto s = tdt_split(ds, 42);
    EXPECT_EQ(s.train.size(), 6420u);
    EXPECT_EQ(s.dev.size(), 1605u);
    EXPECT_EQ(s.test.size(), 535u);
}

TEST(Tdt, PartitionIsDisjointAndComplete) {
    const auto ds = test::synthetic_dataset(1003);
    const auto s = tdt_split(ds, 5);
    std::vector<std::size_t> all;
    for (const auto* v : {&s.train_indices, &s.dev_indices, &s.test_indices}) all.insert(all.end(), v->begin(), v->end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    EXPECT_EQ(s.train.records[0].id, ds.records[s.train_indices[0]].id);
    EXPECT_TRUE(std::is_sorted(s.dev_indices.begin(), s.dev_indices.end()));
}

TEST(Tdt, DeterministicPerSeed) {
    const auto ds = test::synthetic_dataset(500);
    EXPECT_EQ(tdt_split(ds, 9).train_indices, tdt_split(ds, 9).train_indices);
    EXPECT_NE(tdt_split(ds, 9).train_indices, tdt_split(ds, 10).train_indices);
}

TEST(Tdt, StratifiedWithinOnePercent) {
    const auto ds = test::synthetic_dataset(8560, 0.5234);
    const double parent = static_cast<double>(count_real(ds)) / 8560.0;
    const auto s = tdt_split(ds, 42);
    for (const auto* part : {&s.train, &s.dev, &s.test})
        EXPECT_NEAR(static_cast<double>(count_real(*part)) / static_cast<double>(part->size()), parent, 0.01);
}

TEST(Tdt, TooSmallRejected) { EXPECT_THROW(tdt_split(test::synthetic_dataset(10), 1), StateError); }

TEST(KFold, TenFoldsOf856) {
    const auto ds = test::synthetic_dataset(8560);
    const auto plan = kfold(ds, 10, 42);
    std::vector<std::size_t> seen(ds.size(), 0);
    for (std::size_t f = 0; f < 10; ++f) {
        const auto test_idx = plan.test_indices(f);
        EXPECT_EQ(test_idx.size(), 856u);
        EXPECT_EQ(plan.train_indices(f).size(), 8560u - 856u);
        for (auto i : test_idx) ++seen[i];
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](std::size_t c) { return c == 1; }));
}

TEST(KFold, StratifiedFoldsWithinOneRecord) {
    const auto ds = test::synthetic_dataset(1000, 0.3);
    const auto plan = kfold(ds, 10, 3);
    for (std::size_t f = 0; f < 10; ++f) {
        std::size_t real = 0;
        for (auto i : plan.test_indices(f)) real += ds.records[i].label == Label::real;
        EXPECT_NEAR(static_cast<double>(real), 30.0, 1.0);
    }
}

TEST(KFold, SingletonFoldsAndErrors) {
    const auto ds = test::synthetic_dataset(10);
    const auto plan = kfold(ds, 10, 1);
    for (std::size_t f = 0; f < 10; ++f) EXPECT_EQ(plan.test_indices(f).size(), 1u);
    EXPECT_THROW(kfold(ds, 11, 1), StateError);
    EXPECT_THROW(kfold(ds, 1, 1), StateError);
}

TEST(KFold, Deterministic) {
    const auto ds = test::synthetic_dataset(300);
    EXPECT_EQ(kfold(ds, 10, 4).assignments, kfold(ds, 10, 4).assignments);
    EXPECT_NE(kfold(ds, 10, 4).assignments, kfold(ds, 10, 5).assignments);
}

TEST(F1, WorkedExample) {
    // truth real,real,fake,fake; pred real,fake,fake,fake
    const std::vector<Label> t{Label::real, Label::real, Label::fake, Label::fake};
    const std::vector<Label> p{Label::real, Label::fake, Label::fake, Label::fake};
    EXPECT_NEAR(f1_score(t, p, Averaging::binary_real), 2.0 / 3.0, 1e-15);
    // fake: P = 2/3, R = 1 -> 0.8; weighted (2*0.8 + 2*2/3)/4
    EXPECT_NEAR(f1_score(t, p, Averaging::weighted), (0.8 + 2.0 / 3.0) / 2.0, 1e-15);
    EXPECT_NEAR(f1_score(t, p, Averaging::macro), (0.8 + 2.0 / 3.0) / 2.0, 1e-15);
    const auto m = confusion_matrix(t, p);
    EXPECT_EQ(m[1][1], 1u);
    EXPECT_EQ(m[1][0], 1u);
    EXPECT_EQ(m[0][0], 2u);
    EXPECT_EQ(m[0][1], 0u);
}

TEST(F1, AllOneClassAllCorrect) {
    const std::vector<Label> t(5, Label::fake);
    EXPECT_EQ(f1_score(t, t), 1.0);
    EXPECT_EQ(f1_score(t, t, Averaging::binary_real), 0.0);
    EXPECT_EQ(f1_score(t, t, Averaging::macro), 0.5);
}

TEST(F1, MatchesBruteForceOnRandomVectors) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(1, 60);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = len(rng);
        const auto t = test::random_labels(rng, n), p = test::random_labels(rng, n);
        const double fr = test::brute_force_f1(t, p, Label::real), ff = test::brute_force_f1(t, p, Label::fake);
        const auto nr = static_cast<double>(std::count(t.begin(), t.end(), Label::real));
        EXPECT_NEAR(f1_score(t, p, Averaging::binary_real), fr, 1e-12);
        EXPECT_NEAR(f1_score(t, p, Averaging::macro), (fr + ff) / 2, 1e-12);
        EXPECT_NEAR(f1_score(t, p), (nr * fr + (static_cast<double>(n) - nr) * ff) / static_cast<double>(n), 1e-12);
    }
}

TEST(F1, Errors) {
    EXPECT_THROW(f1_score({}, {}), StateError);
    const std::vector<Label> a(2, Label::real), b(3, Label::real);
    EXPECT_THROW(confusion_matrix(a, b), StateError);
    EXPECT_EQ(parse_averaging("macro"), Averaging::macro);
    EXPECT_THROW(parse_averaging("micro"), StateError);
}

TEST(ConfusionSvg, WellFormedWithCounts) {
    for (const ConfusionMatrix m : {ConfusionMatrix{{{0, 0}, {0, 0}}}, ConfusionMatrix{{{50, 3}, {7, 40}}}}) {
        std::istringstream in(confusion_svg(m, "dev <F1>"));
        boost::property_tree::ptree tree;
        ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
        std::vector<std::string> counts;
        for (const auto& [name, node] : tree.get_child("svg"))
            if (name == "text" && node.get<std::string>("<xmlattr>.class", "") == "count") counts.push_back(node.data());
        ASSERT_EQ(counts.size(), 4u);
        EXPECT_EQ(counts[0], std::to_string(m[0][0]));
        EXPECT_EQ(counts[3], std::to_string(m[1][1]));
        EXPECT_EQ(tree.get<std::string>("svg.title"), "dev <F1>");
    }
}

TEST(ConfusionSvg, WritesFile) {
    test::TempDir dir;
    render_confusion_svg(ConfusionMatrix{{{1, 2}, {3, 4}}}, dir / "c.svg");
    EXPECT_TRUE(std::filesystem::exists(dir / "c.svg"));
}

TEST(Protocols, TdtAndCvScores) {
    const auto ds = test::synthetic_dataset(200);
    Trainer oracle = [](const Dataset&) -> Predictor { return [](const Dataset& d) { return d.labels(); }; };
    const auto r = evaluate_tdt(oracle, tdt_split(ds, 1));
    EXPECT_EQ(r.scores, (std::vector<double>{1.0, 1.0, 1.0}));
    EXPECT_EQ(r.score_names, (std::vector<std::string>{"train", "dev", "test"}));
    const auto cv = evaluate_cv(oracle, ds, kfold(ds, 5, 1));
    EXPECT_EQ(cv.scores.size(), 5u);
    EXPECT_EQ(cv.score, 1.0);
    std::size_t seen_train = 0;
    Trainer counting = [&](const Dataset& train) -> Predictor {
        seen_train += train.size();
        return [](const Dataset& d) { return std::vector<Label>(d.size(), Label::fake); };
    };
    evaluate_cv(counting, ds, kfold(ds, 5, 1));
    EXPECT_EQ(seen_train, 4u * 200u);
}

TEST(GridSearch, RanksByScoreThenPositionAndIsolatesFailures) {
    const std::vector<int> grid{3, 7, -1, 7, 5};
    for (unsigned threads : {1u, 4u}) {
        const auto r = grid_search<int>(grid, [](const int& c) {
            if (c < 0) throw std::runtime_error("bad config");
            ProtocolResult p;
            p.score = c;
            return p;
        }, threads);
        ASSERT_EQ(r.ranked.size(), 4u);
        EXPECT_EQ(r.best().position, 1u);
        EXPECT_EQ(r.ranked[1].position, 3u);
        EXPECT_EQ(r.ranked[3].config, 3);
        ASSERT_EQ(r.failures.size(), 1u);
        EXPECT_EQ(r.failures[0].position, 2u);
        EXPECT_EQ(*r.failures[0].error, "bad config");
        const auto j = grid_to_json<int>(r, [](const int& c) { return io::json(c); });
        EXPECT_EQ(j["ranked"][0]["config"], 7);
        EXPECT_EQ(j["failures"][0]["error"], "bad config");
    }
}

TEST(GridSearch, AllFailingHasNoBest) {
    const std::vector<int> grid{1};
    const auto r = grid_search<int>(grid, [](const int&) -> ProtocolResult { throw std::runtime_error("x"); });
    EXPECT_THROW(r.best(), StateError);
}

TEST(Ledger, JsonShape) {
    RunLedger l;
    l.verb = "eval tdt";
    l.seed = 7;
    l.protocol = "tdt";
    l.score_names = {"train", "dev"};
    l.scores = {0.9, 0.8};
    l.extra["note"] = "x";
    const auto j = l.to_json();
    EXPECT_EQ(j["scores"]["dev"], 0.8);
    EXPECT_EQ(j["seed"], 7);
    EXPECT_EQ(j["note"], "x");
    EXPECT_FALSE(j.contains("mean"));
}

TEST(VarianceRanking, HandOracleWithCounts) {
    Dataset ds;
    ds.records = {{"1", "cure cure", Label::fake}, {"2", "cure", Label::fake},
                  {"3", "cases", Label::real}, {"4", "cases deaths", Label::real}};
    CleanConfig clean;
    clean.remove_stopwords = false;
    const auto r = class_variance_ranking(ds, 2, VarianceInput::counts, clean);
    // fake rows: cure {2,1} -> var 0.25; cases, deaths 0
    ASSERT_EQ(r.fake.size(), 2u);
    EXPECT_EQ(r.fake[0].word, "cure");
    EXPECT_NEAR(r.fake[0].variance, 0.25, 1e-15);
    EXPECT_EQ(r.fake[1].word, "cases");
    // real rows: deaths {0,1} -> 0.25; cases {1,1} -> 0; cure 0; tie broken lexicographically
    EXPECT_EQ(r.real[0].word, "deaths");
    EXPECT_EQ(r.real[1].word, "cases");
    const auto all = class_variance_ranking(ds, 50, VarianceInput::counts, clean);
    EXPECT_EQ(all.fake.size(), 3u);
}

TEST(VarianceRanking, ClassWordsSurfaceOnSyntheticPosts) {
    const auto ds = test::synthetic_posts(400, 11);
    const auto r = class_variance_ranking(ds, 8);
    static const std::set<std::string> fake_words{
        "cure", "video", "vaccine", "trump", "president", "miracle", "hoax", "secret", "garlic", "5g",
        "conspiracy", "shocking", "claims", "viral", "bill", "gates", "poison", "lockdown", "fake", "truth"};
    std::size_t hits = 0;
    for (const auto& w : r.fake) hits += fake_words.count(w.word);
    EXPECT_GE(hits, 6u);
    EXPECT_THROW(class_variance_ranking(test::synthetic_dataset(4, 1.0), 3), StateError);
}
