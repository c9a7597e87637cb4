#include <cmath>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "fakenews/eval.hpp"
#include "fakenews/linear_models.hpp"
#include "support.hpp"

using namespace fakenews;
using namespace fakenews::linear;

namespace {

struct Toy {
    Eigen::MatrixXd X;
    std::vector<Label> y;
};

// Separated by the line x0 + x1 = 0 (margin sqrt(2)).
Toy separable_toy() {
    Toy t;
    t.X.resize(4, 2);
    t.X << 2, 1, 1, 2, -1, -2, -2, -1;
    t.y = {Label::real, Label::real, Label::fake, Label::fake};
    return t;
}

} // namespace

TEST(Sgd, SeparableToyReachesPerfectTrainingF1) {
    const auto t = separable_toy();
    for (auto loss : {Loss::hinge, Loss::log}) {
        SgdConfig cfg;
        cfg.loss = loss;
        const auto m = train_sgd(t.X, t.y, cfg);
        EXPECT_EQ(eval::f1_score(t.y, m.predict(t.X)), 1.0) << to_string(loss);
    }
}

TEST(Sgd, HugeAlphaShrinksWeightsToZero) {
    const auto t = separable_toy();
    SgdConfig cfg;
    cfg.alpha = 1e6;
    cfg.epochs = 20;
    const auto m = train_sgd(t.X, t.y, cfg);
    EXPECT_LT(m.weights().cwiseAbs().maxCoeff(), 1e-6);
    const Eigen::VectorXd s = m.decision_function(t.X);
    EXPECT_LT((s.array() - m.bias()).abs().maxCoeff(), 1e-5);
}

TEST(Sgd, CMapsToAlphaOverN) {
    SgdConfig cfg;
    cfg.C = 0.1;
    EXPECT_DOUBLE_EQ(cfg.effective_alpha(50), 1.0 / (0.1 * 50));
    cfg.C.reset();
    EXPECT_DOUBLE_EQ(cfg.effective_alpha(50), 1e-4);
}

TEST(Sgd, ObjectiveDecreasesWithoutRegularization) {
    const auto t = separable_toy();
    SgdConfig cfg;
    cfg.loss = Loss::log;
    cfg.alpha = 0;
    cfg.epochs = 50;
    const auto m = train_sgd(t.X, t.y, cfg);
    ASSERT_GE(m.objective_history().size(), 2u);
    EXPECT_LT(m.objective_history().back(), m.objective_history().front());
    EXPECT_NEAR(m.objective_history().front(), std::log(2.0), 1e-12);
}

TEST(Sgd, DeterministicUnderFixedSeed) {
    const auto ds = test::synthetic_dataset(200);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 8, 0.3, 2);
    SgdConfig cfg;
    cfg.penalty = Penalty::elasticnet;
    cfg.seed = 77;
    const auto a = train_sgd(X, ds.labels(), cfg), b = train_sgd(X, ds.labels(), cfg);
    EXPECT_EQ(a.weights(), b.weights());
    EXPECT_EQ(a.bias(), b.bias());
    cfg.seed = 78;
    const auto c = train_sgd(X, ds.labels(), cfg);
    EXPECT_NE(a.weights(), c.weights());
}

TEST(Sgd, L1ProducesExactZerosOnNoiseFeatures) {
    const auto ds = test::synthetic_dataset(300);
    Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 1, 2.0, 3);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    X.conservativeResize(Eigen::NoChange, 21);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 1; j < 21; ++j) X(i, j) = g(rng);
    SgdConfig cfg;
    cfg.penalty = Penalty::l1;
    cfg.alpha = 0.02;
    const auto m = train_sgd(X, ds.labels(), cfg);
    EXPECT_GT(m.weights()(0), 0.5);
    int zeros = 0;
    for (Eigen::Index j = 1; j < 21; ++j) zeros += m.weights()(j) == 0.0;
    EXPECT_GE(zeros, 15);
}

TEST(Sgd, Errors) {
    const auto t = separable_toy();
    const std::vector<Label> one_class(4, Label::real);
    EXPECT_THROW(train_sgd(t.X, one_class, SgdConfig{}), StateError);
    Eigen::MatrixXd bad = t.X;
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(train_sgd(bad, t.y, SgdConfig{}), DataError);
}

TEST(Decision, HandDotProduct) {
    Eigen::VectorXd w(2);
    w << 1, -1;
    const LinearModel m(w, 0.5, Loss::hinge);
    Eigen::MatrixXd x(1, 2);
    x << 2, 1;
    EXPECT_DOUBLE_EQ(m.decision_function(x)(0), 1.5);
    EXPECT_EQ(m.predict(x)[0], Label::real);
}

TEST(Decision, ZeroModelAndLinearity) {
    const LinearModel zero(Eigen::VectorXd::Zero(3), 0.0, Loss::hinge);
    EXPECT_EQ(zero.decision_function(Eigen::MatrixXd::Ones(2, 3)).norm(), 0.0);
    Eigen::VectorXd w(3);
    w << 0.3, -1.2, 2;
    const LinearModel m(w, -0.7, Loss::hinge);
    Eigen::MatrixXd x(1, 3);
    x << 1, 2, 3;
    const double s1 = m.decision_function(x)(0), s2 = m.decision_function(2 * x)(0);
    EXPECT_NEAR(s2 - m.bias(), 2 * (s1 - m.bias()), 1e-12);
    EXPECT_THROW(m.decision_function(Eigen::MatrixXd::Ones(1, 2)), StateError);
}

TEST(Predict, TieGoesToFake) {
    Eigen::VectorXd w(1);
    w << 1;
    Eigen::MatrixXd x(3, 1);
    x << 1.5, -0.1, 0;
    const auto p = LinearModel(w, 0.0, Loss::hinge).predict(x);
    EXPECT_EQ(p, (std::vector<Label>{Label::real, Label::fake, Label::fake}));
}

TEST(Proba, SigmoidValuesAndHingeRejection) {
    Eigen::VectorXd w(1);
    w << 1;
    Eigen::MatrixXd x(3, 1);
    x << 0, std::log(3.0), 800;
    const auto p = LinearModel(w, 0.0, Loss::log).predict_proba(x);
    EXPECT_DOUBLE_EQ(p(0), 0.5);
    EXPECT_NEAR(p(1), 0.75, 1e-15);
    EXPECT_DOUBLE_EQ(p(2), 1.0);
    EXPECT_DOUBLE_EQ(sigmoid(-800), 0.0);
    EXPECT_THROW(LinearModel(w, 0.0, Loss::hinge).predict_proba(x), StateError);
}

TEST(Proba, ConsistentWithPredict) {
    const auto ds = test::synthetic_dataset(120);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 4, 0.5, 1);
    SgdConfig cfg;
    cfg.loss = Loss::log;
    const auto m = train_sgd(X, ds.labels(), cfg);
    const auto p = m.predict_proba(X);
    const auto labels = m.predict(X);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        EXPECT_GT(p(i), 0.0);
        EXPECT_LT(p(i), 1.0);
        EXPECT_EQ(labels[static_cast<std::size_t>(i)], p(i) > 0.5 ? Label::real : Label::fake);
    }
}

TEST(LinearModel, SaveLoadRoundTrip) {
    test::TempDir dir;
    const auto ds = test::synthetic_dataset(60);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 5, 0.5, 1);
    SgdConfig cfg;
    cfg.C = 0.01;
    cfg.loss = Loss::log;
    const auto m = train_sgd(X, ds.labels(), cfg);
    m.save(dir / "lin", cfg);
    const auto [back, back_cfg] = LinearModel::load(dir / "lin");
    EXPECT_EQ(back.weights(), m.weights());
    EXPECT_EQ(back.bias(), m.bias());
    EXPECT_EQ(back.loss(), Loss::log);
    EXPECT_EQ(back_cfg.C, cfg.C);
}

TEST(Presets, TableRows) {
    const auto& lsa = find_preset("lsa-lr");
    EXPECT_EQ(lsa.config.loss, Loss::log);
    EXPECT_EQ(lsa.config.penalty, Penalty::elasticnet);
    EXPECT_EQ(lsa.config.l1_ratio, 0.05);
    EXPECT_EQ(lsa.config.power_t, 0.5);
    const auto& hc = find_preset("handcrafted-svm");
    EXPECT_EQ(hc.config.loss, Loss::hinge);
    EXPECT_EQ(hc.config.l1_ratio, 0.95);
    EXPECT_EQ(hc.config.power_t, 0.1);
    EXPECT_EQ(find_preset("distilbert-lr").config.C, 0.1);
    EXPECT_EQ(find_preset("roberta-lr").config.C, 0.01);
    EXPECT_EQ(find_preset("xlm-svm").config.loss, Loss::hinge);
    EXPECT_EQ(find_preset("linear-stacking").config.l1_ratio, 0.3);
    EXPECT_EQ(find_preset("linear-stacking-probs").config.l1_ratio, 0.8);
    EXPECT_THROW(find_preset("nope"), StateError);
}

TEST(Presets, ShippedCatalogFileMatchesBuiltIn) {
    std::ifstream f(FAKENEWS_SOURCE_DIR "/share/presets.json");
    ASSERT_TRUE(f.good());
    const auto shipped = catalog_from_json(io::json::parse(f));
    const auto builtin = preset_catalog();
    ASSERT_EQ(shipped.size(), builtin.size());
    for (std::size_t i = 0; i < builtin.size(); ++i) {
        EXPECT_EQ(shipped[i].name, builtin[i].name);
        EXPECT_EQ(to_json(shipped[i].config), to_json(builtin[i].config)) << builtin[i].name;
    }
}

TEST(Presets, ConfigJsonRoundTrip) {
    for (const auto& p : preset_catalog()) EXPECT_EQ(to_json(sgd_config_from_json(to_json(p.config))), to_json(p.config));
    EXPECT_EQ(sgd_config_from_json(io::json{{"C", "0.1"}}).C, 0.1);
}
