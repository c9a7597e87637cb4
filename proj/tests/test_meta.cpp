#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fakenews/eval.hpp"
#include "fakenews/meta_models.hpp"
#include "support.hpp"

using namespace fakenews;
using namespace fakenews::meta;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

Mlp<double> tiny_net(std::uint64_t seed, OutputHead head = OutputHead::sigmoid) {
    Mlp<double> net({6, 5, 4, 3, 2, 2}, head, seed);
    std::mt19937_64 rng(seed ^ 0xABCDEF);
    std::normal_distribution<double> g(0.0, 0.1);
    for (auto& l : net.layers())
        for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = g(rng);
    return net;
}

} // namespace

TEST(StackSpec, CanonicalTotalIs2576) {
    const auto s = StackInputSpec::canonical();
    EXPECT_EQ(s.total_dim(), 2576u);
    EXPECT_EQ(256u + 16u + 3u * 768u, 2576u);
    EXPECT_EQ(MlpConfig::reference().layer_dims, (std::vector<std::size_t>{2576, 896, 640, 512, 216, 2}));
}

TEST(StackSpec, ConcatenationOrderAndDimErrorNamesBlock) {
    const StackInputSpec spec{{{"a", 1}, {"b", 2}}};
    std::vector<Eigen::MatrixXd> blocks{Eigen::MatrixXd::Constant(3, 1, 1.0), Eigen::MatrixXd::Constant(3, 2, 2.0)};
    const auto X = concatenate_blocks(spec, blocks);
    EXPECT_EQ(X.cols(), 3);
    EXPECT_EQ(X(0, 0), 1.0);
    EXPECT_EQ(X(2, 2), 2.0);
    blocks[1] = Eigen::MatrixXd::Zero(3, 5);
    try {
        concatenate_blocks(spec, blocks);
        FAIL();
    } catch (const StateError& e) {
        EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
    }
}

TEST(Normalizer, TrainingColumnsStandardized) {
    Eigen::MatrixXd X = random_matrix(200, 6, 1);
    X.col(2) = X.col(2) * 1000.0 + Eigen::VectorXd::Constant(200, 5e4);
    X.col(4).setConstant(3.5);
    std::vector<std::size_t> train(150);
    std::iota(train.begin(), train.end(), 0);
    const auto in = assemble_stack_input(StackInputSpec{{{"x", 6}}}, std::vector<Eigen::MatrixXd>{X}, train);
    const Eigen::MatrixXd T = in.X.topRows(150);
    for (Eigen::Index j = 0; j < 6; ++j) {
        const double mean = T.col(j).mean();
        const double sd = std::sqrt((T.col(j).array() - mean).square().mean());
        EXPECT_NEAR(mean, 0.0, 1e-9) << j;
        if (j == 4) {
            EXPECT_EQ(in.X.col(4).cwiseAbs().maxCoeff(), 0.0);
            EXPECT_EQ(in.normalizer.stddev()(4), 1.0);
        } else {
            EXPECT_NEAR(sd, 1.0, 1e-9) << j;
        }
    }
    // held-out rows use training statistics
    EXPECT_NEAR(in.X(170, 0), (X(170, 0) - in.normalizer.mean()(0)) / in.normalizer.stddev()(0), 1e-12);
}

TEST(Normalizer, JsonRoundTrip) {
    const Eigen::MatrixXd X = random_matrix(20, 4, 2);
    const auto n = Normalizer::fit(X);
    const auto back = Normalizer::from_json(n.to_json());
    EXPECT_EQ(back.apply(X), n.apply(X));
}

TEST(Selu, ClosedForm) {
    EXPECT_EQ(selu(0.0), 0.0);
    EXPECT_NEAR(selu(1.0), 1.0507009873554805, 1e-15);
    EXPECT_NEAR(selu(-1.0), 1.0507009873554805 * 1.6732632423543772 * (std::exp(-1.0) - 1.0), 1e-15);
    EXPECT_NEAR(selu_derivative(2.0), 1.0507009873554805, 1e-15);
}

TEST(Mlp, ZeroParametersGiveHalf) {
    Mlp<double> net({4, 3, 2}, OutputHead::sigmoid, 1);
    for (auto& l : net.layers()) {
        l.W.setZero();
        l.b.setZero();
    }
    const auto out = net.forward(random_matrix(5, 4, 3));
    EXPECT_EQ((out.array() - 0.5).abs().maxCoeff(), 0.0);
}

TEST(Mlp, ShapeChainForAnyBatch) {
    Mlp<float> net(MlpConfig::reference().layer_dims, OutputHead::sigmoid, 1);
    for (Eigen::Index b : {1, 3, 33}) {
        const Mlp<float>::Matrix X = random_matrix(b, 2576, 4).cast<float>();
        const auto t = net.forward_train(X, 0.0, nullptr);
        ASSERT_EQ(t.pre.size(), 5u);
        const std::vector<Eigen::Index> widths{896, 640, 512, 216, 2};
        for (std::size_t l = 0; l < 5; ++l) {
            EXPECT_EQ(t.pre[l].rows(), b);
            EXPECT_EQ(t.pre[l].cols(), widths[l]);
        }
        EXPECT_EQ(net.forward(X).rows(), b);
    }
    EXPECT_THROW(net.forward(Mlp<float>::Matrix::Zero(1, 10)), StateError);
}

TEST(Mlp, NoDropoutMeansTrainEqualsInference) {
    const auto net = tiny_net(3);
    const Eigen::MatrixXd X = random_matrix(7, 6, 5);
    std::mt19937_64 rng(1);
    EXPECT_EQ(net.forward_train(X, 0.0, &rng).output, net.forward(X));
}

TEST(Mlp, InvertedDropoutKeepsExpectedActivation) {
    Mlp<double> net({1, 2000, 2}, OutputHead::sigmoid, 2);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(1, 1);
    std::mt19937_64 rng(9);
    const auto t = net.forward_train(X, 0.7, &rng);
    const Eigen::MatrixXd& mask = t.masks[0];
    const double kept = (mask.array() > 0).cast<double>().mean();
    EXPECT_NEAR(kept, 0.3, 0.04);
    EXPECT_NEAR(mask.maxCoeff(), 1.0 / 0.3, 1e-12);
}

TEST(Mlp, ArgmaxTieGoesToFake) {
    Eigen::MatrixXd out(3, 2);
    out << 0.9, 0.1, 0.5, 0.5, 0.2, 0.7;
    EXPECT_EQ(argmax_labels(out), (std::vector<Label>{Label::fake, Label::fake, Label::real}));
}

TEST(GradientCheck, TinyNetworkBothHeads) {
    for (auto head : {OutputHead::sigmoid, OutputHead::softmax}) {
        const auto net = tiny_net(17, head);
        const Eigen::MatrixXd X = random_matrix(8, 6, 18);
        std::mt19937_64 rng(19);
        const auto y = test::random_labels(rng, 8);
        const auto r = gradient_check(net, X, y);
        EXPECT_LT(r.max_relative_error, 1e-4);
        EXPECT_EQ(r.parameters, net.parameter_count());
    }
}

TEST(GradientCheck, SymmetricParametersGetEqualGradients) {
    Mlp<double> net({2, 3, 2}, OutputHead::sigmoid, 4);
    net.layers()[0].W.row(1) = net.layers()[0].W.row(0);
    Eigen::MatrixXd X = random_matrix(6, 1, 5);
    X.conservativeResize(Eigen::NoChange, 2);
    X.col(1) = X.col(0);
    std::mt19937_64 rng(6);
    const auto T = one_hot<double>(test::random_labels(rng, 6));
    const auto g = net.backward(net.forward_train(X, 0.0, nullptr), T);
    EXPECT_LT((g.layers[0].W.row(0) - g.layers[0].W.row(1)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GradientCheck, DuplicatedBatchLeavesMeanGradientUnchanged) {
    const auto net = tiny_net(8);
    const Eigen::MatrixXd X = random_matrix(5, 6, 9);
    std::mt19937_64 rng(10);
    const auto T = one_hot<double>(test::random_labels(rng, 5));
    Eigen::MatrixXd X2(10, 6), T2(10, 2);
    X2 << X, X;
    T2 << T, T;
    const auto g1 = net.backward(net.forward_train(X, 0.0, nullptr), T);
    const auto g2 = net.backward(net.forward_train(X2, 0.0, nullptr), T2);
    for (std::size_t l = 0; l < g1.layers.size(); ++l) {
        EXPECT_LT((g1.layers[l].W - g2.layers[l].W).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((g1.layers[l].b - g2.layers[l].b).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Train, SeparableBlobsReachTrainingF1) {
    const auto ds = test::synthetic_dataset(200, 0.5, 21);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 2576, 0.25, 22);
    MlpConfig cfg = MlpConfig::reference();
    cfg.epochs = 20;
    auto norm = Normalizer::fit(X);
    const auto m = MlpModel<float>::train(norm.apply(X), ds.labels(), cfg, norm);
    EXPECT_GE(eval::f1_score(ds.labels(), m.predict(X)), 0.99);
}

TEST(Train, ZeroEpochsReturnsInitializedModel) {
    const auto ds = test::synthetic_dataset(40);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 6, 1.0, 1);
    MlpConfig cfg;
    cfg.layer_dims = {6, 4, 2};
    cfg.epochs = 0;
    const auto m = MlpModel<double>::train(X, ds.labels(), cfg, Normalizer::fit(X));
    const Mlp<double> fresh(cfg.layer_dims, cfg.head, derive_seed(cfg.seed, "init"));
    EXPECT_EQ(m.network().layers()[0].W, fresh.layers()[0].W);
    EXPECT_TRUE(m.stats().epoch_loss.empty());
}

TEST(Train, DeterministicAndLossDecreases) {
    const auto ds = test::synthetic_dataset(120);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 10, 0.4, 3);
    MlpConfig cfg;
    cfg.layer_dims = {10, 8, 6, 2};
    cfg.dropout_p = 0.0;
    cfg.learning_rate = 0.05;
    cfg.epochs = 30;
    const auto norm = Normalizer::fit(X);
    const Eigen::MatrixXd Xn = norm.apply(X);
    const auto a = MlpModel<double>::train(Xn, ds.labels(), cfg, norm);
    const auto b = MlpModel<double>::train(Xn, ds.labels(), cfg, norm);
    for (std::size_t l = 0; l < a.network().layers().size(); ++l)
        EXPECT_EQ(a.network().layers()[l].W, b.network().layers()[l].W);
    const Mlp<double> init(cfg.layer_dims, cfg.head, derive_seed(cfg.seed, "init"));
    const auto T = one_hot<double>(ds.labels());
    EXPECT_LE(a.network().loss(Xn, T), init.loss(Xn, T));
}

TEST(Train, DivergenceAbortsWithDiagnostics) {
    const auto ds = test::synthetic_dataset(64);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 6, 1.0, 1) * 1e30;
    MlpConfig cfg;
    cfg.layer_dims = {6, 4, 2};
    cfg.learning_rate = 1e30;
    cfg.dropout_p = 0;
    try {
        MlpModel<double>::train(X, ds.labels(), cfg, Normalizer{});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite training state at epoch "), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("norms"), std::string::npos);
    }
}

TEST(Train, RejectsSingleClassAndBadConfig) {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 3);
    MlpConfig cfg;
    cfg.layer_dims = {3, 2};
    EXPECT_THROW(MlpModel<double>::train(X, std::vector<Label>(4, Label::real), cfg, Normalizer{}), StateError);
    cfg.dropout_p = 1.0;
    EXPECT_THROW(cfg.validate(), StateError);
}

TEST(MlpModel, SaveLoadRoundTrip) {
    test::TempDir dir;
    const auto ds = test::synthetic_dataset(50);
    const Eigen::MatrixXd X = test::gaussian_blobs(ds.labels(), 7, 0.5, 2);
    MlpConfig cfg;
    cfg.layer_dims = {7, 5, 2};
    cfg.epochs = 3;
    const auto norm = Normalizer::fit(X);
    const auto m = MlpModel<float>::train(norm.apply(X), ds.labels(), cfg, norm);
    m.save(dir / "mlp");
    const auto back = MlpModel<float>::load(dir / "mlp");
    EXPECT_EQ(back.forward(X), m.forward(X));
    EXPECT_EQ(back.config().layer_dims, cfg.layer_dims);
    EXPECT_THROW(MlpModel<double>::load(dir / "mlp"), FormatError);
}

TEST(MlpGrid, ListsFromThePaperDeduplicated) {
    const MlpGrid g;
    EXPECT_EQ(g.learning_rates.size(), 6u);
    EXPECT_EQ(g.expand().size(), 6u * 4u * 5u * 3u);
    const auto c = MlpConfig::reference();
    EXPECT_EQ(c.learning_rate, 0.001);
    EXPECT_EQ(c.dropout_p, 0.7);
    EXPECT_EQ(c.batch_size, 32u);
    EXPECT_EQ(c.epochs, 100);
}

TEST(LinearStack, SixBaseModelsGiveSixColumns) {
    std::vector<BaseOutput> outs;
    for (int i = 0; i < 6; ++i) outs.push_back({"m" + std::to_string(i), random_matrix(10, 1, static_cast<std::uint64_t>(i)), i % 2 == 0});
    EXPECT_EQ(stack_base_outputs(outs, StackMode::labels).cols(), 6);
    const auto dec = stack_base_outputs(outs, StackMode::decision);
    EXPECT_NEAR(dec(3, 0), linear::sigmoid(outs[0].scores(3, 0)), 1e-15);
    EXPECT_EQ(dec(3, 1), outs[1].scores(3, 0));
}

TEST(LinearStack, AgreeingRealGivesRowOfOnes) {
    std::vector<BaseOutput> outs{{"a", Eigen::MatrixXd::Constant(2, 1, 0.3), false},
                                 {"b", Eigen::MatrixXd::Constant(2, 1, 2.0), true}};
    Eigen::MatrixXd two(2, 2);
    two << 0.1, 0.9, 0.4, 0.6;
    outs.push_back({"ext", two, false});
    const auto m = stack_base_outputs(outs, StackMode::labels);
    EXPECT_EQ(m, Eigen::MatrixXd::Ones(2, 3));
}

TEST(LinearStack, ErrorsOnMisalignedOrTooFew) {
    std::vector<BaseOutput> outs{{"a", Eigen::MatrixXd::Zero(3, 1), false}};
    EXPECT_THROW(stack_base_outputs(outs, StackMode::labels), StateError);
    outs.push_back({"b", Eigen::MatrixXd::Zero(4, 1), false});
    EXPECT_THROW(stack_base_outputs(outs, StackMode::labels), StateError);
}

TEST(LinearStack, PerfectColumnGivesPerfectF1) {
    const auto ds = test::synthetic_dataset(80);
    const auto y = ds.labels();
    Eigen::MatrixXd perfect(80, 1), noise = random_matrix(80, 1, 3);
    for (Eigen::Index i = 0; i < 80; ++i) perfect(i, 0) = y[static_cast<std::size_t>(i)] == Label::real ? 1.0 : -1.0;
    const std::vector<BaseOutput> outs{{"noise", noise, false}, {"oracle", perfect, false}};
    for (auto mode : {StackMode::labels, StackMode::decision}) {
        const auto meta = stack_base_outputs(outs, mode);
        const auto m = train_linear_stack(meta, y, mode);
        EXPECT_EQ(eval::f1_score(y, m.predict(meta)), 1.0);
    }
}

TEST(LinearStack, PresetsMatchTable) {
    EXPECT_EQ(linear_stack_preset(StackMode::labels).config.l1_ratio, 0.3);
    EXPECT_EQ(linear_stack_preset(StackMode::decision).config.l1_ratio, 0.8);
    EXPECT_EQ(linear_stack_preset(StackMode::labels).config.loss, linear::Loss::hinge);
    EXPECT_EQ(linear_stack_preset(StackMode::labels).config.penalty, linear::Penalty::elasticnet);
}
