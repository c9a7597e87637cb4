#pragma once

// Meta-models over base representations and base-model outputs:
//  * neural stacking: a feed-forward SELU network over the concatenation of
//    all representation blocks (2576 -> 896 -> 640 -> 512 -> 216 -> 2);
//  * linear stacking: an SGD linear model over base-model labels or scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fakenews/corpus.hpp"
#include "fakenews/error.hpp"
#include "fakenews/io.hpp"
#include "fakenews/linear_models.hpp"
#include "fakenews/random.hpp"

namespace fakenews::meta {

// ---------------------------------------------------------------------------
// Stack input assembly

struct StackBlock {
    std::string source;
    std::size_t dim;
};

struct StackInputSpec {
    std::vector<StackBlock> blocks;

    std::size_t total_dim() const {
        return std::accumulate(blocks.begin(), blocks.end(), std::size_t{0},
                               [](std::size_t s, const StackBlock& b) { return s + b.dim; });
    }

    /// LSA(256) + hand-crafted(16) + three 768-dim sentence encoders = 2576.
    static StackInputSpec canonical() {
        return {{{"lsa", 256},
                 {"handcrafted", 16},
                 {"distilbert-base-nli-mean-tokens", 768},
                 {"roberta-large-nli-stsb-mean-tokens", 768},
                 {"xlm-r-large-en-ko-nli-ststb", 768}}};
    }
};

enum class NormalizerMode { standardize, l2 };

/// Per-feature standardization fitted on training rows (zero-variance
/// features get std 1), or per-sample L2 scaling.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(NormalizerMode mode, Eigen::RowVectorXd mean, Eigen::RowVectorXd std)
        : mode_(mode), mean_(std::move(mean)), std_(std::move(std)) {}

    static Normalizer fit(const Eigen::MatrixXd& X, std::span<const std::size_t> rows,
                          NormalizerMode mode = NormalizerMode::standardize) {
        Normalizer n;
        n.mode_ = mode;
        if (mode == NormalizerMode::l2) return n;
        if (rows.empty()) throw StateError("normalizer needs at least one training row");
        const Eigen::Index d = X.cols();
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
        for (auto r : rows) mean += X.row(static_cast<Eigen::Index>(r));
        mean /= static_cast<double>(rows.size());
        Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
        for (auto r : rows) var += (X.row(static_cast<Eigen::Index>(r)) - mean).array().square().matrix();
        var /= static_cast<double>(rows.size());
        Eigen::RowVectorXd sd = var.array().sqrt();
        for (Eigen::Index j = 0; j < d; ++j)
            if (!(sd(j) > 1e-12 * std::max(1.0, std::abs(mean(j))))) sd(j) = 1.0;
        n.mean_ = std::move(mean);
        n.std_ = std::move(sd);
        return n;
    }

    static Normalizer fit(const Eigen::MatrixXd& X, NormalizerMode mode = NormalizerMode::standardize) {
        std::vector<std::size_t> all(static_cast<std::size_t>(X.rows()));
        std::iota(all.begin(), all.end(), 0);
        return fit(X, all, mode);
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        if (mode_ == NormalizerMode::l2) {
            Eigen::MatrixXd out = X;
            for (Eigen::Index i = 0; i < out.rows(); ++i) {
                const double nrm = out.row(i).norm();
                if (nrm > 0) out.row(i) /= nrm;
            }
            return out;
        }
        if (X.cols() != mean_.size())
            throw StateError("normalizer fitted on " + std::to_string(mean_.size()) + " features, got " +
                             std::to_string(X.cols()));
        return (X.rowwise() - mean_).array().rowwise() / std_.array();
    }

    NormalizerMode mode() const { return mode_; }
    const Eigen::RowVectorXd& mean() const { return mean_; }
    const Eigen::RowVectorXd& stddev() const { return std_; }

    io::json to_json() const {
        return {{"mode", mode_ == NormalizerMode::l2 ? "l2" : "standardize"},
                {"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
                {"std", std::vector<double>(std_.data(), std_.data() + std_.size())}};
    }

    static Normalizer from_json(const io::json& j) {
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto sd = j.at("std").get<std::vector<double>>();
        if (mean.size() != sd.size()) throw FormatError("normalizer mean/std length mismatch");
        return Normalizer(j.at("mode") == "l2" ? NormalizerMode::l2 : NormalizerMode::standardize,
                          Eigen::Map<const Eigen::RowVectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())),
                          Eigen::Map<const Eigen::RowVectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size())));
    }

private:
    NormalizerMode mode_ = NormalizerMode::standardize;
    Eigen::RowVectorXd mean_, std_;
};

struct StackInput {
    Eigen::MatrixXd X; ///< normalized, N x total_dim
    Normalizer normalizer;
};

/// Horizontal concatenation of the blocks in spec order, then normalization
/// fitted on `train_rows` and applied to every row.
inline Eigen::MatrixXd concatenate_blocks(const StackInputSpec& spec, std::span<const Eigen::MatrixXd> blocks) {
    if (blocks.size() != spec.blocks.size())
        throw StateError("expected " + std::to_string(spec.blocks.size()) + " blocks, got " + std::to_string(blocks.size()));
    const Eigen::Index n = blocks.empty() ? 0 : blocks[0].rows();
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(spec.total_dim()));
    Eigen::Index col = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        if (static_cast<std::size_t>(blk.cols()) != spec.blocks[b].dim)
            throw StateError("block '" + spec.blocks[b].source + "' has dim " + std::to_string(blk.cols()) +
                             ", expected " + std::to_string(spec.blocks[b].dim));
        if (blk.rows() != n)
            throw StateError("block '" + spec.blocks[b].source + "' has " + std::to_string(blk.rows()) +
                             " rows, expected " + std::to_string(n));
        X.middleCols(col, blk.cols()) = blk;
        col += blk.cols();
    }
    return X;
}

inline StackInput assemble_stack_input(const StackInputSpec& spec, std::span<const Eigen::MatrixXd> blocks,
                                       std::span<const std::size_t> train_rows,
                                       NormalizerMode mode = NormalizerMode::standardize) {
    Eigen::MatrixXd X = concatenate_blocks(spec, blocks);
    Normalizer norm = Normalizer::fit(X, train_rows, mode);
    return {norm.apply(X), std::move(norm)};
}

// ---------------------------------------------------------------------------
// SELU network

inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;

template <typename S>
S selu(S z) {
    return z > S(0) ? S(kSeluScale) * z : S(kSeluScale * kSeluAlpha) * std::expm1(z);
}

template <typename S>
S selu_derivative(S z) {
    return z > S(0) ? S(kSeluScale) : S(kSeluScale * kSeluAlpha) * std::exp(z);
}

enum class OutputHead { sigmoid, softmax };

struct MlpConfig {
    std::vector<std::size_t> layer_dims{2576, 896, 640, 512, 216, 2};
    double dropout_p = 0.7; ///< drop probability after each hidden SELU
    double learning_rate = 0.001;
    std::size_t batch_size = 32;
    int epochs = 100;
    OutputHead head = OutputHead::sigmoid;
    std::uint64_t seed = 42;

    static MlpConfig reference();

    void validate() const {
        if (layer_dims.size() < 2) throw StateError("network needs at least input and output layers");
        if (layer_dims.back() != 2) throw StateError("output layer must have 2 nodes (fake, real)");
        if (std::find(layer_dims.begin(), layer_dims.end(), std::size_t{0}) != layer_dims.end())
            throw StateError("layer sizes must be positive");
        if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw StateError("dropout_p must lie in [0, 1)");
        if (!(learning_rate > 0.0)) throw StateError("learning rate must be positive");
        if (batch_size == 0) throw StateError("batch size must be positive");
        if (epochs < 0) throw StateError("epochs must be non-negative");
    }

    io::json to_json() const {
        return {{"layer_dims", layer_dims}, {"dropout_p", dropout_p}, {"learning_rate", learning_rate},
                {"batch_size", batch_size}, {"epochs", epochs},
                {"output_head", head == OutputHead::sigmoid ? "sigmoid" : "softmax"}, {"seed", seed}};
    }

    static MlpConfig from_json(const io::json& j) { return from_json(j, reference()); }

    static MlpConfig from_json(const io::json& j, MlpConfig base) {
        try {
            if (j.contains("layer_dims")) base.layer_dims = j["layer_dims"].get<std::vector<std::size_t>>();
            if (j.contains("dropout_p")) base.dropout_p = j["dropout_p"];
            if (j.contains("learning_rate")) base.learning_rate = j["learning_rate"];
            if (j.contains("batch_size")) base.batch_size = j["batch_size"];
            if (j.contains("epochs")) base.epochs = j["epochs"];
            if (j.contains("output_head")) base.head = j["output_head"] == "softmax" ? OutputHead::softmax : OutputHead::sigmoid;
            if (j.contains("seed")) base.seed = j["seed"];
        } catch (const io::json::exception& e) {
            throw FormatError(std::string("MLP config: ") + e.what());
        }
        return base;
    }
};

inline MlpConfig MlpConfig::reference() { return MlpConfig{}; }

/// Learning-rate, dropout, batch-size and epoch lists of the stacking grid
/// (the learning-rate list is deduplicated).
struct MlpGrid {
    std::vector<double> learning_rates{0.0001, 0.005, 0.001, 0.01, 0.05, 0.1};
    std::vector<double> dropouts{0.1, 0.3, 0.5, 0.7};
    std::vector<std::size_t> batch_sizes{16, 32, 64, 128, 256};
    std::vector<int> epochs{10, 100, 1000};

    std::vector<MlpConfig> expand(const MlpConfig& base = {}) const {
        std::vector<MlpConfig> out;
        for (double lr : learning_rates)
            for (double p : dropouts)
                for (auto bs : batch_sizes)
                    for (int e : epochs) {
                        MlpConfig c = base;
                        c.learning_rate = lr;
                        c.dropout_p = p;
                        c.batch_size = bs;
                        c.epochs = e;
                        out.push_back(c);
                    }
        return out;
    }
};

/// Dense feed-forward network. `Scalar` is float for full-size training and
/// double for gradient checking.
template <typename Scalar>
class Mlp {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    struct Layer {
        Matrix W;    ///< in x out
        RowVector b; ///< 1 x out
    };

    struct Gradients {
        std::vector<Layer> layers;
    };

    /// Per-layer values kept for backpropagation.
    struct Trace {
        std::vector<Matrix> inputs;      ///< input of each layer
        std::vector<Matrix> pre;         ///< pre-activation of each layer
        std::vector<Matrix> masks;       ///< scaled dropout masks of hidden layers (empty when unused)
        Matrix output;
    };

    Mlp() = default;

    /// LeCun-normal weights (std 1/sqrt(fan_in)), zero biases.
    Mlp(std::vector<std::size_t> dims, OutputHead head, std::uint64_t seed) : dims_(std::move(dims)), head_(head) {
        std::mt19937_64 rng(seed);
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            const auto in = static_cast<Eigen::Index>(dims_[l]);
            const auto out = static_cast<Eigen::Index>(dims_[l + 1]);
            std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
            Layer layer{Matrix(in, out), RowVector::Zero(out)};
            for (Eigen::Index j = 0; j < out; ++j)
                for (Eigen::Index i = 0; i < in; ++i) layer.W(i, j) = static_cast<Scalar>(g(rng));
            layers_.push_back(std::move(layer));
        }
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    OutputHead head() const { return head_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    /// Inference pass: no dropout, no rescaling.
    Matrix forward(const Matrix& X) const {
        check_input(X);
        Matrix a = X;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Matrix z = (a * layers_[l].W).rowwise() + layers_[l].b;
            a = last(l) ? output_activation(z) : z.unaryExpr([](Scalar v) { return selu(v); });
        }
        return a;
    }

    /// Training pass with inverted dropout (drop probability `dropout_p`,
    /// survivors scaled by 1/(1-p)). Records what backward() needs.
    Trace forward_train(const Matrix& X, double dropout_p, std::mt19937_64* rng) const {
        check_input(X);
        Trace t;
        Matrix a = X;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            t.inputs.push_back(a);
            Matrix z = (a * layers_[l].W).rowwise() + layers_[l].b;
            if (last(l)) {
                t.output = output_activation(z);
                t.pre.push_back(std::move(z));
                break;
            }
            a = z.unaryExpr([](Scalar v) { return selu(v); });
            t.pre.push_back(std::move(z));
            if (dropout_p > 0.0 && rng) {
                std::bernoulli_distribution keep(1.0 - dropout_p);
                const Scalar scale = static_cast<Scalar>(1.0 / (1.0 - dropout_p));
                Matrix mask(a.rows(), a.cols());
                for (Eigen::Index j = 0; j < mask.cols(); ++j)
                    for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(*rng) ? scale : Scalar(0);
                a = a.cwiseProduct(mask);
                t.masks.push_back(std::move(mask));
            } else {
                t.masks.emplace_back();
            }
        }
        return t;
    }

    /// Mean over the batch of the per-sample loss: summed binary
    /// cross-entropy of the two sigmoid nodes (or softmax cross-entropy).
    Scalar loss_from_pre(const Matrix& z_out, const Matrix& targets) const {
        double sum = 0;
        for (Eigen::Index i = 0; i < z_out.rows(); ++i)
            for (Eigen::Index k = 0; k < z_out.cols(); ++k) {
                const double z = static_cast<double>(z_out(i, k));
                const double t = static_cast<double>(targets(i, k));
                if (head_ == OutputHead::sigmoid) {
                    sum += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
                } else if (t != 0.0) {
                    const double m = static_cast<double>(z_out.row(i).maxCoeff());
                    double lse = 0;
                    for (Eigen::Index c = 0; c < z_out.cols(); ++c) lse += std::exp(static_cast<double>(z_out(i, c)) - m);
                    sum += -t * (z - m - std::log(lse));
                }
            }
        return static_cast<Scalar>(sum / static_cast<double>(z_out.rows()));
    }

    Scalar loss(const Matrix& X, const Matrix& targets) const {
        Trace t = forward_train(X, 0.0, nullptr);
        return loss_from_pre(t.pre.back(), targets);
    }

    /// Gradients of the mean batch loss with respect to every parameter.
    Gradients backward(const Trace& t, const Matrix& targets) const {
        const auto batch = static_cast<Scalar>(targets.rows());
        Gradients g;
        g.layers.resize(layers_.size());
        Matrix delta = (t.output - targets) / batch; // d loss / d z_out for both heads
        for (std::size_t li = layers_.size(); li-- > 0;) {
            g.layers[li].W = t.inputs[li].transpose() * delta;
            g.layers[li].b = delta.colwise().sum();
            if (li == 0) break;
            Matrix da = delta * layers_[li].W.transpose();
            if (t.masks[li - 1].size() != 0) da = da.cwiseProduct(t.masks[li - 1]);
            delta = da.cwiseProduct(t.pre[li - 1].unaryExpr([](Scalar v) { return selu_derivative(v); }));
        }
        return g;
    }

    void sgd_step(const Gradients& g, Scalar lr) {
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            layers_[l].W.noalias() -= lr * g.layers[l].W;
            layers_[l].b.noalias() -= lr * g.layers[l].b;
        }
    }

    bool finite() const {
        return std::all_of(layers_.begin(), layers_.end(),
                           [](const Layer& l) { return l.W.allFinite() && l.b.allFinite(); });
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
        return n;
    }

private:
    bool last(std::size_t l) const { return l + 1 == layers_.size(); }

    void check_input(const Matrix& X) const {
        if (dims_.empty() || static_cast<std::size_t>(X.cols()) != dims_.front())
            throw StateError("network expects " + std::to_string(dims_.empty() ? 0 : dims_.front()) +
                             " input features, got " + std::to_string(X.cols()));
    }

    Matrix output_activation(const Matrix& z) const {
        if (head_ == OutputHead::sigmoid)
            return z.unaryExpr([](Scalar v) { return static_cast<Scalar>(linear::sigmoid(static_cast<double>(v))); });
        Matrix out(z.rows(), z.cols());
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const Scalar m = z.row(i).maxCoeff();
            out.row(i) = (z.row(i).array() - m).exp().matrix();
            out.row(i) /= out.row(i).sum();
        }
        return out;
    }

    std::vector<std::size_t> dims_;
    OutputHead head_ = OutputHead::sigmoid;
    std::vector<Layer> layers_;
};

/// One-hot targets in slot order (fake, real).
template <typename Scalar>
typename Mlp<Scalar>::Matrix one_hot(std::span<const Label> y) {
    typename Mlp<Scalar>::Matrix t = Mlp<Scalar>::Matrix::Zero(static_cast<Eigen::Index>(y.size()), 2);
    for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i), static_cast<int>(y[i])) = Scalar(1);
    return t;
}

/// argmax over (fake, real); ties go to fake.
template <typename Derived>
std::vector<Label> argmax_labels(const Eigen::MatrixBase<Derived>& out) {
    std::vector<Label> labels(static_cast<std::size_t>(out.rows()));
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        labels[static_cast<std::size_t>(i)] = out(i, 1) > out(i, 0) ? Label::real : Label::fake;
    return labels;
}

struct TrainingStats {
    std::vector<double> epoch_loss; ///< mean minibatch loss per epoch
};

/// Trained stacking network with its input normalizer.
template <typename Scalar = float>
class MlpModel {
public:
    using Net = Mlp<Scalar>;
    using Matrix = typename Net::Matrix;

    MlpModel() = default;
    MlpModel(MlpConfig cfg, Net net, Normalizer norm)
        : cfg_(std::move(cfg)), net_(std::move(net)), norm_(std::move(norm)) {}

    const MlpConfig& config() const { return cfg_; }
    const Net& network() const { return net_; }
    const Normalizer& normalizer() const { return norm_; }
    const TrainingStats& stats() const { return stats_; }

    /// X is the raw (unnormalized) concatenated input; returns N x 2 activations.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const {
        return net_.forward(norm_.apply(X).template cast<Scalar>()).template cast<double>();
    }

    std::vector<Label> predict(const Eigen::MatrixXd& X) const { return argmax_labels(forward(X)); }

    /// Minibatch SGD on already-normalized inputs. Deterministic given cfg.seed.
    static MlpModel train(const Eigen::MatrixXd& X_normalized, std::span<const Label> y, const MlpConfig& cfg,
                          Normalizer norm) {
        cfg.validate();
        if (static_cast<std::size_t>(X_normalized.rows()) != y.size()) throw StateError("label count does not match rows");
        if (std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::real; }) ||
            std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::fake; }))
            throw StateError("training labels contain a single class");
        if (!X_normalized.allFinite()) throw DataError("training matrix contains NaN or Inf");

        MlpModel model(cfg, Net(cfg.layer_dims, cfg.head, derive_seed(cfg.seed, "init")), std::move(norm));
        const Matrix X = X_normalized.template cast<Scalar>();
        const Matrix T = one_hot<Scalar>(y);
        std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle"));
        std::mt19937_64 dropout_rng(derive_seed(cfg.seed, "dropout"));
        std::vector<Eigen::Index> order(y.size());
        std::iota(order.begin(), order.end(), Eigen::Index{0});

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            double loss_sum = 0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t len = std::min(cfg.batch_size, order.size() - start);
                std::span<const Eigen::Index> idx(order.data() + start, len);
                const Matrix xb = X(idx, Eigen::all);
                const Matrix tb = T(idx, Eigen::all);
                auto trace = model.net_.forward_train(xb, cfg.dropout_p, &dropout_rng);
                const double l = static_cast<double>(model.net_.loss_from_pre(trace.pre.back(), tb));
                if (!std::isfinite(l)) throw DataError(model.diagnostics(epoch, batches, l));
                model.net_.sgd_step(model.net_.backward(trace, tb), static_cast<Scalar>(cfg.learning_rate));
                if (!model.net_.finite()) throw DataError(model.diagnostics(epoch, batches, l));
                loss_sum += l;
                ++batches;
            }
            model.stats_.epoch_loss.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);
        }
        return model;
    }

    void save(const std::filesystem::path& prefix) const {
        io::json m{{"format", "fakenews-mlp"},
                   {"version", 1},
                   {"config", cfg_.to_json()},
                   {"layer_dims", net_.dims()},
                   {"dtype", sizeof(Scalar) == 4 ? "f32" : "f64"},
                   {"normalizer", norm_.to_json()},
                   {"epoch_loss", stats_.epoch_loss}};
        io::BlockWriter w;
        for (std::size_t l = 0; l < net_.layers().size(); ++l) {
            const auto& layer = net_.layers()[l];
            w.add<Scalar>("W" + std::to_string(l), std::span<const Scalar>(layer.W.data(), static_cast<std::size_t>(layer.W.size())));
            w.add<Scalar>("b" + std::to_string(l), std::span<const Scalar>(layer.b.data(), static_cast<std::size_t>(layer.b.size())));
        }
        m["weight_layout"] = "column-major in x out";
        io::save_model_files(prefix, std::move(m), w);
    }

    static MlpModel load(const std::filesystem::path& prefix) {
        auto [m, payload] = io::load_model_files(prefix);
        if (m.value("format", "") != "fakenews-mlp") throw FormatError(prefix.string() + ": not an MLP model");
        if (m.value("dtype", "") != (sizeof(Scalar) == 4 ? "f32" : "f64"))
            throw FormatError(prefix.string() + ": parameter dtype mismatch");
        MlpConfig cfg = MlpConfig::from_json(m.at("config"));
        Net net(m.at("layer_dims").get<std::vector<std::size_t>>(), cfg.head, 0);
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            auto& layer = net.layers()[l];
            auto W = io::read_block<Scalar>(m, payload, "W" + std::to_string(l));
            auto b = io::read_block<Scalar>(m, payload, "b" + std::to_string(l));
            if (W.size() != static_cast<std::size_t>(layer.W.size()) || b.size() != static_cast<std::size_t>(layer.b.size()))
                throw FormatError(prefix.string() + ": layer " + std::to_string(l) + " size mismatch");
            std::copy(W.begin(), W.end(), layer.W.data());
            std::copy(b.begin(), b.end(), layer.b.data());
        }
        MlpModel model(std::move(cfg), std::move(net), Normalizer::from_json(m.at("normalizer")));
        if (m.contains("epoch_loss")) model.stats_.epoch_loss = m["epoch_loss"].get<std::vector<double>>();
        return model;
    }

private:
    std::string diagnostics(int epoch, std::size_t batch, double loss) const {
        std::ostringstream os;
        os << "non-finite training state at epoch " << epoch + 1 << ", batch " << batch + 1 << " (loss " << loss
           << "); layer weight norms:";
        for (const auto& l : net_.layers()) os << ' ' << static_cast<double>(l.W.norm());
        return os.str();
    }

    MlpConfig cfg_;
    Net net_;
    Normalizer norm_;
    TrainingStats stats_;
};

/// N x 2 output activations, inference mode.
template <typename Scalar>
Eigen::MatrixXd mlp_forward(const MlpModel<Scalar>& m, const Eigen::MatrixXd& X) {
    return m.forward(X);
}

/// Central finite differences (step h) against backprop on a float64
/// network with dropout off. Relative error per parameter is
/// |analytic - numeric| / max(|analytic| + |numeric|, floor).
struct GradientCheckResult {
    double max_relative_error = 0;
    double max_absolute_error = 0;
    std::size_t parameters = 0;
};

inline GradientCheckResult gradient_check(Mlp<double> net, const Eigen::MatrixXd& X, std::span<const Label> y,
                                          double h = 1e-6, double floor = 1e-8) {
    const Eigen::MatrixXd T = one_hot<double>(y);
    const auto trace = net.forward_train(X, 0.0, nullptr);
    const auto grads = net.backward(trace, T);
    GradientCheckResult r;
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = net.loss(X, T);
        param = saved - h;
        const double down = net.loss(X, T);
        param = saved;
        const double numeric = (up - down) / (2 * h);
        const double abs_err = std::abs(analytic - numeric);
        r.max_absolute_error = std::max(r.max_absolute_error, abs_err);
        r.max_relative_error = std::max(r.max_relative_error, abs_err / std::max(std::abs(analytic) + std::abs(numeric), floor));
        ++r.parameters;
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = net.layers()[l];
        for (Eigen::Index i = 0; i < layer.W.size(); ++i) probe(layer.W.data()[i], grads.layers[l].W.data()[i]);
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) probe(layer.b.data()[i], grads.layers[l].b.data()[i]);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Linear stacking

enum class StackMode { labels, decision };

/// Output of one base model on a dataset: N x 1 decision values, or N x 2
/// per-class scores in (fake, real) order.
struct BaseOutput {
    std::string name;
    Eigen::MatrixXd scores;
    /// Logistic models contribute sigmoid(score) in decision mode.
    bool logistic = false;
};

/// One meta-feature column per base model. labels mode: 1 = real, 0 = fake
/// (score > 0, or argmax with ties to fake). decision mode: raw decision
/// value for margin models, sigmoid output for logistic ones, the "real"
/// score for two-column inputs.
inline Eigen::MatrixXd stack_base_outputs(std::span<const BaseOutput> outputs, StackMode mode) {
    if (outputs.size() < 2) throw StateError("linear stacking needs at least 2 base models");
    const Eigen::Index n = outputs.front().scores.rows();
    Eigen::MatrixXd meta(n, static_cast<Eigen::Index>(outputs.size()));
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        const auto& o = outputs[c];
        if (o.scores.rows() != n)
            throw StateError("base output '" + o.name + "' has " + std::to_string(o.scores.rows()) + " rows, expected " +
                             std::to_string(n));
        if (o.scores.cols() != 1 && o.scores.cols() != 2)
            throw StateError("base output '" + o.name + "' must have 1 or 2 columns");
        const auto col = static_cast<Eigen::Index>(c);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (o.scores.cols() == 1) {
                const double s = o.scores(i, 0);
                meta(i, col) = mode == StackMode::labels ? (s > 0 ? 1.0 : 0.0) : (o.logistic ? linear::sigmoid(s) : s);
            } else {
                meta(i, col) = mode == StackMode::labels ? (o.scores(i, 1) > o.scores(i, 0) ? 1.0 : 0.0) : o.scores(i, 1);
            }
        }
    }
    return meta;
}

inline const linear::Preset& linear_stack_preset(StackMode mode) {
    return linear::find_preset(mode == StackMode::labels ? "linear-stacking" : "linear-stacking-probs");
}

/// Linear meta-model with the tuned stacking preset for `mode`; `seed` overrides the preset seed.
inline linear::LinearModel train_linear_stack(const Eigen::MatrixXd& meta, std::span<const Label> y, StackMode mode,
                                              std::uint64_t seed = 42) {
    auto cfg = linear_stack_preset(mode).config;
    cfg.seed = seed;
    return linear::train_sgd(meta, y, cfg);
}

} // namespace fakenews::meta
