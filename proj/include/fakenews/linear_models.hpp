#pragma once

// SGD-trained linear classifiers (logistic / hinge loss, L2 / L1 / elastic-net
// penalty) and the named hyperparameter presets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fakenews/corpus.hpp"
#include "fakenews/error.hpp"
#include "fakenews/io.hpp"

namespace fakenews::linear {

enum class Loss { log, hinge };
enum class Penalty { l2, l1, elasticnet };

inline std::string_view to_string(Loss l) { return l == Loss::log ? "log" : "hinge"; }
inline std::string_view to_string(Penalty p) {
    return p == Penalty::l2 ? "l2" : p == Penalty::l1 ? "l1" : "elasticnet";
}
inline Loss parse_loss(std::string_view s) {
    if (s == "log" || s == "log_loss" || s == "logistic") return Loss::log;
    if (s == "hinge") return Loss::hinge;
    throw FormatError("unknown loss '" + std::string(s) + "'");
}
inline Penalty parse_penalty(std::string_view s) {
    if (s == "l2") return Penalty::l2;
    if (s == "l1") return Penalty::l1;
    if (s == "elasticnet") return Penalty::elasticnet;
    throw FormatError("unknown penalty '" + std::string(s) + "'");
}

struct SgdConfig {
    Loss loss = Loss::hinge;
    Penalty penalty = Penalty::l2;
    double alpha = 1e-4;
    double l1_ratio = 0.15; ///< only read when penalty == elasticnet
    double power_t = 0.5;
    double eta0 = 0.1;
    int epochs = 1000;
    double tol = 1e-3;
    /// Consecutive epochs without `tol` improvement before stopping.
    int n_iter_no_change = 5;
    std::uint64_t seed = 42;
    /// Inverse regularization; when set, alpha = 1 / (C * N) at training time.
    std::optional<double> C;

    /// Fraction of alpha applied as L1.
    double l1_fraction() const {
        switch (penalty) {
        case Penalty::l2: return 0.0;
        case Penalty::l1: return 1.0;
        case Penalty::elasticnet: return l1_ratio;
        }
        return 0.0;
    }

    double effective_alpha(std::size_t n_samples) const {
        return C ? 1.0 / (*C * static_cast<double>(n_samples)) : alpha;
    }
};

inline io::json to_json(const SgdConfig& c) {
    io::json j{{"loss", to_string(c.loss)}, {"penalty", to_string(c.penalty)}, {"alpha", c.alpha},
               {"l1_ratio", c.l1_ratio}, {"power_t", c.power_t}, {"eta0", c.eta0}, {"epochs", c.epochs},
               {"tol", c.tol}, {"n_iter_no_change", c.n_iter_no_change}, {"seed", c.seed}};
    if (c.C) j["C"] = *c.C;
    return j;
}

/// Missing keys keep the defaults of `base`.
inline SgdConfig sgd_config_from_json(const io::json& j, SgdConfig base = {}) {
    try {
        if (j.contains("loss")) base.loss = parse_loss(j["loss"].get<std::string>());
        if (j.contains("penalty")) base.penalty = parse_penalty(j["penalty"].get<std::string>());
        if (j.contains("alpha")) base.alpha = j["alpha"];
        if (j.contains("l1_ratio")) base.l1_ratio = j["l1_ratio"];
        if (j.contains("power_t")) base.power_t = j["power_t"];
        if (j.contains("eta0")) base.eta0 = j["eta0"];
        if (j.contains("epochs")) base.epochs = j["epochs"];
        if (j.contains("tol")) base.tol = j["tol"];
        if (j.contains("n_iter_no_change")) base.n_iter_no_change = j["n_iter_no_change"];
        if (j.contains("seed")) base.seed = j["seed"];
        if (j.contains("C") && !j["C"].is_null())
            base.C = j["C"].is_string() ? std::stod(j["C"].get<std::string>()) : j["C"].get<double>();
    } catch (const io::json::exception& e) {
        throw FormatError(std::string("SGD config: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw FormatError("SGD config: C is not a number");
    }
    return base;
}

/// Internal sign convention: real = +1, fake = -1.
inline double sign_of(Label l) { return l == Label::real ? 1.0 : -1.0; }

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Loss value for a signed target y in {-1, +1} and score z.
inline double loss_value(Loss loss, double y, double z) {
    const double m = y * z;
    if (loss == Loss::hinge) return std::max(0.0, 1.0 - m);
    // log(1 + exp(-m)), stable for large |m|
    return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

/// d loss / d z
inline double loss_derivative(Loss loss, double y, double z) {
    const double m = y * z;
    if (loss == Loss::hinge) return m < 1.0 ? -y : 0.0;
    return -y * sigmoid(-m);
}

class LinearModel {
public:
    LinearModel() = default;
    LinearModel(Eigen::VectorXd weights, double bias, Loss loss)
        : weights_(std::move(weights)), bias_(bias), loss_(loss) {
        if (!weights_.allFinite() || !std::isfinite(bias_)) throw DataError("linear model parameters are not finite");
    }

    const Eigen::VectorXd& weights() const { return weights_; }
    double bias() const { return bias_; }
    Loss loss() const { return loss_; }
    std::size_t dim() const { return static_cast<std::size_t>(weights_.size()); }
    /// Number of epochs actually run during training (0 for hand-built models).
    int epochs_run() const { return epochs_run_; }
    const std::vector<double>& objective_history() const { return history_; }

    /// w.x + b per row.
    Eigen::VectorXd decision_function(const Eigen::MatrixXd& X) const {
        check_dim(X);
        return (X * weights_).array() + bias_;
    }

    /// score > 0 -> real; ties go to fake.
    std::vector<Label> predict(const Eigen::MatrixXd& X) const {
        const Eigen::VectorXd s = decision_function(X);
        std::vector<Label> out(static_cast<std::size_t>(s.size()));
        for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) > 0 ? Label::real : Label::fake;
        return out;
    }

    /// Probability of "real". Only defined for logistic models.
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const {
        if (loss_ != Loss::log) throw StateError("predict_proba requires a logistic (log-loss) model");
        return decision_function(X).unaryExpr([](double z) { return sigmoid(z); });
    }

    void save(const std::filesystem::path& prefix, const SgdConfig& cfg) const {
        io::json m{{"format", "fakenews-linear"}, {"version", 1}, {"config", to_json(cfg)},
                   {"classes", {"fake", "real"}}, {"loss", to_string(loss_)}, {"bias", bias_},
                   {"dim", weights_.size()}, {"epochs_run", epochs_run_}};
        io::BlockWriter w;
        w.add<double>("weights", std::span<const double>(weights_.data(), static_cast<std::size_t>(weights_.size())));
        io::save_model_files(prefix, std::move(m), w);
    }

    static std::pair<LinearModel, SgdConfig> load(const std::filesystem::path& prefix) {
        auto [m, payload] = io::load_model_files(prefix);
        if (m.value("format", "") != "fakenews-linear") throw FormatError(prefix.string() + ": not a linear model");
        auto w = io::read_block<double>(m, payload, "weights");
        if (w.size() != m.at("dim").get<std::size_t>()) throw FormatError(prefix.string() + ": weight block size mismatch");
        LinearModel model(Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                          m.at("bias").get<double>(), parse_loss(m.at("loss").get<std::string>()));
        model.epochs_run_ = m.value("epochs_run", 0);
        return {std::move(model), sgd_config_from_json(m.at("config"))};
    }

private:
    friend LinearModel train_sgd(const Eigen::MatrixXd&, std::span<const Label>, const SgdConfig&);

    void check_dim(const Eigen::MatrixXd& X) const {
        if (X.cols() != weights_.size())
            throw StateError("expected " + std::to_string(weights_.size()) + " features, got " + std::to_string(X.cols()));
    }

    Eigen::VectorXd weights_;
    double bias_ = 0.0;
    Loss loss_ = Loss::hinge;
    int epochs_run_ = 0;
    std::vector<double> history_;
};

/// Regularized mean objective (1/N) sum L(y_i, w.x_i + b) + alpha (r|w|_1 + (1-r)/2 |w|_2^2).
inline double sgd_objective(const Eigen::MatrixXd& X, std::span<const Label> y, const Eigen::VectorXd& w, double b,
                            Loss loss, double alpha, double l1_fraction) {
    const Eigen::VectorXd z = (X * w).array() + b;
    double sum = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) sum += loss_value(loss, sign_of(y[static_cast<std::size_t>(i)]), z(i));
    const double r = l1_fraction;
    return sum / static_cast<double>(z.size()) + alpha * (r * w.lpNorm<1>() + 0.5 * (1.0 - r) * w.squaredNorm());
}

/// Per-sample SGD with inverse-scaling step eta0 / t^power_t (t counts every
/// update since the start). The L2 share of the penalty is applied as weight
/// decay after each loss step (clipped at zero); the L1 share through cumulative-penalty truncation, so weights
/// never cross zero because of the penalty. Samples are reshuffled every
/// epoch from `cfg.seed`.
inline LinearModel train_sgd(const Eigen::MatrixXd& X, std::span<const Label> y, const SgdConfig& cfg) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (y.size() != n) throw StateError("label count does not match rows");
    if (n < 2) throw StateError("SGD needs at least 2 samples");
    if (std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::real; }) ||
        std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::fake; }))
        throw StateError("training labels contain a single class");
    if (!X.allFinite()) throw DataError("training matrix contains NaN or Inf");
    if (cfg.eta0 <= 0) throw StateError("eta0 must be positive");

    const double alpha = cfg.effective_alpha(n);
    if (!(alpha >= 0)) throw StateError("alpha must be non-negative");
    const double r = cfg.l1_fraction();
    const Eigen::Index d = X.cols();

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(d); // L1 penalty actually applied per weight
    double u = 0.0;                                // L1 penalty accumulated so far

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);

    LinearModel model;
    model.loss_ = cfg.loss;
    double best = sgd_objective(X, y, w, b, cfg.loss, alpha, r);
    model.history_.push_back(best);
    int stale = 0;
    std::uint64_t t = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            ++t;
            const double eta = cfg.eta0 / std::pow(static_cast<double>(t), cfg.power_t);
            const auto row = X.row(static_cast<Eigen::Index>(i));
            const double yi = sign_of(y[i]);
            const double g = loss_derivative(cfg.loss, yi, row.dot(w) + b);
            if (g != 0.0) {
                w.noalias() -= (eta * g) * row.transpose();
                b -= eta * g;
            }
            if (r < 1.0 && alpha > 0) w *= std::max(0.0, 1.0 - eta * alpha * (1.0 - r));
            if (r > 0.0 && alpha > 0) {
                u += eta * alpha * r;
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double before = w(j);
                    if (before > 0) w(j) = std::max(0.0, before - (u + q(j)));
                    else if (before < 0) w(j) = std::min(0.0, before + (u - q(j)));
                    q(j) += w(j) - before;
                }
            }
        }
        if (!w.allFinite() || !std::isfinite(b))
            throw DataError("SGD diverged in epoch " + std::to_string(epoch + 1) + " (reduce eta0)");
        const double obj = sgd_objective(X, y, w, b, cfg.loss, alpha, r);
        model.history_.push_back(obj);
        model.epochs_run_ = epoch + 1;
        if (obj > best - cfg.tol) {
            if (++stale >= cfg.n_iter_no_change) break;
        } else {
            stale = 0;
        }
        best = std::min(best, obj);
    }
    model.weights_ = std::move(w);
    model.bias_ = b;
    return model;
}

/// Named hyperparameter set for one representation/classifier pairing.
struct Preset {
    std::string name;
    std::string representation;
    std::string classifier; ///< "LR", "SVM" or "SGD"
    SgdConfig config;
};

/// Tuned base-model and linear-stacking configurations. Unlisted fields
/// (alpha, eta0, power_t, ...) keep the SgdConfig defaults.
inline std::vector<Preset> preset_catalog() {
    auto make = [](std::string name, std::string rep, std::string clf, Loss loss, Penalty pen,
                   std::optional<double> l1_ratio, std::optional<double> power_t, std::optional<double> C,
                   std::optional<double> alpha) {
        SgdConfig c;
        c.loss = loss;
        c.penalty = pen;
        if (l1_ratio) c.l1_ratio = *l1_ratio;
        if (power_t) c.power_t = *power_t;
        if (alpha) c.alpha = *alpha;
        c.C = C;
        return Preset{std::move(name), std::move(rep), std::move(clf), c};
    };
    using std::nullopt;
    return {
        make("lsa-lr", "lsa", "LR", Loss::log, Penalty::elasticnet, 0.05, 0.5, nullopt, nullopt),
        make("handcrafted-svm", "handcrafted", "SVM", Loss::hinge, Penalty::elasticnet, 0.95, 0.1, nullopt, nullopt),
        make("distilbert-lr", "distilbert-base-nli-mean-tokens", "LR", Loss::log, Penalty::l2, nullopt, nullopt, 0.1, nullopt),
        make("roberta-lr", "roberta-large-nli-stsb-mean-tokens", "LR", Loss::log, Penalty::l2, nullopt, nullopt, 0.01, nullopt),
        make("xlm-svm", "xlm-r-large-en-ko-nli-ststb", "SVM", Loss::hinge, Penalty::l2, nullopt, nullopt, 0.1, nullopt),
        make("linear-stacking-probs", "stack-decision", "SGD", Loss::hinge, Penalty::elasticnet, 0.8, nullopt, nullopt, nullopt),
        make("linear-stacking", "stack-labels", "SGD", Loss::hinge, Penalty::elasticnet, 0.3, nullopt, nullopt, nullopt),
        make("tax2vec-tfidf", "tax2vec", "SGD", Loss::hinge, Penalty::l2, 0.15, 0.5, nullopt, 1e-4),
    };
}

inline const Preset& find_preset(std::string_view name) {
    static const auto catalog = preset_catalog();
    for (const auto& p : catalog)
        if (p.name == name) return p;
    throw StateError("unknown preset '" + std::string(name) + "'");
}

inline io::json catalog_to_json(const std::vector<Preset>& presets) {
    io::json arr = io::json::array();
    for (const auto& p : presets)
        arr.push_back({{"name", p.name}, {"representation", p.representation}, {"classifier", p.classifier},
                       {"config", to_json(p.config)}});
    return {{"format", "fakenews-presets"}, {"version", 1}, {"presets", arr}};
}

inline std::vector<Preset> catalog_from_json(const io::json& j) {
    std::vector<Preset> out;
    try {
        for (const auto& p : j.at("presets"))
            out.push_back({p.at("name"), p.at("representation"), p.at("classifier"), sgd_config_from_json(p.at("config"))});
    } catch (const io::json::exception& e) {
        throw FormatError(std::string("preset catalog: ") + e.what());
    }
    return out;
}

} // namespace fakenews::linear
