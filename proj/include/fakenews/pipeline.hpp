#pragma once

// End-to-end model pipelines: representation + classifier, fitted on a
// Dataset and applied to others. Used by the command-line tool.
//
//   BaseModel    one representation (LSA, hand-crafted, one embedding set)
//                + standardization + SGD linear classifier
//   NeuralStack  all representation blocks -> normalizer -> SELU network
//   LinearStack  base-model outputs (out-of-fold on the training data) ->
//                SGD linear meta-model

#include <filesystem>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fakenews/corpus.hpp"
#include "fakenews/embeddings_io.hpp"
#include "fakenews/eval.hpp"
#include "fakenews/handcrafted.hpp"
#include "fakenews/io.hpp"
#include "fakenews/linear_models.hpp"
#include "fakenews/lsa.hpp"
#include "fakenews/meta_models.hpp"
#include "fakenews/preprocess.hpp"
#include "fakenews/random.hpp"

namespace fakenews::pipeline {

namespace fs = std::filesystem;

/// Embedding sets keyed by encoder name (manifest model_id).
using EmbeddingLibrary = std::map<std::string, std::shared_ptr<const embeddings::EmbeddingSet>>;

inline const embeddings::EmbeddingSet& require_embedding(const EmbeddingLibrary& lib, const std::string& name) {
    auto it = lib.find(name);
    if (it == lib.end() || !it->second) throw StateError("embedding set '" + name + "' was not provided");
    return *it->second;
}

inline std::vector<std::string> cleaned_texts(const Dataset& ds, const CleanConfig& cfg) {
    std::vector<std::string> out;
    out.reserve(ds.size());
    for (const auto& r : ds.records) out.push_back(clean_text(r.text, cfg));
    return out;
}

enum class Representation { lsa, handcrafted, embedding };

inline std::string_view to_string(Representation r) {
    return r == Representation::lsa ? "lsa" : r == Representation::handcrafted ? "handcrafted" : "embedding";
}

inline Representation parse_representation(std::string_view s) {
    if (s == "lsa") return Representation::lsa;
    if (s == "handcrafted") return Representation::handcrafted;
    if (s == "embedding") return Representation::embedding;
    throw FormatError("unknown representation '" + std::string(s) + "'");
}

struct BaseModelSpec {
    std::string name;
    Representation representation = Representation::lsa;
    std::string embedding; ///< encoder name when representation == embedding
    lsa::LsaConfig lsa;
    CleanConfig clean;
    linear::SgdConfig sgd;
};

/// Named base models. LSA models use the 2500/512 configuration.
inline BaseModelSpec base_model_spec(std::string_view name, std::uint64_t seed = 42) {
    BaseModelSpec s;
    s.name = std::string(name);
    s.lsa.seed = derive_seed(seed, "svd");
    auto from_preset = [&](std::string_view preset) {
        const auto& p = linear::find_preset(preset);
        s.sgd = p.config;
        if (p.representation == "lsa") s.representation = Representation::lsa;
        else if (p.representation == "handcrafted") s.representation = Representation::handcrafted;
        else {
            s.representation = Representation::embedding;
            s.embedding = p.representation;
        }
    };
    if (name == "lsa-svm") {
        s.representation = Representation::lsa;
        s.sgd.loss = linear::Loss::hinge;
    } else if (name == "lsa-lr" || name == "handcrafted-svm" || name == "distilbert-lr" || name == "roberta-lr" ||
               name == "xlm-svm") {
        from_preset(name);
    } else {
        throw StateError("unknown base model '" + std::string(name) + "'");
    }
    s.sgd.seed = derive_seed(seed, "shuffle");
    return s;
}

inline std::vector<std::string> base_model_names() {
    return {"lsa-lr", "lsa-svm", "handcrafted-svm", "distilbert-lr", "roberta-lr", "xlm-svm"};
}

class BaseModel {
public:
    BaseModel() = default;
    explicit BaseModel(BaseModelSpec spec) : spec_(std::move(spec)) {}

    const BaseModelSpec& spec() const { return spec_; }
    const linear::LinearModel& classifier() const { return model_; }
    const std::optional<lsa::LsaModel>& lsa_model() const { return lsa_; }

    void fit(const Dataset& train, const EmbeddingLibrary& lib = {}, std::vector<std::string>* warnings = nullptr) {
        if (spec_.representation == Representation::lsa)
            lsa_ = lsa::LsaModel::fit(cleaned_texts(train, spec_.clean), spec_.lsa, warnings);
        const Eigen::MatrixXd raw = raw_features(train, lib);
        norm_ = meta::Normalizer::fit(raw);
        model_ = linear::train_sgd(norm_.apply(raw), train.labels(), spec_.sgd);
    }

    Eigen::MatrixXd features(const Dataset& ds, const EmbeddingLibrary& lib = {}) const {
        return norm_.apply(raw_features(ds, lib));
    }

    Eigen::VectorXd decision(const Dataset& ds, const EmbeddingLibrary& lib = {}) const {
        return model_.decision_function(features(ds, lib));
    }

    std::vector<Label> predict(const Dataset& ds, const EmbeddingLibrary& lib = {}) const {
        return model_.predict(features(ds, lib));
    }

    /// Output column for linear stacking.
    meta::BaseOutput output(const Dataset& ds, const EmbeddingLibrary& lib = {}) const {
        return {spec_.name, decision(ds, lib), spec_.sgd.loss == linear::Loss::log};
    }

    void save(const fs::path& dir) const {
        fs::create_directories(dir);
        io::json j{{"format", "fakenews-base-model"},
                   {"name", spec_.name},
                   {"representation", to_string(spec_.representation)},
                   {"embedding", spec_.embedding},
                   {"clean", clean_to_json(spec_.clean)},
                   {"normalizer", norm_.to_json()}};
        if (lsa_) lsa_->save(dir / "lsa");
        model_.save(dir / "linear", spec_.sgd);
        io::write_json(dir / "pipeline.json", j);
    }

    static BaseModel load(const fs::path& dir) {
        const io::json j = io::read_json(dir / "pipeline.json");
        if (j.value("format", "") != "fakenews-base-model") throw FormatError(dir.string() + ": not a base model");
        BaseModel m;
        m.spec_.name = j.at("name");
        m.spec_.representation = parse_representation(j.at("representation").get<std::string>());
        m.spec_.embedding = j.at("embedding");
        m.spec_.clean = clean_from_json(j.at("clean"));
        m.norm_ = meta::Normalizer::from_json(j.at("normalizer"));
        if (m.spec_.representation == Representation::lsa) {
            m.lsa_ = lsa::LsaModel::load(dir / "lsa");
            m.spec_.lsa = m.lsa_->config();
        }
        auto [lin, cfg] = linear::LinearModel::load(dir / "linear");
        m.model_ = std::move(lin);
        m.spec_.sgd = cfg;
        return m;
    }

    static io::json clean_to_json(const CleanConfig& c) {
        return {{"lowercase", c.lowercase}, {"strip_hashtags", c.strip_hashtags},
                {"strip_punctuation", c.strip_punctuation}, {"remove_stopwords", c.remove_stopwords},
                {"stopword_list_id", c.stopword_list_id}};
    }

    static CleanConfig clean_from_json(const io::json& j) {
        CleanConfig c;
        c.lowercase = j.value("lowercase", true);
        c.strip_hashtags = j.value("strip_hashtags", true);
        c.strip_punctuation = j.value("strip_punctuation", true);
        c.remove_stopwords = j.value("remove_stopwords", true);
        c.stopword_list_id = j.value("stopword_list_id", std::string(stopwords::kEnglish179Id));
        return c;
    }

private:
    Eigen::MatrixXd raw_features(const Dataset& ds, const EmbeddingLibrary& lib) const {
        switch (spec_.representation) {
        case Representation::lsa:
            if (!lsa_) throw StateError("base model '" + spec_.name + "' is not fitted");
            return lsa_->transform(cleaned_texts(ds, spec_.clean));
        case Representation::handcrafted: return handcrafted_matrix(ds);
        case Representation::embedding: return embeddings::align(require_embedding(lib, spec_.embedding), ds);
        }
        return {};
    }

    BaseModelSpec spec_;
    std::optional<lsa::LsaModel> lsa_;
    meta::Normalizer norm_;
    linear::LinearModel model_;
};

// ---------------------------------------------------------------------------

struct NeuralStackConfig {
    lsa::LsaConfig lsa = lsa::LsaConfig::stacking();
    CleanConfig clean;
    std::vector<std::string> embeddings{"distilbert-base-nli-mean-tokens", "roberta-large-nli-stsb-mean-tokens",
                                        "xlm-r-large-en-ko-nli-ststb"};
    std::size_t embedding_dim = 768;
    meta::MlpConfig mlp = meta::MlpConfig::reference();
    meta::NormalizerMode normalizer = meta::NormalizerMode::standardize;

    static NeuralStackConfig reference(std::uint64_t seed = 42) {
        NeuralStackConfig c;
        c.lsa.seed = derive_seed(seed, "svd");
        c.mlp.seed = seed;
        return c;
    }

    meta::StackInputSpec input_spec() const {
        meta::StackInputSpec s;
        s.blocks.push_back({"lsa", lsa.d});
        s.blocks.push_back({"handcrafted", 16});
        for (const auto& e : embeddings) s.blocks.push_back({e, embedding_dim});
        return s;
    }
};

class NeuralStack {
public:
    NeuralStack() = default;
    explicit NeuralStack(NeuralStackConfig cfg) : cfg_(std::move(cfg)) {}

    const NeuralStackConfig& config() const { return cfg_; }
    const meta::MlpModel<float>& model() const { return model_; }

    void fit(const Dataset& train, const EmbeddingLibrary& lib, std::vector<std::string>* warnings = nullptr) {
        cfg_.mlp.layer_dims.front() = cfg_.input_spec().total_dim();
        lsa_ = lsa::LsaModel::fit(cleaned_texts(train, cfg_.clean), cfg_.lsa, warnings);
        const Eigen::MatrixXd X = concatenated(train, lib);
        std::vector<std::size_t> rows(train.size());
        std::iota(rows.begin(), rows.end(), 0);
        auto norm = meta::Normalizer::fit(X, rows, cfg_.normalizer);
        const Eigen::MatrixXd Xn = norm.apply(X);
        model_ = meta::MlpModel<float>::train(Xn, train.labels(), cfg_.mlp, std::move(norm));
    }

    /// N x 2 output activations (fake, real).
    Eigen::MatrixXd forward(const Dataset& ds, const EmbeddingLibrary& lib) const {
        return model_.forward(concatenated(ds, lib));
    }

    std::vector<Label> predict(const Dataset& ds, const EmbeddingLibrary& lib) const {
        return meta::argmax_labels(forward(ds, lib));
    }

    void save(const fs::path& dir) const {
        fs::create_directories(dir);
        lsa_->save(dir / "lsa");
        model_.save(dir / "mlp");
        io::write_json(dir / "pipeline.json",
                       {{"format", "fakenews-neural-stack"},
                        {"embeddings", cfg_.embeddings},
                        {"embedding_dim", cfg_.embedding_dim},
                        {"clean", BaseModel::clean_to_json(cfg_.clean)}});
    }

    static NeuralStack load(const fs::path& dir) {
        const io::json j = io::read_json(dir / "pipeline.json");
        if (j.value("format", "") != "fakenews-neural-stack") throw FormatError(dir.string() + ": not a neural stack");
        NeuralStack s;
        s.lsa_ = lsa::LsaModel::load(dir / "lsa");
        s.model_ = meta::MlpModel<float>::load(dir / "mlp");
        s.cfg_.lsa = s.lsa_->config();
        s.cfg_.embeddings = j.at("embeddings").get<std::vector<std::string>>();
        s.cfg_.embedding_dim = j.at("embedding_dim");
        s.cfg_.clean = BaseModel::clean_from_json(j.at("clean"));
        s.cfg_.mlp = s.model_.config();
        s.cfg_.normalizer = s.model_.normalizer().mode();
        return s;
    }

private:
    Eigen::MatrixXd concatenated(const Dataset& ds, const EmbeddingLibrary& lib) const {
        if (!lsa_) throw StateError("neural stack is not fitted");
        std::vector<Eigen::MatrixXd> blocks;
        blocks.push_back(lsa_->transform(cleaned_texts(ds, cfg_.clean)));
        blocks.push_back(handcrafted_matrix(ds));
        for (const auto& e : cfg_.embeddings) blocks.push_back(embeddings::align(require_embedding(lib, e), ds));
        return meta::concatenate_blocks(cfg_.input_spec(), blocks);
    }

    NeuralStackConfig cfg_;
    std::optional<lsa::LsaModel> lsa_;
    meta::MlpModel<float> model_;
};

// ---------------------------------------------------------------------------

struct LinearStackConfig {
    std::vector<std::string> base_models{"lsa-lr", "distilbert-lr", "roberta-lr", "xlm-svm"};
    /// External prediction columns (dim 1 or 2 embedding-format files), by library name.
    std::vector<std::string> external;
    meta::StackMode mode = meta::StackMode::labels;
    bool out_of_fold = true;
    std::size_t folds = 10;
    std::uint64_t seed = 42;
    /// Replaces the LSA configuration of LSA base models when set.
    std::optional<lsa::LsaConfig> lsa;
    CleanConfig clean;
};

class LinearStack {
public:
    LinearStack() = default;
    explicit LinearStack(LinearStackConfig cfg) : cfg_(std::move(cfg)) {}

    const LinearStackConfig& config() const { return cfg_; }
    const linear::LinearModel& stacker() const { return stacker_; }

    /// Base models whose inputs are missing from `lib` are dropped with a
    /// warning; at least two columns must remain.
    void fit(const Dataset& train, const EmbeddingLibrary& lib, std::vector<std::string>* warnings = nullptr) {
        std::vector<BaseModelSpec> specs;
        for (const auto& name : cfg_.base_models) {
            auto spec = base_model_spec(name, cfg_.seed);
            spec.clean = cfg_.clean;
            if (cfg_.lsa && spec.representation == Representation::lsa) spec.lsa = *cfg_.lsa;
            if (spec.representation == Representation::embedding && !lib.contains(spec.embedding)) {
                if (warnings) warnings->push_back("base model '" + name + "' skipped: embedding '" + spec.embedding + "' not provided");
                continue;
            }
            specs.push_back(std::move(spec));
        }
        active_external_.clear();
        for (const auto& e : cfg_.external) {
            if (!lib.contains(e)) {
                if (warnings) warnings->push_back("external prediction column '" + e + "' not provided");
                continue;
            }
            active_external_.push_back(e);
        }
        if (specs.size() + active_external_.size() < 2)
            throw StateError("linear stacking needs at least 2 available base models");

        const auto n = static_cast<Eigen::Index>(train.size());
        std::vector<meta::BaseOutput> train_outputs;
        bases_.clear();
        for (const auto& spec : specs) {
            meta::BaseOutput out{spec.name, Eigen::MatrixXd(n, 1), spec.sgd.loss == linear::Loss::log};
            if (cfg_.out_of_fold) {
                const auto plan = eval::kfold(train, cfg_.folds, derive_seed(cfg_.seed, "stack-folds"));
                for (std::size_t f = 0; f < plan.k; ++f) {
                    const auto tr = plan.train_indices(f), te = plan.test_indices(f);
                    BaseModel m(spec);
                    m.fit(train.subset(tr), lib);
                    const Eigen::VectorXd s = m.decision(train.subset(te), lib);
                    for (std::size_t i = 0; i < te.size(); ++i) out.scores(static_cast<Eigen::Index>(te[i]), 0) = s(static_cast<Eigen::Index>(i));
                }
            }
            BaseModel full(spec);
            full.fit(train, lib, warnings);
            if (!cfg_.out_of_fold) out.scores.col(0) = full.decision(train, lib);
            train_outputs.push_back(std::move(out));
            bases_.push_back(std::move(full));
        }
        for (const auto& e : active_external_) train_outputs.push_back(external_output(e, train, lib));
        const Eigen::MatrixXd meta_X = meta::stack_base_outputs(train_outputs, cfg_.mode);
        stacker_ = meta::train_linear_stack(meta_X, train.labels(), cfg_.mode, derive_seed(cfg_.seed, "stacker"));
    }

    Eigen::MatrixXd meta_features(const Dataset& ds, const EmbeddingLibrary& lib) const {
        std::vector<meta::BaseOutput> outs;
        for (const auto& b : bases_) outs.push_back(b.output(ds, lib));
        for (const auto& e : active_external_) outs.push_back(external_output(e, ds, lib));
        return meta::stack_base_outputs(outs, cfg_.mode);
    }

    Eigen::VectorXd decision(const Dataset& ds, const EmbeddingLibrary& lib) const {
        return stacker_.decision_function(meta_features(ds, lib));
    }

    std::vector<Label> predict(const Dataset& ds, const EmbeddingLibrary& lib) const {
        return stacker_.predict(meta_features(ds, lib));
    }

    void save(const fs::path& dir) const {
        fs::create_directories(dir);
        io::json bases = io::json::array();
        for (std::size_t i = 0; i < bases_.size(); ++i) {
            const std::string sub = "base" + std::to_string(i) + "-" + bases_[i].spec().name;
            bases_[i].save(dir / sub);
            bases.push_back(sub);
        }
        stacker_.save(dir / "stacker", meta::linear_stack_preset(cfg_.mode).config);
        io::write_json(dir / "pipeline.json", {{"format", "fakenews-linear-stack"},
                                               {"mode", cfg_.mode == meta::StackMode::labels ? "labels" : "decision"},
                                               {"out_of_fold", cfg_.out_of_fold},
                                               {"folds", cfg_.folds},
                                               {"bases", bases},
                                               {"external", active_external_}});
    }

    static LinearStack load(const fs::path& dir) {
        const io::json j = io::read_json(dir / "pipeline.json");
        if (j.value("format", "") != "fakenews-linear-stack") throw FormatError(dir.string() + ": not a linear stack");
        LinearStack s;
        s.cfg_.mode = j.at("mode") == "labels" ? meta::StackMode::labels : meta::StackMode::decision;
        s.cfg_.out_of_fold = j.at("out_of_fold");
        s.cfg_.folds = j.at("folds");
        s.cfg_.base_models.clear();
        for (const auto& sub : j.at("bases")) {
            s.bases_.push_back(BaseModel::load(dir / sub.get<std::string>()));
            s.cfg_.base_models.push_back(s.bases_.back().spec().name);
        }
        s.active_external_ = j.at("external").get<std::vector<std::string>>();
        s.cfg_.external = s.active_external_;
        s.stacker_ = linear::LinearModel::load(dir / "stacker").first;
        return s;
    }

private:
    static meta::BaseOutput external_output(const std::string& name, const Dataset& ds, const EmbeddingLibrary& lib) {
        const auto& set = require_embedding(lib, name);
        if (set.dim() != 1 && set.dim() != 2)
            throw StateError("external prediction set '" + name + "' must have dim 1 or 2, has " + std::to_string(set.dim()));
        return {name, embeddings::align(set, ds), false};
    }

    LinearStackConfig cfg_;
    std::vector<BaseModel> bases_;
    std::vector<std::string> active_external_;
    linear::LinearModel stacker_;
};

/// Kind stored in a saved pipeline directory.
inline std::string pipeline_kind(const fs::path& dir) {
    return io::read_json(dir / "pipeline.json").value("format", "");
}

} // namespace fakenews::pipeline
