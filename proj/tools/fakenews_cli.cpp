// fakenews: command-line entry point for corpus handling, feature
// extraction, model training, prediction and evaluation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fakenews/fakenews.hpp"

namespace fs = std::filesystem;
using namespace fakenews;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

std::string format_g9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Turns a CLI11 result string back into a JSON scalar.
json scalar_from_string(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(s, &pos);
        if (pos == s.size()) return i;
        const double d = std::stod(s, &pos);
        if (pos == s.size()) return d;
    } catch (const std::exception&) {
    }
    return s;
}

std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

bool skip_option(const CLI::Option* opt) {
    const auto name = opt->get_single_name();
    return name.empty() || name == "help" || name == "config";
}

struct Context {
    std::uint64_t seed = 42;
    std::string config_path;
    std::string out_dir = "fakenews-out";
    unsigned threads = 1;

    std::vector<std::string> data;
    std::vector<std::string> embedding_paths;
    std::string input, output, format, model_dir;

    CleanConfig clean;
    bool keep_case = false, keep_hashtags = false, keep_punctuation = false, keep_stopwords = false;

    // representation / model
    std::string model = "lsa-lr";
    std::size_t lsa_n = 2500, lsa_d = 512;
    bool no_word = false, no_char = false;
    std::string preset = "reference";
    int epochs = -1;
    double learning_rate = -1, dropout = -1;
    std::size_t batch_size = 0;
    std::vector<std::string> encoders;
    std::vector<std::string> bases;
    std::vector<std::string> external;
    std::string stack_mode = "labels";
    bool in_sample = false;

    // evaluation
    std::size_t k = 10, stack_folds = 10;
    std::string averaging = "weighted";
    bool unstratified = false;
    std::string protocol = "tdt";
    std::vector<std::size_t> grid_features, grid_dims;
    std::vector<double> grid_lrs, grid_dropouts;
    std::vector<std::size_t> grid_batches;
    std::vector<int> grid_epochs;
    std::size_t top_k = 8;
    bool counts = false;
    std::vector<std::size_t> matrix;
    std::string title = "Confusion matrix";
};

class Cli {
public:
    Cli() { build(); }

    int run(int argc, char** argv) {
        try {
            app_.parse(argc, argv);
            apply_config_file();
            check_required();
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return app_.exit(e);
            std::cerr << "error: " << e.what() << "\n\n" << app_.help();
            return kExitUsage;
        }
        try {
            dispatch();
            return kExitOk;
        } catch (const CLI::ParseError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitData;
        }
    }

private:
    // -- option wiring ------------------------------------------------------

    void build() {
        app_.description("Fake-news detection toolkit: LSA, hand-crafted and embedding features, linear and neural stacking.");
        app_.require_subcommand(1);
        app_.option_defaults()->always_capture_default();
        app_.add_option("--seed", c_.seed, "Run seed; every random stream is derived from it");
        app_.add_option("--config", c_.config_path, "JSON run file (or a previous run ledger); flags given on the command line win");
        app_.add_option("--out-dir", c_.out_dir, "Directory for ledgers, reports and default model output");

        auto* corpus = sub(app_, "corpus", "Corpus files");
        auto* validate = sub(*corpus, "validate", "Parse a corpus and report its size, label distribution and warnings");
        input_opt(*validate);
        format_opt(*validate);
        auto* exp = sub(*corpus, "export", "Re-serialize a corpus (TSV or CSV by output extension or --format)");
        input_opt(*exp);
        output_opt(*exp);
        format_opt(*exp);

        auto* pre = sub(app_, "preprocess", "Write a TSV of (id, cleaned_text)");
        input_opt(*pre);
        output_opt(*pre);
        clean_opts(*pre);

        auto* feat = sub(app_, "featurize", "Write a TSV of (id, 16 hand-crafted features)");
        need(feat->add_flag("--handcrafted", "Hand-crafted word and character statistics (the only featurizer)"));
        input_opt(*feat);
        output_opt(*feat);

        auto* lsa = sub(app_, "lsa", "Latent semantic analysis");
        auto* lfit = sub(*lsa, "fit", "Fit TF-IDF vocabulary and SVD basis; writes <out-dir>/lsa.{json,bin} or --model-dir");
        input_opt(*lfit);
        lsa_opts(*lfit);
        clean_opts(*lfit);
        lfit->add_option("--model-dir", c_.model_dir, "Output prefix directory for the model");
        auto* ltr = sub(*lsa, "transform", "Project a corpus into LSA space; writes an embedding file triple");
        need(ltr->add_option("--model-dir", c_.model_dir, "Directory holding lsa.json/lsa.bin"));
        input_opt(*ltr);
        output_opt(*ltr);
        auto* lgrid = sub(*lsa, "grid", "Evaluate the 35 (n, d) pairs with LR and SVM classifiers");
        data_opt(*lgrid);
        grid_opts(*lgrid);
        clean_opts(*lgrid);

        auto* emb = sub(app_, "embeddings", "Embedding file triples");
        auto* ev = sub(*emb, "validate", "Check an embedding triple; print its manifest and payload SHA-256");
        need(ev->add_option("--path", c_.input, "Prefix or any of the three files"));
        ev->add_option("--corpus", c_.data, "Also check that every corpus id has a vector");

        auto* train = sub(app_, "train", "Train a model and save it to --model-dir");
        auto* tbase = sub(*train, "base", "Base model: representation + linear classifier");
        model_opt(*tbase, base_names());
        train_common(*tbase);
        lsa_opts(*tbase);
        auto* tnn = sub(*train, "nn-stack", "Neural stacking network over concatenated representations");
        train_common(*tnn);
        nn_opts(*tnn);
        auto* tlin = sub(*train, "linear-stack", "Linear meta-model over base-model outputs");
        train_common(*tlin);
        linear_stack_opts(*tlin);
        lsa_opts(*tlin);

        auto* stack = sub(app_, "stack", "Stacking shortcuts");
        auto* snn = sub(*stack, "train-nn", "Same as 'train nn-stack'");
        train_common(*snn);
        nn_opts(*snn);
        auto* slin = sub(*stack, "train-linear", "Same as 'train linear-stack'");
        train_common(*slin);
        linear_stack_opts(*slin);
        lsa_opts(*slin);
        auto* spred = sub(*stack, "predict", "Same as 'predict'");
        predict_opts(*spred);

        auto* pred = sub(app_, "predict", "Predict labels with a saved model");
        predict_opts(*pred);

        auto* eval = sub(app_, "eval", "Evaluation protocols");
        auto* tdt = sub(*eval, "tdt", "Train/dev/test protocol (75 / 18.75 / 6.25 %)");
        eval_common(*tdt);
        auto* cv = sub(*eval, "cv", "Stratified k-fold cross validation");
        eval_common(*cv);
        cv->add_option("--k", c_.k, "Number of folds")->check(CLI::Range(2, 1000000));
        auto* grid = sub(*eval, "grid", "Grid search over LSA (n, d) pairs or the stacking-network hyperparameters");
        model_opt(*grid, {"lsa", "lsa-lr", "lsa-svm", "nn-stack"});
        data_opt(*grid);
        emb_opt(*grid);
        grid_opts(*grid);
        clean_opts(*grid);
        nn_grid_opts(*grid);
        nn_opts(*grid);

        auto* explain = sub(app_, "explain", "Model explanations");
        auto* var = sub(*explain, "variance", "Per-class word ranking by TF-IDF variance");
        data_opt(*var);
        clean_opts(*var);
        var->add_option("--top-k", c_.top_k, "Words per class");
        var->add_flag("--counts", c_.counts, "Rank raw counts instead of TF-IDF");

        auto* render = sub(app_, "render", "Figures");
        auto* conf = sub(*render, "confusion", "Confusion-matrix heatmap SVG");
        conf->add_option("--matrix", c_.matrix, "Four counts, row-major: actual fake (pred fake, pred real), actual real (...)")
            ->expected(4)
            ->delimiter(',');
        conf->add_option("--ledger", c_.input, "Take the matrix from a predict ledger instead");
        conf->add_option("--title", c_.title, "Figure title");
        output_opt(*conf);
    }

    /// Required options are checked after --config is merged, so a run file can supply them.
    void need(CLI::Option* opt) {
        opt->description(opt->get_description() + " (required)");
        required_.push_back(opt);
    }

    void check_required() {
        for (auto* a : active_path())
            for (auto* opt : a->get_options())
                if (opt->count() == 0 && std::find(required_.begin(), required_.end(), opt) != required_.end())
                    throw CLI::RequiredError(opt->get_name());
    }

    CLI::App* sub(CLI::App& parent, const std::string& name, const std::string& desc) {
        auto* s = parent.add_subcommand(name, desc);
        s->fallthrough();
        return s;
    }

    std::vector<std::string> base_names() const { return pipeline::base_model_names(); }

    void input_opt(CLI::App& a) { need(a.add_option("--input,-i", c_.input, "Input corpus (TSV or CSV)")); }
    void output_opt(CLI::App& a) { need(a.add_option("--output,-o", c_.output, "Output path")); }
    void format_opt(CLI::App& a) {
        a.add_option("--format", c_.format, "tsv or csv (default: from extension)")->check(CLI::IsMember({"", "tsv", "csv"}));
    }
    void data_opt(CLI::App& a) {
        need(a.add_option("--data", c_.data, "Labeled corpus file(s); several are merged in order"));
    }
    void emb_opt(CLI::App& a) {
        a.add_option("--embeddings", c_.embedding_paths, "Embedding triple(s) as PATH or NAME=PATH; keyed by model_id by default");
    }
    void model_opt(CLI::App& a, std::vector<std::string> names) {
        a.add_option("--model", c_.model, "Model name")->check(CLI::IsMember(std::move(names)));
    }
    void clean_opts(CLI::App& a) {
        a.add_flag("--keep-case", c_.keep_case, "Do not lowercase");
        a.add_flag("--keep-hashtags", c_.keep_hashtags, "Do not drop #hashtag tokens");
        a.add_flag("--keep-punctuation", c_.keep_punctuation, "Do not strip punctuation");
        a.add_flag("--keep-stopwords", c_.keep_stopwords, "Do not drop stopwords");
        a.add_option("--stopwords", c_.clean.stopword_list_id, "Stopword list id")
            ->check(CLI::IsMember(std::vector<std::string>{std::string(stopwords::kEnglish179Id), "english", "none"}));
    }
    void lsa_opts(CLI::App& a) {
        a.add_option("--n", c_.lsa_n, "Number of n-gram features (half word, half char)");
        a.add_option("--d", c_.lsa_d, "LSA dimension");
        a.add_flag("--no-word", c_.no_word, "Drop word n-grams");
        a.add_flag("--no-char", c_.no_char, "Drop character n-grams");
    }
    void train_common(CLI::App& a) {
        data_opt(a);
        emb_opt(a);
        a.add_option("--model-dir", c_.model_dir, "Where to save the model (default <out-dir>/model)");
        clean_opts(a);
    }
    void nn_opts(CLI::App& a) {
        a.add_option("--preset", c_.preset, "Network configuration preset")->check(CLI::IsMember({"reference"}));
        a.add_option("--epochs", c_.epochs, "Override epochs");
        a.add_option("--lr", c_.learning_rate, "Override learning rate");
        a.add_option("--dropout", c_.dropout, "Override dropout probability");
        a.add_option("--batch-size", c_.batch_size, "Override batch size");
        a.add_option("--encoders", c_.encoders, "Embedding model_ids concatenated into the input (default: the three sentence encoders)");
    }
    void linear_stack_opts(CLI::App& a) {
        a.add_option("--bases", c_.bases, "Base models (default: lsa-lr distilbert-lr roberta-lr xlm-svm)")
            ->check(CLI::IsMember(base_names()));
        a.add_option("--external", c_.external, "Extra prediction columns: embedding-library names with dim 1 or 2");
        a.add_option("--mode", c_.stack_mode, "Meta-features: predicted labels or decision scores")
            ->check(CLI::IsMember({"labels", "decision"}));
        a.add_flag("--in-sample", c_.in_sample, "Use in-sample instead of out-of-fold base outputs");
        a.add_option("--stack-folds", c_.stack_folds, "Folds for out-of-fold base outputs")->check(CLI::Range(2, 1000000));
    }
    void predict_opts(CLI::App& a) {
        need(a.add_option("--model-dir", c_.model_dir, "Saved model directory"));
        input_opt(a);
        emb_opt(a);
        a.add_option("--output,-o", c_.output, "Predictions TSV (default <out-dir>/predictions.tsv)");
    }
    void eval_common(CLI::App& a) {
        model_opt(a, eval_model_names());
        data_opt(a);
        emb_opt(a);
        lsa_opts(a);
        clean_opts(a);
        nn_opts(a);
        linear_stack_opts(a);
        a.add_option("--averaging", c_.averaging, "F1 averaging")->check(CLI::IsMember({"weighted", "macro", "binary_real"}));
        a.add_flag("--unstratified", c_.unstratified, "Plain shuffled splits");
    }
    void grid_opts(CLI::App& a) {
        a.add_option("--protocol", c_.protocol, "tdt or cv10")->check(CLI::IsMember({"tdt", "cv10"}));
        a.add_option("--features", c_.grid_features, "Restrict the n list");
        a.add_option("--dims", c_.grid_dims, "Restrict the d list");
        a.add_option("--threads", c_.threads, "Configurations evaluated concurrently");
        a.add_option("--averaging", c_.averaging, "F1 averaging")->check(CLI::IsMember({"weighted", "macro", "binary_real"}));
        a.add_option("--k", c_.k, "Folds for the cv10 protocol")->check(CLI::Range(2, 1000000));
    }
    void nn_grid_opts(CLI::App& a) {
        a.add_option("--lrs", c_.grid_lrs, "Learning rates to search");
        a.add_option("--dropouts", c_.grid_dropouts, "Dropout probabilities to search");
        a.add_option("--batch-sizes", c_.grid_batches, "Batch sizes to search");
        a.add_option("--epoch-list", c_.grid_epochs, "Epoch counts to search");
    }

    static std::vector<std::string> eval_model_names() {
        auto names = pipeline::base_model_names();
        names.push_back("nn-stack");
        names.push_back("linear-stack");
        return names;
    }

    std::vector<CLI::App*> active_path() {
        std::vector<CLI::App*> path{&app_};
        for (CLI::App* a = &app_;;) {
            auto subs = a->get_subcommands();
            if (subs.empty()) break;
            a = subs.front();
            path.push_back(a);
        }
        return path;
    }

    std::string verb() {
        std::string v;
        for (auto* a : active_path())
            if (a != &app_) v += (v.empty() ? "" : " ") + a->get_name();
        return v;
    }

    void apply_config_file() {
        if (c_.config_path.empty()) return;
        json j = io::read_json(c_.config_path);
        if (j.contains("verb") && j.contains("config")) j = j["config"];
        if (!j.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");
        for (auto* a : active_path()) {
            for (auto* opt : a->get_options()) {
                if (skip_option(opt) || opt->count() > 0) continue;
                const auto name = opt->get_single_name();
                if (!j.contains(name)) continue;
                const json& v = j[name];
                if (v.is_null() || (v.is_string() && v.get<std::string>().empty()) || (v.is_array() && v.empty())) continue;
                if (v.is_array()) {
                    for (const auto& e : v) opt->add_result(scalar_to_string(e));
                } else {
                    opt->add_result(scalar_to_string(v));
                }
                opt->run_callback();
            }
        }
    }

    /// Every option of the active command path with its effective value.
    json effective_config() {
        json out = json::object();
        for (auto* a : active_path()) {
            for (auto* opt : a->get_options()) {
                if (skip_option(opt)) continue;
                const auto name = opt->get_single_name();
                if (opt->get_expected_max() == 0) {
                    out[name] = opt->count() > 0 && opt->as<bool>();
                    continue;
                }
                std::vector<std::string> values = opt->results();
                if (values.empty()) {
                    const auto d = opt->get_default_str();
                    if (opt->get_expected_max() > 1) {
                        if (d.size() >= 2 && ((d.front() == '[' && d.back() == ']') || (d.front() == '{' && d.back() == '}'))) {
                            std::stringstream ss(d.substr(1, d.size() - 2));
                            for (std::string item; std::getline(ss, item, ',');)
                                if (!item.empty()) values.push_back(item);
                        } else if (!d.empty()) {
                            values.push_back(d);
                        }
                    } else {
                        values.push_back(d);
                    }
                }
                if (opt->get_expected_max() > 1) {
                    json arr = json::array();
                    for (const auto& v : values) arr.push_back(scalar_from_string(v));
                    out[name] = arr;
                } else {
                    out[name] = scalar_from_string(values.back());
                }
            }
        }
        return out;
    }

    // -- shared helpers -----------------------------------------------------

    CleanConfig clean() const {
        CleanConfig cfg = c_.clean;
        cfg.lowercase = !c_.keep_case;
        cfg.strip_hashtags = !c_.keep_hashtags;
        cfg.strip_punctuation = !c_.keep_punctuation;
        cfg.remove_stopwords = !c_.keep_stopwords;
        return cfg;
    }

    Dataset load(const std::string& path) const {
        if (c_.format.empty()) return load_corpus(path);
        return load_corpus(path, c_.format == "csv" ? CorpusFormat::csv : CorpusFormat::tsv);
    }

    Dataset load_data() const {
        if (c_.data.empty()) throw CLI::RequiredError("--data");
        Dataset ds = load(c_.data.front());
        for (std::size_t i = 1; i < c_.data.size(); ++i) ds = merge(ds, load(c_.data[i]));
        for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
        return ds;
    }

    Dataset load_labeled_data() const {
        Dataset ds = load_data();
        if (!ds.labeled()) throw ValidationError("training and evaluation need a labeled corpus");
        return ds;
    }

    pipeline::EmbeddingLibrary load_embeddings() const {
        pipeline::EmbeddingLibrary lib;
        for (const auto& spec : c_.embedding_paths) {
            std::string name, path = spec;
            if (auto eq = spec.find('='); eq != std::string::npos && !fs::exists(spec)) {
                name = spec.substr(0, eq);
                path = spec.substr(eq + 1);
            }
            auto set = std::make_shared<const embeddings::EmbeddingSet>(embeddings::read_embeddings(path));
            if (name.empty()) name = set->manifest().model_id;
            if (lib.contains(name)) throw ValidationError("embedding set '" + name + "' given twice");
            lib.emplace(name, std::move(set));
        }
        return lib;
    }

    fs::path out_dir() const {
        fs::create_directories(c_.out_dir);
        return c_.out_dir;
    }

    fs::path model_dir() const { return c_.model_dir.empty() ? out_dir() / "model" : fs::path(c_.model_dir); }

    eval::RunLedger ledger() {
        eval::RunLedger l;
        l.verb = verb();
        l.config = effective_config();
        l.seed = c_.seed;
        return l;
    }

    void finish(eval::RunLedger& l, const eval::Stopwatch& sw) {
        l.wall_time_s = sw.seconds();
        std::string file = l.verb;
        std::replace(file.begin(), file.end(), ' ', '-');
        const fs::path path = out_dir() / (file + ".ledger.json");
        l.write(path);
        std::cout << "ledger: " << path.string() << "\n";
    }

    lsa::LsaConfig lsa_config(std::size_t n, std::size_t d) const {
        lsa::LsaConfig cfg;
        cfg.n = n;
        cfg.d = d;
        cfg.use_word_ngrams = !c_.no_word;
        cfg.use_char_ngrams = !c_.no_char;
        cfg.seed = derive_seed(c_.seed, "svd");
        return cfg;
    }

    pipeline::BaseModelSpec base_spec(const std::string& name) const {
        auto spec = pipeline::base_model_spec(name, c_.seed);
        spec.clean = clean();
        if (spec.representation == pipeline::Representation::lsa) spec.lsa = lsa_config(c_.lsa_n, c_.lsa_d);
        return spec;
    }

    pipeline::NeuralStackConfig nn_config() const {
        auto cfg = pipeline::NeuralStackConfig::reference(c_.seed);
        cfg.clean = clean();
        if (c_.epochs >= 0) cfg.mlp.epochs = c_.epochs;
        if (c_.learning_rate > 0) cfg.mlp.learning_rate = c_.learning_rate;
        if (c_.dropout >= 0) cfg.mlp.dropout_p = c_.dropout;
        if (c_.batch_size > 0) cfg.mlp.batch_size = c_.batch_size;
        if (!c_.encoders.empty()) cfg.embeddings = c_.encoders;
        return cfg;
    }

    pipeline::LinearStackConfig linear_stack_config() const {
        pipeline::LinearStackConfig cfg;
        if (!c_.bases.empty()) cfg.base_models = c_.bases;
        cfg.external = c_.external;
        cfg.mode = c_.stack_mode == "decision" ? meta::StackMode::decision : meta::StackMode::labels;
        cfg.out_of_fold = !c_.in_sample;
        cfg.folds = c_.stack_folds;
        cfg.seed = c_.seed;
        cfg.clean = clean();
        cfg.lsa = lsa_config(c_.lsa_n, c_.lsa_d);
        return cfg;
    }

    /// Trainer for any evaluable model name; `lib` must outlive it.
    eval::Trainer trainer(const std::string& name, const pipeline::EmbeddingLibrary& lib) const {
        if (name == "nn-stack") {
            auto cfg = nn_config();
            return [cfg, &lib](const Dataset& train) -> eval::Predictor {
                auto m = std::make_shared<pipeline::NeuralStack>(cfg);
                m->fit(train, lib);
                return [m, &lib](const Dataset& ds) { return m->predict(ds, lib); };
            };
        }
        if (name == "linear-stack") {
            auto cfg = linear_stack_config();
            return [cfg, &lib](const Dataset& train) -> eval::Predictor {
                auto m = std::make_shared<pipeline::LinearStack>(cfg);
                std::vector<std::string> warnings;
                m->fit(train, lib, &warnings);
                return [m, &lib](const Dataset& ds) { return m->predict(ds, lib); };
            };
        }
        auto spec = base_spec(name);
        return [spec, &lib](const Dataset& train) -> eval::Predictor {
            auto m = std::make_shared<pipeline::BaseModel>(spec);
            m->fit(train, lib);
            return [m, &lib](const Dataset& ds) { return m->predict(ds, lib); };
        };
    }

    static json confusion_json(const eval::ConfusionMatrix& m) {
        return json::array({json::array({m[0][0], m[0][1]}), json::array({m[1][0], m[1][1]})});
    }

    static void warn_all(const std::vector<std::string>& warnings) {
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    }

    // -- verbs --------------------------------------------------------------

    void dispatch() {
        const std::string v = verb();
        eval::Stopwatch sw;
        auto l = ledger();
        if (v == "corpus validate") corpus_validate(l);
        else if (v == "corpus export") corpus_export(l);
        else if (v == "preprocess") preprocess(l);
        else if (v == "featurize") featurize(l);
        else if (v == "lsa fit") lsa_fit(l);
        else if (v == "lsa transform") lsa_transform(l);
        else if (v == "lsa grid") grid(l, "lsa");
        else if (v == "embeddings validate") embeddings_validate(l);
        else if (v == "train base") train_base(l);
        else if (v == "train nn-stack" || v == "stack train-nn") train_nn(l);
        else if (v == "train linear-stack" || v == "stack train-linear") train_linear(l);
        else if (v == "predict" || v == "stack predict") predict(l);
        else if (v == "eval tdt") eval_tdt(l);
        else if (v == "eval cv") eval_cv(l);
        else if (v == "eval grid") grid(l, c_.model);
        else if (v == "explain variance") explain_variance(l);
        else if (v == "render confusion") render_confusion(l);
        else throw CLI::CallForHelp();
        finish(l, sw);
    }

    void corpus_validate(eval::RunLedger& l) {
        const Dataset ds = load(c_.input);
        std::cout << "records: " << ds.size() << "\n";
        json extra{{"records", ds.size()}, {"warnings", ds.warnings}, {"provenance", ds.provenance}};
        if (ds.labeled()) {
            const auto d = label_distribution(ds);
            std::cout << "real: " << d.real << " (" << format_g9(d.real_fraction()) << ")\n"
                      << "fake: " << d.fake << " (" << format_g9(d.fake_fraction()) << ")\n";
            extra["real"] = d.real;
            extra["fake"] = d.fake;
        } else {
            std::cout << "unlabeled\n";
        }
        for (const auto& w : ds.warnings) std::cout << "warning: " << w << "\n";
        l.extra = extra;
    }

    void corpus_export(eval::RunLedger& l) {
        const Dataset ds = load(c_.input);
        CorpusFormat fmt = format_from_path(c_.output);
        if (!c_.format.empty()) fmt = c_.format == "csv" ? CorpusFormat::csv : CorpusFormat::tsv;
        write_corpus(ds, c_.output, fmt);
        std::cout << "wrote " << ds.size() << " records to " << c_.output << "\n";
        l.extra = {{"records", ds.size()}};
    }

    void preprocess(eval::RunLedger& l) {
        const Dataset ds = load(c_.input);
        const CleanConfig cfg = clean();
        std::string out = "id\tcleaned_text\n";
        for (const auto& r : ds.records) {
            detail::append_field(out, r.id, '\t');
            out += '\t';
            detail::append_field(out, clean_text(r.text, cfg), '\t');
            out += '\n';
        }
        io::write_file_atomic(c_.output, out);
        std::cout << "wrote " << ds.size() << " cleaned records to " << c_.output << "\n";
        l.extra = {{"records", ds.size()}, {"clean_id", cfg.id()}};
    }

    void featurize(eval::RunLedger& l) {
        const Dataset ds = load(c_.input);
        std::string out = "id";
        for (auto name : kHandcraftedFeatureNames) out += "\t" + std::string(name);
        out += '\n';
        for (const auto& r : ds.records) {
            detail::append_field(out, r.id, '\t');
            for (double v : handcrafted_vector(r.text)) out += "\t" + format_g9(v);
            out += '\n';
        }
        io::write_file_atomic(c_.output, out);
        std::cout << "wrote " << ds.size() << " x 16 features to " << c_.output << "\n";
        l.extra = {{"records", ds.size()}};
    }

    void lsa_fit(eval::RunLedger& l) {
        const Dataset ds = load(c_.input);
        std::vector<std::string> warnings;
        const auto model = lsa::LsaModel::fit(pipeline::cleaned_texts(ds, clean()), lsa_config(c_.lsa_n, c_.lsa_d), &warnings);
        warn_all(warnings);
        const fs::path dir = model_dir();
        fs::create_directories(dir);
        model.save(dir / "lsa");
        io::write_json(dir / "pipeline.json", {{"format", "fakenews-lsa-model"},
                                               {"clean", pipeline::BaseModel::clean_to_json(clean())}});
        std::cout << "vocabulary " << model.vocabulary().size() << ", dimension " << model.dimension() << " -> "
                  << dir.string() << "\n";
        l.extra = {{"vocabulary_size", model.vocabulary().size()}, {"dimension", model.dimension()},
                   {"warnings", warnings}};
    }

    void lsa_transform(eval::RunLedger& l) {
        const fs::path dir = c_.model_dir;
        const auto model = lsa::LsaModel::load(dir / "lsa");
        CleanConfig cfg = clean();
        if (fs::exists(dir / "pipeline.json"))
            cfg = pipeline::BaseModel::clean_from_json(io::read_json(dir / "pipeline.json").at("clean"));
        const Dataset ds = load(c_.input);
        const Eigen::MatrixXd Z = model.transform(pipeline::cleaned_texts(ds, cfg));
        auto set = embeddings::EmbeddingSet::from_matrix(
            "lsa-" + std::to_string(model.vocabulary().size()) + "-" + std::to_string(model.dimension()), ds.ids(), Z,
            embeddings::DType::f64, cfg.id());
        embeddings::write_embeddings(set, c_.output);
        std::cout << "wrote " << Z.rows() << " x " << Z.cols() << " to " << c_.output << "\n";
        l.extra = {{"rows", Z.rows()}, {"dimension", Z.cols()}};
    }

    void embeddings_validate(eval::RunLedger& l) {
        const auto set = embeddings::read_embeddings(c_.input);
        const json manifest = embeddings::manifest_to_json(set.manifest());
        const std::string checksum = embeddings::payload_checksum(c_.input);
        std::cout << manifest.dump(2) << "\n" << "sha256: " << checksum << "\n";
        json extra{{"manifest", manifest}, {"sha256", checksum}};
        for (const auto& path : c_.data) {
            const Dataset ds = load(path);
            (void)embeddings::align(set, ds);
            std::cout << "covers " << path << " (" << ds.size() << " records)\n";
        }
        l.extra = extra;
    }

    void train_base(eval::RunLedger& l) {
        const Dataset ds = load_labeled_data();
        const auto lib = load_embeddings();
        pipeline::BaseModel m(base_spec(c_.model));
        std::vector<std::string> warnings;
        m.fit(ds, lib, &warnings);
        warn_all(warnings);
        m.save(model_dir());
        report_fit(l, ds, m.predict(ds, lib));
    }

    void train_nn(eval::RunLedger& l) {
        const Dataset ds = load_labeled_data();
        const auto lib = load_embeddings();
        pipeline::NeuralStack m(nn_config());
        std::vector<std::string> warnings;
        m.fit(ds, lib, &warnings);
        warn_all(warnings);
        m.save(model_dir());
        report_fit(l, ds, m.predict(ds, lib));
        l.extra["mlp"] = m.config().mlp.to_json();
        l.extra["final_loss"] = m.model().stats().epoch_loss.empty() ? 0.0 : m.model().stats().epoch_loss.back();
    }

    void train_linear(eval::RunLedger& l) {
        const Dataset ds = load_labeled_data();
        const auto lib = load_embeddings();
        pipeline::LinearStack m(linear_stack_config());
        std::vector<std::string> warnings;
        m.fit(ds, lib, &warnings);
        warn_all(warnings);
        m.save(model_dir());
        report_fit(l, ds, m.predict(ds, lib));
        l.extra["warnings"] = warnings;
    }

    void report_fit(eval::RunLedger& l, const Dataset& ds, const std::vector<Label>& pred) {
        const double f1 = eval::f1_score(ds.labels(), pred, eval::parse_averaging(c_.averaging));
        std::cout << "model saved to " << model_dir().string() << "\ntraining F1 (" << c_.averaging << "): "
                  << format_g9(f1) << "\n";
        l.score_names = {"train"};
        l.scores = {f1};
        l.extra["model_dir"] = model_dir().string();
    }

    void predict(eval::RunLedger& l) {
        const fs::path dir = c_.model_dir;
        const auto lib = load_embeddings();
        const Dataset ds = load(c_.input);
        const std::string kind = pipeline::pipeline_kind(dir);
        std::vector<Label> pred;
        std::optional<Eigen::VectorXd> score;
        if (kind == "fakenews-base-model") {
            const auto m = pipeline::BaseModel::load(dir);
            score = m.decision(ds, lib);
            pred = m.classifier().predict(m.features(ds, lib));
        } else if (kind == "fakenews-neural-stack") {
            const auto m = pipeline::NeuralStack::load(dir);
            const Eigen::MatrixXd out = m.forward(ds, lib);
            score = out.col(1) - out.col(0);
            pred = meta::argmax_labels(out);
        } else if (kind == "fakenews-linear-stack") {
            const auto m = pipeline::LinearStack::load(dir);
            score = m.decision(ds, lib);
            pred = m.stacker().predict(m.meta_features(ds, lib));
        } else {
            throw FormatError(dir.string() + ": unknown model kind '" + kind + "'");
        }
        std::string out = "id\tlabel\tscore\n";
        for (std::size_t i = 0; i < ds.size(); ++i) {
            detail::append_field(out, ds.records[i].id, '\t');
            out += "\t" + std::string(to_string(pred[i])) + "\t" + format_g9((*score)(static_cast<Eigen::Index>(i))) + "\n";
        }
        const fs::path out_path = c_.output.empty() ? out_dir() / "predictions.tsv" : fs::path(c_.output);
        io::write_file_atomic(out_path, out);
        std::cout << "wrote " << ds.size() << " predictions to " << out_path.string() << "\n";
        l.extra = {{"model_kind", kind}, {"predictions", out_path.string()}};
        if (ds.labeled()) {
            const auto truth = ds.labels();
            const auto m = eval::confusion_matrix(truth, pred);
            const double f1 = eval::f1_score(truth, pred, eval::parse_averaging(c_.averaging));
            std::cout << "F1 (" << c_.averaging << "): " << format_g9(f1) << "\n";
            l.score_names = {"f1"};
            l.scores = {f1};
            l.extra["confusion"] = confusion_json(m);
            eval::render_confusion_svg(m, out_dir() / "confusion.svg", "Predictions");
        }
    }

    void eval_tdt(eval::RunLedger& l) {
        const Dataset ds = load_labeled_data();
        const auto lib = load_embeddings();
        const auto split = eval::tdt_split(ds, c_.seed, !c_.unstratified);
        const auto r = eval::evaluate_tdt(trainer(c_.model, lib), split, eval::parse_averaging(c_.averaging));
        l.protocol = "tdt";
        l.score_names = r.score_names;
        l.scores = r.scores;
        l.extra["sizes"] = {{"train", split.train.size()}, {"dev", split.dev.size()}, {"test", split.test.size()}};
        json confusions = json::object();
        for (std::size_t i = 0; i < r.scores.size(); ++i) {
            std::cout << r.score_names[i] << " F1: " << format_g9(r.scores[i]) << "\n";
            confusions[r.score_names[i]] = confusion_json(r.confusions[i]);
            eval::render_confusion_svg(r.confusions[i], out_dir() / ("confusion-" + r.score_names[i] + ".svg"),
                                       c_.model + " (" + r.score_names[i] + ")");
        }
        l.extra["confusion"] = confusions;
    }

    void eval_cv(eval::RunLedger& l) {
        const Dataset ds = load_labeled_data();
        const auto lib = load_embeddings();
        const auto plan = eval::kfold(ds, c_.k, c_.seed, !c_.unstratified);
        const auto r = eval::evaluate_cv(trainer(c_.model, lib), ds, plan, eval::parse_averaging(c_.averaging));
        l.protocol = "cv" + std::to_string(c_.k);
        l.score_names = r.score_names;
        l.scores = r.scores;
        l.mean = r.score;
        for (std::size_t i = 0; i < r.scores.size(); ++i)
            std::cout << r.score_names[i] << " F1: " << format_g9(r.scores[i]) << "\n";
        std::cout << "mean F1: " << format_g9(r.score) << "\n";
    }

    struct GridPoint {
        std::string model;
        std::size_t n = 0, d = 0;
        meta::MlpConfig mlp;
    };

    void grid(eval::RunLedger& l, const std::string& family) {
        const Dataset ds = load_labeled_data();
        const auto lib = load_embeddings();
        std::vector<GridPoint> points;
        if (family == "nn-stack") {
            meta::MlpGrid g;
            if (!c_.grid_lrs.empty()) g.learning_rates = c_.grid_lrs;
            if (!c_.grid_dropouts.empty()) g.dropouts = c_.grid_dropouts;
            if (!c_.grid_batches.empty()) g.batch_sizes = c_.grid_batches;
            if (!c_.grid_epochs.empty()) g.epochs = c_.grid_epochs;
            for (auto& m : g.expand(nn_config().mlp)) points.push_back({"nn-stack", 0, 0, m});
        } else {
            std::vector<std::string> models = family == "lsa" ? std::vector<std::string>{"lsa-svm", "lsa-lr"}
                                                              : std::vector<std::string>{family};
            for (const auto& [n, d] : lsa::grid_candidates()) {
                if (!c_.grid_features.empty() && std::find(c_.grid_features.begin(), c_.grid_features.end(), n) == c_.grid_features.end()) continue;
                if (!c_.grid_dims.empty() && std::find(c_.grid_dims.begin(), c_.grid_dims.end(), d) == c_.grid_dims.end()) continue;
                for (const auto& m : models) points.push_back({m, n, d, {}});
            }
        }
        if (points.empty()) throw ValidationError("grid is empty after applying --features/--dims");

        const auto avg = eval::parse_averaging(c_.averaging);
        const bool cv = c_.protocol == "cv10";
        std::optional<eval::TdtSplit> split;
        std::optional<eval::FoldPlan> plan;
        if (cv) plan = eval::kfold(ds, c_.k, c_.seed, !c_.unstratified);
        else split = eval::tdt_split(ds, c_.seed, !c_.unstratified);
        const auto base_nn = nn_config();

        auto evaluate = [&](const GridPoint& p) {
            eval::Trainer t;
            if (p.model == "nn-stack") {
                auto cfg = base_nn;
                cfg.mlp = p.mlp;
                t = [cfg, &lib](const Dataset& train) -> eval::Predictor {
                    auto m = std::make_shared<pipeline::NeuralStack>(cfg);
                    m->fit(train, lib);
                    return [m, &lib](const Dataset& x) { return m->predict(x, lib); };
                };
            } else {
                auto spec = base_spec(p.model);
                spec.lsa = lsa_config(p.n, p.d);
                t = [spec, &lib](const Dataset& train) -> eval::Predictor {
                    auto m = std::make_shared<pipeline::BaseModel>(spec);
                    m->fit(train, lib);
                    return [m, &lib](const Dataset& x) { return m->predict(x, lib); };
                };
            }
            return cv ? eval::evaluate_cv(t, ds, *plan, avg) : eval::evaluate_tdt(t, *split, avg);
        };
        const auto result = eval::grid_search<GridPoint>(points, evaluate, std::max(1u, c_.threads));
        const json table = eval::grid_to_json<GridPoint>(result, [](const GridPoint& p) {
            json j{{"model", p.model}};
            if (p.model == "nn-stack") j["mlp"] = p.mlp.to_json();
            else j.update({{"n", p.n}, {"d", p.d}});
            return j;
        });
        io::write_json(out_dir() / "grid.json", table);
        l.protocol = cv ? "cv" + std::to_string(c_.k) : "tdt";
        l.extra["grid"] = table;
        std::cout << result.ranked.size() << " of " << points.size() << " configurations evaluated";
        if (!result.failures.empty()) std::cout << ", " << result.failures.size() << " failed";
        std::cout << "\n";
        if (!result.ranked.empty()) {
            const auto& b = result.best();
            l.score_names = {"best"};
            l.scores = {b.result.score};
            std::cout << "best: " << table["ranked"][0]["config"].dump() << " score " << format_g9(b.result.score) << "\n";
        }
        for (const auto& f : result.failures) std::cerr << "failed configuration " << f.position << ": " << *f.error << "\n";
    }

    void explain_variance(eval::RunLedger& l) {
        const Dataset ds = load_labeled_data();
        const auto r = eval::class_variance_ranking(ds, c_.top_k, c_.counts ? eval::VarianceInput::counts : eval::VarianceInput::tfidf,
                                                    clean());
        json out = json::object();
        for (auto [name, list] : {std::pair{"fake", &r.fake}, std::pair{"real", &r.real}}) {
            std::cout << name << ":";
            json arr = json::array();
            for (const auto& w : *list) {
                std::cout << " " << w.word;
                arr.push_back({{"word", w.word}, {"variance", w.variance}});
            }
            std::cout << "\n";
            out[name] = arr;
        }
        l.extra["ranking"] = out;
    }

    void render_confusion(eval::RunLedger& l) {
        eval::ConfusionMatrix m{};
        if (!c_.input.empty()) {
            const json j = io::read_json(c_.input);
            const json* conf = nullptr;
            if (j.contains("confusion")) conf = &j["confusion"];
            if (conf && conf->is_object()) conf = &(*conf)[conf->contains("test") ? "test" : conf->begin().key()];
            if (!conf || !conf->is_array()) throw FormatError(c_.input + ": no confusion matrix in ledger");
            for (std::size_t r = 0; r < 2; ++r)
                for (std::size_t c = 0; c < 2; ++c) m[r][c] = (*conf).at(r).at(c);
        } else if (c_.matrix.size() == 4) {
            m = {{{c_.matrix[0], c_.matrix[1]}, {c_.matrix[2], c_.matrix[3]}}};
        } else {
            throw CLI::ValidationError("--matrix", "give --matrix a,b,c,d or --ledger");
        }
        eval::render_confusion_svg(m, c_.output, c_.title);
        std::cout << "wrote " << c_.output << "\n";
        l.extra["confusion"] = confusion_json(m);
    }

    CLI::App app_{"fakenews"};
    Context c_;
    std::vector<CLI::Option*> required_;
};

} // namespace

int main(int argc, char** argv) {
    Cli cli;
    return cli.run(argc, argv);
}
