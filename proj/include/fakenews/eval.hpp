#pragma once

// Evaluation harness: train/dev/test splitting, stratified k-fold plans,
// F1 and confusion matrices, SVG heatmaps, grid search, run ledgers and the
// per-class variance ranking of word features.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

#include "fakenews/corpus.hpp"
#include "fakenews/error.hpp"
#include "fakenews/io.hpp"
#include "fakenews/lsa.hpp"
#include "fakenews/preprocess.hpp"
#include "fakenews/random.hpp"

namespace fakenews::eval {

// ---------------------------------------------------------------------------
// Splits

namespace detail {

/// Shuffles each class with `rng` and interleaves them so that every prefix
/// of the returned order has (up to rounding) the parent's class ratio.
inline std::vector<std::size_t> stratified_order(std::span<const Label> labels, std::mt19937_64& rng) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    struct Keyed {
        double key;
        int cls;
        std::size_t index;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(labels.size());
    for (int c = 0; c < 2; ++c) {
        auto& members = by_class[static_cast<std::size_t>(c)];
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t r = 0; r < members.size(); ++r)
            keyed.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(members.size()), c, members[r]});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        return a.key != b.key ? a.key < b.key : a.cls < b.cls;
    });
    std::vector<std::size_t> order;
    order.reserve(keyed.size());
    for (const auto& k : keyed) order.push_back(k.index);
    return order;
}

inline std::vector<std::size_t> shuffled_order(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

} // namespace detail

inline constexpr double kTrainFraction = 0.75;
inline constexpr double kDevFraction = 0.1875;
inline constexpr double kTestFraction = 0.0625;

struct TdtSplit {
    Dataset train, dev, test;
    std::vector<std::size_t> train_indices, dev_indices, test_indices; ///< into the parent dataset, ascending
    std::uint64_t seed = 0;
    bool stratified = true;
};

/// 75% / 18.75% / 6.25% partition. Subsets keep the parent's file order.
inline TdtSplit tdt_split(const Dataset& ds, std::uint64_t seed, bool stratified = true) {
    if (ds.size() < 16) throw StateError("train/dev/test split needs at least 16 records, got " + std::to_string(ds.size()));
    const auto labels = ds.labels();
    std::mt19937_64 rng(derive_seed(seed, "split"));
    auto order = stratified ? detail::stratified_order(labels, rng) : detail::shuffled_order(ds.size(), rng);

    const auto n = static_cast<double>(ds.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * kTrainFraction));
    const auto n_dev = static_cast<std::size_t>(std::llround(n * kDevFraction));

    TdtSplit s;
    s.seed = seed;
    s.stratified = stratified;
    s.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.dev_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                         order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
    s.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), order.end());
    for (auto* v : {&s.train_indices, &s.dev_indices, &s.test_indices}) std::sort(v->begin(), v->end());
    s.train = ds.subset(s.train_indices, SplitName::train);
    s.dev = ds.subset(s.dev_indices, SplitName::validation);
    s.test = ds.subset(s.test_indices, SplitName::test);
    return s;
}

struct FoldPlan {
    std::size_t k = 10;
    std::vector<std::size_t> assignments; ///< record index -> fold id
    std::uint64_t seed = 0;

    std::vector<std::size_t> test_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == fold) out.push_back(i);
        return out;
    }

    std::vector<std::size_t> train_indices(std::size_t fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] != fold) out.push_back(i);
        return out;
    }
};

/// Stratified (when labeled), seeded k-fold assignment; fold sizes differ by at most one.
inline FoldPlan kfold(const Dataset& ds, std::size_t k = 10, std::uint64_t seed = 42, bool stratified = true) {
    if (k < 2) throw StateError("k-fold needs k >= 2");
    if (k > ds.size()) throw StateError("k = " + std::to_string(k) + " exceeds dataset size " + std::to_string(ds.size()));
    std::mt19937_64 rng(derive_seed(seed, "folds"));
    std::vector<std::size_t> order;
    if (stratified && ds.labeled()) {
        // each class shuffled, then dealt round-robin; the deal continues across classes
        const auto labels = ds.labels();
        for (const Label cls : {Label::fake, Label::real}) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (labels[i] == cls) members.push_back(i);
            std::shuffle(members.begin(), members.end(), rng);
            order.insert(order.end(), members.begin(), members.end());
        }
    } else {
        order = detail::shuffled_order(ds.size(), rng);
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.resize(ds.size());
    for (std::size_t p = 0; p < order.size(); ++p) plan.assignments[order[p]] = p % k;
    return plan;
}

// ---------------------------------------------------------------------------
// Metrics

/// Rows: actual (fake, real); columns: predicted (fake, real).
using ConfusionMatrix = std::array<std::array<std::size_t, 2>, 2>;

inline ConfusionMatrix confusion_matrix(std::span<const Label> truth, std::span<const Label> pred) {
    if (truth.size() != pred.size())
        throw StateError("label vectors differ in length: " + std::to_string(truth.size()) + " vs " + std::to_string(pred.size()));
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < truth.size(); ++i) ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    return m;
}

enum class Averaging { binary_real, macro, weighted };

inline Averaging parse_averaging(std::string_view s) {
    if (s == "binary" || s == "binary_real") return Averaging::binary_real;
    if (s == "macro") return Averaging::macro;
    if (s == "weighted") return Averaging::weighted;
    throw StateError("unknown averaging '" + std::string(s) + "'");
}

inline std::string_view to_string(Averaging a) {
    return a == Averaging::binary_real ? "binary_real" : a == Averaging::macro ? "macro" : "weighted";
}

/// F1 of one class from a confusion matrix; undefined precision/recall/F1 count as 0.
inline double class_f1(const ConfusionMatrix& m, std::size_t cls) {
    const std::size_t other = 1 - cls;
    const double tp = static_cast<double>(m[cls][cls]);
    const double fp = static_cast<double>(m[other][cls]);
    const double fn = static_cast<double>(m[cls][other]);
    const double denom = 2 * tp + fp + fn;
    return denom > 0 ? 2 * tp / denom : 0.0;
}

inline double f1_score(std::span<const Label> truth, std::span<const Label> pred, Averaging avg = Averaging::weighted) {
    if (truth.empty()) throw StateError("F1 needs at least one sample");
    const auto m = confusion_matrix(truth, pred);
    const double f_fake = class_f1(m, 0), f_real = class_f1(m, 1);
    switch (avg) {
    case Averaging::binary_real: return f_real;
    case Averaging::macro: return 0.5 * (f_fake + f_real);
    case Averaging::weighted: {
        const double n_fake = static_cast<double>(m[0][0] + m[0][1]);
        const double n_real = static_cast<double>(m[1][0] + m[1][1]);
        return (n_fake * f_fake + n_real * f_real) / (n_fake + n_real);
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Confusion heatmap

/// Standalone SVG: 2x2 cells shaded linearly from white (0) to a dark blue
/// (largest cell), each labeled with its count.
inline std::string confusion_svg(const ConfusionMatrix& m, std::string_view title = "Confusion matrix") {
    std::size_t max_cell = 0;
    for (const auto& row : m)
        for (auto v : row) max_cell = std::max(max_cell, v);
    constexpr int cell = 120, left = 110, top = 60;
    auto xml_escape = [](std::string_view s) {
        std::string out;
        for (char c : s) {
            switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
            }
        }
        return out;
    };
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + 2 * cell + 20 << "\" height=\""
       << top + 2 * cell + 50 << "\" font-family=\"sans-serif\">\n"
       << "  <title>" << xml_escape(title) << "</title>\n"
       << "  <text x=\"" << left + cell << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
       << "</text>\n";
    static constexpr std::array<const char*, 2> names{"fake", "real"};
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double t = max_cell ? static_cast<double>(m[r][c]) / static_cast<double>(max_cell) : 0.0;
            // white (255,255,255) -> (8,48,107)
            const int red = static_cast<int>(std::lround(255 + t * (8 - 255)));
            const int green = static_cast<int>(std::lround(255 + t * (48 - 255)));
            const int blue = static_cast<int>(std::lround(255 + t * (107 - 255)));
            const int x = left + static_cast<int>(c) * cell, y = top + static_cast<int>(r) * cell;
            os << "  <rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
               << "\" fill=\"rgb(" << red << "," << green << "," << blue << ")\" stroke=\"#444\"/>\n"
               << "  <text class=\"count\" x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 6
               << "\" text-anchor=\"middle\" font-size=\"18\" fill=\"" << (t > 0.5 ? "#fff" : "#000") << "\">" << m[r][c]
               << "</text>\n";
        }
        os << "  <text x=\"" << left - 10 << "\" y=\"" << top + static_cast<int>(r) * cell + cell / 2 + 5
           << "\" text-anchor=\"end\" font-size=\"14\">" << names[r] << "</text>\n";
    }
    for (std::size_t c = 0; c < 2; ++c)
        os << "  <text x=\"" << left + static_cast<int>(c) * cell + cell / 2 << "\" y=\"" << top - 8
           << "\" text-anchor=\"middle\" font-size=\"14\">" << names[c] << "</text>\n";
    os << "  <text x=\"" << left + cell << "\" y=\"" << top + 2 * cell + 30
       << "\" text-anchor=\"middle\" font-size=\"14\">predicted</text>\n"
       << "  <text x=\"20\" y=\"" << top + cell << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 "
       << top + cell << ")\">actual</text>\n"
       << "</svg>\n";
    return os.str();
}

inline void render_confusion_svg(const ConfusionMatrix& m, const std::filesystem::path& path,
                                 std::string_view title = "Confusion matrix") {
    io::write_file_atomic(path, confusion_svg(m, title));
}

// ---------------------------------------------------------------------------
// Protocols

/// Predicts labels for a dataset with a model trained beforehand.
using Predictor = std::function<std::vector<Label>(const Dataset&)>;
/// Fits a model on a training dataset.
using Trainer = std::function<Predictor(const Dataset& train)>;

enum class Protocol { tdt, cv10 };

inline std::string_view to_string(Protocol p) { return p == Protocol::tdt ? "tdt" : "cv10"; }

struct ProtocolResult {
    /// Ranking score: dev F1 for TDT, mean fold F1 for CV.
    double score = 0;
    /// TDT: {train, dev, test}; CV: per-fold test F1.
    std::vector<double> scores;
    std::vector<std::string> score_names;
    std::vector<ConfusionMatrix> confusions;
};

inline ProtocolResult evaluate_tdt(const Trainer& trainer, const TdtSplit& split, Averaging avg = Averaging::weighted) {
    ProtocolResult r;
    Predictor predict = trainer(split.train);
    for (const auto* part : {&split.train, &split.dev, &split.test}) {
        const auto truth = part->labels();
        const auto pred = predict(*part);
        r.scores.push_back(f1_score(truth, pred, avg));
        r.confusions.push_back(confusion_matrix(truth, pred));
    }
    r.score_names = {"train", "dev", "test"};
    r.score = r.scores[1];
    return r;
}

inline ProtocolResult evaluate_cv(const Trainer& trainer, const Dataset& ds, const FoldPlan& plan,
                                  Averaging avg = Averaging::weighted) {
    ProtocolResult r;
    for (std::size_t f = 0; f < plan.k; ++f) {
        const auto train_idx = plan.train_indices(f), test_idx = plan.test_indices(f);
        const Dataset test = ds.subset(test_idx);
        Predictor predict = trainer(ds.subset(train_idx));
        const auto truth = test.labels();
        const auto pred = predict(test);
        r.scores.push_back(f1_score(truth, pred, avg));
        r.confusions.push_back(confusion_matrix(truth, pred));
        r.score_names.push_back("fold" + std::to_string(f));
    }
    r.score = std::accumulate(r.scores.begin(), r.scores.end(), 0.0) / static_cast<double>(r.scores.size());
    return r;
}

// ---------------------------------------------------------------------------
// Grid search

template <typename Config>
struct GridEntry {
    std::size_t position = 0; ///< index in the input grid
    Config config;
    ProtocolResult result;
    std::optional<std::string> error;
};

template <typename Config>
struct GridSearchResult {
    std::vector<GridEntry<Config>> ranked;   ///< successful runs, best first
    std::vector<GridEntry<Config>> failures; ///< in grid order

    const GridEntry<Config>& best() const {
        if (ranked.empty()) throw StateError("grid search produced no successful run");
        return ranked.front();
    }
};

/// Evaluates every configuration; a throwing configuration is recorded as a
/// failure and skipped. Ranked by score descending, ties by grid position.
/// With threads > 1 configurations are evaluated concurrently, so
/// `evaluate` must then be safe to call from several threads.
template <typename Config>
GridSearchResult<Config> grid_search(std::span<const Config> grid,
                                     const std::function<ProtocolResult(const Config&)>& evaluate,
                                     unsigned threads = 1) {
    if (grid.empty()) throw StateError("grid search needs a nonempty grid");
    std::vector<GridEntry<Config>> entries(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            auto& e = entries[i];
            e.position = i;
            e.config = grid[i];
            try {
                e.result = evaluate(grid[i]);
            } catch (const std::exception& ex) {
                e.error = ex.what();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    GridSearchResult<Config> out;
    for (auto& e : entries) (e.error ? out.failures : out.ranked).push_back(std::move(e));
    std::stable_sort(out.ranked.begin(), out.ranked.end(), [](const auto& a, const auto& b) {
        return a.result.score != b.result.score ? a.result.score > b.result.score : a.position < b.position;
    });
    return out;
}

template <typename Config>
io::json grid_to_json(const GridSearchResult<Config>& r, const std::function<io::json(const Config&)>& describe) {
    auto entry = [&](const GridEntry<Config>& e) {
        io::json j{{"position", e.position}, {"config", describe(e.config)}};
        if (e.error) {
            j["error"] = *e.error;
        } else {
            j["score"] = e.result.score;
            io::json s = io::json::object();
            for (std::size_t i = 0; i < e.result.scores.size(); ++i) s[e.result.score_names[i]] = e.result.scores[i];
            j["scores"] = s;
        }
        return j;
    };
    io::json ranked = io::json::array(), failures = io::json::array();
    for (const auto& e : r.ranked) ranked.push_back(entry(e));
    for (const auto& e : r.failures) failures.push_back(entry(e));
    return {{"ranked", ranked}, {"failures", failures}};
}

// ---------------------------------------------------------------------------
// Run ledger

/// One JSON document per run: effective config, seed, protocol, scores and wall time.
struct RunLedger {
    std::string verb;
    io::json config = io::json::object();
    std::uint64_t seed = 0;
    std::string protocol;
    std::vector<std::string> score_names;
    std::vector<double> scores;
    std::optional<double> mean;
    double wall_time_s = 0;
    io::json extra = io::json::object();

    io::json to_json() const {
        io::json s = io::json::object();
        for (std::size_t i = 0; i < scores.size(); ++i) s[score_names[i]] = scores[i];
        io::json j{{"verb", verb},     {"config", config}, {"seed", seed},
                   {"protocol", protocol}, {"scores", s},  {"wall_time_s", wall_time_s}};
        if (mean) j["mean"] = *mean;
        for (const auto& [k, v] : extra.items()) j[k] = v;
        return j;
    }

    void write(const std::filesystem::path& path) const { io::write_json(path, to_json()); }
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Word-feature variance ranking

struct RankedWord {
    std::string word;
    double variance;
};

struct VarianceRanking {
    std::vector<RankedWord> fake, real;
};

enum class VarianceInput { tfidf, counts };

/// Word-unigram features over the `vocabulary_size` most document-frequent
/// words (ties lexicographic) of the cleaned texts; TF-IDF rows are
/// L2-normalized. Per class, columns are ranked by population variance over
/// that class's rows (ties lexicographic) and the top_k words kept.
inline VarianceRanking class_variance_ranking(const Dataset& ds, std::size_t top_k,
                                              VarianceInput input = VarianceInput::tfidf,
                                              const CleanConfig& clean = {}, std::size_t vocabulary_size = 10000) {
    const auto labels = ds.labels();
    std::array<std::size_t, 2> class_sizes{};
    for (auto l : labels) ++class_sizes[static_cast<std::size_t>(l)];
    if (class_sizes[0] == 0 || class_sizes[1] == 0) throw StateError("variance ranking needs both classes present");

    std::vector<std::vector<std::pair<std::string, double>>> docs;
    std::map<std::string, std::size_t> df;
    for (const auto& r : ds.records) {
        std::map<std::string, double> counts;
        for (auto& t : tokenize(clean_text(r.text, clean))) counts[t] += 1.0;
        for (const auto& [w, c] : counts) ++df[w];
        docs.emplace_back(counts.begin(), counts.end());
    }
    std::vector<std::pair<std::string, std::size_t>> by_df(df.begin(), df.end());
    std::stable_sort(by_df.begin(), by_df.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (by_df.size() > vocabulary_size) by_df.resize(vocabulary_size);
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t j = 0; j < by_df.size(); ++j) column.emplace(by_df[j].first, j);

    const std::size_t V = by_df.size();
    std::array<std::vector<double>, 2> sum{std::vector<double>(V), std::vector<double>(V)};
    std::array<std::vector<double>, 2> sumsq{std::vector<double>(V), std::vector<double>(V)};
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::vector<std::pair<std::size_t, double>> row;
        for (const auto& [w, c] : docs[i]) {
            auto it = column.find(w);
            if (it == column.end()) continue;
            const double v = input == VarianceInput::tfidf ? c * lsa::smoothed_idf(ds.size(), by_df[it->second].second) : c;
            row.emplace_back(it->second, v);
        }
        if (input == VarianceInput::tfidf) {
            double norm = 0;
            for (const auto& [j, v] : row) norm += v * v;
            norm = std::sqrt(norm);
            for (auto& [j, v] : row) v /= norm;
        }
        const auto cls = static_cast<std::size_t>(labels[i]);
        for (const auto& [j, v] : row) {
            sum[cls][j] += v;
            sumsq[cls][j] += v * v;
        }
    }

    auto rank = [&](std::size_t cls) {
        const auto n = static_cast<double>(class_sizes[cls]);
        std::vector<RankedWord> words;
        words.reserve(V);
        for (std::size_t j = 0; j < V; ++j) {
            const double mean = sum[cls][j] / n;
            words.push_back({by_df[j].first, std::max(0.0, sumsq[cls][j] / n - mean * mean)});
        }
        std::sort(words.begin(), words.end(), [](const RankedWord& a, const RankedWord& b) {
            return a.variance != b.variance ? a.variance > b.variance : a.word < b.word;
        });
        if (words.size() > top_k) words.resize(top_k);
        return words;
    };
    return {rank(0), rank(1)};
}

} // namespace fakenews::eval
