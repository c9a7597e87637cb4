#pragma once

// Latent semantic analysis over mixed word/char n-grams:
//   vocabulary selection -> TF-IDF -> randomized truncated SVD -> projection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fakenews/detail/utf8.hpp"
#include "fakenews/error.hpp"
#include "fakenews/io.hpp"
#include "fakenews/preprocess.hpp"

namespace fakenews::lsa {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Family : std::uint8_t { word, chr };

inline std::string_view to_string(Family f) { return f == Family::word ? "w" : "c"; }

struct LsaConfig {
    std::size_t n = 2500; ///< total n-gram features, split evenly between families
    std::size_t d = 512;  ///< target dimension
    std::pair<int, int> word_ngram_range{1, 2};
    std::pair<int, int> char_ngram_range{1, 3};
    bool use_word_ngrams = true;
    bool use_char_ngrams = true;
    std::uint64_t seed = 42;
    int oversampling = 10;
    int power_iterations = 2;

    /// Best stand-alone LSA model.
    static LsaConfig best() { return LsaConfig{}; }
    /// LSA block of the stacking network input.
    static LsaConfig stacking() {
        LsaConfig c;
        c.d = 256;
        return c;
    }
};

inline constexpr std::array<std::size_t, 7> kGridFeatureCounts{500, 1250, 2500, 5000, 10000, 15000, 20000};
inline constexpr std::array<std::size_t, 5> kGridDimensions{64, 128, 256, 512, 768};

/// Cartesian product of the feature-count and dimension grids (35 pairs),
/// feature count varying slowest.
inline std::vector<std::pair<std::size_t, std::size_t>> grid_candidates() {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (auto n : kGridFeatureCounts)
        for (auto d : kGridDimensions) out.emplace_back(n, d);
    return out;
}

struct NgramEntry {
    Family family;
    std::string gram;
    friend bool operator==(const NgramEntry&, const NgramEntry&) = default;
};

/// Ordered n-gram -> column index map: word n-grams first, then char n-grams.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<NgramEntry> entries) : entries_(std::move(entries)) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            auto& idx = entries_[i].family == Family::word ? word_index_ : char_index_;
            if (!idx.emplace(entries_[i].gram, static_cast<int>(i)).second)
                throw FormatError("duplicate vocabulary entry '" + entries_[i].gram + "'");
        }
    }

    std::size_t size() const { return entries_.size(); }
    const std::vector<NgramEntry>& entries() const { return entries_; }
    const NgramEntry& operator[](std::size_t i) const { return entries_[i]; }

    int find(Family f, const std::string& gram) const {
        const auto& idx = f == Family::word ? word_index_ : char_index_;
        auto it = idx.find(gram);
        return it == idx.end() ? -1 : it->second;
    }

    std::size_t count(Family f) const { return f == Family::word ? word_index_.size() : char_index_.size(); }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.entries_ == b.entries_; }

private:
    std::vector<NgramEntry> entries_;
    std::unordered_map<std::string, int> word_index_, char_index_;
};

using NgramCounts = std::map<std::string, double>;

/// Word n-grams joined by a single space.
inline NgramCounts word_ngrams(std::string_view cleaned, std::pair<int, int> range) {
    NgramCounts out;
    auto tokens = tokenize(cleaned);
    for (int n = range.first; n <= range.second; ++n) {
        const auto len = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
            std::string g = tokens[i];
            for (std::size_t k = 1; k < len; ++k) g += ' ' + tokens[i + k];
            out[g] += 1.0;
        }
    }
    return out;
}

/// Char n-grams over the whole cleaned string, spaces included.
inline NgramCounts char_ngrams(std::string_view cleaned, std::pair<int, int> range) {
    NgramCounts out;
    const auto cps = detail::decode_utf8_lossy(cleaned);
    for (int n = range.first; n <= range.second; ++n) {
        const auto len = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + len <= cps.size(); ++i) out[detail::encode_utf8(cps.substr(i, len))] += 1.0;
    }
    return out;
}

/// Smoothed inverse document frequency.
inline double smoothed_idf(std::size_t n_docs, std::size_t df) {
    return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

struct VocabularyFit {
    Vocabulary vocabulary;
    std::vector<double> idf;
    std::vector<std::string> warnings;
};

/// Per family: count n-grams, rank by summed corpus TF-IDF mass
/// (total count x idf; ties by gram, lexicographically) and keep the top
/// n/2. When one family is disabled the other receives all n slots.
inline VocabularyFit fit_vocabulary(std::span<const std::string> docs, const LsaConfig& cfg) {
    if (docs.empty()) throw StateError("cannot fit a vocabulary on an empty corpus");
    if (!cfg.use_word_ngrams && !cfg.use_char_ngrams) throw StateError("both n-gram families disabled");

    VocabularyFit fit;
    const std::size_t families = (cfg.use_word_ngrams ? 1 : 0) + (cfg.use_char_ngrams ? 1 : 0);
    const std::size_t quota = cfg.n / families;

    std::vector<NgramEntry> entries;
    auto select = [&](Family fam) {
        std::unordered_map<std::string, std::pair<double, std::size_t>> stats; // total count, df
        for (const auto& doc : docs) {
            auto counts = fam == Family::word ? word_ngrams(doc, cfg.word_ngram_range)
                                              : char_ngrams(doc, cfg.char_ngram_range);
            for (const auto& [g, c] : counts) {
                auto& s = stats[g];
                s.first += c;
                s.second += 1;
            }
        }
        struct Scored {
            std::string gram;
            double mass;
            double idf;
        };
        std::vector<Scored> scored;
        scored.reserve(stats.size());
        for (auto& [g, s] : stats) {
            const double idf = smoothed_idf(docs.size(), s.second);
            scored.push_back({g, s.first * idf, idf});
        }
        std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            return a.mass != b.mass ? a.mass > b.mass : a.gram < b.gram;
        });
        if (scored.size() < quota)
            fit.warnings.push_back("only " + std::to_string(scored.size()) + " distinct " +
                                   (fam == Family::word ? "word" : "char") + " n-grams available, " +
                                   std::to_string(quota) + " requested");
        scored.resize(std::min(scored.size(), quota));
        for (auto& s : scored) {
            entries.push_back({fam, std::move(s.gram)});
            fit.idf.push_back(s.idf);
        }
    };
    if (cfg.use_word_ngrams) select(Family::word);
    if (cfg.use_char_ngrams) select(Family::chr);
    fit.vocabulary = Vocabulary(std::move(entries));
    return fit;
}

/// Raw counts x idf, then each row L2-normalized (empty rows stay zero).
inline SparseMatrix tfidf_transform(const Vocabulary& vocab, std::span<const double> idf,
                                    std::span<const std::string> docs, const LsaConfig& cfg) {
    if (idf.size() != vocab.size()) throw StateError("idf length does not match vocabulary");
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t r = 0; r < docs.size(); ++r) {
        std::vector<std::pair<int, double>> row;
        auto add = [&](Family fam, const NgramCounts& counts) {
            for (const auto& [g, c] : counts)
                if (int col = vocab.find(fam, g); col >= 0) row.emplace_back(col, c * idf[static_cast<std::size_t>(col)]);
        };
        if (cfg.use_word_ngrams && vocab.count(Family::word)) add(Family::word, word_ngrams(docs[r], cfg.word_ngram_range));
        if (cfg.use_char_ngrams && vocab.count(Family::chr)) add(Family::chr, char_ngrams(docs[r], cfg.char_ngram_range));
        double norm = 0;
        for (const auto& [c, v] : row) norm += v * v;
        norm = std::sqrt(norm);
        for (const auto& [c, v] : row) triplets.emplace_back(static_cast<int>(r), c, v / norm);
    }
    SparseMatrix X(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(vocab.size()));
    X.setFromTriplets(triplets.begin(), triplets.end());
    return X;
}

struct SvdResult {
    Eigen::MatrixXd basis;            ///< n x d, orthonormal columns (right singular vectors)
    Eigen::VectorXd singular_values;  ///< length d, non-increasing
};

namespace detail {

inline Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& Y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(Y.rows(), Y.cols());
}

} // namespace detail

/// Randomized truncated SVD (range finder with Gaussian test matrix,
/// `oversampling` extra columns and `power_iterations` re-orthonormalized
/// power steps). Deterministic given the seed. Right singular vectors are
/// sign-normalized so their largest-magnitude entry is positive.
template <typename Matrix>
SvdResult randomized_svd(const Matrix& X, std::size_t d, std::uint64_t seed, int oversampling = 10,
                         int power_iterations = 2) {
    const auto rows = static_cast<std::size_t>(X.rows());
    const auto cols = static_cast<std::size_t>(X.cols());
    if (d == 0) throw StateError("SVD dimension must be at least 1");
    if (d > std::min(rows, cols))
        throw StateError("SVD dimension " + std::to_string(d) + " exceeds min(rows, cols) = " +
                         std::to_string(std::min(rows, cols)));
    const auto k = static_cast<Eigen::Index>(std::min(d + static_cast<std::size_t>(oversampling), std::min(rows, cols)));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd omega(X.cols(), k);
    for (Eigen::Index j = 0; j < omega.cols(); ++j)
        for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = gauss(rng);

    Eigen::MatrixXd Q = detail::orthonormalize(X * omega);
    for (int it = 0; it < power_iterations; ++it) {
        Eigen::MatrixXd Z = detail::orthonormalize(X.transpose() * Q);
        Q = detail::orthonormalize(X * Z);
    }
    Eigen::MatrixXd B = (X.transpose() * Q).transpose(); // k x cols
    Eigen::BDCSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinV);

    const auto dd = static_cast<Eigen::Index>(d);
    SvdResult out;
    out.singular_values = svd.singularValues().head(dd);
    out.basis = svd.matrixV().leftCols(dd);
    for (Eigen::Index j = 0; j < dd; ++j) {
        Eigen::Index arg = 0;
        out.basis.col(j).cwiseAbs().maxCoeff(&arg);
        if (out.basis(arg, j) < 0) out.basis.col(j) *= -1.0;
    }
    return out;
}

inline SvdResult fit_svd(const SparseMatrix& X, std::size_t d, std::uint64_t seed, int oversampling = 10,
                         int power_iterations = 2) {
    return randomized_svd(X, d, seed, oversampling, power_iterations);
}

/// Fitted LSA representation. Immutable once fitted.
class LsaModel {
public:
    LsaModel() = default;
    LsaModel(LsaConfig cfg, Vocabulary vocab, std::vector<double> idf, Eigen::MatrixXd basis,
             Eigen::VectorXd singular_values)
        : cfg_(std::move(cfg)), vocab_(std::move(vocab)), idf_(std::move(idf)), basis_(std::move(basis)),
          singular_values_(std::move(singular_values)) {
        if (idf_.size() != vocab_.size() || static_cast<std::size_t>(basis_.rows()) != vocab_.size() ||
            basis_.cols() != singular_values_.size())
            throw FormatError("inconsistent LSA model dimensions");
    }

    /// `docs` are cleaned texts. Warnings (vocabulary shrink) are appended to `warnings` when given.
    static LsaModel fit(std::span<const std::string> docs, const LsaConfig& cfg,
                        std::vector<std::string>* warnings = nullptr) {
        if (docs.size() < 2) throw StateError("LSA needs at least 2 documents");
        if (cfg.n % 2 != 0 && cfg.use_word_ngrams && cfg.use_char_ngrams)
            throw StateError("n must be even when both n-gram families are used");
        auto vf = fit_vocabulary(docs, cfg);
        if (warnings) warnings->insert(warnings->end(), vf.warnings.begin(), vf.warnings.end());
        SparseMatrix X = tfidf_transform(vf.vocabulary, vf.idf, docs, cfg);
        auto svd = fit_svd(X, cfg.d, cfg.seed, cfg.oversampling, cfg.power_iterations);
        return LsaModel(cfg, std::move(vf.vocabulary), std::move(vf.idf), std::move(svd.basis),
                        std::move(svd.singular_values));
    }

    SparseMatrix tfidf(std::span<const std::string> docs) const { return tfidf_transform(vocab_, idf_, docs, cfg_); }

    Eigen::MatrixXd project(const SparseMatrix& X) const {
        if (static_cast<std::size_t>(X.cols()) != vocab_.size())
            throw StateError("projection expects " + std::to_string(vocab_.size()) + " columns, got " +
                             std::to_string(X.cols()));
        return X * basis_;
    }

    Eigen::MatrixXd project(const Eigen::MatrixXd& X) const {
        if (static_cast<std::size_t>(X.cols()) != vocab_.size())
            throw StateError("projection expects " + std::to_string(vocab_.size()) + " columns, got " +
                             std::to_string(X.cols()));
        return X * basis_;
    }

    /// cleaned docs -> N x d
    Eigen::MatrixXd transform(std::span<const std::string> docs) const { return project(tfidf(docs)); }

    const LsaConfig& config() const { return cfg_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    const std::vector<double>& idf() const { return idf_; }
    const Eigen::MatrixXd& basis() const { return basis_; }
    const Eigen::VectorXd& singular_values() const { return singular_values_; }
    std::size_t dimension() const { return static_cast<std::size_t>(basis_.cols()); }

    void save(const std::filesystem::path& prefix) const {
        io::json m;
        m["format"] = "fakenews-lsa";
        m["version"] = 1;
        m["config"] = {{"n", cfg_.n},
                       {"d", cfg_.d},
                       {"word_ngram_range", {cfg_.word_ngram_range.first, cfg_.word_ngram_range.second}},
                       {"char_ngram_range", {cfg_.char_ngram_range.first, cfg_.char_ngram_range.second}},
                       {"use_word_ngrams", cfg_.use_word_ngrams},
                       {"use_char_ngrams", cfg_.use_char_ngrams},
                       {"oversampling", cfg_.oversampling},
                       {"power_iterations", cfg_.power_iterations}};
        m["seed"] = cfg_.seed;
        m["vocabulary_size"] = vocab_.size();
        m["dimension"] = basis_.cols();
        io::json v = io::json::array();
        for (const auto& e : vocab_.entries()) v.push_back({to_string(e.family), e.gram});
        m["vocabulary"] = std::move(v);

        // basis stored row-major (n rows of d values)
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> basis_rm = basis_;
        io::BlockWriter w;
        w.add<double>("idf", idf_);
        w.add<double>("basis", std::span<const double>(basis_rm.data(), static_cast<std::size_t>(basis_rm.size())));
        w.add<double>("singular_values", std::span<const double>(singular_values_.data(),
                                                                 static_cast<std::size_t>(singular_values_.size())));
        io::save_model_files(prefix, std::move(m), w);
    }

    static LsaModel load(const std::filesystem::path& prefix) {
        auto [m, payload] = io::load_model_files(prefix);
        if (m.value("format", "") != "fakenews-lsa") throw FormatError(prefix.string() + ": not an LSA model");
        try {
            LsaConfig cfg;
            const auto& c = m.at("config");
            cfg.n = c.at("n");
            cfg.d = c.at("d");
            cfg.word_ngram_range = {c.at("word_ngram_range")[0], c.at("word_ngram_range")[1]};
            cfg.char_ngram_range = {c.at("char_ngram_range")[0], c.at("char_ngram_range")[1]};
            cfg.use_word_ngrams = c.at("use_word_ngrams");
            cfg.use_char_ngrams = c.at("use_char_ngrams");
            cfg.oversampling = c.at("oversampling");
            cfg.power_iterations = c.at("power_iterations");
            cfg.seed = m.at("seed");
            std::vector<NgramEntry> entries;
            for (const auto& e : m.at("vocabulary"))
                entries.push_back({e.at(0).get<std::string>() == "w" ? Family::word : Family::chr, e.at(1)});
            const std::size_t n = entries.size();
            const std::size_t d = m.at("dimension");
            auto idf = io::read_block<double>(m, payload, "idf");
            auto basis = io::read_block<double>(m, payload, "basis");
            auto sv = io::read_block<double>(m, payload, "singular_values");
            if (idf.size() != n || basis.size() != n * d || sv.size() != d)
                throw FormatError(prefix.string() + ": block lengths do not match manifest");
            Eigen::MatrixXd B = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                basis.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
            Eigen::VectorXd S = Eigen::Map<Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(d));
            return LsaModel(cfg, Vocabulary(std::move(entries)), std::move(idf), std::move(B), std::move(S));
        } catch (const io::json::exception& e) {
            throw FormatError(prefix.string() + ": " + e.what());
        }
    }

private:
    LsaConfig cfg_;
    Vocabulary vocab_;
    std::vector<double> idf_;
    Eigen::MatrixXd basis_;
    Eigen::VectorXd singular_values_;
};

} // namespace fakenews::lsa
