#pragma once

// Test-only oracles and fixtures. Nothing here calls into the code paths it
// is used to check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fakenews/corpus.hpp"

namespace fakenews::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "fakenews") {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Singular values by one-sided (Hestenes) Jacobi rotations on the columns
/// of A, sorted descending. Independent of Eigen's decompositions.
inline std::vector<double> jacobi_singular_values(Eigen::MatrixXd A) {
    if (A.cols() > A.rows()) A.transposeInPlace();
    const Eigen::Index n = A.cols();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (Eigen::Index i = 0; i < A.rows(); ++i) {
                    alpha += A(i, p) * A(i, p);
                    beta += A(i, q) * A(i, q);
                    gamma += A(i, p) * A(i, q);
                }
                if (gamma == 0.0) continue;
                off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
                const double zeta = (beta - alpha) / (2 * gamma);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1 + zeta * zeta));
                const double c = 1 / std::sqrt(1 + t * t), s = c * t;
                for (Eigen::Index i = 0; i < A.rows(); ++i) {
                    const double ap = A(i, p), aq = A(i, q);
                    A(i, p) = c * ap - s * aq;
                    A(i, q) = s * ap + c * aq;
                }
            }
        }
        if (off < 1e-15) break;
    }
    std::vector<double> sv(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        double s = 0;
        for (Eigen::Index i = 0; i < A.rows(); ++i) s += A(i, j) * A(i, j);
        sv[static_cast<std::size_t>(j)] = std::sqrt(s);
    }
    std::sort(sv.rbegin(), sv.rend());
    return sv;
}

/// F1 straight from the definition: count TP/FP/FN for `positive`, then 2PR/(P+R).
inline double brute_force_f1(const std::vector<Label>& truth, const std::vector<Label>& pred, Label positive) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (pred[i] == positive && truth[i] == positive) ++tp;
        if (pred[i] == positive && truth[i] != positive) ++fp;
        if (pred[i] != positive && truth[i] == positive) ++fn;
    }
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

inline std::vector<Label> random_labels(std::mt19937_64& rng, std::size_t n) {
    std::bernoulli_distribution b(0.5);
    std::vector<Label> out(n);
    for (auto& l : out) l = b(rng) ? Label::real : Label::fake;
    return out;
}

/// Labeled dataset of n records, `real_fraction` of them real, ids "r0".."r{n-1}".
inline Dataset synthetic_dataset(std::size_t n, double real_fraction = 0.52, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.split_name = SplitName::merged;
    const auto n_real = static_cast<std::size_t>(std::llround(static_cast<double>(n) * real_fraction));
    std::vector<Label> labels(n, Label::fake);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_real), Label::real);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < n; ++i) ds.records.push_back({"r" + std::to_string(i), "post " + std::to_string(i), labels[i]});
    return ds;
}

/// Short social-media style posts drawn from class-specific vocabularies
/// with a shared background vocabulary. Half real, half fake (rounded).
inline Dataset synthetic_posts(std::size_t n, std::uint64_t seed = 7) {
    static const std::vector<std::string> real_words{
        "cases", "deaths", "tests", "confirmed", "reported", "total", "number", "new", "states", "recovered",
        "hospital", "testing", "ministry", "health", "daily", "update", "samples", "icu", "active", "discharged"};
    static const std::vector<std::string> fake_words{
        "cure", "video", "vaccine", "trump", "president", "miracle", "hoax", "secret", "garlic", "5g",
        "conspiracy", "shocking", "claims", "viral", "bill", "gates", "poison", "lockdown", "fake", "truth"};
    static const std::vector<std::string> shared{
        "covid", "coronavirus", "19", "people", "the", "is", "of", "in", "today", "says",
        "and", "to", "a", "on", "pandemic", "india", "us", "world", "via", "https"};
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.split_name = SplitName::derived;
    std::uniform_int_distribution<std::size_t> len(6, 18), pick(0, 19);
    std::bernoulli_distribution from_class(0.45), capital(0.2), hashtag(0.1), punct(0.15);
    for (std::size_t i = 0; i < n; ++i) {
        const Label label = i % 2 == 0 ? Label::real : Label::fake;
        const auto& own = label == Label::real ? real_words : fake_words;
        std::string text;
        const auto words = len(rng);
        for (std::size_t w = 0; w < words; ++w) {
            std::string word = from_class(rng) ? own[pick(rng)] : shared[pick(rng)];
            if (capital(rng)) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
            if (hashtag(rng)) word = "#" + word;
            if (punct(rng)) word += label == Label::fake ? "!" : ".";
            if (!text.empty()) text += ' ';
            text += word;
        }
        ds.records.push_back({std::to_string(i + 1), text, label});
    }
    return ds;
}

/// Rows drawn from N(+shift, 1) for real and N(-shift, 1) for fake in every coordinate.
inline Eigen::MatrixXd gaussian_blobs(const std::vector<Label>& labels, Eigen::Index dim, double shift,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(labels.size()), dim);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double mu = labels[static_cast<std::size_t>(i)] == Label::real ? shift : -shift;
        for (Eigen::Index j = 0; j < dim; ++j) X(i, j) = mu + g(rng);
    }
    return X;
}

} // namespace fakenews::test
