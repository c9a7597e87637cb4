#pragma once

// Externally produced dense vectors (sentence embeddings, prediction columns).
//
// On disk a set is three files sharing a prefix:
//   <prefix>.manifest.json  {"model_id", "dim", "count", "dtype": "f32"|"f64", "preprocessing_id", ...}
//   <prefix>.ids.txt        one id per line, in row order
//   <prefix>.bin            count*dim little-endian floats, row-major, no header

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <openssl/evp.h>

#include "fakenews/corpus.hpp"
#include "fakenews/error.hpp"
#include "fakenews/io.hpp"

namespace fakenews::embeddings {

namespace fs = std::filesystem;

enum class DType { f32, f64 };

inline std::string_view to_string(DType t) { return t == DType::f32 ? "f32" : "f64"; }

struct EmbeddingManifest {
    std::string model_id;
    std::size_t dim = 0;
    std::size_t count = 0;
    DType dtype = DType::f32;
    std::string preprocessing_id;
    /// Fields this reader does not interpret (e.g. resolved checkpoint) are kept verbatim.
    io::json extra = io::json::object();

    friend bool operator==(const EmbeddingManifest&, const EmbeddingManifest&) = default;
};

struct Paths {
    fs::path manifest, ids, payload;
};

/// Accepts either the bare prefix or any of the three file names.
inline Paths paths_for(const fs::path& path) {
    std::string p = path.string();
    for (std::string_view suffix : {".manifest.json", ".ids.txt", ".bin"}) {
        if (p.size() > suffix.size() && p.compare(p.size() - suffix.size(), suffix.size(), suffix) == 0) {
            p.resize(p.size() - suffix.size());
            break;
        }
    }
    return {p + ".manifest.json", p + ".ids.txt", p + ".bin"};
}

class EmbeddingSet {
public:
    using Storage = std::variant<std::vector<float>, std::vector<double>>;

    EmbeddingSet() = default;

    /// Validates every invariant: sizes, unique ids, finite values.
    EmbeddingSet(EmbeddingManifest manifest, std::vector<std::string> ids, Storage data)
        : manifest_(std::move(manifest)), ids_(std::move(ids)), data_(std::move(data)) {
        const bool is_f32 = std::holds_alternative<std::vector<float>>(data_);
        if (is_f32 != (manifest_.dtype == DType::f32)) throw FormatError("payload type does not match manifest dtype");
        if (manifest_.dim == 0) throw FormatError("manifest dim must be positive");
        if (ids_.size() != manifest_.count)
            throw FormatError("manifest count " + std::to_string(manifest_.count) + " but " +
                              std::to_string(ids_.size()) + " ids");
        const std::size_t values = std::visit([](const auto& v) { return v.size(); }, data_);
        if (values != manifest_.count * manifest_.dim)
            throw FormatError("payload holds " + std::to_string(values) + " values, manifest declares " +
                              std::to_string(manifest_.count) + " x " + std::to_string(manifest_.dim));
        std::unordered_set<std::string_view> seen;
        for (const auto& id : ids_) {
            if (id.empty() || id.find('\n') != std::string::npos) throw FormatError("invalid id '" + id + "'");
            if (!seen.insert(id).second) throw ValidationError("duplicate embedding id '" + id + "'");
        }
        std::visit(
            [&](const auto& v) {
                for (std::size_t i = 0; i < v.size(); ++i)
                    if (!std::isfinite(v[i]))
                        throw DataError("non-finite value in vector for id '" + ids_[i / manifest_.dim] + "'");
            },
            data_);
        for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
    }

    /// Convenience for f64 sets built in memory.
    static EmbeddingSet from_matrix(std::string model_id, std::vector<std::string> ids, const Eigen::MatrixXd& m,
                                    DType dtype = DType::f64, std::string preprocessing_id = "") {
        EmbeddingManifest man{std::move(model_id), static_cast<std::size_t>(m.cols()),
                              static_cast<std::size_t>(m.rows()), dtype, std::move(preprocessing_id), io::json::object()};
        if (m.cols() == 0) man.dim = 0;
        Storage st;
        if (dtype == DType::f64) {
            std::vector<double> v(static_cast<std::size_t>(m.size()));
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
            st = std::move(v);
        } else {
            std::vector<float> v(static_cast<std::size_t>(m.size()));
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                    v[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
            st = std::move(v);
        }
        return EmbeddingSet(std::move(man), std::move(ids), std::move(st));
    }

    const EmbeddingManifest& manifest() const { return manifest_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const Storage& data() const { return data_; }
    std::size_t count() const { return manifest_.count; }
    std::size_t dim() const { return manifest_.dim; }

    double value(std::size_t row, std::size_t col) const {
        return std::visit([&](const auto& v) { return static_cast<double>(v[row * manifest_.dim + col]); }, data_);
    }

    /// Row index of `id`, or -1.
    std::ptrdiff_t find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }

    /// count x dim, widened to double.
    Eigen::MatrixXd matrix() const {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(count()), static_cast<Eigen::Index>(dim()));
        for (std::size_t r = 0; r < count(); ++r)
            for (std::size_t c = 0; c < dim(); ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = value(r, c);
        return m;
    }

    friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
        return a.manifest_ == b.manifest_ && a.ids_ == b.ids_ && a.data_ == b.data_;
    }

private:
    EmbeddingManifest manifest_;
    std::vector<std::string> ids_;
    Storage data_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline io::json manifest_to_json(const EmbeddingManifest& m) {
    io::json j = m.extra;
    j["model_id"] = m.model_id;
    j["dim"] = m.dim;
    j["count"] = m.count;
    j["dtype"] = to_string(m.dtype);
    j["preprocessing_id"] = m.preprocessing_id;
    j["byte_order"] = "little";
    j["layout"] = "row-major";
    return j;
}

inline EmbeddingManifest manifest_from_json(const io::json& j) {
    try {
        EmbeddingManifest m;
        m.model_id = j.at("model_id");
        m.dim = j.at("dim");
        m.count = j.at("count");
        const std::string dt = j.at("dtype");
        if (dt == "f32") m.dtype = DType::f32;
        else if (dt == "f64") m.dtype = DType::f64;
        else throw FormatError("unsupported dtype '" + dt + "'");
        m.preprocessing_id = j.value("preprocessing_id", "");
        if (j.contains("byte_order") && j["byte_order"] != "little") throw FormatError("payload must be little-endian");
        if (j.contains("layout") && j["layout"] != "row-major") throw FormatError("payload must be row-major");
        for (const auto& [k, v] : j.items())
            if (k != "model_id" && k != "dim" && k != "count" && k != "dtype" && k != "preprocessing_id" &&
                k != "byte_order" && k != "layout")
                m.extra[k] = v;
        return m;
    } catch (const io::json::exception& e) {
        throw FormatError(std::string("embedding manifest: ") + e.what());
    }
}

inline EmbeddingSet read_embeddings(const fs::path& path) {
    const Paths p = paths_for(path);
    EmbeddingManifest m = manifest_from_json(io::read_json(p.manifest));

    std::vector<std::string> ids;
    {
        std::string text = io::read_file(p.ids);
        std::size_t start = 0;
        while (start < text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            std::string id = text.substr(start, end - start);
            if (!id.empty() && id.back() == '\r') id.pop_back();
            ids.push_back(std::move(id));
            start = end + 1;
        }
    }

    const std::string payload = io::read_file(p.payload);
    const std::size_t width = m.dtype == DType::f32 ? 4 : 8;
    if (m.dim == 0) throw FormatError(p.manifest.string() + ": dim must be positive");
    if (payload.size() != m.count * m.dim * width)
        throw FormatError(p.payload.string() + ": " + std::to_string(payload.size()) + " bytes, expected " +
                          std::to_string(m.count) + " x " + std::to_string(m.dim) + " x " + std::to_string(width));
    if (ids.size() != m.count)
        throw FormatError(p.ids.string() + ": " + std::to_string(ids.size()) + " ids, manifest count " +
                          std::to_string(m.count));
    EmbeddingSet::Storage data;
    if (m.dtype == DType::f32) data = io::parse_le<float>(payload, 0, m.count * m.dim);
    else data = io::parse_le<double>(payload, 0, m.count * m.dim);
    return EmbeddingSet(std::move(m), std::move(ids), std::move(data));
}

inline void write_embeddings(const EmbeddingSet& set, const fs::path& path) {
    const Paths p = paths_for(path);
    std::string payload;
    std::visit([&](const auto& v) { io::append_le(payload, std::span(v)); }, set.data());
    std::string ids;
    for (const auto& id : set.ids()) ids += id + "\n";
    io::write_file_atomic(p.payload, payload);
    io::write_file_atomic(p.ids, ids);
    io::write_json(p.manifest, manifest_to_json(set.manifest()));
}

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

/// Checksum of the payload file as stored on disk.
inline std::string payload_checksum(const fs::path& path) { return sha256_hex(io::read_file(paths_for(path).payload)); }

/// Rows reordered to dataset order. Missing ids are reported (first 10).
inline Eigen::MatrixXd align(const EmbeddingSet& set, const Dataset& ds) {
    std::vector<std::string> missing;
    std::size_t n_missing = 0;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(set.dim()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = set.find(ds.records[i].id);
        if (row < 0) {
            if (missing.size() < 10) missing.push_back(ds.records[i].id);
            ++n_missing;
            continue;
        }
        for (std::size_t c = 0; c < set.dim(); ++c)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = set.value(static_cast<std::size_t>(row), c);
    }
    if (n_missing) {
        std::string msg = std::to_string(n_missing) + " dataset id(s) missing from embedding set '" +
                          set.manifest().model_id + "':";
        for (const auto& id : missing) msg += " " + id;
        if (n_missing > missing.size()) msg += " ...";
        throw ValidationError(msg);
    }
    return out;
}

} // namespace fakenews::embeddings
