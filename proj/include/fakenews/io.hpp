#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "fakenews/error.hpp"

namespace fakenews::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a partially written file.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& doc) {
    write_file_atomic(path, doc.dump(2) + "\n");
}

// Little-endian scalar blocks. Host byte order is swapped when needed.

template <typename T>
void append_le(std::string& out, std::span<const T> values) {
    static_assert(std::is_arithmetic_v<T>);
    const std::size_t start = out.size();
    out.resize(start + values.size_bytes());
    std::memcpy(out.data() + start, values.data(), values.size_bytes());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (std::size_t i = start; i < out.size(); i += sizeof(T))
            std::reverse(out.begin() + static_cast<std::ptrdiff_t>(i),
                         out.begin() + static_cast<std::ptrdiff_t>(i + sizeof(T)));
    }
}

template <typename T>
std::vector<T> parse_le(std::string_view bytes, std::size_t offset, std::size_t count) {
    if (offset + count * sizeof(T) > bytes.size())
        throw FormatError("binary block truncated: need " + std::to_string(offset + count * sizeof(T)) +
                          " bytes, have " + std::to_string(bytes.size()));
    std::vector<T> out(count);
    std::string_view slice = bytes.substr(offset, count * sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        std::string swapped(slice);
        for (std::size_t i = 0; i < swapped.size(); i += sizeof(T))
            std::reverse(swapped.begin() + static_cast<std::ptrdiff_t>(i),
                         swapped.begin() + static_cast<std::ptrdiff_t>(i + sizeof(T)));
        std::memcpy(out.data(), swapped.data(), swapped.size());
    } else {
        std::memcpy(out.data(), slice.data(), slice.size());
    }
    return out;
}

/// Helper for "manifest + one binary block" model files. Blocks are appended
/// in order and their offsets/lengths recorded under manifest["blocks"].
class BlockWriter {
public:
    template <typename T>
    void add(const std::string& name, std::span<const T> values) {
        blocks_[name] = {{"offset", payload_.size()}, {"length", values.size()}};
        append_le(payload_, values);
    }
    const json& blocks() const { return blocks_; }
    const std::string& payload() const { return payload_; }

private:
    json blocks_ = json::object();
    std::string payload_;
};

template <typename T>
std::vector<T> read_block(const json& manifest, std::string_view payload, const std::string& name) {
    if (!manifest.contains("blocks") || !manifest["blocks"].contains(name))
        throw FormatError("manifest has no block '" + name + "'");
    const auto& b = manifest["blocks"][name];
    return parse_le<T>(payload, b.at("offset").get<std::size_t>(), b.at("length").get<std::size_t>());
}

/// Model files: "<prefix>.json" manifest and "<prefix>.bin" payload.
inline fs::path manifest_path(const fs::path& prefix) { return fs::path(prefix.string() + ".json"); }
inline fs::path payload_path(const fs::path& prefix) { return fs::path(prefix.string() + ".bin"); }

inline void save_model_files(const fs::path& prefix, json manifest, const BlockWriter& blocks) {
    manifest["blocks"] = blocks.blocks();
    manifest["payload_bytes"] = blocks.payload().size();
    write_file_atomic(payload_path(prefix), blocks.payload());
    write_json(manifest_path(prefix), manifest);
}

inline std::pair<json, std::string> load_model_files(const fs::path& prefix) {
    json manifest = read_json(manifest_path(prefix));
    std::string payload = read_file(payload_path(prefix));
    if (manifest.contains("payload_bytes") && manifest["payload_bytes"].get<std::size_t>() != payload.size())
        throw FormatError(payload_path(prefix).string() + ": payload size does not match manifest");
    return {std::move(manifest), std::move(payload)};
}

} // namespace fakenews::io
