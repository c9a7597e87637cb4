#pragma once

// Labeled post datasets: loading from TSV/CSV, validation, label statistics
// and concatenation of splits.

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fakenews/detail/utf8.hpp"
#include "fakenews/error.hpp"
#include "fakenews/io.hpp"

namespace fakenews {

/// Class labels. The numeric values double as output-slot indices of the
/// stacking network and as the {0,1} encoding of label meta-features.
enum class Label : int { fake = 0, real = 1 };

inline std::string_view to_string(Label l) { return l == Label::real ? "real" : "fake"; }

inline std::optional<Label> parse_label(std::string_view s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "real") return Label::real;
    if (lower == "fake") return Label::fake;
    return std::nullopt;
}

struct Record {
    std::string id;
    std::string text;
    std::optional<Label> label;

    friend bool operator==(const Record&, const Record&) = default;
};

enum class SplitName { train, validation, test, merged, derived };

inline std::string_view to_string(SplitName s) {
    switch (s) {
    case SplitName::train: return "train";
    case SplitName::validation: return "validation";
    case SplitName::test: return "test";
    case SplitName::merged: return "merged";
    case SplitName::derived: return "derived";
    }
    return "derived";
}

inline SplitName parse_split_name(std::string_view s) {
    if (s == "train") return SplitName::train;
    if (s == "validation" || s == "val") return SplitName::validation;
    if (s == "test") return SplitName::test;
    if (s == "merged") return SplitName::merged;
    return SplitName::derived;
}

enum class CorpusFormat { tsv, csv };

struct Dataset {
    std::vector<Record> records;
    SplitName split_name = SplitName::derived;
    /// Free-form notes on where the records came from (source path, synthesized ids, ...).
    std::vector<std::string> provenance;
    /// Non-fatal validation findings, e.g. empty post text.
    std::vector<std::string> warnings;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    bool labeled() const {
        return !records.empty() && std::all_of(records.begin(), records.end(),
                                               [](const Record& r) { return r.label.has_value(); });
    }

    std::vector<Label> labels() const {
        std::vector<Label> out;
        out.reserve(records.size());
        for (const auto& r : records) {
            if (!r.label) throw StateError("record '" + r.id + "' has no label");
            out.push_back(*r.label);
        }
        return out;
    }

    std::vector<std::string> texts() const {
        std::vector<std::string> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.text);
        return out;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.id);
        return out;
    }

    /// Subset in the order of `indices`; split_name becomes `derived` unless given.
    Dataset subset(std::span<const std::size_t> indices, SplitName name = SplitName::derived) const {
        Dataset out;
        out.split_name = name;
        out.provenance = provenance;
        out.records.reserve(indices.size());
        for (auto i : indices) out.records.push_back(records.at(i));
        return out;
    }
};

namespace detail {

/// Delimited-text reader with RFC-4180 quoting: a field starting with '"'
/// runs to the matching quote, '""' escapes a quote, and quoted fields may
/// span lines. Used for both TSV and CSV with different delimiters.
struct DelimitedRow {
    std::vector<std::string> fields;
    std::size_t line = 0; // 1-based line where the row starts
};

inline std::vector<DelimitedRow> parse_delimited(std::string_view text, char delim) {
    std::vector<DelimitedRow> rows;
    DelimitedRow row;
    std::string field;
    std::size_t line = 1;
    row.line = 1;
    bool in_quotes = false, field_started = false, was_quoted = false;
    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
        was_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        // skip fully blank lines
        if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(std::move(row));
        row = DelimitedRow{};
        row.line = line;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
            was_quoted = true;
        } else if (c == delim) {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            ++line;
            end_row();
        } else {
            field_started = true;
            field.push_back(c);
        }
    }
    if (in_quotes) throw FormatError("unterminated quoted field starting on line " + std::to_string(row.line));
    if (field_started || !field.empty() || !row.fields.empty() || was_quoted) end_row();
    return rows;
}

inline bool needs_quoting(std::string_view s, char delim) {
    return s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string_view::npos ||
           (!s.empty() && s.front() == '"');
}

inline void append_field(std::string& out, std::string_view s, char delim) {
    if (!needs_quoting(s, delim)) {
        out.append(s);
        return;
    }
    out.push_back('"');
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

inline std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline char delimiter_for(CorpusFormat f) { return f == CorpusFormat::csv ? ',' : '\t'; }

} // namespace detail

inline CorpusFormat format_from_path(const std::filesystem::path& path) {
    return detail::lower_ascii(path.extension().string()) == ".csv" ? CorpusFormat::csv : CorpusFormat::tsv;
}

/// Parses corpus text. Required header column: `tweet`; optional: `id`, `label`.
/// Missing ids are synthesized as 1..N and noted in the provenance.
inline Dataset parse_corpus(std::string_view content, CorpusFormat format, SplitName split = SplitName::derived) {
    // strip UTF-8 BOM
    if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);
    auto rows = detail::parse_delimited(content, detail::delimiter_for(format));
    if (rows.empty()) throw FormatError("missing header row");

    const auto& header = rows.front().fields;
    std::optional<std::size_t> id_col, text_col, label_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto name = detail::lower_ascii(header[i]);
        if (name == "id") id_col = i;
        else if (name == "tweet") text_col = i;
        else if (name == "label") label_col = i;
    }
    if (!text_col) throw FormatError("missing required column 'tweet'");

    Dataset ds;
    ds.split_name = split;
    if (!id_col) ds.provenance.push_back("ids synthesized sequentially from 1 (no id column)");

    std::unordered_set<std::string> seen;
    std::size_t n_labeled = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "row " + std::to_string(r) + " (line " + std::to_string(row.line) + ")";
        if (row.fields.size() != header.size())
            throw FormatError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(row.fields.size()));
        for (const auto& f : row.fields)
            if (!detail::decode_utf8(f)) throw FormatError(where + ": invalid UTF-8");

        Record rec;
        rec.id = id_col ? row.fields[*id_col] : std::to_string(r);
        rec.text = row.fields[*text_col];
        if (label_col && !row.fields[*label_col].empty()) {
            auto l = parse_label(row.fields[*label_col]);
            if (!l) throw ValidationError(where + ": unknown label '" + row.fields[*label_col] + "'");
            rec.label = l;
            ++n_labeled;
        }
        if (rec.id.empty()) throw ValidationError(where + ": empty id");
        if (!seen.insert(rec.id).second) throw ValidationError("duplicate id '" + rec.id + "' at " + where);
        if (rec.text.empty()) ds.warnings.push_back("record '" + rec.id + "' has empty text");
        ds.records.push_back(std::move(rec));
    }
    if (n_labeled != 0 && n_labeled != ds.records.size())
        throw ValidationError("mixed labeled and unlabeled records (" + std::to_string(n_labeled) + " of " +
                              std::to_string(ds.records.size()) + " labeled)");
    return ds;
}

inline Dataset load_corpus(const std::filesystem::path& path, CorpusFormat format,
                           SplitName split = SplitName::derived) {
    if (!std::filesystem::exists(path)) throw Error("corpus file not found: " + path.string());
    Dataset ds = parse_corpus(io::read_file(path), format, split);
    ds.provenance.insert(ds.provenance.begin(), "loaded from " + path.string());
    return ds;
}

inline Dataset load_corpus(const std::filesystem::path& path) { return load_corpus(path, format_from_path(path)); }

/// Serializes with a header (id, tweet[, label]). Labels are written when every record has one.
inline std::string serialize_corpus(const Dataset& ds, CorpusFormat format) {
    const char d = detail::delimiter_for(format);
    const bool with_labels = ds.labeled();
    std::string out = std::string("id") + d + "tweet" + (with_labels ? std::string(1, d) + "label" : "") + "\n";
    for (const auto& r : ds.records) {
        detail::append_field(out, r.id, d);
        out.push_back(d);
        detail::append_field(out, r.text, d);
        if (with_labels) {
            out.push_back(d);
            out.append(to_string(*r.label));
        }
        out.push_back('\n');
    }
    return out;
}

inline void write_corpus(const Dataset& ds, const std::filesystem::path& path, CorpusFormat format) {
    io::write_file_atomic(path, serialize_corpus(ds, format));
}

struct LabelDistribution {
    std::size_t real = 0;
    std::size_t fake = 0;

    std::size_t total() const { return real + fake; }
    double real_fraction() const { return total() ? static_cast<double>(real) / static_cast<double>(total()) : 0.0; }
    double fake_fraction() const { return total() ? static_cast<double>(fake) / static_cast<double>(total()) : 0.0; }
};

inline LabelDistribution label_distribution(const Dataset& ds) {
    if (!ds.labeled()) throw StateError("label distribution requires a labeled dataset");
    LabelDistribution d;
    for (const auto& r : ds.records) (*r.label == Label::real ? d.real : d.fake)++;
    return d;
}

/// Records of `a` followed by records of `b`. Id sets must be disjoint.
inline Dataset merge(const Dataset& a, const Dataset& b) {
    std::unordered_set<std::string_view> ids;
    for (const auto& r : a.records) ids.insert(r.id);
    for (const auto& r : b.records)
        if (ids.contains(r.id)) throw ValidationError("cannot merge: id '" + r.id + "' present in both datasets");
    if (!a.empty() && !b.empty() && a.labeled() != b.labeled())
        throw ValidationError("cannot merge labeled with unlabeled dataset");
    Dataset out;
    out.split_name = SplitName::merged;
    out.records = a.records;
    out.records.insert(out.records.end(), b.records.begin(), b.records.end());
    out.provenance = a.provenance;
    out.provenance.insert(out.provenance.end(), b.provenance.begin(), b.provenance.end());
    out.warnings = a.warnings;
    out.warnings.insert(out.warnings.end(), b.warnings.begin(), b.warnings.end());
    return out;
}

} // namespace fakenews
