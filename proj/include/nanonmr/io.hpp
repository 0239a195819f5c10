// SPDX-License-Identifier: Apache-2.0
//
// File formats: the versioned binary trace, CSV tables, key: value reports and run
// manifests.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nanonmr/autocorrelation.hpp"
#include "nanonmr/errors.hpp"

namespace nanonmr {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

// ---------------------------------------------------------------------------
// Binary trace
//
// Layout (all integers and floats little-endian):
//   magic "NNMRTRC1" (8 bytes), u32 version, u32 content, f64 dt, u64 seed,
//   u32 model_tag, u32 reserved, u64 samples_per_slice, u64 group, u64 max_lag,
//   u64 n_values, u32 meta_len, meta bytes, then n_values f64 values.

inline constexpr std::array<char, 8> kTraceMagic = {'N', 'N', 'M', 'R', 'T', 'R', 'C', '1'};
inline constexpr std::uint32_t kTraceVersion = 1;

enum class TraceContent : std::uint32_t {
    PhotonCounts = 1,       ///< one value per readout, slices back to back
    GroupCorrelations = 2,  ///< n_groups x max_lag correlations, lags 1..max_lag
};

struct TraceFile {
    TraceContent content = TraceContent::PhotonCounts;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t model_tag = 0;
    std::uint64_t samples_per_slice = 0;
    std::uint64_t group = 0;
    std::uint64_t max_lag = 0;
    std::string meta;  ///< key=value;key=value description of the run
    std::vector<double> values;

    [[nodiscard]] std::size_t n_groups() const {
        return content == TraceContent::GroupCorrelations && max_lag > 0 ? values.size() / max_lag : 0;
    }
};

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

template <class T>
T get_le(std::string_view in, std::size_t& pos) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    if (pos + sizeof(T) > in.size()) throw DataError("trace: truncated file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bits |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += sizeof(T);
    return std::bit_cast<T>(bits);
}

inline std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline std::string encode_trace(const TraceFile& t) {
    std::string out;
    out.reserve(96 + t.meta.size() + 8 * t.values.size());
    out.append(kTraceMagic.data(), kTraceMagic.size());
    detail::put_le(out, kTraceVersion);
    detail::put_le(out, static_cast<std::uint32_t>(t.content));
    detail::put_le(out, t.dt);
    detail::put_le(out, t.seed);
    detail::put_le(out, t.model_tag);
    detail::put_le(out, std::uint32_t{0});
    detail::put_le(out, t.samples_per_slice);
    detail::put_le(out, t.group);
    detail::put_le(out, t.max_lag);
    detail::put_le(out, static_cast<std::uint64_t>(t.values.size()));
    detail::put_le(out, static_cast<std::uint32_t>(t.meta.size()));
    out.append(t.meta);
    for (double v : t.values) detail::put_le(out, v);
    return out;
}

inline TraceFile decode_trace(std::string_view bytes) {
    if (bytes.size() < kTraceMagic.size() || std::memcmp(bytes.data(), kTraceMagic.data(), kTraceMagic.size()) != 0)
        throw DataError("trace: bad magic");
    std::size_t pos = kTraceMagic.size();
    const auto version = detail::get_le<std::uint32_t>(bytes, pos);
    if (version != kTraceVersion) throw DataError("trace: unsupported version " + std::to_string(version));
    TraceFile t;
    const auto content = detail::get_le<std::uint32_t>(bytes, pos);
    if (content != 1 && content != 2) throw DataError("trace: unknown content type");
    t.content = static_cast<TraceContent>(content);
    t.dt = detail::get_le<double>(bytes, pos);
    t.seed = detail::get_le<std::uint64_t>(bytes, pos);
    t.model_tag = detail::get_le<std::uint32_t>(bytes, pos);
    (void)detail::get_le<std::uint32_t>(bytes, pos);
    t.samples_per_slice = detail::get_le<std::uint64_t>(bytes, pos);
    t.group = detail::get_le<std::uint64_t>(bytes, pos);
    t.max_lag = detail::get_le<std::uint64_t>(bytes, pos);
    const auto n = detail::get_le<std::uint64_t>(bytes, pos);
    const auto meta_len = detail::get_le<std::uint32_t>(bytes, pos);
    if (pos + meta_len > bytes.size()) throw DataError("trace: truncated metadata");
    t.meta.assign(bytes.substr(pos, meta_len));
    pos += meta_len;
    if (bytes.size() - pos != 8 * n) throw DataError("trace: payload size does not match header");
    t.values.resize(n);
    for (auto& v : t.values) v = detail::get_le<double>(bytes, pos);
    if (!(t.dt > 0.0)) throw DataError("trace: non-positive sampling period");
    if (t.content == TraceContent::GroupCorrelations && (t.max_lag == 0 || n % t.max_lag != 0))
        throw DataError("trace: correlation payload is not a whole number of groups");
    return t;
}

inline void write_trace(const std::filesystem::path& path, const TraceFile& t) { detail::write_all(path, encode_trace(t)); }
inline TraceFile read_trace(const std::filesystem::path& path) { return decode_trace(detail::read_all(path)); }

/// Group correlations stored in a trace, with pair counts group * (samples_per_slice - k).
inline std::vector<AutoCorrelation> trace_groups(const TraceFile& t) {
    if (t.content != TraceContent::GroupCorrelations) throw DataError("trace does not hold group correlations");
    std::vector<AutoCorrelation> out(t.n_groups());
    for (std::size_t g = 0; g < out.size(); ++g) {
        auto& ac = out[g];
        ac.dt = t.dt;
        for (std::size_t k = 1; k <= t.max_lag; ++k) {
            ac.lags.push_back(static_cast<double>(k) * t.dt);
            ac.values.push_back(t.values[g * t.max_lag + k - 1]);
            ac.counts.push_back(t.samples_per_slice > k ? t.group * (t.samples_per_slice - k) : 0);
        }
        ac.source_meta = t.meta + ";group_index=" + std::to_string(g);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text formats

/// Shortest decimal that round-trips the double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    for (int p = 6; p < 17; ++p) {
        std::ostringstream t;
        t << std::setprecision(p) << v;
        if (std::stod(t.str()) == v) return t.str();
    }
    return os.str();
}

/// CSV with a header row; fields containing commas, quotes or newlines are quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { add_row(header); }

    void add_row(const std::vector<std::string>& fields) {
        if (fields.size() != columns_) throw DataError("csv: row has wrong number of fields");
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) text_ += ',';
            text_ += quote(fields[i]);
        }
        text_ += '\n';
    }

    void add_row(const std::vector<double>& values) {
        std::vector<std::string> fields;
        fields.reserve(values.size());
        for (double v : values) fields.push_back(format_number(v));
        add_row(fields);
    }

    [[nodiscard]] const std::string& str() const noexcept { return text_; }
    void save(const std::filesystem::path& path) const { detail::write_all(path, text_); }

    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + '"';
    }

private:
    std::size_t columns_;
    std::string text_;
};

/// Parses CSV text written by CsvWriter (RFC 4180 quoting).
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
            any = true;
        }
    }
    if (quoted) throw DataError("csv: unterminated quoted field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Structured text report: `key: value` per line, `schema_version` first.
class Report {
public:
    explicit Report(std::string kind, int schema_version = 1) {
        add("schema_version", std::to_string(schema_version));
        add("report", std::move(kind));
    }

    Report& add(const std::string& key, std::string value) {
        if (key.empty() || key.find(':') != std::string::npos || key.find('\n') != std::string::npos)
            throw DataError("report: invalid key '" + key + "'");
        for (char& c : value)
            if (c == '\n') c = ' ';
        entries_.emplace_back(key, std::move(value));
        return *this;
    }
    Report& add(const std::string& key, double value) { return add(key, format_number(value)); }
    Report& add(const std::string& key, std::size_t value) { return add(key, std::to_string(value)); }
    Report& add(const std::string& key, bool value) { return add(key, std::string(value ? "true" : "false")); }
    Report& add(const std::string& key, const char* value) { return add(key, std::string(value)); }

    [[nodiscard]] std::string str() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + ": " + v + "\n";
        return out;
    }
    void save(const std::filesystem::path& path) const { detail::write_all(path, str()); }
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Parses `key: value` lines.
inline std::vector<std::pair<std::string, std::string>> parse_report(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos) throw DataError("report: malformed line '" + line + "'");
        out.emplace_back(line.substr(0, colon), line.substr(colon + 2));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string content_hash(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline std::string file_hash(const std::filesystem::path& path) { return content_hash(detail::read_all(path)); }

struct RunManifest {
    std::string command;
    std::string preset_hash;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string started_utc, finished_utc;
    std::vector<std::pair<std::string, std::string>> outputs;  ///< file name, content hash

    void add_output(const std::filesystem::path& path) { outputs.emplace_back(path.filename().string(), file_hash(path)); }

    [[nodiscard]] Report report() const {
        Report r("manifest");
        r.add("command", command).add("preset_hash", preset_hash).add("seed", std::to_string(seed));
        r.add("tool_version", tool_version).add("started_utc", started_utc).add("finished_utc", finished_utc);
        r.add("n_outputs", outputs.size());
        for (std::size_t i = 0; i < outputs.size(); ++i)
            r.add("output_" + std::to_string(i), outputs[i].first + " " + outputs[i].second);
        return r;
    }
};

}  // namespace nanonmr
