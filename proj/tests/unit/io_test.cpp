// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "nanonmr/io.hpp"

using namespace nanonmr;

namespace {

TraceFile sample_trace() {
    TraceFile t;
    t.content = TraceContent::GroupCorrelations;
    t.dt = 49.74e-6;
    t.seed = 0x1234567890abcdefull;
    t.model_tag = 2;
    t.samples_per_slice = 1000;
    t.group = 20;
    t.max_lag = 3;
    t.meta = "preset=qdyne-1;model=powerlaw";
    t.values = {1.5e-6, -2.25e-7, std::numeric_limits<double>::denorm_min(), 0.1, 0.2, -0.0};
    return t;
}

}  // namespace

TEST(Trace, RoundTripIsExact) {
    const auto t = sample_trace();
    const auto bytes = encode_trace(t);
    EXPECT_EQ(bytes.substr(0, 8), "NNMRTRC1");
    const auto u = decode_trace(bytes);
    EXPECT_EQ(u.content, t.content);
    EXPECT_EQ(u.dt, t.dt);
    EXPECT_EQ(u.seed, t.seed);
    EXPECT_EQ(u.model_tag, t.model_tag);
    EXPECT_EQ(u.samples_per_slice, t.samples_per_slice);
    EXPECT_EQ(u.group, t.group);
    EXPECT_EQ(u.max_lag, t.max_lag);
    EXPECT_EQ(u.meta, t.meta);
    EXPECT_EQ(encode_trace(u), bytes);
    EXPECT_EQ(u.n_groups(), 2u);
}

TEST(Trace, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "nanonmr_io_test.bin";
    write_trace(path, sample_trace());
    EXPECT_EQ(read_trace(path).values, sample_trace().values);
    std::filesystem::remove(path);
    EXPECT_THROW((void)read_trace(path), DataError);
}

TEST(Trace, RejectsCorruption) {
    auto bytes = encode_trace(sample_trace());
    EXPECT_THROW((void)decode_trace(bytes.substr(0, bytes.size() - 1)), DataError);
    EXPECT_THROW((void)decode_trace(bytes.substr(0, 10)), DataError);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW((void)decode_trace(bad_magic), DataError);
    auto bad_version = bytes;
    bad_version[8] = 7;
    EXPECT_THROW((void)decode_trace(bad_version), DataError);
}

TEST(Trace, GroupsCarryLagsAndCounts) {
    const auto groups = trace_groups(sample_trace());
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_DOUBLE_EQ(groups[1].lags[2], 3 * 49.74e-6);
    EXPECT_EQ(groups[1].values[0], 0.1);
    EXPECT_EQ(groups[0].counts[1], 20u * 998u);
    auto photon = sample_trace();
    photon.content = TraceContent::PhotonCounts;
    EXPECT_THROW((void)trace_groups(photon), DataError);
}

TEST(Csv, QuotingRoundTrips) {
    CsvWriter w({"name", "value"});
    w.add_row(std::vector<std::string>{"plain", "1"});
    w.add_row(std::vector<std::string>{"comma, inside", "say \"hi\""});
    w.add_row(std::vector<double>{0.1, 1e-300});
    const auto rows = parse_csv(w.str());
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[2][0], "comma, inside");
    EXPECT_EQ(rows[2][1], "say \"hi\"");
    EXPECT_EQ(std::stod(rows[3][0]), 0.1);
    EXPECT_EQ(std::stod(rows[3][1]), 1e-300);
    EXPECT_THROW(w.add_row(std::vector<double>{1.0}), DataError);
}

TEST(FormatNumber, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(400e-6), "0.0004");
    for (double v : {1.0 / 3.0, 2.0 * 3.141592653589793, 6.02214076e23, -1.1e-17})
        EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Report, SchemaVersionComesFirst) {
    Report r("analysis");
    r.add("rmse_hz", 12.5).add("groups", std::size_t{18}).add("converged", true);
    const auto entries = parse_report(r.str());
    ASSERT_EQ(entries.size(), 5u);
    EXPECT_EQ(entries[0], std::make_pair(std::string("schema_version"), std::string("1")));
    EXPECT_EQ(entries[1].second, "analysis");
    EXPECT_EQ(entries[2].second, "12.5");
    EXPECT_EQ(entries[4].second, "true");
    EXPECT_THROW((void)parse_report("no separator\n"), DataError);
}

TEST(Hash, KnownFnvValues) {
    EXPECT_EQ(content_hash(""), "cbf29ce484222325");
    EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
    EXPECT_NE(content_hash("nanonmr"), content_hash("nanonmR"));
}

TEST(Manifest, ListsOutputsWithHashes) {
    const auto dir = std::filesystem::temp_directory_path() / "nanonmr_manifest_test";
    std::filesystem::create_directories(dir);
    Report("x").save(dir / "x.txt");
    RunManifest m;
    m.command = "spectrum";
    m.seed = 3;
    m.add_output(dir / "x.txt");
    const auto entries = parse_report(m.report().str());
    EXPECT_EQ(entries.back().second, "x.txt " + content_hash(Report("x").str()));
    std::filesystem::remove_all(dir);
    EXPECT_THROW(Report("x").save(dir / "missing" / "x.txt"), ConfigError);
}
