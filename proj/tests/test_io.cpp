// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <sstream>

#include "chcomp/io.hpp"

using namespace chcomp;
using nlohmann::json;

namespace
{

NmseRecord sample_record()
{
    NmseRecord r;
    r.snr_db = 12.5;
    r.method = Method::AirComp;
    r.function = "weighted-sum:1,2";
    r.num_nodes = 2;
    r.levels = 4;
    r.trials = 1000;
    r.seed = 18446744073709551615ull;
    r.bandwidth_uses = 1;
    r.nmse = 0.1 + 0.2; // not exactly representable in short form
    return r;
}

std::string error_of(const json &j)
{
    try {
        io::config_from_json(j);
    } catch (const InvalidArgument &e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Io, CsvRoundTripIsExact)
{
    std::vector<NmseRecord> recs{sample_record(), sample_record()};
    recs[1].method = Method::Ofdma;
    recs[1].function = "sum";
    recs[1].nmse = 1e-300;
    std::stringstream ss;
    io::write_csv(ss, recs);
    const auto text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), io::kCsvHeader);
    const auto back = io::read_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back[i].snr_db, recs[i].snr_db);
        EXPECT_EQ(back[i].method, recs[i].method);
        EXPECT_EQ(back[i].function, recs[i].function);
        EXPECT_EQ(back[i].seed, recs[i].seed);
        EXPECT_EQ(back[i].nmse, recs[i].nmse);
    }
}

TEST(Io, CsvQuoting)
{
    EXPECT_EQ(io::csv_field("sum"), "sum");
    EXPECT_EQ(io::csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(io::csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    EXPECT_EQ(io::split_csv_line("1,\"a,b\",\"q\"\"\",x"), (std::vector<std::string>{"1", "a,b", "q\"", "x"}));
}

TEST(Io, CsvReaderIsStrict)
{
    std::istringstream bad_header("snr,method\n");
    EXPECT_THROW(io::read_csv(bad_header), InvalidArgument);
    std::istringstream empty("");
    EXPECT_THROW(io::read_csv(empty), InvalidArgument);
    std::istringstream short_row(std::string(io::kCsvHeader) + "\n1,aircomp,sum\n");
    EXPECT_THROW(io::read_csv(short_row), InvalidArgument);
    std::istringstream bad_method(std::string(io::kCsvHeader) + "\n1,tdma,sum,2,2,1,0,1,0.5\n");
    EXPECT_THROW(io::read_csv(bad_method), InvalidArgument);
    std::istringstream negative(std::string(io::kCsvHeader) + "\n1,aircomp,sum,2,2,1,0,1,-0.5\n");
    EXPECT_THROW(io::read_csv(negative), InvalidArgument);
    std::istringstream crlf(std::string(io::kCsvHeader) + "\r\n1,aircomp,sum,2,2,1,0,1,0.5\r\n");
    EXPECT_EQ(io::read_csv(crlf).size(), 1u);
}

TEST(Io, ConfigParsesAllFields)
{
    const json j = json::parse(R"({
        "schema": 1, "function": "product", "nodes": 3, "levels": 4,
        "methods": ["g-channelcomp", "aircomp"], "modulation": "pam4", "base_modulation": "qpsk",
        "snr_db": [0, 5.5], "trials": 10, "seed": 3,
        "channel": {"fading": "rayleigh", "seed": 9},
        "input": {"mode": "continuous", "lo": 0, "hi": 3},
        "nmse_variant": "squared", "aircomp_guard": 0.01, "force": false, "workers": 2,
        "description": "anything"})");
    const auto c = io::config_from_json(j);
    EXPECT_EQ(c.function, "product");
    EXPECT_EQ(c.num_nodes, 3u);
    EXPECT_EQ(c.methods, (std::vector<Method>{Method::GChannelComp, Method::AirComp}));
    EXPECT_EQ(c.snr_grid_db, (std::vector<double>{0.0, 5.5}));
    EXPECT_EQ(c.fading, FadingKind::RealGaussian);
    EXPECT_EQ(c.channel_seed, 9u);
    EXPECT_EQ(c.input, InputMode::Continuous);
    EXPECT_DOUBLE_EQ(c.input_hi, 3.0);
    EXPECT_EQ(c.nmse_variant, NmseVariant::Squared);
    EXPECT_EQ(c.workers, 2u);

    // serialising and reading back is the identity
    const auto again = io::config_from_json(io::to_json(c));
    EXPECT_EQ(io::to_json(again), io::to_json(c));
}

TEST(Io, ConfigErrorsNameTheField)
{
    EXPECT_NE(error_of(json::parse(R"({"function": "sum"})")).find("'schema'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 2})")).find("'schema'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "nodes": -1})")).find("'nodes'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "trials": 1.5})")).find("'trials'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "snr_db": "loud"})")).find("'snr_db'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "methods": ["tdma"]})")).find("'methods'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "colour": 1})")).find("'colour'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "channel": {"fading": "rician"}})")).find("'channel.fading'"),
              std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "channel": {"gain": 1}})")).find("'channel.gain'"), std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "input": {"mode": "analog"}})")).find("'input.mode'"),
              std::string::npos);
    EXPECT_NE(error_of(json::parse(R"({"schema": 1, "force": "yes"})")).find("'force'"), std::string::npos);
    EXPECT_NE(error_of(json::parse("[1, 2]")), "");
    EXPECT_THROW(io::load_config("/nonexistent/config.json"), InvalidArgument);
}

TEST(Io, ConfigHashIsStableAndSensitive)
{
    ExperimentConfig a;
    ExperimentConfig b;
    EXPECT_EQ(io::config_hash(a), io::config_hash(b));
    EXPECT_EQ(io::config_hash(a).size(), 16u);
    b.seed = 1;
    EXPECT_NE(io::config_hash(a), io::config_hash(b));
    EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(io::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Io, ComplexAndModulationJson)
{
    EXPECT_EQ(io::to_json(cplx(1.5, -2.0)), json::parse("[1.5, -2.0]"));
    EXPECT_EQ(io::complex_from_json(json::parse("[0.25, 4]"), "z"), cplx(0.25, 4.0));
    EXPECT_EQ(io::complex_from_json(json::parse("3"), "z"), cplx(3.0));
    EXPECT_THROW(io::complex_from_json(json::parse("[1]"), "z"), InvalidArgument);
    EXPECT_THROW(io::complex_from_json(json::parse("\"i\""), "z"), InvalidArgument);

    const auto m = named_modulation("qpsk", 2);
    const auto back = io::modulation_from_json(io::to_json(m));
    EXPECT_EQ(back.concatenated(), m.concatenated());
    EXPECT_THROW(io::modulation_from_json(json::parse("[]")), InvalidArgument);
    EXPECT_THROW(io::modulation_from_json(json::parse("[[[1,0],[2,0]],[[1,0]]]")), InvalidArgument);
}

TEST(Io, DesignReportRoundTrip)
{
    const auto f = tabulate(FunctionSpec::sum(), 2, 3);
    const auto r = design(f);
    const auto j = io::design_json(r, "sum", 2, 3);
    for (const char *key : {"schema", "kind", "function", "nodes", "levels", "modulation", "epsilon_requested",
                            "epsilon_used", "relaxation", "lifted", "extraction", "verification", "success",
                            "git_describe"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["kind"], "design");
    const auto m = io::load_design_modulation(json::parse(j.dump()));
    EXPECT_EQ(m.concatenated(), r.modulation.concatenated());

    auto wrong = j;
    wrong["nodes"] = 3;
    EXPECT_THROW(io::load_design_modulation(wrong), InvalidArgument);
    EXPECT_THROW(io::load_design_modulation(json::parse("{}")), InvalidArgument);
}

TEST(Io, AdaptReportFields)
{
    const auto f = tabulate(FunctionSpec::sum(), 2, 2);
    const auto r = adapt(f, named_modulation("bpsk", 2), std::vector<cplx>{1.0, -0.5});
    const auto j = io::adapt_json(r, "sum", "bpsk", "fixed", 0);
    for (const char *key : {"h", "p", "abs_p", "total_power", "gains", "trace_P", "eigenvalues", "epsilon_used",
                            "verification", "success"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["abs_p"].size(), 2u);
}

TEST(Io, MetadataCarriesEverythingTheCsvLeavesOut)
{
    ExperimentConfig c;
    c.function = "sum";
    c.num_nodes = 2;
    c.levels = 2;
    c.modulation = "bpsk";
    c.trials = 20;
    c.snr_grid_db = {10.0};
    const auto r = run_sweep(c);
    const auto m = io::metadata_json(c, r);
    for (const char *key : {"git_describe", "config_hash", "config", "solver", "design", "aircomp", "channel", "snr",
                            "methods", "nmse", "wall_clock_seconds", "finished_at"})
        EXPECT_TRUE(m.contains(key)) << key;
    EXPECT_EQ(m["config_hash"], io::config_hash(c));
    EXPECT_EQ(m["methods"].size(), 3u);
    EXPECT_EQ(m["nmse"]["exclusions"].size(), 3u);
    EXPECT_EQ(m["aircomp"]["product_bias_correction"], false);
}
