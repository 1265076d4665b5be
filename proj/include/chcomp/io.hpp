// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------
//
// Persistent formats: experiment config (JSON, schema 1), NMSE records (CSV), run metadata,
// design and adaptation reports (JSON). docs/formats.md is the field reference.

#ifndef CHCOMP_IO_HPP
#define CHCOMP_IO_HPP

#include <chrono>
#include <complex>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adapt.hpp"
#include "baselines.hpp"
#include "design.hpp"
#include "error.hpp"
#include "experiments.hpp"

#ifndef CHCOMP_GIT_DESCRIBE
#define CHCOMP_GIT_DESCRIBE "unknown"
#endif

namespace chcomp::io
{

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char *kCsvHeader = "snr_db,method,function,K,q,trials,seed,bandwidth_uses,nmse";

inline std::uint64_t fnv1a64(const std::string &s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json &j, const std::string &field)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InvalidArgument(field + ": expected a number or [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(std::span<const cplx> v)
{
    json a = json::array();
    for (auto z : v)
        a.push_back(to_json(z));
    return a;
}

inline json to_json(const ModulationSet &m)
{
    json a = json::array();
    for (std::size_t k = 0; k < m.num_nodes(); ++k)
        a.push_back(to_json(std::span<const cplx>(m.vectors()[k])));
    return a;
}

inline ModulationSet modulation_from_json(const json &j, const std::string &field = "modulation")
{
    if (!j.is_array() || j.empty())
        throw InvalidArgument(field + ": expected a non-empty array of per-node alphabets");
    std::vector<std::vector<cplx>> v;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const auto f = field + "[" + std::to_string(k) + "]";
        if (!j[k].is_array())
            throw InvalidArgument(f + ": expected an array of symbols");
        std::vector<cplx> node;
        for (std::size_t l = 0; l < j[k].size(); ++l)
            node.push_back(complex_from_json(j[k][l], f + "[" + std::to_string(l) + "]"));
        v.push_back(std::move(node));
    }
    return ModulationSet(std::move(v));
}

// ---- experiment config ------------------------------------------------------------------

namespace detail
{

template <typename T>
T get_field(const json &j, const std::string &key, const std::string &what)
{
    const auto &v = j.at(key);
    // nlohmann would wrap -1 into an unsigned field and truncate 1.5 into an integer one
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!(std::is_unsigned_v<T> ? v.is_number_unsigned() : v.is_number_integer()))
            throw InvalidArgument("config field '" + key + "': expected " + what);
    }
    try {
        return v.get<T>();
    } catch (const json::exception &) {
        throw InvalidArgument("config field '" + key + "': expected " + what);
    }
}

inline void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &where)
{
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw InvalidArgument("config field '" + where + it.key() + "': unknown");
}

} // namespace detail

inline json to_json(const ExperimentConfig &c)
{
    json j;
    j["schema"] = c.schema;
    j["function"] = c.function;
    j["nodes"] = c.num_nodes;
    j["levels"] = c.levels;
    j["methods"] = json::array();
    for (auto m : c.methods)
        j["methods"].push_back(to_string(m));
    j["modulation"] = c.modulation;
    j["base_modulation"] = c.alphabet();
    j["snr_db"] = c.snr_grid_db;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["channel"] = {{"fading", to_string(c.fading)}, {"seed", c.channel_seed}};
    if (c.input == InputMode::Discrete)
        j["input"] = {{"mode", "discrete"}};
    else
        j["input"] = {{"mode", "continuous"}, {"lo", c.input_lo}, {"hi", c.input_hi}};
    j["nmse_variant"] = to_string(c.nmse_variant);
    j["aircomp_guard"] = c.aircomp_guard;
    j["force"] = c.force;
    j["workers"] = c.workers;
    return j;
}

inline ExperimentConfig config_from_json(const json &j)
{
    using detail::get_field;
    if (!j.is_object())
        throw InvalidArgument("config: expected a JSON object");
    detail::reject_unknown(j,
                           {"schema", "function", "nodes", "levels", "methods", "modulation", "base_modulation",
                            "snr_db", "trials", "seed", "channel", "input", "nmse_variant", "aircomp_guard", "force",
                            "workers", "description"},
                           "");
    ExperimentConfig c;
    if (!j.contains("schema"))
        throw InvalidArgument("config field 'schema': missing (expected 1)");
    c.schema = get_field<int>(j, "schema", "an integer");
    if (c.schema != kSchemaVersion)
        throw InvalidArgument("config field 'schema': unsupported version " + std::to_string(c.schema));
    if (j.contains("function")) c.function = get_field<std::string>(j, "function", "a function name");
    if (j.contains("nodes")) c.num_nodes = get_field<std::size_t>(j, "nodes", "a positive integer");
    if (j.contains("levels")) c.levels = get_field<std::size_t>(j, "levels", "an integer >= 2");
    if (j.contains("methods")) {
        const auto names = get_field<std::vector<std::string>>(j, "methods", "an array of method names");
        c.methods.clear();
        for (const auto &n : names) {
            try {
                c.methods.push_back(parse_method(n));
            } catch (const InvalidArgument &e) {
                throw InvalidArgument(std::string("config field 'methods': ") + e.what());
            }
        }
    }
    if (j.contains("modulation")) c.modulation = get_field<std::string>(j, "modulation", "a string");
    if (j.contains("base_modulation")) c.base_modulation = get_field<std::string>(j, "base_modulation", "a string");
    if (j.contains("snr_db")) c.snr_grid_db = get_field<std::vector<double>>(j, "snr_db", "an array of numbers");
    if (j.contains("trials")) c.trials = get_field<std::size_t>(j, "trials", "a positive integer");
    if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed", "a non-negative integer");
    if (j.contains("channel")) {
        const auto &ch = j.at("channel");
        if (!ch.is_object())
            throw InvalidArgument("config field 'channel': expected an object");
        detail::reject_unknown(ch, {"fading", "seed"}, "channel.");
        if (ch.contains("fading")) {
            try {
                c.fading = parse_fading(get_field<std::string>(ch, "fading", "a string"));
            } catch (const InvalidArgument &e) {
                throw InvalidArgument(std::string("config field 'channel.fading': ") + e.what());
            }
            if (c.fading == FadingKind::Fixed)
                throw InvalidArgument("config field 'channel.fading': fixed channels are not configurable here");
        }
        if (ch.contains("seed")) c.channel_seed = get_field<std::uint64_t>(ch, "seed", "a non-negative integer");
    }
    if (j.contains("input")) {
        const auto &in = j.at("input");
        if (!in.is_object())
            throw InvalidArgument("config field 'input': expected an object");
        detail::reject_unknown(in, {"mode", "lo", "hi"}, "input.");
        const auto mode = in.contains("mode") ? get_field<std::string>(in, "mode", "a string") : "discrete";
        if (mode == "discrete") {
            c.input = InputMode::Discrete;
        } else if (mode == "continuous") {
            c.input = InputMode::Continuous;
            if (in.contains("lo")) c.input_lo = get_field<double>(in, "lo", "a number");
            if (in.contains("hi")) c.input_hi = get_field<double>(in, "hi", "a number");
        } else {
            throw InvalidArgument("config field 'input.mode': expected 'discrete' or 'continuous'");
        }
    }
    if (j.contains("nmse_variant")) {
        try {
            c.nmse_variant = parse_nmse_variant(get_field<std::string>(j, "nmse_variant", "a string"));
        } catch (const InvalidArgument &e) {
            throw InvalidArgument(std::string("config field 'nmse_variant': ") + e.what());
        }
    }
    if (j.contains("aircomp_guard")) c.aircomp_guard = get_field<double>(j, "aircomp_guard", "a number");
    if (j.contains("force")) c.force = get_field<bool>(j, "force", "a boolean");
    if (j.contains("workers")) c.workers = get_field<std::size_t>(j, "workers", "a non-negative integer");
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw InvalidArgument("config: cannot open '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::parse_error &e) {
        throw InvalidArgument("config: '" + path + "' is not valid JSON (" + e.what() + ")");
    }
    return config_from_json(j);
}

// Hash of the canonical (sorted-key) config serialisation.
inline std::string config_hash(const ExperimentConfig &c) { return hex64(fnv1a64(to_json(c).dump())); }

// ---- NMSE records -----------------------------------------------------------------------

inline std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

inline std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline void write_csv_header(std::ostream &os) { os << kCsvHeader << '\n'; }

inline void write_csv_row(std::ostream &os, const NmseRecord &r)
{
    os << format_double(r.snr_db) << ',' << to_string(r.method) << ',' << csv_field(r.function) << ',' << r.num_nodes
       << ',' << r.levels << ',' << r.trials << ',' << r.seed << ',' << r.bandwidth_uses << ','
       << format_double(r.nmse) << '\n';
}

inline void write_csv(std::ostream &os, const std::vector<NmseRecord> &records)
{
    write_csv_header(os);
    for (const auto &r : records)
        write_csv_row(os, r);
}

inline std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted)
        throw InvalidArgument("csv: unterminated quote");
    out.push_back(cur);
    return out;
}

// Accepts exactly the fixed header; every row must have nine fields.
inline std::vector<NmseRecord> read_csv(std::istream &is)
{
    std::string line;
    if (!std::getline(is, line))
        throw InvalidArgument("csv: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kCsvHeader)
        throw InvalidArgument("csv: header must be '" + std::string(kCsvHeader) + "'");
    std::vector<NmseRecord> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto f = split_csv_line(line);
        if (f.size() != 9)
            throw InvalidArgument("csv line " + std::to_string(lineno) + ": expected 9 fields, got " +
                                  std::to_string(f.size()));
        try {
            NmseRecord r;
            r.snr_db = std::stod(f[0]);
            r.method = parse_method(f[1]);
            r.function = f[2];
            r.num_nodes = std::stoul(f[3]);
            r.levels = std::stoul(f[4]);
            r.trials = std::stoul(f[5]);
            r.seed = std::stoull(f[6]);
            r.bandwidth_uses = std::stoul(f[7]);
            r.nmse = std::stod(f[8]);
            if (!(r.nmse >= 0.0))
                throw InvalidArgument("nmse must be non-negative");
            out.push_back(std::move(r));
        } catch (const std::logic_error &e) {
            throw InvalidArgument("csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// ---- reports ----------------------------------------------------------------------------

inline json solver_json(const sdp::Options &o)
{
    return {{"tol_feas", o.tol_feas}, {"tol_gap", o.tol_gap}, {"max_iter", o.max_iter},
            {"check_every", o.check_every}, {"rho", o.rho}, {"relaxation", o.relaxation},
            {"rho_adapt_ratio", o.rho_adapt_ratio}, {"rho_adapt_every", o.rho_adapt_every}};
}

inline json to_json(const GramSolution &g)
{
    json j;
    j["stage"] = g.stage;
    j["status"] = sdp::to_string(g.status);
    j["iterations"] = g.iterations;
    j["primal_residual"] = g.primal_residual;
    j["objective"] = g.objective;
    j["trace"] = std::real(g.X.trace());
    j["rank_ratio"] = g.rank_ratio;
    j["eigenvalues"] = std::vector<double>(g.eigenvalues.data(), g.eigenvalues.data() + g.eigenvalues.size());
    if (!g.dc_history.empty() || !g.dc_stop.empty()) {
        j["dc_converged"] = g.dc_converged;
        j["dc_stop"] = g.dc_stop;
        json h = json::array();
        for (const auto &s : g.dc_history)
            h.push_back({{"outer", s.outer}, {"theta", s.theta}, {"dc_objective", s.dc_objective},
                         {"rank_ratio", s.rank_ratio}, {"inner_iterations", s.inner_iterations}});
        j["dc_history"] = h;
    }
    return j;
}

inline json to_json(const ExtractionInfo &e)
{
    return {{"method", to_string(e.method)},       {"n_samples", e.n_samples},
            {"best_candidate", e.best_candidate},  {"degenerate_candidates", e.degenerate_candidates},
            {"best_power", e.best_power},          {"min_margin", e.min_margin},
            {"slack", e.slack},                    {"power_cap_exceeded", e.power_cap_exceeded},
            {"renormalized", e.renormalized}};
}

inline json to_json(const ConflictReport &r)
{
    json j;
    j["is_computable"] = r.is_computable;
    j["tolerance"] = r.tol;
    j["total_conflicts"] = r.total_conflicts;
    json groups = json::array();
    for (const auto &g : r.groups)
        groups.push_back({{"point", to_json(g.point)}, {"outputs", g.outputs}, {"members", g.members}});
    j["groups"] = groups;
    json pairs = json::array();
    for (const auto &c : r.conflicts)
        pairs.push_back({{"i", c.i}, {"j", c.j}, {"distance", c.distance}, {"f_i", c.f_i}, {"f_j", c.f_j}});
    j["conflicts"] = pairs;
    return j;
}

inline json design_json(const DesignResult &r, const std::string &function, std::size_t K, std::size_t q)
{
    json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "design";
    j["function"] = function;
    j["nodes"] = K;
    j["levels"] = q;
    j["modulation"] = to_json(r.modulation);
    j["power"] = r.modulation.power();
    j["epsilon_requested"] = r.epsilon_requested;
    j["epsilon_used"] = r.epsilon_used;
    j["raw_pairs"] = r.raw_pairs;
    j["constraints"] = r.constraints;
    j["relaxation"] = to_json(r.p3);
    j["lifted"] = to_json(r.gram);
    j["extraction"] = to_json(r.extraction);
    j["verification"] = to_json(r.conflict_report);
    j["verification"]["exact_decode"] = r.exact_decode;
    j["success"] = r.success;
    j["wall_seconds"] = r.wall_seconds;
    j["notes"] = r.notes;
    j["git_describe"] = CHCOMP_GIT_DESCRIBE;
    return j;
}

inline json adapt_json(const AdaptResult &r, const std::string &function, const std::string &modulation,
                       const std::string &channel, std::uint64_t seed)
{
    json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "adapt";
    j["function"] = function;
    j["nodes"] = r.h.size();
    j["modulation"] = modulation;
    j["channel"] = channel;
    j["seed"] = seed;
    j["separate_compensation"] = r.separate_compensation;
    j["h"] = to_json(r.h);
    j["p"] = to_json(r.power.p);
    std::vector<double> mag;
    for (auto z : r.power.p)
        mag.push_back(std::abs(z));
    j["abs_p"] = mag;
    j["total_power"] = r.power.total_power;
    j["gains"] = to_json(r.gains);
    j["trace_P"] = std::real(r.gram.X.trace());
    j["eigenvalues"] = std::vector<double>(r.gram.eigenvalues.data(), r.gram.eigenvalues.data() + r.gram.eigenvalues.size());
    j["lifted"] = to_json(r.gram);
    j["extraction"] = to_json(r.extraction);
    j["epsilon_requested"] = r.epsilon_requested;
    j["epsilon_used"] = r.epsilon_used;
    j["raw_pairs"] = r.raw_pairs;
    j["constraints"] = r.constraints;
    j["power_cap_exceeded"] = r.power_cap_exceeded;
    j["verification"] = to_json(r.conflict_report);
    j["verification"]["exact_decode"] = r.exact_decode;
    j["success"] = r.success;
    j["wall_seconds"] = r.wall_seconds;
    j["notes"] = r.notes;
    j["git_describe"] = CHCOMP_GIT_DESCRIBE;
    return j;
}

// Reads the modulation back from a design report, checking the declared shape.
inline ModulationSet load_design_modulation(const json &j)
{
    if (!j.is_object() || !j.contains("modulation"))
        throw InvalidArgument("design file: missing 'modulation'");
    if (j.contains("schema") && j.at("schema") != kSchemaVersion)
        throw InvalidArgument("design file: unsupported schema");
    auto m = modulation_from_json(j.at("modulation"));
    if (j.contains("nodes") && j.at("nodes").get<std::size_t>() != m.num_nodes())
        throw InvalidArgument("design file: 'nodes' disagrees with 'modulation'");
    if (j.contains("levels") && j.at("levels").get<std::size_t>() != m.levels())
        throw InvalidArgument("design file: 'levels' disagrees with 'modulation'");
    return m;
}

inline ModulationSet load_design_modulation(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw InvalidArgument("design file: cannot open '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::parse_error &e) {
        throw InvalidArgument("design file: '" + path + "' is not valid JSON (" + e.what() + ")");
    }
    return load_design_modulation(j);
}

inline std::string utc_timestamp()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Everything that is not bit-stable lives here, never in the CSV.
inline json metadata_json(const ExperimentConfig &cfg, const SweepResult &r)
{
    const sdp::Options solver;
    const DesignOptions dopt;
    json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "sweep-metadata";
    j["git_describe"] = CHCOMP_GIT_DESCRIBE;
    j["config_hash"] = config_hash(cfg);
    j["config"] = to_json(cfg);
    j["solver"] = solver_json(solver);
    j["design"] = {{"rank_tol", dopt.extraction.rank_tol},
                   {"n_samples", dopt.extraction.n_samples},
                   {"dc_mu", dopt.dc.mu},
                   {"dc_delta", dopt.dc.delta},
                   {"epsilon_backoff_factor", dopt.backoff_factor},
                   {"conflict_tolerance", "1e-2 * sqrt(min gamma)"},
                   {"decoder_cluster_tolerance", "1e-6 * bounding-box diagonal"}};
    j["aircomp"] = {{"product_guard", cfg.aircomp_guard},
                    {"max_log_floor", NomographicCodec{}.log_floor},
                    {"product_bias_correction", false},
                    {"amplitude", "phi scaled to the common peak; no clipping"}};
    j["channel"] = {{"fading", to_string(cfg.fading)},
                    {"seed", cfg.channel_seed},
                    {"h", to_json(r.h)},
                    {"deep_fade_threshold", kDeepFadeThreshold},
                    {"rejected_draws", r.fading_rejections},
                    {"other_methods", "channel inversion"}};
    j["snr"] = {{"definition", "20 log10(||x|| / sigma), total complex noise variance sigma^2"},
                {"reference_method", to_string(r.reference_method)},
                {"reference_norm", r.reference_norm},
                {"peak_normalization", "per-symbol peak amplitude matched across methods"},
                {"peak_amplitude", r.peak_amplitude}};
    json methods = json::array();
    for (const auto &m : r.methods) {
        json e{{"method", to_string(m.method)},
               {"source", m.source},
               {"signal_norm", m.signal_norm},
               {"bandwidth_uses", bandwidth_uses(m.method, cfg.num_nodes)},
               {"notes", m.notes}};
        if (m.epsilon_used)
            e["epsilon_used"] = *m.epsilon_used;
        if (m.method == Method::AirComp)
            e["codec_amplitude"] = m.codec.amplitude;
        methods.push_back(e);
    }
    j["methods"] = methods;
    json excl = json::array();
    for (const auto &rec : r.records)
        excl.push_back({{"snr_db", rec.snr_db}, {"method", to_string(rec.method)}, {"excluded_zero_targets", rec.excluded}});
    j["nmse"] = {{"variant", to_string(cfg.nmse_variant)}, {"exclusions", excl}};
    j["wall_clock_seconds"] = r.wall_seconds;
    j["finished_at"] = utc_timestamp();
    return j;
}

} // namespace chcomp::io

#endif
