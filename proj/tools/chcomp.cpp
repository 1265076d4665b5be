// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------
//
// Command-line front end. Exit codes: 0 success, 1 usage or input error, 2 infeasible or not
// computable, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chcomp/chcomp.hpp"

namespace
{

using namespace chcomp;
using json = io::json;

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kNumerical = 3 };

void write_text(const std::string &path, const std::string &text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path);
    if (!os)
        throw InvalidArgument("cannot write '" + path + "'");
    os << text;
}

std::string fmt_point(cplx z)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.6g, %.6g)", z.real(), z.imag());
    return buf;
}

std::string fmt_values(const std::vector<double> &v)
{
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%s%.10g", i ? ", " : "", v[i]);
        s += buf;
    }
    return s + "}";
}

struct DesignArgs
{
    std::string function = "sum";
    std::size_t nodes = 2, levels = 4;
    std::optional<double> epsilon;
    bool min_trace = false, no_dc = false, no_backoff = false, force = false;
    std::uint64_t seed = 0;
    std::size_t samples = 1000;
    std::string out, dump;
};

int run_design(const DesignArgs &a)
{
    const auto f = tabulate(parse_function_spec(a.function), a.nodes, a.levels);
    DesignOptions o;
    o.epsilon = a.epsilon;
    o.min_trace = a.min_trace;
    o.use_dc = !a.no_dc;
    o.epsilon_backoff = !a.no_backoff;
    o.extraction.seed = a.seed;
    o.extraction.n_samples = a.samples;
    o.limits.force = a.force;
    if (!a.dump.empty()) {
        const auto cs = build_constraints(f, a.epsilon ? *a.epsilon : default_epsilon(f), o.limits);
        std::ofstream os(a.dump);
        if (!os)
            throw InvalidArgument("cannot write '" + a.dump + "'");
        sdp::write_dump(os, lifted_problem(cs, o.dc.trace_cap, o.min_trace));
    }
    const auto r = design(f, o);
    write_text(a.out, io::design_json(r, a.function, a.nodes, a.levels).dump(2) + "\n");
    std::cerr << "design " << a.function << " K=" << a.nodes << " q=" << a.levels << ": " << r.constraints
              << " constraints, epsilon " << r.epsilon_used << ", " << to_string(r.extraction.method) << ", "
              << (r.success ? "conflict-free" : "FAILED verification") << " (" << r.wall_seconds << " s)\n";
    for (const auto &n : r.notes)
        std::cerr << "  note: " << n << "\n";
    return r.success ? kOk : kNumerical;
}

struct AdaptArgs
{
    std::string function = "product", modulation = "qpsk", channel = "ideal", out;
    std::size_t nodes = 4;
    std::uint64_t seed = 0;
    std::optional<double> epsilon, power_cap;
    bool separate = false, force = false;
};

int run_adapt(const AdaptArgs &a)
{
    const auto base = named_alphabet(a.modulation);
    const auto f = tabulate(parse_function_spec(a.function), a.nodes, base.size());
    const auto mods = ModulationSet::identical(a.nodes, base);
    const auto kind = parse_fading(a.channel);
    if (kind == FadingKind::Fixed)
        throw InvalidArgument("--channel: fixed is not available here");
    const auto h = sample_fading(a.nodes, a.seed, kind).h;
    AdaptOptions o;
    o.epsilon = a.epsilon;
    o.power_cap = a.power_cap;
    o.separate_compensation = a.separate;
    o.extraction.seed = a.seed;
    o.limits.force = a.force;
    const auto r = adapt(f, mods, h, o);
    write_text(a.out, io::adapt_json(r, a.function, a.modulation, a.channel, a.seed).dump(2) + "\n");
    std::cerr << "adapt " << a.function << " " << a.modulation << " K=" << a.nodes << " channel=" << a.channel
              << ": trace(P) " << std::real(r.gram.X.trace()) << ", |p| =";
    for (auto p : r.power.p)
        std::cerr << " " << std::abs(p);
    std::cerr << ", " << (r.success ? "conflict-free" : "FAILED verification") << "\n";
    if (r.power_cap_exceeded)
        std::cerr << "  power cap exceeded\n";
    return r.success ? kOk : kNumerical;
}

struct VerifyArgs
{
    std::string function = "sum", modulation, design_file;
    std::size_t nodes = 2;
    std::optional<double> tol;
};

int run_verify(const VerifyArgs &a)
{
    ModulationSet mods;
    if (!a.design_file.empty())
        mods = io::load_design_modulation(a.design_file);
    else if (!a.modulation.empty())
        mods = named_modulation(a.modulation, a.nodes);
    else
        throw InvalidArgument("verify: give --modulation or --design");
    const auto f = tabulate(parse_function_spec(a.function), mods.num_nodes(), mods.levels());
    const auto agg = aggregate(mods, f);
    const double tol = a.tol ? *a.tol : default_cluster_tol(agg.points);
    const auto rep = verify_computability(agg, tol);
    std::cout << "function " << a.function << ", K=" << mods.num_nodes() << ", q=" << mods.levels() << ", "
              << agg.points.size() << " tuples, tolerance " << tol << "\n";
    if (rep.is_computable) {
        std::cout << "computable: no conflicts\n";
        return kOk;
    }
    std::cout << "not computable: " << rep.total_conflicts << " conflicting pairs in " << rep.groups.size()
              << " points\n";
    for (const auto &g : rep.groups) {
        std::cout << "  point " << fmt_point(g.point) << " outputs " << fmt_values(g.outputs) << " tuples";
        for (auto i : g.members)
            std::cout << " " << i;
        std::cout << "\n";
    }
    return kInfeasible;
}

int run_bounds(std::size_t nodes, std::size_t levels)
{
    const auto b = sum_range_bounds(nodes, levels);
    std::cout << "lower=" << b.lower << " upper=" << b.upper << "\n";
    return kOk;
}

struct SweepArgs
{
    std::string config, out, meta, design_file;
    // flag overrides, used when no config file is given
    std::string function = "sum", modulation = "designed", base_modulation, fading = "ideal", input = "discrete",
                nmse_variant = "literal";
    std::size_t nodes = 4, levels = 4, trials = 100, workers = 0;
    std::uint64_t seed = 0, channel_seed = 0;
    std::vector<std::string> methods{"g-channelcomp", "aircomp", "ofdma"};
    std::vector<double> snr{0.0, 10.0, 20.0};
    double lo = 0.0, hi = 7.0;
    bool force = false;
};

ExperimentConfig config_from_flags(const SweepArgs &a)
{
    ExperimentConfig c;
    c.function = a.function;
    c.num_nodes = a.nodes;
    c.levels = a.levels;
    c.methods.clear();
    for (const auto &m : a.methods)
        c.methods.push_back(parse_method(m));
    c.modulation = a.modulation;
    c.base_modulation = a.base_modulation;
    c.snr_grid_db = a.snr;
    c.trials = a.trials;
    c.seed = a.seed;
    c.fading = parse_fading(a.fading);
    c.channel_seed = a.channel_seed;
    if (a.input == "continuous")
        c.input = InputMode::Continuous;
    else if (a.input != "discrete")
        throw InvalidArgument("--input: expected discrete or continuous");
    c.input_lo = a.lo;
    c.input_hi = a.hi;
    c.nmse_variant = parse_nmse_variant(a.nmse_variant);
    c.force = a.force;
    c.workers = a.workers;
    c.validate();
    return c;
}

int run_sweep_cmd(const SweepArgs &a, bool from_file)
{
    ExperimentConfig cfg = from_file ? io::load_config(a.config) : config_from_flags(a);
    if (from_file && a.force)
        cfg.force = true;
    SweepInputs in;
    const std::string file = !a.design_file.empty() ? a.design_file
                             : cfg.modulation.rfind("file:", 0) == 0 ? cfg.modulation.substr(5)
                                                                     : std::string();
    if (!file.empty())
        in.g_modulation = io::load_design_modulation(file);
    const auto r = run_sweep(cfg, in);
    std::ostringstream csv;
    io::write_csv(csv, r.records);
    write_text(a.out, csv.str());
    if (!a.meta.empty())
        write_text(a.meta, io::metadata_json(cfg, r).dump(2) + "\n");
    for (const auto &m : r.methods)
        for (const auto &n : m.notes)
            std::cerr << to_string(m.method) << ": " << n << "\n";
    return kOk;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"chcomp: digital constellations for computation over multiple-access channels"};
    app.require_subcommand(1);

    DesignArgs da;
    auto *design_cmd = app.add_subcommand("design", "design per-node modulations for a function");
    design_cmd->add_option("--function", da.function, "sum, product, max, quadratic-sum, weighted-sum:w1,w2,.., fractional[:ratio]")->capture_default_str();
    design_cmd->add_option("--nodes", da.nodes, "number of nodes K")->capture_default_str();
    design_cmd->add_option("--levels", da.levels, "levels per node q")->capture_default_str();
    design_cmd->add_option("--epsilon", da.epsilon, "separation scale (default 1/max|df|^2)");
    design_cmd->add_flag("--min-trace", da.min_trace, "use minimum trace as the relaxation objective");
    design_cmd->add_flag("--no-dc", da.no_dc, "skip the rank-one penalty loop");
    design_cmd->add_flag("--no-backoff", da.no_backoff, "fail instead of shrinking epsilon when the relaxation is infeasible");
    design_cmd->add_option("--seed", da.seed, "randomisation seed")->capture_default_str();
    design_cmd->add_option("--samples", da.samples, "randomisation candidates")->capture_default_str();
    design_cmd->add_option("--out", da.out, "design JSON (default stdout)");
    design_cmd->add_option("--dump-sdp", da.dump, "also write the lifted problem in the text dump format");
    design_cmd->add_flag("--force", da.force, "lift the desk-scale size caps");

    AdaptArgs aa;
    auto *adapt_cmd = app.add_subcommand("adapt", "adapt power and phase of a fixed modulation");
    adapt_cmd->add_option("--function", aa.function)->capture_default_str();
    adapt_cmd->add_option("--nodes", aa.nodes)->capture_default_str();
    adapt_cmd->add_option("--modulation", aa.modulation, "bpsk, qpsk, pamN, cpamN, pskN, qamN")->capture_default_str();
    adapt_cmd->add_option("--channel", aa.channel, "ideal, rayleigh (real N(0,1)), gaussian, complex-rayleigh")->capture_default_str();
    adapt_cmd->add_option("--seed", aa.seed, "channel and randomisation seed")->capture_default_str();
    adapt_cmd->add_option("--epsilon", aa.epsilon);
    adapt_cmd->add_option("--power-cap", aa.power_cap, "shrink epsilon until ||p||^2 fits");
    adapt_cmd->add_flag("--separate-compensation", aa.separate, "adapt for h = 1, then invert the channel");
    adapt_cmd->add_option("--out", aa.out, "adapt JSON (default stdout)");
    adapt_cmd->add_flag("--force", aa.force);

    VerifyArgs va;
    auto *verify_cmd = app.add_subcommand("verify", "check whether a modulation computes a function");
    verify_cmd->add_option("--function", va.function)->capture_default_str();
    verify_cmd->add_option("--nodes", va.nodes)->capture_default_str();
    verify_cmd->add_option("--modulation", va.modulation, "named alphabet used by every node");
    verify_cmd->add_option("--design", va.design_file, "design JSON");
    verify_cmd->add_option("--tol", va.tol, "collision distance (default 1e-6 of the constellation extent)");

    std::size_t bn = 2, bq = 2;
    auto *bounds_cmd = app.add_subcommand("bounds", "range bounds of the sum of K q-ary symbols");
    bounds_cmd->add_option("--nodes", bn)->required();
    bounds_cmd->add_option("--levels", bq)->required();

    SweepArgs sa;
    auto *sweep_cmd = app.add_subcommand("sweep", "NMSE versus SNR");
    auto *simulate_cmd = app.add_subcommand("simulate", "NMSE at one SNR point");
    for (auto *cmd : {sweep_cmd, simulate_cmd}) {
        cmd->add_option("--config", sa.config, "experiment JSON (schema 1)");
        cmd->add_option("--out", sa.out, "CSV output (default stdout)");
        cmd->add_option("--meta", sa.meta, "run metadata JSON");
        cmd->add_option("--design", sa.design_file, "design JSON for g-channelcomp");
        cmd->add_option("--function", sa.function)->capture_default_str();
        cmd->add_option("--nodes", sa.nodes)->capture_default_str();
        cmd->add_option("--levels", sa.levels)->capture_default_str();
        cmd->add_option("--modulation", sa.modulation, "g-channelcomp source: designed or an alphabet")->capture_default_str();
        cmd->add_option("--base-modulation", sa.base_modulation, "e-channelcomp and ofdma alphabet (default pam<q>)");
        cmd->add_option("--trials", sa.trials)->capture_default_str();
        cmd->add_option("--seed", sa.seed)->capture_default_str();
        cmd->add_option("--fading", sa.fading)->capture_default_str();
        cmd->add_option("--channel-seed", sa.channel_seed)->capture_default_str();
        cmd->add_option("--input", sa.input, "discrete or continuous")->capture_default_str();
        cmd->add_option("--lo", sa.lo)->capture_default_str();
        cmd->add_option("--hi", sa.hi)->capture_default_str();
        cmd->add_option("--nmse-variant", sa.nmse_variant, "literal or squared")->capture_default_str();
        cmd->add_option("--workers", sa.workers)->capture_default_str();
        cmd->add_flag("--force", sa.force);
    }
    sweep_cmd->add_option("--methods", sa.methods)->delimiter(',');
    sweep_cmd->add_option("--snr", sa.snr, "SNR grid in dB")->delimiter(',');
    std::string method = "g-channelcomp";
    double snr = 10.0;
    simulate_cmd->add_option("--method", method)->capture_default_str();
    simulate_cmd->add_option("--snr", snr)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*design_cmd)
            return run_design(da);
        if (*adapt_cmd)
            return run_adapt(aa);
        if (*verify_cmd)
            return run_verify(va);
        if (*bounds_cmd)
            return run_bounds(bn, bq);
        if (*simulate_cmd) {
            if (!sa.config.empty())
                throw InvalidArgument("simulate: --config is for sweep; pass flags");
            sa.methods = {method};
            sa.snr = {snr};
            return run_sweep_cmd(sa, false);
        }
        if (*sweep_cmd)
            return run_sweep_cmd(sa, !sa.config.empty());
    } catch (const InfeasibleError &e) {
        std::cerr << "infeasible: " << e.what();
        if (e.has_witness())
            std::cerr << " (tuples " << e.witness_i() << ", " << e.witness_j() << ")";
        std::cerr << "\n";
        return kInfeasible;
    } catch (const InvalidArgument &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
