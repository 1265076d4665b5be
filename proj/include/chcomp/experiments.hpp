// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_EXPERIMENTS_HPP
#define CHCOMP_EXPERIMENTS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adapt.hpp"
#include "baselines.hpp"
#include "channel.hpp"
#include "constellation.hpp"
#include "design.hpp"
#include "detail/parallel.hpp"
#include "detail/rng.hpp"
#include "error.hpp"
#include "functions.hpp"

namespace chcomp
{

// Reconstruction points lo + l (hi - lo) / (q - 1), l = 0..q-1; both endpoints are levels.
inline std::vector<double> quantizer_levels(std::size_t q, double lo, double hi)
{
    if (q < 2 || !(lo < hi))
        throw InvalidArgument("quantizer: need q >= 2 and lo < hi");
    std::vector<double> v(q);
    for (std::size_t l = 0; l < q; ++l)
        v[l] = lo + (hi - lo) * static_cast<double>(l) / static_cast<double>(q - 1);
    return v;
}

// Index of the nearest reconstruction point; inputs outside [lo, hi] clamp to the ends.
inline std::size_t quantize(double x, std::size_t q, double lo, double hi)
{
    if (q < 2 || !(lo < hi))
        throw InvalidArgument("quantizer: need q >= 2 and lo < hi");
    const double t = (x - lo) / (hi - lo) * static_cast<double>(q - 1);
    if (!(t > 0.0))
        return 0;
    return std::min(q - 1, static_cast<std::size_t>(std::llround(t)));
}

enum class NmseVariant { Literal, Squared };

inline const char *to_string(NmseVariant v) { return v == NmseVariant::Literal ? "literal" : "squared"; }

inline NmseVariant parse_nmse_variant(const std::string &s)
{
    if (s == "literal") return NmseVariant::Literal;
    if (s == "squared") return NmseVariant::Squared;
    throw InvalidArgument("nmse_variant: expected 'literal' or 'squared', got '" + s + "'");
}

struct NmseValue
{
    double value = 0.0;
    std::size_t included = 0;
    std::size_t excluded = 0; // targets with |f| < 1e-12
};

// Literal: mean over trials of |f - f_hat|^2 / |f|. Squared: sum |f - f_hat|^2 / sum |f|^2.
// Zero targets are left out of both.
inline NmseValue nmse(std::span<const double> truth, std::span<const double> est, NmseVariant variant = NmseVariant::Literal)
{
    if (truth.size() != est.size())
        throw InvalidArgument("nmse: " + std::to_string(truth.size()) + " targets but " + std::to_string(est.size()) +
                              " estimates");
    NmseValue r;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const double t = truth[j];
        if (std::abs(t) < 1e-12) {
            ++r.excluded;
            continue;
        }
        ++r.included;
        const double e2 = (t - est[j]) * (t - est[j]);
        if (variant == NmseVariant::Literal) {
            num += e2 / std::abs(t);
        } else {
            num += e2;
            den += t * t;
        }
    }
    if (r.included == 0)
        throw InvalidArgument("nmse: all " + std::to_string(r.excluded) + " targets are zero");
    r.value = variant == NmseVariant::Literal ? num / static_cast<double>(r.included) : num / den;
    return r;
}

enum class InputMode { Discrete, Continuous };

struct ExperimentConfig
{
    int schema = 1;
    std::string function = "sum";
    std::size_t num_nodes = 4;
    std::size_t levels = 4;
    std::vector<Method> methods{Method::GChannelComp, Method::AirComp, Method::Ofdma};
    std::string modulation = "designed"; // g-channelcomp: "designed", an alphabet name, or "file:PATH"
    std::string base_modulation;         // e-channelcomp and ofdma alphabet; empty means pam<levels>
    std::vector<double> snr_grid_db{0.0, 10.0, 20.0};
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    FadingKind fading = FadingKind::Ideal; // one block-fading draw per sweep
    std::uint64_t channel_seed = 0;
    InputMode input = InputMode::Discrete;
    double input_lo = 0.0, input_hi = 7.0; // continuous inputs, quantized to `levels` points
    NmseVariant nmse_variant = NmseVariant::Literal;
    double aircomp_guard = 1e-3;
    bool force = false;
    std::size_t workers = 0;

    std::string alphabet() const { return base_modulation.empty() ? "pam" + std::to_string(levels) : base_modulation; }

    void validate() const
    {
        if (schema != 1)
            throw InvalidArgument("schema: unsupported version " + std::to_string(schema) + " (expected 1)");
        if (num_nodes < 1)
            throw InvalidArgument("nodes: must be at least 1");
        if (levels < 2)
            throw InvalidArgument("levels: must be at least 2");
        if (methods.empty())
            throw InvalidArgument("methods: empty");
        if (snr_grid_db.empty())
            throw InvalidArgument("snr_db: empty grid");
        if (trials < 1)
            throw InvalidArgument("trials: must be at least 1");
        if (input == InputMode::Continuous && !(input_lo < input_hi))
            throw InvalidArgument("input: continuous range needs lo < hi");
        if (!(aircomp_guard > 0.0))
            throw InvalidArgument("aircomp_guard: must be positive");
        const auto spec = parse_function_spec(function);
        if (input == InputMode::Continuous && spec.kind == FunctionKind::CustomTable)
            throw InvalidArgument("function: a table has no continuous extension");
        for (auto m : methods)
            if (m == Method::AirComp && !aircomp_supports(spec.kind))
                throw InvalidArgument("methods: aircomp cannot compute " + function);
        if (!force) {
            const double M = std::pow(static_cast<double>(levels), static_cast<double>(num_nodes));
            if (M > 1e6)
                throw InvalidArgument("levels^nodes = " + std::to_string(M) + " exceeds the desk-scale cap (use force)");
        }
    }

    std::vector<double> level_values() const
    {
        if (input == InputMode::Continuous)
            return quantizer_levels(levels, input_lo, input_hi);
        std::vector<double> v(levels);
        for (std::size_t l = 0; l < levels; ++l)
            v[l] = static_cast<double>(l);
        return v;
    }
};

struct NmseRecord
{
    double snr_db = 0.0;
    Method method = Method::GChannelComp;
    std::string function;
    std::size_t num_nodes = 0, levels = 0, trials = 0;
    std::uint64_t seed = 0;
    std::size_t bandwidth_uses = 1;
    double nmse = 0.0;
    std::size_t excluded = 0;
};

// Everything a method needs per trial, fixed before the sweep starts.
struct PreparedMethod
{
    Method method = Method::GChannelComp;
    ModulationSet mods;        // transmit alphabet (ChannelComp variants and OFDMA)
    std::vector<cplx> gains;   // end-to-end h_k p_k of the ChannelComp variants
    DecoderTable table;
    NomographicCodec codec;
    double signal_norm = 0.0;  // norm of this method's transmit vector
    double peak_amplitude = 0.0;
    std::string source;        // where the alphabet came from
    std::vector<std::string> notes;
    std::optional<double> epsilon_used;
};

struct SweepInputs
{
    std::optional<ModulationSet> g_modulation; // overrides design for g-channelcomp
    std::optional<DesignResult> design;        // reuse a finished design
};

struct SweepResult
{
    std::vector<NmseRecord> records;
    std::vector<PreparedMethod> methods;
    std::vector<cplx> h;
    std::size_t fading_rejections = 0;
    double peak_amplitude = 0.0; // common per-symbol peak of every transmit alphabet
    double reference_norm = 0.0; // ||x|| in SNR = 20 log10(||x|| / sigma), shared by all methods
    Method reference_method = Method::GChannelComp;
    double wall_seconds = 0.0;
};

// Transmit alphabets, the analog one included, are scaled to a common peak per-symbol amplitude:
// the largest input magnitude.
inline std::vector<PreparedMethod> prepare_methods(const ExperimentConfig &cfg, const FiniteFunction &f,
                                                   std::span<const cplx> h, const SweepInputs &in = {})
{
    const auto spec = parse_function_spec(cfg.function);
    const auto levels = cfg.level_values();
    double peak = 0.0;
    for (double v : levels)
        peak = std::max(peak, std::abs(v));
    if (!(peak > 0.0))
        peak = 1.0;
    const std::size_t K = cfg.num_nodes;

    auto to_peak = [&](const ModulationSet &m) {
        const double a = m.peak_amplitude();
        if (!(a > 0.0))
            throw NumericalError("modulation is identically zero");
        return m.scaled(peak / a);
    };
    std::vector<PreparedMethod> out;
    for (const auto m : cfg.methods) {
        PreparedMethod pm;
        pm.method = m;
        pm.peak_amplitude = peak;
        switch (m) {
        case Method::GChannelComp: {
            ModulationSet mods;
            if (in.g_modulation) {
                mods = *in.g_modulation;
                pm.source = cfg.modulation;
            } else if (cfg.modulation == "designed") {
                DesignResult r;
                if (in.design) {
                    r = *in.design;
                } else {
                    DesignOptions o;
                    o.extraction.seed = cfg.seed;
                    o.limits.force = cfg.force;
                    r = design(f, o);
                }
                if (!r.success)
                    throw NumericalError("design: extracted modulation failed verification (" +
                                         std::to_string(r.conflict_report.total_conflicts) + " conflicts)");
                mods = r.modulation;
                pm.source = "designed";
                pm.notes = r.notes;
                pm.epsilon_used = r.epsilon_used;
            } else if (cfg.modulation.rfind("file:", 0) == 0) {
                throw InvalidArgument("modulation: file source must be loaded by the caller");
            } else {
                mods = named_modulation(cfg.modulation, K);
                pm.source = cfg.modulation;
            }
            check_dimensions(mods, f);
            pm.mods = to_peak(mods);
            pm.gains.assign(K, cplx(1.0)); // channel inversion
            pm.signal_norm = std::sqrt(pm.mods.power());
            break;
        }
        case Method::EChannelComp: {
            const auto base = named_modulation(cfg.alphabet(), K);
            check_dimensions(base, f);
            AdaptOptions o;
            o.extraction.seed = cfg.seed;
            o.limits.force = cfg.force;
            const auto r = adapt(f, base, h, o);
            if (!r.success)
                throw NumericalError("adapt: scaled constellation failed verification (" +
                                     std::to_string(r.conflict_report.total_conflicts) + " conflicts)");
            // fold |p| into the alphabet so that the peak is normalised; the channel stays in the gains
            std::vector<std::vector<cplx>> v(K);
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t l = 0; l < f.levels(); ++l)
                    v[k].push_back(r.power.p[k] * base.symbol(k, l));
            pm.mods = to_peak(ModulationSet(std::move(v)));
            pm.gains.assign(h.begin(), h.end());
            pm.signal_norm = std::sqrt(pm.mods.power());
            pm.source = cfg.alphabet();
            pm.notes = r.notes;
            pm.epsilon_used = r.epsilon_used;
            break;
        }
        case Method::AirComp:
            pm.codec = aircomp_codec(spec.kind, cfg.aircomp_guard);
            pm.codec.amplitude = peak / aircomp_peak(pm.codec, levels);
            pm.signal_norm = aircomp_signal_norm(pm.codec, levels, K);
            pm.source = "analog";
            break;
        case Method::Ofdma: {
            const auto base = named_modulation(cfg.alphabet(), K);
            check_dimensions(base, f);
            pm.mods = to_peak(base);
            pm.signal_norm = std::sqrt(pm.mods.power());
            pm.source = cfg.alphabet();
            break;
        }
        }
        if (m == Method::GChannelComp || m == Method::EChannelComp)
            pm.table = build_decoder(aggregate(pm.mods, f, pm.gains));
        if (!(pm.signal_norm > 0.0))
            throw NumericalError(std::string(to_string(m)) + ": transmit vector has zero norm");
        out.push_back(std::move(pm));
    }
    return out;
}

// The SNR reference: the first ChannelComp variant's transmit vector, else OFDMA's, else the analog one.
inline const PreparedMethod &snr_reference(const std::vector<PreparedMethod> &methods)
{
    for (auto want : {Method::GChannelComp, Method::EChannelComp, Method::Ofdma, Method::AirComp})
        for (const auto &pm : methods)
            if (pm.method == want)
                return pm;
    throw InvalidArgument("methods: empty");
}

// One noise level per SNR point for every method. Per trial: the inputs come from stream (seed, snr index, trial), so every method sees the
// same tuples, and each method's noise from (seed, snr index, trial, method).
inline SweepResult run_sweep(const ExperimentConfig &cfg, const SweepInputs &in = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    const auto spec = parse_function_spec(cfg.function);
    const auto levels = cfg.level_values();
    const FiniteFunction f = tabulate(spec, cfg.num_nodes, cfg.levels, levels);
    const std::size_t K = cfg.num_nodes, q = cfg.levels;

    SweepResult res;
    if (cfg.fading == FadingKind::Ideal) {
        res.h.assign(K, cplx(1.0));
    } else {
        const auto cv = sample_fading(K, cfg.channel_seed, cfg.fading);
        res.h = cv.h;
        res.fading_rejections = cv.rejected;
    }
    res.methods = prepare_methods(cfg, f, res.h, in);
    res.peak_amplitude = res.methods.front().peak_amplitude;
    const auto &ref = snr_reference(res.methods);
    res.reference_norm = ref.signal_norm;
    res.reference_method = ref.method;

    const std::size_t N = cfg.trials, nm = res.methods.size();
    for (std::size_t s = 0; s < cfg.snr_grid_db.size(); ++s) {
        const double snr = cfg.snr_grid_db[s];
        const double sigma = snr_to_sigma(snr, res.reference_norm);
        std::vector<double> truth(N);
        std::vector<std::vector<double>> est(nm, std::vector<double>(N));
        constexpr std::size_t block = 256;
        detail::parallel_for(
            (N + block - 1) / block,
            [&](std::size_t b) {
                std::vector<std::size_t> digits(K);
                std::vector<double> x(K), values(K);
                for (std::size_t t = b * block; t < std::min(N, (b + 1) * block); ++t) {
                    auto rng = detail::make_rng({cfg.seed, s, t});
                    if (cfg.input == InputMode::Discrete) {
                        std::uniform_int_distribution<std::size_t> u(0, q - 1);
                        for (std::size_t k = 0; k < K; ++k) {
                            digits[k] = u(rng);
                            x[k] = levels[digits[k]];
                        }
                    } else {
                        std::uniform_real_distribution<double> u(cfg.input_lo, cfg.input_hi);
                        for (std::size_t k = 0; k < K; ++k) {
                            x[k] = u(rng);
                            digits[k] = quantize(x[k], q, cfg.input_lo, cfg.input_hi);
                        }
                    }
                    const std::size_t i = tuple_to_index(digits, q);
                    truth[t] = cfg.input == InputMode::Discrete ? f[i] : evaluate(spec, x);
                    for (std::size_t mi = 0; mi < nm; ++mi) {
                        const auto &pm = res.methods[mi];
                        auto nrng = detail::make_rng({cfg.seed, s, t, static_cast<std::uint64_t>(pm.method) + 1});
                        ChannelConfig ch;
                        ch.noise_sigma = sigma;
                        switch (pm.method) {
                        case Method::GChannelComp:
                        case Method::EChannelComp: {
                            const cplx y = superpose(i, pm.mods, pm.gains) + complex_noise(sigma, nrng);
                            est[mi][t] = decode(y, pm.table);
                            break;
                        }
                        case Method::AirComp:
                            est[mi][t] = aircomp_estimate(x, pm.codec, ch, nrng);
                            break;
                        case Method::Ofdma:
                            est[mi][t] = ofdma_estimate(digits, f, pm.mods, ch, nrng);
                            break;
                        }
                    }
                }
            },
            cfg.workers);
        for (std::size_t mi = 0; mi < nm; ++mi) {
            const auto v = nmse(truth, est[mi], cfg.nmse_variant);
            NmseRecord r;
            r.snr_db = snr;
            r.method = res.methods[mi].method;
            r.function = cfg.function;
            r.num_nodes = K;
            r.levels = q;
            r.trials = N;
            r.seed = cfg.seed;
            r.bandwidth_uses = bandwidth_uses(r.method, K);
            r.nmse = v.value;
            r.excluded = v.excluded;
            res.records.push_back(std::move(r));
        }
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace chcomp

#endif
