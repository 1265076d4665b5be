// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_BASELINES_HPP
#define CHCOMP_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "channel.hpp"
#include "constellation.hpp"
#include "error.hpp"
#include "functions.hpp"

namespace chcomp
{

// Analog computation of psi(sum_k phi(x_k)).
struct NomographicCodec
{
    FunctionKind kind = FunctionKind::Sum;
    double guard = 1e-3;       // product: phi(x) = ln(x + guard)
    double log_floor = 1e-300; // max: psi(u) = ln(max(u, log_floor))
    double amplitude = 1.0;    // transmitted value is amplitude * phi(x); the receiver divides it out

    double pre(double x) const { return amplitude * phi(x); }
    double post(double u) const { return psi(u / amplitude); }

    double phi(double x) const
    {
        switch (kind) {
        case FunctionKind::Sum: return x;
        case FunctionKind::QuadraticSum: return x * x;
        case FunctionKind::Product:
            if (!(x + guard > 0.0))
                throw InvalidArgument("aircomp: product codec needs x > -guard");
            return std::log(x + guard);
        case FunctionKind::Max: return std::exp(x);
        default: break;
        }
        throw InvalidArgument("aircomp: unsupported function");
    }

    double psi(double u) const
    {
        switch (kind) {
        case FunctionKind::Sum:
        case FunctionKind::QuadraticSum: return u;
        case FunctionKind::Product: return std::exp(u);
        case FunctionKind::Max: return std::log(std::max(u, log_floor));
        default: break;
        }
        throw InvalidArgument("aircomp: unsupported function");
    }
};

inline bool aircomp_supports(FunctionKind k)
{
    return k == FunctionKind::Sum || k == FunctionKind::QuadraticSum || k == FunctionKind::Product ||
           k == FunctionKind::Max;
}

inline NomographicCodec aircomp_codec(FunctionKind kind, double guard = 1e-3)
{
    if (!aircomp_supports(kind))
        throw InvalidArgument("aircomp: supports sum, quadratic-sum, product and max only");
    if (!(guard > 0.0))
        throw InvalidArgument("aircomp: guard must be positive");
    NomographicCodec c;
    c.kind = kind;
    c.guard = guard;
    return c;
}

// Largest |phi(v)| over the input levels; phi is monotone, so this is the peak over [v_0, v_last].
inline double aircomp_peak(const NomographicCodec &codec, std::span<const double> level_values)
{
    double a = 0.0;
    for (double v : level_values)
        a = std::max(a, std::abs(codec.phi(v)));
    return a;
}

// Norm of the analog transmit alphabet over all K nodes.
inline double aircomp_signal_norm(const NomographicCodec &codec, std::span<const double> level_values, std::size_t num_nodes)
{
    double s = 0.0;
    for (double v : level_values)
        s += codec.pre(v) * codec.pre(v);
    return std::sqrt(static_cast<double>(num_nodes) * s);
}

// Receives sum_k g_k phi(x_k) + z with channel inversion and decodes psi(Re y).
template <typename Rng>
double aircomp_estimate(std::span<const double> inputs, const NomographicCodec &codec, const ChannelConfig &cfg, Rng &rng)
{
    ChannelConfig inv = cfg;
    inv.power_control = PowerControl::ChannelInversion;
    const auto g = effective_gains(inv, inputs.size());
    cplx y = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k)
        y += g[k] * codec.pre(inputs[k]);
    y += complex_noise(cfg.noise_sigma, rng);
    return codec.post(y.real());
}

// Each node on its own orthogonal channel with the same noise level; per-node nearest-symbol
// detection, then f on the detected levels.
template <typename Rng>
double ofdma_estimate(std::span<const std::size_t> digits, const FiniteFunction &f, const ModulationSet &mods,
                      const ChannelConfig &cfg, Rng &rng)
{
    check_dimensions(mods, f);
    if (digits.size() != f.num_nodes())
        throw InvalidArgument("ofdma: expected one digit per node");
    ChannelConfig inv = cfg;
    inv.power_control = PowerControl::ChannelInversion;
    const auto g = effective_gains(inv, f.num_nodes());
    const std::size_t q = f.levels();
    std::vector<std::size_t> detected(digits.size());
    for (std::size_t k = 0; k < digits.size(); ++k) {
        if (digits[k] >= q)
            throw InvalidArgument("ofdma: digit out of range");
        const cplx y = g[k] * mods.symbol(k, digits[k]) + complex_noise(cfg.noise_sigma, rng);
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < q; ++l) {
            const double d = std::norm(y - g[k] * mods.symbol(k, l));
            if (d < bd) {
                bd = d;
                best = l;
            }
        }
        detected[k] = best;
    }
    return f[tuple_to_index(detected, q)];
}

enum class Method { GChannelComp, EChannelComp, AirComp, Ofdma };

inline const char *to_string(Method m)
{
    switch (m) {
    case Method::GChannelComp: return "g-channelcomp";
    case Method::EChannelComp: return "e-channelcomp";
    case Method::AirComp: return "aircomp";
    case Method::Ofdma: return "ofdma";
    }
    return "?";
}

inline Method parse_method(const std::string &s)
{
    if (s == "g-channelcomp") return Method::GChannelComp;
    if (s == "e-channelcomp") return Method::EChannelComp;
    if (s == "aircomp") return Method::AirComp;
    if (s == "ofdma") return Method::Ofdma;
    throw InvalidArgument("method: unknown '" + s + "' (g-channelcomp, e-channelcomp, aircomp, ofdma)");
}

// Channel uses per computation: OFDMA needs one orthogonal slot per node.
inline std::size_t bandwidth_uses(Method m, std::size_t num_nodes) { return m == Method::Ofdma ? num_nodes : 1; }

} // namespace chcomp

#endif
