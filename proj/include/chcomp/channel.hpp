// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_CHANNEL_HPP
#define CHCOMP_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "constellation.hpp"
#include "detail/rng.hpp"
#include "error.hpp"

namespace chcomp
{

// Channel inversion refuses coefficients at or below this magnitude.
inline constexpr double kDeepFadeThreshold = 1e-9;

enum class FadingKind { Ideal, RealGaussian, ComplexRayleigh, Fixed };
enum class PowerControl { None, ChannelInversion, Explicit };

inline const char *to_string(FadingKind k)
{
    switch (k) {
    case FadingKind::Ideal: return "ideal";
    case FadingKind::RealGaussian: return "gaussian";
    case FadingKind::ComplexRayleigh: return "complex-rayleigh";
    case FadingKind::Fixed: return "fixed";
    }
    return "?";
}

// "rayleigh" names the real standard-normal draws used throughout the experiments.
inline FadingKind parse_fading(const std::string &s)
{
    if (s == "ideal") return FadingKind::Ideal;
    if (s == "gaussian" || s == "rayleigh" || s == "real-gaussian") return FadingKind::RealGaussian;
    if (s == "complex-rayleigh") return FadingKind::ComplexRayleigh;
    if (s == "fixed") return FadingKind::Fixed;
    throw InvalidArgument("channel: unknown fading '" + s + "' (ideal, gaussian, rayleigh, complex-rayleigh, fixed)");
}

struct ChannelVector
{
    std::vector<cplx> h;
    std::size_t rejected = 0; // deep-fade draws discarded while sampling
};

struct ChannelConfig
{
    double noise_sigma = 1.0; // total complex variance is noise_sigma^2
    FadingKind fading = FadingKind::Ideal;
    std::vector<cplx> h;       // used when fading is Fixed (or after sampling)
    PowerControl power_control = PowerControl::None;
    std::vector<cplx> p;       // used when power_control is Explicit

    void validate(std::size_t num_nodes) const
    {
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
            throw InvalidArgument("channel: noise_sigma must be finite and non-negative");
        if (fading != FadingKind::Ideal && h.size() != num_nodes)
            throw InvalidArgument("channel: expected " + std::to_string(num_nodes) + " coefficients, got " +
                                  std::to_string(h.size()));
        if (power_control == PowerControl::Explicit && p.size() != num_nodes)
            throw InvalidArgument("channel: expected " + std::to_string(num_nodes) + " power scalars, got " +
                                  std::to_string(p.size()));
        if (power_control == PowerControl::ChannelInversion && fading != FadingKind::Ideal)
            for (std::size_t k = 0; k < h.size(); ++k)
                if (std::abs(h[k]) <= kDeepFadeThreshold)
                    throw InvalidArgument("channel: inversion requested but |h_" + std::to_string(k + 1) +
                                          "| is below 1e-9");
    }
};

// SNR = 20 log10(||x|| / sigma).
inline double snr_to_sigma(double snr_db, double signal_norm)
{
    if (!(signal_norm > 0.0) || !std::isfinite(signal_norm))
        throw InvalidArgument("snr: signal norm must be positive");
    return signal_norm / std::pow(10.0, snr_db / 20.0);
}

// K real N(0,1) coefficients from the stream keyed by seed; deep fades are redrawn.
inline ChannelVector sample_fading(std::size_t num_nodes, std::uint64_t seed, FadingKind kind = FadingKind::RealGaussian)
{
    if (num_nodes == 0)
        throw InvalidArgument("fading: need at least one node");
    auto rng = detail::make_rng({seed, 0x4641444Eull});
    ChannelVector out;
    out.h.resize(num_nodes);
    if (kind == FadingKind::Ideal) {
        std::fill(out.h.begin(), out.h.end(), cplx(1.0));
        return out;
    }
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto &h : out.h) {
        while (true) {
            h = kind == FadingKind::ComplexRayleigh ? cplx(g(rng), g(rng)) / std::sqrt(2.0) : cplx(g(rng), 0.0);
            if (std::abs(h) > kDeepFadeThreshold)
                break;
            ++out.rejected;
        }
    }
    return out;
}

inline std::vector<cplx> channel_coefficients(const ChannelConfig &cfg, std::size_t num_nodes)
{
    if (cfg.fading == FadingKind::Ideal)
        return std::vector<cplx>(num_nodes, cplx(1.0));
    return cfg.h;
}

// p_k = conj(h_k) / |h_k|^2, so that h_k p_k = 1.
inline std::vector<cplx> inversion_powers(std::span<const cplx> h)
{
    std::vector<cplx> p(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double a = std::norm(h[k]);
        if (!(std::abs(h[k]) > kDeepFadeThreshold))
            throw InvalidArgument("channel: cannot invert |h_" + std::to_string(k + 1) + "| below 1e-9");
        p[k] = std::conj(h[k]) / a;
    }
    return p;
}

// Per-node end-to-end gains h_k p_k.
inline std::vector<cplx> effective_gains(const ChannelConfig &cfg, std::size_t num_nodes)
{
    cfg.validate(num_nodes);
    const auto h = channel_coefficients(cfg, num_nodes);
    std::vector<cplx> g(num_nodes);
    switch (cfg.power_control) {
    case PowerControl::None:
        g = h;
        break;
    case PowerControl::ChannelInversion:
        // exact: the product h_k conj(h_k)/|h_k|^2 is replaced by its value
        std::fill(g.begin(), g.end(), cplx(1.0));
        break;
    case PowerControl::Explicit:
        for (std::size_t k = 0; k < num_nodes; ++k)
            g[k] = h[k] * cfg.p[k];
        break;
    }
    return g;
}

// Circularly symmetric: real and imaginary parts each N(0, sigma^2 / 2).
template <typename Rng>
cplx complex_noise(double sigma, Rng &rng)
{
    if (sigma == 0.0)
        return 0.0;
    std::normal_distribution<double> g(0.0, sigma / std::sqrt(2.0));
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

// Noise-free superposition of tuple i under the given gains.
inline cplx superpose(std::size_t i, const ModulationSet &mods, std::span<const cplx> gains)
{
    const std::size_t K = mods.num_nodes(), q = mods.levels();
    if (gains.size() != K)
        throw InvalidArgument("gains: expected one entry per node");
    if (i >= domain_size(K, q))
        throw InvalidArgument("tuple index " + std::to_string(i) + " out of range");
    cplx s = 0.0;
    for (std::size_t k = K; k-- > 0;) {
        s += gains[k] * mods.symbol(k, i % q);
        i /= q;
    }
    return s;
}

// y = sum_k h_k p_k x_k[digit_k(i)] + z.
template <typename Rng>
cplx transmit(std::size_t i, const ModulationSet &mods, const ChannelConfig &cfg, Rng &rng)
{
    const auto g = effective_gains(cfg, mods.num_nodes());
    return superpose(i, mods, g) + complex_noise(cfg.noise_sigma, rng);
}

} // namespace chcomp

#endif
