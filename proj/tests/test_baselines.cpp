// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <random>

#include "chcomp/baselines.hpp"
#include "chcomp/detail/rng.hpp"

using namespace chcomp;

namespace
{

ChannelConfig noiseless()
{
    ChannelConfig c;
    c.noise_sigma = 0.0;
    return c;
}

} // namespace

TEST(Baselines, NoiselessAirCompExamples)
{
    auto rng = detail::make_rng({0});
    const auto sum = aircomp_codec(FunctionKind::Sum);
    EXPECT_DOUBLE_EQ(aircomp_estimate(std::vector<double>{1, 2, 3, 0}, sum, noiseless(), rng), 6.0);

    const auto mx = aircomp_codec(FunctionKind::Max);
    EXPECT_NEAR(aircomp_estimate(std::vector<double>{0, 0, 7, 0}, mx, noiseless(), rng), std::log(3.0 + std::exp(7.0)), 1e-9);

    const auto qs = aircomp_codec(FunctionKind::QuadraticSum);
    EXPECT_DOUBLE_EQ(aircomp_estimate(std::vector<double>{1, 2, 3}, qs, noiseless(), rng), 14.0);

    // the guard biases the product: prod(x + c) instead of prod(x)
    const auto pr = aircomp_codec(FunctionKind::Product, 1e-3);
    const double got = aircomp_estimate(std::vector<double>{1, 2, 3, 4}, pr, noiseless(), rng);
    EXPECT_NEAR(got, 1.001 * 2.001 * 3.001 * 4.001, 1e-9);
    EXPECT_LT(std::abs(got - 24.0), 0.06);
}

TEST(Baselines, AmplitudeIsDividedOutAtTheReceiver)
{
    auto rng = detail::make_rng({0});
    auto c = aircomp_codec(FunctionKind::Max);
    const std::vector<double> x{1, 2, 0};
    const double base = aircomp_estimate(x, c, noiseless(), rng);
    c.amplitude = 0.01;
    EXPECT_NEAR(aircomp_estimate(x, c, noiseless(), rng), base, 1e-12);
    EXPECT_DOUBLE_EQ(c.pre(1.0), 0.01 * std::exp(1.0));
}

TEST(Baselines, MaxBiasIsBetweenZeroAndLogK)
{
    auto rng = detail::make_rng({1});
    std::uniform_int_distribution<int> u(0, 7);
    const auto c = aircomp_codec(FunctionKind::Max);
    for (std::size_t K = 1; K <= 8; ++K)
        for (int t = 0; t < 50; ++t) {
            std::vector<double> x(K);
            for (auto &v : x)
                v = u(rng);
            const double m = *std::max_element(x.begin(), x.end());
            const double bias = aircomp_estimate(x, c, noiseless(), rng) - m;
            EXPECT_GE(bias, -1e-12);
            EXPECT_LE(bias, std::log(static_cast<double>(K)) + 1e-12);
        }
}

TEST(Baselines, SumEstimateIsUnbiasedUnderNoise)
{
    ChannelConfig ch;
    ch.noise_sigma = 1.0;
    auto rng = detail::make_rng({2});
    const auto c = aircomp_codec(FunctionKind::Sum);
    const std::vector<double> x{1, 2, 3, 0};
    const int n = 20000;
    double mean = 0.0, sq = 0.0;
    for (int t = 0; t < n; ++t) {
        const double e = aircomp_estimate(x, c, ch, rng) - 6.0;
        mean += e;
        sq += e * e;
    }
    mean /= n;
    sq /= n;
    // only the real half of the noise reaches the estimate
    EXPECT_LT(std::abs(mean), 5.0 * std::sqrt(0.5 / n));
    EXPECT_NEAR(sq, 0.5, 0.03);
}

TEST(Baselines, CodecArguments)
{
    EXPECT_THROW(aircomp_codec(FunctionKind::WeightedSum), InvalidArgument);
    EXPECT_THROW(aircomp_codec(FunctionKind::Product, 0.0), InvalidArgument);
    EXPECT_THROW(aircomp_codec(FunctionKind::Product).phi(-1.0), InvalidArgument);
    EXPECT_FALSE(aircomp_supports(FunctionKind::Fractional));
    EXPECT_TRUE(aircomp_supports(FunctionKind::QuadraticSum));
    // floored log for non-positive analog sums
    EXPECT_NEAR(aircomp_codec(FunctionKind::Max).post(-5.0), std::log(1e-300), 1e-9);
}

TEST(Baselines, PeakAndSignalNorm)
{
    const std::vector<double> lv{0, 1, 2, 3};
    const auto mx = aircomp_codec(FunctionKind::Max);
    EXPECT_DOUBLE_EQ(aircomp_peak(mx, lv), std::exp(3.0));
    const auto pr = aircomp_codec(FunctionKind::Product);
    EXPECT_DOUBLE_EQ(aircomp_peak(pr, lv), std::abs(std::log(1e-3)));
    const auto s = aircomp_codec(FunctionKind::Sum);
    EXPECT_DOUBLE_EQ(aircomp_signal_norm(s, lv, 2), std::sqrt(2.0 * 14.0));
}

TEST(Baselines, OfdmaIsExactWithoutNoise)
{
    const auto f = tabulate(FunctionSpec::product(), 3, 4);
    const auto mods = named_modulation("pam4", 3);
    auto rng = detail::make_rng({3});
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto d = index_to_tuple(i, 3, 4);
        ASSERT_DOUBLE_EQ(ofdma_estimate(d, f, mods, noiseless(), rng), f[i]);
    }
    EXPECT_THROW(ofdma_estimate(std::vector<std::size_t>{0, 1}, f, mods, noiseless(), rng), InvalidArgument);
    EXPECT_THROW(ofdma_estimate(std::vector<std::size_t>{0, 1, 4}, f, mods, noiseless(), rng), InvalidArgument);
}

TEST(Baselines, OfdmaDegradesThenSaturatesWithNoise)
{
    const auto f = tabulate(FunctionSpec::sum(), 2, 4);
    const auto mods = named_modulation("pam4", 2);
    auto error_rate = [&](double sigma) {
        ChannelConfig ch;
        ch.noise_sigma = sigma;
        auto rng = detail::make_rng({4});
        int wrong = 0;
        for (int t = 0; t < 4000; ++t) {
            const std::vector<std::size_t> d{static_cast<std::size_t>(t % 4), static_cast<std::size_t>((t / 4) % 4)};
            wrong += ofdma_estimate(d, f, mods, ch, rng) != f[tuple_to_index(d, 4)];
        }
        return wrong / 4000.0;
    };
    const double lo = error_rate(0.1), mid = error_rate(1.0), hi = error_rate(100.0);
    EXPECT_LT(lo, 1e-3);
    EXPECT_LT(lo, mid);
    EXPECT_GT(hi, 0.7);
    EXPECT_LT(hi, 1.0);
}

TEST(Baselines, MethodNamesAndBandwidth)
{
    for (auto m : {Method::GChannelComp, Method::EChannelComp, Method::AirComp, Method::Ofdma})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_THROW(parse_method("tdma"), InvalidArgument);
    EXPECT_EQ(bandwidth_uses(Method::Ofdma, 5), 5u);
    EXPECT_EQ(bandwidth_uses(Method::GChannelComp, 5), 1u);
    EXPECT_EQ(bandwidth_uses(Method::AirComp, 5), 1u);
}
