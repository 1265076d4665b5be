// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "chcomp/sdp.hpp"
#include "oracles.hpp"

using namespace chcomp;
using chcomp::sdp::cplx;

namespace
{

template <typename Scalar>
sdp::Constraint<Scalar> rank_one(std::initializer_list<Scalar> b, double gamma)
{
    sdp::Vector<Scalar> v(static_cast<Eigen::Index>(b.size()));
    Eigen::Index k = 0;
    for (auto x : b)
        v[k++] = x;
    return {{v}, gamma};
}

template <typename Scalar>
void expect_psd_hermitian(const sdp::Solution<Scalar> &s)
{
    const double scale = std::max(1.0, s.X.norm());
    EXPECT_LE((s.X - s.X.adjoint()).norm(), 1e-12 * scale);
    const double lmax = std::max(s.eigenvalues[0], 0.0);
    EXPECT_GE(s.eigenvalues.minCoeff(), -1e-8 * std::max(lmax, 1e-300));
}

Eigen::VectorXcd random_cvec(std::mt19937_64 &rng, int n)
{
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(n);
    for (int k = 0; k < n; ++k)
        v[k] = cplx(g(rng), g(rng));
    return v;
}

Eigen::VectorXd random_rvec(std::mt19937_64 &rng, int n)
{
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (int k = 0; k < n; ++k)
        v[k] = g(rng);
    return v;
}

} // namespace

TEST(Sdp, ForcedScalarPoint)
{
    sdp::Problem<double> p;
    p.dim = 1;
    p.objective = Eigen::MatrixXd::Identity(1, 1);
    p.constraints.push_back(rank_one<double>({1.0}, 1.0));
    p.trace_cap = 1.0;
    const auto s = sdp::solve(p);
    ASSERT_EQ(s.status, sdp::Status::Solved);
    EXPECT_NEAR(s.X(0, 0), 1.0, 1e-5);
    EXPECT_LE(s.primal_residual, 1e-6);
}

TEST(Sdp, DiagonalDecoupling)
{
    sdp::Problem<cplx> p;
    p.dim = 2;
    p.objective = Eigen::MatrixXcd::Identity(2, 2);
    p.constraints.push_back(rank_one<cplx>({1.0, 0.0}, 1.0));
    p.constraints.push_back(rank_one<cplx>({0.0, 1.0}, 1.0));
    const auto s = sdp::solve(p);
    ASSERT_EQ(s.status, sdp::Status::Solved);
    EXPECT_NEAR(s.objective, 2.0, 1e-4);
    EXPECT_LE((s.X - Eigen::MatrixXcd::Identity(2, 2)).norm(), 1e-3);
    expect_psd_hermitian(s);
}

// Two-node binary sum with thresholds |f_i - f_j|^2 / 4; the PAM point (0, 1, 0, 1)/2 meets all of
// them with equality, so the feasibility problem under tr X <= 1 has a solution with margin.
TEST(Sdp, BinarySumFeasibility)
{
    const double f[4] = {0, 1, 1, 2};
    auto row = [](int i) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(4);
        a[(i >> 1) & 1] = 1.0;
        a[2 + (i & 1)] = 1.0;
        return a;
    };
    sdp::Problem<double> p;
    p.dim = 4;
    p.trace_cap = 1.0;
    Eigen::VectorXd witness(4);
    witness << 0.0, 0.5, 0.0, 0.5;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (f[i] != f[j]) {
                const Eigen::VectorXd d = row(i) - row(j);
                const double gamma = 0.25 * (f[i] - f[j]) * (f[i] - f[j]);
                EXPECT_GE(std::pow(d.dot(witness), 2), gamma - 1e-15);
                p.constraints.push_back({{d}, gamma});
            }
    const auto s = sdp::solve(p);
    ASSERT_EQ(s.status, sdp::Status::Solved);
    EXPECT_LE(s.primal_residual, 1e-6);
    expect_psd_hermitian(s);
}

TEST(Sdp, TraceCapInfeasibleIsCertified)
{
    sdp::Problem<double> p;
    p.dim = 2;
    p.trace_cap = 1.0;
    p.constraints.push_back(rank_one<double>({1.0, 0.0}, 1.0));
    p.constraints.push_back(rank_one<double>({0.0, 1.0}, 1.0));
    const auto s = sdp::solve(p);
    EXPECT_EQ(s.status, sdp::Status::Infeasible);
    EXPECT_FALSE(s.converged);
}

TEST(Sdp, ZeroConstraintVectorIsInfeasible)
{
    sdp::Problem<cplx> p;
    p.dim = 2;
    p.objective = Eigen::MatrixXcd::Identity(2, 2);
    p.constraints.push_back(rank_one<cplx>({1.0, 0.0}, 1.0));
    p.constraints.push_back(rank_one<cplx>({0.0, 0.0}, 0.5));
    const auto s = sdp::solve(p);
    EXPECT_EQ(s.status, sdp::Status::Infeasible);
    ASSERT_TRUE(s.infeasible_constraint.has_value());
    EXPECT_EQ(*s.infeasible_constraint, 1u);
}

TEST(Sdp, VacuousConstraintsAreIgnored)
{
    sdp::Problem<double> p;
    p.dim = 2;
    p.objective = Eigen::MatrixXd::Identity(2, 2);
    p.constraints.push_back(rank_one<double>({1.0, 1.0}, 2.0));
    p.constraints.push_back(rank_one<double>({0.0, 0.0}, 0.0));
    p.constraints.push_back(rank_one<double>({3.0, 0.0}, -1.0));
    sdp::Solver<double> solver(p);
    EXPECT_EQ(solver.num_constraints(), 1u);
    const auto s = solver.solve();
    ASSERT_EQ(s.status, sdp::Status::Solved);
    EXPECT_NEAR(s.objective, 1.0, 1e-4);
}

TEST(Sdp, ProblemValidation)
{
    sdp::Problem<double> p;
    EXPECT_THROW(sdp::solve(p), InvalidArgument);
    p.dim = 2;
    p.constraints.push_back(rank_one<double>({1.0}, 1.0));
    EXPECT_THROW(sdp::solve(p), InvalidArgument);
    p.constraints.clear();
    p.trace_cap = -1.0;
    EXPECT_THROW(sdp::solve(p), InvalidArgument);
    p.trace_cap.reset();
    p.constraints.push_back(rank_one<double>({1.0, 0.0}, std::nan("")));
    EXPECT_THROW(sdp::solve(p), InvalidArgument);
}

class SdpOracle : public ::testing::TestWithParam<int>
{
};

TEST_P(SdpOracle, ComplexMinTraceMatchesOracle)
{
    std::mt19937_64 rng(1000 + GetParam());
    const int n = 3 + GetParam() % 4;
    const int m = 5 + (GetParam() * 7) % 16;
    std::uniform_real_distribution<double> ug(0.2, 2.0);
    sdp::Problem<cplx> p;
    p.dim = static_cast<std::size_t>(n);
    p.objective = Eigen::MatrixXcd::Identity(n, n);
    std::vector<Eigen::VectorXcd> bs;
    std::vector<double> gs;
    for (int l = 0; l < m; ++l) {
        bs.push_back(random_cvec(rng, n));
        gs.push_back(ug(rng));
        p.constraints.push_back({{bs.back()}, gs.back()});
    }
    const auto s = sdp::solve(p);
    ASSERT_EQ(s.status, sdp::Status::Solved);
    expect_psd_hermitian(s);
    // the oracle's dual value bounds the optimum from below, a feasible X bounds it from above
    const auto ref = oracle::min_trace_oracle(bs, gs);
    EXPECT_GE(s.objective, ref.lower * (1.0 - 1e-6));
    EXPECT_LE(s.objective, ref.lower * (1.0 + 1e-3));
    EXPECT_LE(s.objective, ref.upper * (1.0 + 1e-6));
    // X may violate constraints by tol_feas, which lets the bound exceed the objective slightly
    EXPECT_LE(s.dual_bound, s.objective * (1.0 + 1e-6) + 1e-9);
}

TEST_P(SdpOracle, RealMinTraceMatchesOracle)
{
    std::mt19937_64 rng(2000 + GetParam());
    const int n = 3 + GetParam() % 6;
    const int m = 4 + (GetParam() * 5) % 17;
    std::uniform_real_distribution<double> ug(0.5, 1.5);
    sdp::Problem<double> p;
    p.dim = static_cast<std::size_t>(n);
    p.objective = Eigen::MatrixXd::Identity(n, n);
    std::vector<Eigen::VectorXd> bs;
    std::vector<double> gs;
    for (int l = 0; l < m; ++l) {
        bs.push_back(random_rvec(rng, n));
        gs.push_back(ug(rng));
        p.constraints.push_back({{bs.back()}, gs.back()});
    }
    const auto s = sdp::solve(p);
    ASSERT_EQ(s.status, sdp::Status::Solved);
    // the oracle's dual value bounds the optimum from below, a feasible X bounds it from above
    const auto ref = oracle::min_trace_oracle(bs, gs);
    EXPECT_GE(s.objective, ref.lower * (1.0 - 1e-6));
    EXPECT_LE(s.objective, ref.lower * (1.0 + 1e-3));
    EXPECT_LE(s.objective, ref.upper * (1.0 + 1e-6));
}

INSTANTIATE_TEST_SUITE_P(Random, SdpOracle, ::testing::Range(0, 8));

TEST(Sdp, ProximalTermGapIsCertified)
{
    std::mt19937_64 rng(42);
    const int n = 6;
    sdp::Problem<cplx> p;
    p.dim = n;
    p.mu = 1e-2;
    p.trace_cap = 1.0;
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXcd v = random_cvec(rng, n);
        G += v * v.adjoint() / v.squaredNorm();
    }
    p.objective = Eigen::MatrixXcd::Identity(n, n) - G / 3.0;
    for (int l = 0; l < 10; ++l) {
        Eigen::VectorXcd b = random_cvec(rng, n);
        p.constraints.push_back({{b}, 0.05 * b.squaredNorm() / n});
    }
    const auto s = sdp::solve(p);
    ASSERT_EQ(s.status, sdp::Status::Solved);
    EXPECT_LE(s.primal_residual, 1e-6);
    EXPECT_LE(s.dual_bound, s.objective + 1e-6 * std::max(1.0, std::abs(s.objective)));
    EXPECT_LE(s.objective - s.dual_bound, 1e-5 * std::max(1.0, std::abs(s.objective)));
}

TEST(Sdp, ResidualTailSettlesBelowTolerance)
{
    std::mt19937_64 rng(5);
    sdp::Problem<double> p;
    p.dim = 5;
    p.objective = Eigen::MatrixXd::Identity(5, 5);
    for (int l = 0; l < 12; ++l)
        p.constraints.push_back({{random_rvec(rng, 5)}, 1.0});
    const auto s = sdp::solve(p);
    ASSERT_EQ(s.status, sdp::Status::Solved);
    ASSERT_FALSE(s.residual_history.empty());
    const std::size_t tail = std::max<std::size_t>(1, s.residual_history.size() / 10);
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.residual_history.size(); ++k) {
        running = std::min(running, s.residual_history[k]);
        if (k + tail >= s.residual_history.size()) {
            EXPECT_LE(s.residual_history[k], 10.0 * std::max(running, 1e-6));
        }
    }
    EXPECT_LE(s.residual_history.back(), 1e-6);
}

TEST(Sdp, WarmStartReusesState)
{
    std::mt19937_64 rng(9);
    sdp::Problem<double> p;
    p.dim = 6;
    p.objective = Eigen::MatrixXd::Identity(6, 6);
    p.mu = 1e-3;
    for (int l = 0; l < 15; ++l)
        p.constraints.push_back({{random_rvec(rng, 6)}, 1.0});
    sdp::Solver<double> solver(p);
    const auto cold = solver.solve();
    ASSERT_EQ(cold.status, sdp::Status::Solved);
    const auto warm = solver.solve({}, &cold.state);
    ASSERT_EQ(warm.status, sdp::Status::Solved);
    EXPECT_LE(warm.iterations, cold.iterations);
    EXPECT_NEAR(warm.objective, cold.objective, 1e-4 * std::abs(cold.objective));
}

TEST(Sdp, DeterministicAcrossRuns)
{
    std::mt19937_64 rng(77);
    sdp::Problem<cplx> p;
    p.dim = 4;
    p.objective = Eigen::MatrixXcd::Identity(4, 4);
    for (int l = 0; l < 8; ++l)
        p.constraints.push_back({{random_cvec(rng, 4)}, 1.0});
    const auto a = sdp::solve(p);
    const auto b = sdp::solve(p);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ((a.X - b.X).norm(), 0.0);
}

TEST(Realify, IdentityObjective)
{
    sdp::Problem<cplx> p;
    p.dim = 3;
    p.objective = Eigen::MatrixXcd::Identity(3, 3);
    const auto r = sdp::realify(p);
    EXPECT_EQ(r.dim, 6u);
    EXPECT_EQ((r.objective - Eigen::MatrixXd::Identity(6, 6)).norm(), 0.0);
}

TEST(Realify, ConstraintVectorPair)
{
    sdp::Problem<cplx> p;
    p.dim = 2;
    p.constraints.push_back(rank_one<cplx>({cplx(1, 0), cplx(0, 1)}, 0.7));
    const auto r = sdp::realify(p);
    ASSERT_EQ(r.constraints.size(), 1u);
    ASSERT_EQ(r.constraints[0].factors.size(), 2u);
    EXPECT_DOUBLE_EQ(r.constraints[0].gamma, 1.4);
    Eigen::VectorXd u(4), v(4);
    u << 1, 0, 0, 1;
    v << 0, -1, 1, 0;
    EXPECT_EQ((r.constraints[0].factors[0] - u).norm(), 0.0);
    EXPECT_EQ((r.constraints[0].factors[1] - v).norm(), 0.0);
}

TEST(Realify, RoundTripAndInnerProductScale)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 5;
        Eigen::MatrixXcd L(n, n);
        for (int c = 0; c < n; ++c)
            L.col(c) = random_cvec(rng, n);
        const Eigen::MatrixXcd X = L * L.adjoint();
        const Eigen::MatrixXd R = sdp::realify(X);
        EXPECT_LE((sdp::derealify(R) - X).norm(), 1e-12 * X.norm());
        const Eigen::VectorXcd b = random_cvec(rng, n);
        Eigen::VectorXd u(2 * n), v(2 * n);
        u << b.real(), b.imag();
        v << -b.imag(), b.real();
        const double complex_ip = std::real(b.dot(X * b));
        EXPECT_NEAR(u.dot(R * u) + v.dot(R * v), 2.0 * complex_ip, 1e-10 * std::abs(complex_ip));
        EXPECT_NEAR(R.trace(), 2.0 * std::real(X.trace()), 1e-10 * R.norm());
    }
}

TEST(Realify, SolvesToTwiceTheComplexObjective)
{
    std::mt19937_64 rng(21);
    sdp::Problem<cplx> p;
    p.dim = 4;
    p.objective = Eigen::MatrixXcd::Identity(4, 4);
    for (int l = 0; l < 10; ++l)
        p.constraints.push_back({{random_cvec(rng, 4)}, 1.0});
    const auto c = sdp::solve(p);
    const auto r = sdp::solve(sdp::realify(p));
    ASSERT_EQ(c.status, sdp::Status::Solved);
    ASSERT_EQ(r.status, sdp::Status::Solved);
    EXPECT_NEAR(r.objective / (2.0 * c.objective), 1.0, 1e-3);
    const Eigen::MatrixXcd back = sdp::derealify(r.X);
    for (const auto &con : p.constraints) {
        const auto &b = con.factors[0];
        EXPECT_GE(std::real(b.dot(back * b)), con.gamma * (1.0 - 1e-5));
    }
}

TEST(SdpDump, RoundTrip)
{
    std::mt19937_64 rng(8);
    sdp::Problem<cplx> p;
    p.dim = 3;
    p.mu = 0.25;
    p.trace_cap = 2.0;
    p.objective = Eigen::MatrixXcd::Identity(3, 3);
    p.objective(0, 1) = cplx(0.5, -0.25);
    p.objective(1, 0) = cplx(0.5, 0.25);
    for (int l = 0; l < 4; ++l)
        p.constraints.push_back({{random_cvec(rng, 3)}, 0.1 * (l + 1)});
    std::stringstream ss;
    sdp::write_dump(ss, p);
    const auto q = sdp::read_dump<cplx>(ss);
    EXPECT_EQ(q.dim, p.dim);
    EXPECT_EQ(q.mu, p.mu);
    EXPECT_EQ(*q.trace_cap, *p.trace_cap);
    EXPECT_EQ((q.objective - p.objective).norm(), 0.0);
    ASSERT_EQ(q.constraints.size(), p.constraints.size());
    for (std::size_t l = 0; l < p.constraints.size(); ++l) {
        EXPECT_EQ(q.constraints[l].gamma, p.constraints[l].gamma);
        EXPECT_EQ((q.constraints[l].factors[0] - p.constraints[l].factors[0]).norm(), 0.0);
    }
}

TEST(SdpDump, RejectsFieldMismatch)
{
    sdp::Problem<double> p;
    p.dim = 1;
    p.constraints.push_back(rank_one<double>({1.0}, 1.0));
    std::stringstream ss;
    sdp::write_dump(ss, p);
    EXPECT_THROW(sdp::read_dump<cplx>(ss), InvalidArgument);
}
