// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_GRAM_HPP
#define CHCOMP_GRAM_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "detail/parallel.hpp"
#include "detail/rng.hpp"
#include "error.hpp"
#include "sdp.hpp"

namespace chcomp
{

using cplx = std::complex<double>;

// One outer step of the penalty loop.
struct DcStep
{
    int outer = 0;
    double theta = 0.0;        // penalised subproblem value at the new iterate
    double dc_objective = 0.0; // tr X - lambda_max(X); zero exactly at rank one
    double rank_ratio = 0.0;
    int inner_iterations = 0;
};

// Lifted solution X (or P) with the diagnostics needed to judge rank-one recovery.
struct GramSolution
{
    Eigen::MatrixXcd X;
    Eigen::VectorXd eigenvalues; // descending
    double rank_ratio = 0.0;     // lambda_2 / lambda_1
    double primal_residual = 0.0;
    double objective = 0.0;
    sdp::Status status = sdp::Status::MaxIterations;
    int iterations = 0;
    std::string stage; // "p3", "p3-min-trace", "p4-dc", "p6"
    std::vector<DcStep> dc_history;
    bool dc_converged = false;
    std::string dc_stop; // "converged", "stalled", "max-outer", "inner-solve-inaccurate"
    std::optional<std::size_t> infeasible_constraint;
};

inline double rank_ratio(const Eigen::VectorXd &descending)
{
    if (descending.size() < 2 || !(descending[0] > 0.0))
        return 0.0;
    return std::max(descending[1], 0.0) / descending[0];
}

inline GramSolution to_gram(const sdp::Solution<cplx> &s, std::string stage)
{
    GramSolution g;
    g.X = s.X;
    g.eigenvalues = s.eigenvalues;
    g.rank_ratio = rank_ratio(s.eigenvalues);
    g.primal_residual = s.primal_residual;
    g.objective = s.objective;
    g.status = s.status;
    g.iterations = s.iterations;
    g.stage = std::move(stage);
    g.infeasible_constraint = s.infeasible_constraint;
    return g;
}

enum class ExtractionMethod { CholeskyRank1, GaussianRandomization };

inline const char *to_string(ExtractionMethod m)
{
    return m == ExtractionMethod::CholeskyRank1 ? "cholesky-rank1" : "gaussian-randomization";
}

struct ExtractionOptions
{
    double rank_tol = 1e-3;
    std::size_t n_samples = 1000;
    std::uint64_t seed = 0;
    std::optional<double> power_cap; // ||x||^2 bound of the unlifted problem, if it has one
    bool renormalize = true;         // shrink to the cap when randomisation overshoots it
    std::size_t workers = 0;
};

struct ExtractionInfo
{
    ExtractionMethod method = ExtractionMethod::CholeskyRank1;
    std::size_t n_samples = 0;
    std::size_t best_candidate = 0;
    std::size_t degenerate_candidates = 0;
    double best_power = 0.0;  // ||x||^2 before any renormalisation
    double min_margin = 0.0;  // min_l |b_l^H x|^2 / gamma_l of the returned x
    double slack = 0.0;       // max(0, 1 - min_margin)
    bool power_cap_exceeded = false;
    bool renormalized = false;
};

struct Extracted
{
    Eigen::VectorXcd x;
    ExtractionInfo info;
};

// Rotates x so that its largest-magnitude entry (first one on near-ties) is real positive.
inline void canonicalize_phase(Eigen::VectorXcd &x)
{
    double top = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k)
        top = std::max(top, std::abs(x[k]));
    if (!(top > 0.0))
        return;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (std::abs(x[k]) >= top * (1.0 - 1e-9)) {
            x *= std::conj(x[k]) / std::abs(x[k]);
            x[k] = std::abs(x[k]);
            return;
        }
    }
}

// Rows b_l^H / sqrt(gamma_l), so that |row_l . x|^2 >= 1 is constraint l.
inline Eigen::MatrixXcd normalized_constraint_rows(const std::vector<Eigen::VectorXcd> &b, const std::vector<double> &gamma)
{
    if (b.size() != gamma.size())
        throw InvalidArgument("constraints: vectors and thresholds differ in count");
    if (b.empty())
        throw InvalidArgument("constraints: empty set");
    const auto n = b.front().size();
    Eigen::MatrixXcd R(static_cast<Eigen::Index>(b.size()), n);
    for (std::size_t l = 0; l < b.size(); ++l) {
        if (!(gamma[l] > 0.0))
            throw InvalidArgument("constraints: thresholds must be positive");
        R.row(static_cast<Eigen::Index>(l)) = b[l].adjoint() / std::sqrt(gamma[l]);
    }
    return R;
}

inline double min_margin(const Eigen::MatrixXcd &rows, const Eigen::VectorXcd &x)
{
    return (rows * x).cwiseAbs2().minCoeff();
}

// Recover a vector from a lifted solution. Near rank one the principal factor sqrt(l1) u1 is
// used. Otherwise candidates xi ~ CN(0, X) are drawn, each scaled until its tightest constraint
// holds with equality, and the least-power candidate wins. Candidate c draws from its own stream
// keyed by (seed, c), so the choice does not depend on the worker count.
inline Extracted extract_vector(const Eigen::MatrixXcd &X, const std::vector<Eigen::VectorXcd> &b,
                                const std::vector<double> &gamma, const ExtractionOptions &opt = {})
{
    const Eigen::MatrixXcd rows = normalized_constraint_rows(b, gamma);
    if (rows.cols() != X.rows())
        throw InvalidArgument("constraints: vector length does not match the lifted dimension");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es((X + X.adjoint()) / 2.0);
    const Eigen::VectorXd ev = es.eigenvalues().reverse();
    const Eigen::MatrixXcd V = es.eigenvectors().rowwise().reverse();
    if (!(ev[0] > 0.0))
        throw NumericalError("extraction: lifted solution is zero");

    Extracted out;
    if (rank_ratio(ev) <= opt.rank_tol) {
        out.info.method = ExtractionMethod::CholeskyRank1;
        out.x = std::sqrt(ev[0]) * V.col(0);
        out.info.best_power = out.x.squaredNorm();
    } else {
        if (opt.n_samples == 0)
            throw InvalidArgument("extraction: n_samples must be positive");
        out.info.method = ExtractionMethod::GaussianRandomization;
        out.info.n_samples = opt.n_samples;
        const Eigen::Index n = X.rows();
        const Eigen::MatrixXcd F = V * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
        constexpr std::size_t block = 64;
        const std::size_t nblocks = (opt.n_samples + block - 1) / block;
        std::vector<double> power(opt.n_samples, std::numeric_limits<double>::infinity());
        std::vector<Eigen::VectorXcd> cand(opt.n_samples);
        detail::parallel_for(
            nblocks,
            [&](std::size_t blk) {
                const std::size_t c0 = blk * block, c1 = std::min(opt.n_samples, c0 + block);
                Eigen::MatrixXcd Z(n, static_cast<Eigen::Index>(c1 - c0));
                for (std::size_t c = c0; c < c1; ++c) {
                    auto rng = detail::make_rng({opt.seed, 0x5A4D504Cull, c});
                    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double re = g(rng);
                        const double im = g(rng);
                        Z(k, static_cast<Eigen::Index>(c - c0)) = cplx(re, im);
                    }
                }
                const Eigen::MatrixXcd Xi = F * Z;
                const Eigen::MatrixXd margins = (rows * Xi).cwiseAbs2();
                for (std::size_t c = c0; c < c1; ++c) {
                    const auto col = static_cast<Eigen::Index>(c - c0);
                    const double t = margins.col(col).minCoeff();
                    if (!(t > 1e-300) || !std::isfinite(t))
                        continue;
                    cand[c] = Xi.col(col) / std::sqrt(t);
                    power[c] = cand[c].squaredNorm();
                }
            },
            opt.workers);
        std::size_t best = opt.n_samples;
        for (std::size_t c = 0; c < opt.n_samples; ++c) {
            if (!std::isfinite(power[c])) {
                ++out.info.degenerate_candidates;
                continue;
            }
            if (best == opt.n_samples || power[c] < power[best])
                best = c;
        }
        if (best == opt.n_samples)
            throw NumericalError("extraction: all " + std::to_string(opt.n_samples) +
                                 " randomised candidates are degenerate");
        out.x = cand[best];
        out.info.best_candidate = best;
        out.info.best_power = power[best];
    }

    if (opt.power_cap) {
        out.info.power_cap_exceeded = out.info.best_power > *opt.power_cap * (1.0 + 1e-9);
        if (out.info.power_cap_exceeded && opt.renormalize &&
            out.info.method == ExtractionMethod::GaussianRandomization) {
            out.x *= std::sqrt(*opt.power_cap / out.info.best_power);
            out.info.renormalized = true;
        }
    }
    canonicalize_phase(out.x);
    out.info.min_margin = min_margin(rows, out.x);
    out.info.slack = std::max(0.0, 1.0 - out.info.min_margin);
    return out;
}

} // namespace chcomp

#endif
