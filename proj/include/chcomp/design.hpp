// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_DESIGN_HPP
#define CHCOMP_DESIGN_HPP

#include <chrono>
#include <cstring>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "constellation.hpp"
#include "error.hpp"
#include "functions.hpp"
#include "gram.hpp"
#include "sdp.hpp"

namespace chcomp
{

// Separation requirement |s_i - s_j|^2 >= gamma between the received points of tuples i < j.
struct ConstraintPair
{
    std::size_t i, j;
    double gamma;
};

struct ConstraintSet
{
    double epsilon = 0.0;
    std::size_t num_nodes = 0, levels = 0;
    std::vector<ConstraintPair> pairs;
    std::size_t raw_pairs = 0; // pairs with f_i != f_j before collapsing equal difference rows

    std::size_t dim() const { return num_nodes * levels; }

    double min_gamma() const
    {
        double g = std::numeric_limits<double>::infinity();
        for (const auto &p : pairs)
            g = std::min(g, p.gamma);
        return g;
    }

    // a_i - a_j: +1 at node k's level of tuple i, -1 at its level of tuple j, nothing where they agree
    Eigen::VectorXcd difference_vector(const ConstraintPair &p) const
    {
        Eigen::VectorXcd d = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim()));
        std::size_t a = p.i, b = p.j;
        for (std::size_t k = num_nodes; k-- > 0;) {
            const std::size_t da = a % levels, db = b % levels;
            if (da != db) {
                d[static_cast<Eigen::Index>(k * levels + da)] += 1.0;
                d[static_cast<Eigen::Index>(k * levels + db)] -= 1.0;
            }
            a /= levels;
            b /= levels;
        }
        return d;
    }

    std::vector<Eigen::VectorXcd> vectors() const
    {
        std::vector<Eigen::VectorXcd> v;
        v.reserve(pairs.size());
        for (const auto &p : pairs)
            v.push_back(difference_vector(p));
        return v;
    }

    std::vector<double> thresholds() const
    {
        std::vector<double> g;
        g.reserve(pairs.size());
        for (const auto &p : pairs)
            g.push_back(p.gamma);
        return g;
    }

    // Same pairs with every threshold multiplied by factor (epsilon scales with it).
    ConstraintSet scaled(double factor) const
    {
        if (!(factor > 0.0))
            throw InvalidArgument("scale factor must be positive");
        ConstraintSet c = *this;
        c.epsilon *= factor;
        for (auto &p : c.pairs)
            p.gamma *= factor;
        return c;
    }
};

inline double max_squared_difference(const FiniteFunction &f)
{
    const auto t = f.table();
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    return (*hi - *lo) * (*hi - *lo);
}

// 1 / max |f_i - f_j|^2.
inline double default_epsilon(const FiniteFunction &f)
{
    const double m = max_squared_difference(f);
    if (!(m > 0.0))
        throw InvalidArgument("function: nothing to compute, f is constant");
    return 1.0 / m;
}

struct ConstraintLimits
{
    std::size_t max_pairs = 1'000'000;        // after collapsing
    std::size_t max_raw_pairs = 500'000'000;  // enumeration budget
    bool force = false;
};

// Every pair i < j with f_i != f_j, gamma = eps |f_i - f_j|^2. Pairs are collapsed when their
// difference rows agree up to sign (identical rank-one B); the largest gamma survives, with the
// first pair attaining it as witness.
inline ConstraintSet build_constraints(const FiniteFunction &f, double epsilon, const ConstraintLimits &lim = {})
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgument("epsilon must be positive and finite");
    const std::size_t K = f.num_nodes(), q = f.levels(), M = f.size();
    const double raw = 0.5 * static_cast<double>(M) * static_cast<double>(M - 1);
    if (!lim.force && raw > static_cast<double>(lim.max_raw_pairs))
        throw InvalidArgument("domain too large: " + std::to_string(M) + " tuples give " +
                              std::to_string(static_cast<unsigned long long>(raw)) + " raw pairs (use force)");

    std::vector<std::uint16_t> digits(M * K);
    for (std::size_t i = 0; i < M; ++i) {
        std::size_t r = i;
        for (std::size_t k = K; k-- > 0;) {
            digits[i * K + k] = static_cast<std::uint16_t>(r % q);
            r /= q;
        }
    }

    ConstraintSet cs;
    cs.epsilon = epsilon;
    cs.num_nodes = K;
    cs.levels = q;
    std::unordered_map<std::string, std::size_t> index;
    std::string fwd(2 * K * sizeof(std::uint16_t), '\0'), bwd = fwd;
    const auto none = static_cast<std::uint16_t>(q);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = i + 1; j < M; ++j) {
            if (f[i] == f[j])
                continue;
            ++cs.raw_pairs;
            for (std::size_t k = 0; k < K; ++k) {
                std::uint16_t a = digits[i * K + k], b = digits[j * K + k];
                if (a == b)
                    a = b = none;
                std::memcpy(&fwd[4 * k], &a, 2);
                std::memcpy(&fwd[4 * k + 2], &b, 2);
                std::memcpy(&bwd[4 * k], &b, 2);
                std::memcpy(&bwd[4 * k + 2], &a, 2);
            }
            const std::string &key = fwd < bwd ? fwd : bwd;
            const double d = f[i] - f[j];
            const double gamma = epsilon * d * d;
            auto [it, inserted] = index.try_emplace(key, cs.pairs.size());
            if (inserted) {
                cs.pairs.push_back({i, j, gamma});
                if (!lim.force && cs.pairs.size() > lim.max_pairs)
                    throw InvalidArgument("constraint set exceeds " + std::to_string(lim.max_pairs) +
                                          " pairs after collapsing (use force)");
            } else if (gamma > cs.pairs[it->second].gamma) {
                cs.pairs[it->second] = {i, j, gamma};
            }
        }
    }
    return cs;
}

inline sdp::Problem<cplx> lifted_problem(const ConstraintSet &cs, std::optional<double> trace_cap, bool min_trace)
{
    sdp::Problem<cplx> p;
    p.dim = cs.dim();
    p.trace_cap = trace_cap;
    if (min_trace)
        p.objective = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(p.dim), static_cast<Eigen::Index>(p.dim));
    p.constraints.reserve(cs.pairs.size());
    for (const auto &pr : cs.pairs)
        p.constraints.push_back({{cs.difference_vector(pr)}, pr.gamma});
    return p;
}

struct P3Options
{
    bool min_trace = false; // the relaxation is a pure feasibility problem unless asked otherwise
    double trace_cap = 1.0;
    sdp::Options solver;
};

// Lifted relaxation: find X PSD with tr X <= 1 and <B_ij, X> >= gamma_ij.
inline GramSolution solve_p3(const ConstraintSet &cs, const P3Options &opt = {})
{
    if (cs.pairs.empty())
        throw InvalidArgument("constraint set is empty: nothing to compute");
    const auto sol = sdp::solve(lifted_problem(cs, opt.trace_cap, opt.min_trace), opt.solver);
    return to_gram(sol, opt.min_trace ? "p3-min-trace" : "p3");
}

struct DcOptions
{
    double mu = 1e-4;
    double delta = 1e-3;
    int max_outer = 100;
    double trace_cap = 1.0;
    // Inner solves may stop early: the loop only needs approximate minimisers, and the final
    // modulation is re-verified on its own.
    sdp::Options solver = [] {
        sdp::Options o;
        o.max_iter = 5000;
        return o;
    }();
    double accept_residual = 1e-2;
    // Reusing the previous ADMM state tends to hurt: the objective moves each step.
    bool warm_start = false;
    // Stop when tr X - lambda_max(X) improved by less than this fraction over stall_window steps.
    int stall_window = 5;
    double stall_tol = 1e-3;
};

// Penalty loop for the rank-one condition. Each outer step linearises lambda_max at the top
// eigenvector u1 of the previous iterate and adds a proximal term:
//     X_t = argmin_{X in C} (mu/2)||X||_F^2 + <X, I - u1 u1^H - mu X_{t-1}>,
// where C = {constraints, tr X <= cap, X PSD}. Stops once |theta| <= delta, theta being that
// minimum value. The quantity tr X - lambda_max(X) is non-increasing along the iterates.
inline GramSolution solve_p4_dc(const ConstraintSet &cs, const GramSolution &start, const DcOptions &opt = {})
{
    if (!(opt.mu > 0.0) || !(opt.delta > 0.0) || opt.max_outer < 1)
        throw InvalidArgument("dc: mu and delta must be positive and max_outer at least 1");
    const auto n = static_cast<Eigen::Index>(cs.dim());
    if (start.X.rows() != n)
        throw InvalidArgument("dc: starting point has the wrong dimension");
    const auto problem = lifted_problem(cs, opt.trace_cap, false);
    sdp::Solver<cplx> solver(problem);

    GramSolution out;
    out.stage = "p4-dc";
    Eigen::MatrixXcd Xprev = start.X;
    sdp::WarmState warm;
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
    int total = 0;
    std::optional<sdp::Solution<cplx>> best; // last accepted iterate
    for (int t = 1; t <= opt.max_outer; ++t) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Xprev);
        const Eigen::VectorXcd u1 = es.eigenvectors().col(n - 1);
        const Eigen::MatrixXcd Q = u1 * u1.adjoint() + opt.mu * Xprev;
        solver.set_objective(I - Q, opt.mu);
        auto sol = solver.solve(opt.solver, (opt.warm_start && warm.valid()) ? &warm : nullptr);
        total += sol.iterations;
        if (sol.status == sdp::Status::Infeasible && sol.infeasibility_certified)
            throw NumericalError("dc: feasible set certified empty at outer iteration " + std::to_string(t));
        if (sol.status != sdp::Status::Solved && sol.primal_residual > opt.accept_residual) {
            // keep the last accepted iterate; extraction re-checks every constraint anyway
            out.dc_stop = "inner-solve-inaccurate";
            break;
        }
        warm = sol.state;
        DcStep step;
        step.outer = t;
        step.theta = sol.objective;
        step.dc_objective = std::real(sol.X.trace()) - sol.eigenvalues[0];
        step.rank_ratio = rank_ratio(sol.eigenvalues);
        step.inner_iterations = sol.iterations;
        out.dc_history.push_back(step);
        Xprev = sol.X;
        best = std::move(sol);
        if (std::abs(step.theta) <= opt.delta) {
            out.dc_converged = true;
            out.dc_stop = "converged";
            break;
        }
        const auto &h = out.dc_history;
        if (opt.stall_window > 0 && h.size() > static_cast<std::size_t>(opt.stall_window)) {
            const double before = h[h.size() - 1 - static_cast<std::size_t>(opt.stall_window)].dc_objective;
            if (before - step.dc_objective < opt.stall_tol * std::abs(before)) {
                out.dc_stop = "stalled";
                break;
            }
        }
        if (t == opt.max_outer)
            out.dc_stop = "max-outer";
    }
    out.iterations = total;
    if (!best) {
        // no step accepted: hand back the starting point unchanged
        out.X = start.X;
        out.eigenvalues = start.eigenvalues;
        out.rank_ratio = start.rank_ratio;
        out.primal_residual = start.primal_residual;
        out.objective = start.objective;
        out.status = start.status;
        return out;
    }
    out.X = best->X;
    out.eigenvalues = best->eigenvalues;
    out.rank_ratio = rank_ratio(best->eigenvalues);
    out.primal_residual = best->primal_residual;
    out.objective = best->objective;
    out.status = best->status;
    return out;
}

struct DesignOptions
{
    std::optional<double> epsilon; // default: 1 / max |f_i - f_j|^2
    bool min_trace = false;
    bool epsilon_backoff = true; // shrink epsilon when the capped relaxation is infeasible
    double backoff_factor = 0.5;
    bool use_dc = true;
    DcOptions dc;
    ExtractionOptions extraction{1e-3, 1000, 0, 1.0, true, 0};
    sdp::Options solver;
    ConstraintLimits limits;
};

struct DesignResult
{
    ModulationSet modulation;
    GramSolution gram;     // lifted solution the modulation was extracted from
    GramSolution p3;       // relaxation solution (start of the penalty loop)
    ExtractionInfo extraction;
    ConflictReport conflict_report;
    double epsilon_requested = 0.0;
    double epsilon_used = 0.0;
    std::size_t raw_pairs = 0;
    std::size_t constraints = 0;
    bool exact_decode = false;
    bool success = false;
    double wall_seconds = 0.0;
    std::vector<std::string> notes;
};

// Distance below which two received points count as colliding: 1% of the smallest required separation.
inline double conflict_tolerance(const ConstraintSet &cs) { return 1e-2 * std::sqrt(cs.min_gamma()); }

inline bool decodes_exactly(const AggregatedConstellation &agg)
{
    const auto table = build_decoder(agg);
    for (std::size_t i = 0; i < agg.points.size(); ++i)
        if (decode(agg.points[i], table) != agg.function_values[i])
            return false;
    return true;
}

// Relaxation, penalty refinement, extraction and verification.
inline DesignResult design(const FiniteFunction &f, const DesignOptions &opt = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    DesignResult res;
    res.epsilon_requested = opt.epsilon ? *opt.epsilon : default_epsilon(f);
    if (max_squared_difference(f) == 0.0)
        throw InvalidArgument("function: nothing to compute, f is constant");
    ConstraintSet cs = build_constraints(f, res.epsilon_requested, opt.limits);
    res.raw_pairs = cs.raw_pairs;
    res.constraints = cs.pairs.size();

    P3Options p3opt{opt.min_trace, opt.dc.trace_cap, opt.solver};
    GramSolution g = solve_p3(cs, p3opt);
    if (g.status != sdp::Status::Solved) {
        if (!opt.epsilon_backoff)
            throw InfeasibleError("relaxation infeasible at epsilon " + std::to_string(res.epsilon_requested) +
                                  " (status " + sdp::to_string(g.status) + ")");
        // the uncapped minimum trace T* says how far epsilon must shrink for tr X <= cap
        const auto mt = sdp::solve(lifted_problem(cs, std::nullopt, true), opt.solver);
        if (mt.status != sdp::Status::Solved && mt.primal_residual > 1e3 * opt.solver.tol_feas)
            throw NumericalError("minimum-trace relaxation failed (status " + std::string(sdp::to_string(mt.status)) + ")");
        const double factor = opt.backoff_factor * opt.dc.trace_cap / mt.objective;
        cs = cs.scaled(factor);
        res.notes.push_back("epsilon reduced from " + std::to_string(res.epsilon_requested) + " to " +
                            std::to_string(cs.epsilon) + ": capped relaxation infeasible, minimum trace " +
                            std::to_string(mt.objective));
        g = solve_p3(cs, p3opt);
        if (g.status != sdp::Status::Solved)
            throw NumericalError("relaxation failed after epsilon reduction (status " +
                                 std::string(sdp::to_string(g.status)) + ")");
    }
    res.epsilon_used = cs.epsilon;
    res.p3 = g;

    if (opt.use_dc && g.rank_ratio > opt.extraction.rank_tol)
        g = solve_p4_dc(cs, g, opt.dc);
    res.gram = g;

    const auto ex = extract_vector(g.X, cs.vectors(), cs.thresholds(), opt.extraction);
    res.extraction = ex.info;
    std::vector<cplx> x(ex.x.data(), ex.x.data() + ex.x.size());
    res.modulation = ModulationSet::from_concatenated(x, f.num_nodes());

    const auto agg = aggregate(res.modulation, f);
    res.conflict_report = verify_computability(agg, conflict_tolerance(cs));
    res.exact_decode = decodes_exactly(agg);
    res.success = res.conflict_report.is_computable && res.exact_decode;
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace chcomp

#endif
