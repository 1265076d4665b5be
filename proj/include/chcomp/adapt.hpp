// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------
//
// Power and phase adaptation for fixed modulations. With per-node scalars p the received
// point of tuple i is a_i^T C p, C = H_q(h) diag(x) (I_K kron 1_q), and every separation
// requirement becomes |c_ij^T p|^2 >= gamma_ij with c_ij = C^T (a_i - a_j).

#ifndef CHCOMP_ADAPT_HPP
#define CHCOMP_ADAPT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstring>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "constellation.hpp"
#include "design.hpp"
#include "error.hpp"
#include "functions.hpp"
#include "gram.hpp"
#include "sdp.hpp"

namespace chcomp
{

struct PowerVector
{
    std::vector<cplx> p;
    double total_power = 0.0; // ||p||^2

    static PowerVector from(std::vector<cplx> p)
    {
        PowerVector v;
        v.p = std::move(p);
        for (auto s : v.p)
            v.total_power += std::norm(s);
        return v;
    }
};

// Column k holds h_k times node k's alphabet in rows k q .. k q + q - 1.
inline Eigen::MatrixXcd build_effective_matrix(std::span<const cplx> h, const ModulationSet &mods)
{
    const std::size_t K = mods.num_nodes(), q = mods.levels();
    if (h.size() != K)
        throw InvalidArgument("channel: expected " + std::to_string(K) + " coefficients, got " + std::to_string(h.size()));
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(K * q), static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < q; ++l)
            C(static_cast<Eigen::Index>(k * q + l), static_cast<Eigen::Index>(k)) = h[k] * mods.symbol(k, l);
    return C;
}

// A C p for all tuples, by walking the digits (A is never formed).
inline std::vector<cplx> effective_aggregate(const Eigen::MatrixXcd &C, std::size_t levels, std::span<const cplx> p)
{
    const auto K = static_cast<std::size_t>(C.cols());
    if (p.size() != K || static_cast<std::size_t>(C.rows()) != K * levels)
        throw InvalidArgument("effective matrix: dimension mismatch");
    const std::size_t M = domain_size(K, levels);
    std::vector<cplx> s(M);
    for (std::size_t i = 0; i < M; ++i) {
        std::size_t r = i;
        cplx acc = 0.0;
        for (std::size_t k = K; k-- > 0;) {
            acc += C(static_cast<Eigen::Index>(k * levels + r % levels), static_cast<Eigen::Index>(k)) * p[k];
            r /= levels;
        }
        s[i] = acc;
    }
    return s;
}

// Separation requirements in p-space. Pairs whose c_ij agree up to sign are one constraint.
struct EffectiveConstraintSet
{
    double epsilon = 0.0;
    std::size_t num_nodes = 0, levels = 0;
    std::vector<Eigen::VectorXcd> c;   // c_ij, so that the received gap is c^T p
    std::vector<double> gamma;
    std::vector<ConstraintPair> witness; // a tuple pair producing each row
    std::size_t raw_pairs = 0;

    std::size_t size() const { return c.size(); }
    double min_gamma() const { return gamma.empty() ? 0.0 : *std::min_element(gamma.begin(), gamma.end()); }

    // b = conj(c) gives b^H P b = |c^T p|^2 at P = p p^H.
    std::vector<Eigen::VectorXcd> lifted_vectors() const
    {
        std::vector<Eigen::VectorXcd> b;
        b.reserve(c.size());
        for (const auto &v : c)
            b.push_back(v.conjugate());
        return b;
    }

    EffectiveConstraintSet scaled(double factor) const
    {
        if (!(factor > 0.0))
            throw InvalidArgument("scale factor must be positive");
        auto s = *this;
        s.epsilon *= factor;
        for (auto &g : s.gamma)
            g *= factor;
        return s;
    }
};

namespace detail
{

// Sign-canonical byte key: the first nonzero coordinate gets a positive real part (or a
// positive imaginary part when the real part is zero). Negation is exact in floating point.
inline void canonical_key(Eigen::VectorXcd &v, std::string &key)
{
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const cplx z = v[k];
        if (z == cplx(0.0))
            continue;
        if (z.real() < 0.0 || (z.real() == 0.0 && z.imag() < 0.0))
            v = -v;
        break;
    }
    key.resize(static_cast<std::size_t>(v.size()) * sizeof(cplx));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        // +0 and -0 compare equal but differ in bits
        const double re = v[k].real() == 0.0 ? 0.0 : v[k].real();
        const double im = v[k].imag() == 0.0 ? 0.0 : v[k].imag();
        std::memcpy(&key[static_cast<std::size_t>(k) * sizeof(cplx)], &re, sizeof(double));
        std::memcpy(&key[static_cast<std::size_t>(k) * sizeof(cplx) + sizeof(double)], &im, sizeof(double));
    }
}

} // namespace detail

// Every pair i < j with f_i != f_j gives c = C^T (a_i - a_j), gamma = eps |f_i - f_j|^2.
// A pair with c = 0 cannot be separated by any p: that is reported with the pair as witness.
inline EffectiveConstraintSet build_effective_constraints(const FiniteFunction &f, const Eigen::MatrixXcd &C,
                                                          double epsilon, const ConstraintLimits &lim = {})
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgument("epsilon must be positive and finite");
    const std::size_t K = f.num_nodes(), q = f.levels(), M = f.size();
    if (static_cast<std::size_t>(C.rows()) != K * q || static_cast<std::size_t>(C.cols()) != K)
        throw InvalidArgument("effective matrix: expected " + std::to_string(K * q) + "x" + std::to_string(K));
    const double raw = 0.5 * static_cast<double>(M) * static_cast<double>(M - 1);
    if (!lim.force && raw > static_cast<double>(lim.max_raw_pairs))
        throw InvalidArgument("domain too large: " + std::to_string(M) + " tuples (use force)");

    // column k restricted to block k: the per-node effective alphabet
    std::vector<cplx> alpha(K * q);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < q; ++l)
            alpha[k * q + l] = C(static_cast<Eigen::Index>(k * q + l), static_cast<Eigen::Index>(k));
    std::vector<std::uint16_t> digits(M * K);
    for (std::size_t i = 0; i < M; ++i) {
        std::size_t r = i;
        for (std::size_t k = K; k-- > 0;) {
            digits[i * K + k] = static_cast<std::uint16_t>(r % q);
            r /= q;
        }
    }

    EffectiveConstraintSet cs;
    cs.epsilon = epsilon;
    cs.num_nodes = K;
    cs.levels = q;
    std::unordered_map<std::string, std::size_t> index;
    Eigen::VectorXcd v(static_cast<Eigen::Index>(K));
    std::string key;
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = i + 1; j < M; ++j) {
            if (f[i] == f[j])
                continue;
            ++cs.raw_pairs;
            bool zero = true;
            for (std::size_t k = 0; k < K; ++k) {
                v[static_cast<Eigen::Index>(k)] = alpha[k * q + digits[i * K + k]] - alpha[k * q + digits[j * K + k]];
                zero = zero && v[static_cast<Eigen::Index>(k)] == cplx(0.0);
            }
            if (zero)
                throw InfeasibleError("adapt: tuples " + std::to_string(i) + " and " + std::to_string(j) +
                                          " reach the same received point for every p but f differs (" +
                                          std::to_string(f[i]) + " vs " + std::to_string(f[j]) + ")",
                                      i, j);
            detail::canonical_key(v, key);
            const double d = f[i] - f[j];
            const double gamma = epsilon * d * d;
            auto [it, inserted] = index.try_emplace(key, cs.c.size());
            if (inserted) {
                cs.c.push_back(v);
                cs.gamma.push_back(gamma);
                cs.witness.push_back({i, j, gamma});
                if (!lim.force && cs.c.size() > lim.max_pairs)
                    throw InvalidArgument("effective constraint set exceeds " + std::to_string(lim.max_pairs) +
                                          " rows (use force)");
            } else if (gamma > cs.gamma[it->second]) {
                cs.gamma[it->second] = gamma;
                cs.witness[it->second] = {i, j, gamma};
            }
        }
    }
    return cs;
}

// Reproject a design-level constraint set through C (same pairs, same thresholds).
inline EffectiveConstraintSet effective_constraints(const Eigen::MatrixXcd &C, const ConstraintSet &cs)
{
    if (static_cast<std::size_t>(C.rows()) != cs.dim())
        throw InvalidArgument("effective matrix does not match the constraint set");
    EffectiveConstraintSet out;
    out.epsilon = cs.epsilon;
    out.num_nodes = cs.num_nodes;
    out.levels = cs.levels;
    out.raw_pairs = cs.raw_pairs;
    std::unordered_map<std::string, std::size_t> index;
    std::string key;
    for (const auto &pr : cs.pairs) {
        Eigen::VectorXcd v = C.transpose() * cs.difference_vector(pr);
        if (v.isZero(0.0))
            throw InfeasibleError("adapt: tuples " + std::to_string(pr.i) + " and " + std::to_string(pr.j) +
                                      " cannot be separated by any scaling",
                                  pr.i, pr.j);
        detail::canonical_key(v, key);
        auto [it, inserted] = index.try_emplace(key, out.c.size());
        if (inserted) {
            out.c.push_back(v);
            out.gamma.push_back(pr.gamma);
            out.witness.push_back(pr);
        } else if (pr.gamma > out.gamma[it->second]) {
            out.gamma[it->second] = pr.gamma;
            out.witness[it->second] = pr;
        }
    }
    return out;
}

// min tr P  s.t.  |c^T p|^2 >= gamma lifted, P PSD, no trace cap. Thresholds are normalised to a
// largest value of one for conditioning; the optimum scales linearly back.
inline GramSolution solve_p6(const EffectiveConstraintSet &cs, const sdp::Options &opt = {})
{
    if (cs.c.empty())
        throw InvalidArgument("constraint set is empty: nothing to compute");
    const double gmax = *std::max_element(cs.gamma.begin(), cs.gamma.end());
    sdp::Problem<cplx> p;
    p.dim = cs.num_nodes;
    p.objective = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(p.dim), static_cast<Eigen::Index>(p.dim));
    p.constraints.reserve(cs.c.size());
    for (std::size_t l = 0; l < cs.c.size(); ++l)
        p.constraints.push_back({{cs.c[l].conjugate()}, cs.gamma[l] / gmax});
    auto sol = sdp::solve(p, opt);
    sol.X *= gmax;
    sol.eigenvalues *= gmax;
    sol.objective *= gmax;
    sol.dual_bound *= gmax;
    auto g = to_gram(sol, "p6");
    if (sol.infeasible_constraint)
        g.infeasible_constraint = sol.infeasible_constraint;
    return g;
}

inline GramSolution solve_p6(const Eigen::MatrixXcd &C, const ConstraintSet &cs, const sdp::Options &opt = {})
{
    return solve_p6(effective_constraints(C, cs), opt);
}

struct AdaptOptions
{
    std::optional<double> epsilon;   // default: 1 / max |f_i - f_j|^2
    std::optional<double> power_cap; // shrink epsilon until ||p||^2 fits, re-solving each time
    int power_cap_rounds = 4;
    bool separate_compensation = false; // adapt for h = 1, then invert the channel at transmit time
    ExtractionOptions extraction{1e-3, 1000, 0, std::nullopt, false, 0};
    sdp::Options solver;
    ConstraintLimits limits;
};

struct AdaptResult
{
    PowerVector power;
    std::vector<cplx> h;
    std::vector<cplx> gains; // h_k p_k
    GramSolution gram;
    ExtractionInfo extraction;
    ConflictReport conflict_report;
    double epsilon_requested = 0.0;
    double epsilon_used = 0.0;
    std::size_t raw_pairs = 0;
    std::size_t constraints = 0;
    bool power_cap_exceeded = false;
    bool exact_decode = false;
    bool success = false;
    bool separate_compensation = false;
    double wall_seconds = 0.0;
    std::vector<std::string> notes;
};

// Constraints, P6, extraction, then verification of the faded and scaled constellation.
inline AdaptResult adapt(const FiniteFunction &f, const ModulationSet &mods, std::span<const cplx> h,
                         const AdaptOptions &opt = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    check_dimensions(mods, f);
    if (h.size() != f.num_nodes())
        throw InvalidArgument("channel: expected " + std::to_string(f.num_nodes()) + " coefficients, got " +
                              std::to_string(h.size()));
    AdaptResult res;
    res.h.assign(h.begin(), h.end());
    res.separate_compensation = opt.separate_compensation;
    if (max_squared_difference(f) == 0.0)
        throw InvalidArgument("function: nothing to compute, f is constant");
    res.epsilon_requested = opt.epsilon ? *opt.epsilon : default_epsilon(f);

    std::vector<cplx> inv;
    std::vector<cplx> design_h(res.h);
    if (opt.separate_compensation) {
        inv = inversion_powers(res.h);
        std::fill(design_h.begin(), design_h.end(), cplx(1.0));
    }
    const Eigen::MatrixXcd C = build_effective_matrix(design_h, mods);
    EffectiveConstraintSet cs = build_effective_constraints(f, C, res.epsilon_requested, opt.limits);
    res.raw_pairs = cs.raw_pairs;
    res.constraints = cs.size();

    Extracted ex;
    for (int round = 0;; ++round) {
        res.gram = solve_p6(cs, opt.solver);
        if (res.gram.status == sdp::Status::Infeasible) {
            auto w = res.gram.infeasible_constraint ? cs.witness[*res.gram.infeasible_constraint] : ConstraintPair{};
            throw InfeasibleError("adapt: relaxation infeasible", res.gram.infeasible_constraint ? w.i : InfeasibleError::npos,
                                  res.gram.infeasible_constraint ? w.j : InfeasibleError::npos);
        }
        if (res.gram.status != sdp::Status::Solved && res.gram.primal_residual > 1e3 * opt.solver.tol_feas)
            throw NumericalError("adapt: minimum-trace relaxation failed (residual " +
                                 std::to_string(res.gram.primal_residual) + ")");
        ex = extract_vector(res.gram.X, cs.lifted_vectors(), cs.gamma, opt.extraction);
        const double power = ex.x.squaredNorm();
        if (!opt.power_cap || power <= *opt.power_cap * (1.0 + 1e-9))
            break;
        if (round + 1 >= opt.power_cap_rounds) {
            res.power_cap_exceeded = true;
            res.notes.push_back("power " + std::to_string(power) + " still exceeds the cap after " +
                                std::to_string(opt.power_cap_rounds) + " rounds");
            break;
        }
        cs = cs.scaled(*opt.power_cap / power);
        res.notes.push_back("epsilon reduced to " + std::to_string(cs.epsilon) + " for the power cap");
    }
    res.epsilon_used = cs.epsilon;
    res.extraction = ex.info;

    std::vector<cplx> p(ex.x.data(), ex.x.data() + ex.x.size());
    if (opt.separate_compensation)
        for (std::size_t k = 0; k < p.size(); ++k)
            p[k] *= inv[k];
    res.power = PowerVector::from(std::move(p));
    res.gains.resize(res.h.size());
    for (std::size_t k = 0; k < res.h.size(); ++k)
        res.gains[k] = res.h[k] * res.power.p[k];

    const auto agg = aggregate(mods, f, res.gains);
    res.conflict_report = verify_computability(agg, 1e-2 * std::sqrt(cs.min_gamma()));
    res.exact_decode = decodes_exactly(agg);
    res.success = res.conflict_report.is_computable && res.exact_decode;
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace chcomp

#endif
