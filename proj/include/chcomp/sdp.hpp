// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_SDP_HPP
#define CHCOMP_SDP_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace chcomp::sdp
{

using cplx = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
inline constexpr bool is_complex_v = !std::is_same_v<Scalar, double>;

// <sum_r b_r b_r^H, X> >= gamma. Most constraints carry a single factor; the real embedding
// of a complex constraint carries two.
template <typename Scalar>
struct Constraint
{
    std::vector<Vector<Scalar>> factors;
    double gamma = 0.0;
};

// minimize <C, X> + (mu/2)||X||_F^2
// s.t.     <B_l, X> >= gamma_l,  trace(X) <= tau (optional),  X Hermitian PSD.
// An empty C means C = 0.
template <typename Scalar>
struct Problem
{
    std::size_t dim = 0;
    Matrix<Scalar> objective;
    double mu = 0.0;
    std::vector<Constraint<Scalar>> constraints;
    std::optional<double> trace_cap;

    void validate() const
    {
        if (dim == 0)
            throw InvalidArgument("sdp: dimension must be positive");
        if (objective.size() != 0 && (objective.rows() != static_cast<Eigen::Index>(dim) ||
                                      objective.cols() != static_cast<Eigen::Index>(dim)))
            throw InvalidArgument("sdp: objective has the wrong shape");
        if (mu < 0.0 || !std::isfinite(mu))
            throw InvalidArgument("sdp: mu must be finite and non-negative");
        if (trace_cap && !(*trace_cap > 0.0))
            throw InvalidArgument("sdp: trace cap must be positive");
        for (const auto &c : constraints) {
            if (!std::isfinite(c.gamma))
                throw InvalidArgument("sdp: constraint thresholds must be finite");
            if (c.factors.empty())
                throw InvalidArgument("sdp: constraint without factors");
            for (const auto &b : c.factors)
                if (b.size() != static_cast<Eigen::Index>(dim))
                    throw InvalidArgument("sdp: constraint vector has the wrong length");
        }
    }
};

enum class Status { Solved, MaxIterations, Infeasible };

inline const char *to_string(Status s)
{
    switch (s) {
    case Status::Solved: return "solved";
    case Status::MaxIterations: return "max-iterations";
    case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

struct Options
{
    double tol_feas = 1e-6; // on gamma- and tau-normalised violations
    double tol_gap = 1e-5;  // relative to max(1, |objective|)
    int max_iter = 50000;
    int check_every = 10;
    double rho = 1.0;
    double relaxation = 1.6;
    double rho_adapt_ratio = 5.0; // rescale rho when the normalised residuals differ by this factor
    int rho_adapt_every = 50;
};

// Iterate state in the solver's internal (scaled) coordinates, for warm starts.
struct WarmState
{
    Eigen::VectorXd y, u, s, w;
    double t = 0.0, v = 0.0, rho = 1.0;
    bool valid() const { return y.size() > 0; }
};

template <typename Scalar>
struct Solution
{
    Matrix<Scalar> X;
    Eigen::VectorXd eigenvalues; // descending
    double primal_residual = std::numeric_limits<double>::infinity();
    double objective = 0.0;
    double dual_bound = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    Status status = Status::MaxIterations;
    std::optional<std::size_t> infeasible_constraint; // set when a single constraint cannot be met
    bool infeasibility_certified = false;             // a dual certificate, not the stagnation fallback
    std::vector<double> residual_history;             // primal residual at every check
    WarmState state;
};

// Isometric vectorisation of Hermitian (or real symmetric) matrices: diagonal entries first,
// then sqrt(2)*Re and sqrt(2)*Im of each strictly-upper entry (Re only in the real case), so
// that the Euclidean product of two vectors equals Re tr(A^H B).
template <typename Scalar>
class SymmetricBasis
{
public:
    explicit SymmetricBasis(std::size_t n) : n_(n)
    {
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                pairs_.push_back({p, q});
    }

    std::size_t n() const { return n_; }
    std::size_t size() const { return n_ + pairs_.size() * (is_complex_v<Scalar> ? 2 : 1); }

    Eigen::VectorXd vec(const Matrix<Scalar> &X) const
    {
        Eigen::VectorXd v(size());
        for (std::size_t p = 0; p < n_; ++p)
            v[p] = std::real(X(p, p));
        std::size_t o = n_;
        for (auto [p, q] : pairs_) {
            const Scalar a = X(p, q);
            v[o++] = sqrt2 * std::real(a);
            if constexpr (is_complex_v<Scalar>)
                v[o++] = sqrt2 * std::imag(a);
        }
        return v;
    }

    Matrix<Scalar> mat(const Eigen::VectorXd &v) const
    {
        Matrix<Scalar> X(n_, n_);
        for (std::size_t p = 0; p < n_; ++p)
            X(p, p) = v[p];
        std::size_t o = n_;
        for (auto [p, q] : pairs_) {
            Scalar a;
            if constexpr (is_complex_v<Scalar>) {
                a = Scalar(v[o], v[o + 1]) / sqrt2;
                o += 2;
            } else {
                a = v[o++] / sqrt2;
            }
            X(p, q) = a;
            X(q, p) = conj_(a);
        }
        return X;
    }

    // vec(b b^H) accumulated into out
    void add_outer(const Vector<Scalar> &b, Eigen::Ref<Eigen::VectorXd> out) const
    {
        for (std::size_t p = 0; p < n_; ++p)
            out[p] += std::norm(b[p]);
        std::size_t o = n_;
        for (auto [p, q] : pairs_) {
            const Scalar a = b[p] * conj_(b[q]);
            out[o++] += sqrt2 * std::real(a);
            if constexpr (is_complex_v<Scalar>)
                out[o++] += sqrt2 * std::imag(a);
        }
    }

    Eigen::VectorXd identity() const
    {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(size());
        v.head(n_).setOnes();
        return v;
    }

private:
    static Scalar conj_(Scalar a)
    {
        if constexpr (is_complex_v<Scalar>)
            return std::conj(a);
        else
            return a;
    }

    static constexpr double sqrt2 = 1.4142135623730951;
    std::size_t n_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

// Projection onto the PSD cone; also returns the descending spectrum of the input.
template <typename Scalar>
Matrix<Scalar> project_psd(const Matrix<Scalar> &X, Eigen::VectorXd *spectrum = nullptr)
{
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(X);
    const Eigen::VectorXd ev = es.eigenvalues();
    if (spectrum)
        *spectrum = ev.reverse();
    const Eigen::VectorXd clipped = ev.cwiseMax(0.0);
    return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
}

template <typename Scalar>
Eigen::VectorXd descending_eigenvalues(const Matrix<Scalar> &X)
{
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(X, Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
}

// First-order operator-splitting solver (ADMM) for the problem family above.
//
// Splitting: X is coupled to a PSD copy Y, to slacks s = A(X) >= gamma and to t = tr(X) <= tau.
// The X-step is a linear solve with (mu + rho) I + rho (A^T A + e e^T), whose eigendecomposition
// is cached so the penalty rho can adapt at no cost. The second step projects onto the PSD cone
// and clamps the slacks. Constraint rows are equilibrated to unit norm internally.
//
// The instance owns its workspace; the objective may be replaced between solves, which keeps
// the factorisation (this is how the penalty loop re-solves with a new linear term).
template <typename Scalar>
class Solver
{
public:
    explicit Solver(const Problem<Scalar> &problem) : basis_(problem.dim)
    {
        problem.validate();
        n_ = problem.dim;
        d_ = basis_.size();
        has_cap_ = problem.trace_cap.has_value();
        set_objective(problem.objective, problem.mu);

        // drop vacuous rows (gamma <= 0 always holds for PSD X); detect impossible ones
        std::vector<Eigen::VectorXd> rows;
        for (std::size_t l = 0; l < problem.constraints.size(); ++l) {
            const auto &c = problem.constraints[l];
            if (c.gamma <= 0.0)
                continue;
            Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_));
            for (const auto &b : c.factors)
                basis_.add_outer(b, r);
            if (r.norm() <= 1e-14 * std::max(1.0, std::abs(c.gamma))) {
                if (!impossible_)
                    impossible_ = l;
                continue;
            }
            rows.push_back(std::move(r));
            gamma_.push_back(c.gamma);
            original_index_.push_back(l);
        }
        m_ = rows.size();

        // active coordinates: touched by some row, or diagonal when the trace is capped
        std::vector<char> active(d_, 0);
        for (const auto &r : rows)
            for (std::size_t j = 0; j < d_; ++j)
                if (r[static_cast<Eigen::Index>(j)] != 0.0)
                    active[j] = 1;
        if (has_cap_)
            for (std::size_t j = 0; j < n_; ++j)
                active[j] = 1;
        for (std::size_t j = 0; j < d_; ++j)
            if (active[j])
                active_.push_back(j);
        const auto da = static_cast<Eigen::Index>(active_.size());

        A_.resize(static_cast<Eigen::Index>(m_), da);
        g_.resize(static_cast<Eigen::Index>(m_));
        for (std::size_t l = 0; l < m_; ++l) {
            const double nrm = rows[l].norm();
            for (Eigen::Index a = 0; a < da; ++a)
                A_(static_cast<Eigen::Index>(l), a) = rows[l][static_cast<Eigen::Index>(active_[a])] / nrm;
            g_[static_cast<Eigen::Index>(l)] = gamma_[l] / nrm;
        }
        e_ = Eigen::VectorXd::Zero(da);
        if (has_cap_) {
            const double s = 1.0 / std::sqrt(static_cast<double>(n_));
            for (Eigen::Index a = 0; a < da; ++a)
                if (active_[a] < n_)
                    e_[a] = s;
            tau_ = *problem.trace_cap;
            tau_s_ = tau_ / std::sqrt(static_cast<double>(n_));
        }

        Eigen::MatrixXd M = A_.transpose() * A_;
        if (has_cap_)
            M += e_ * e_.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        V_ = es.eigenvectors();
        lambda_ = es.eigenvalues().cwiseMax(0.0);
    }

    void set_objective(const Matrix<Scalar> &C, double mu)
    {
        if (mu < 0.0 || !std::isfinite(mu))
            throw InvalidArgument("sdp: mu must be finite and non-negative");
        mu_ = mu;
        if (C.size() == 0) {
            C_ = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        } else {
            if (C.rows() != static_cast<Eigen::Index>(n_) || C.cols() != static_cast<Eigen::Index>(n_))
                throw InvalidArgument("sdp: objective has the wrong shape");
            C_ = (C + C.adjoint()) / 2.0;
        }
        c_ = basis_.vec(C_);
        has_objective_ = mu_ > 0.0 || c_.norm() > 0.0;
    }

    std::size_t num_constraints() const { return m_; }

    // max over constraints of the gamma-normalised violation, and of the tau-normalised trace excess
    double residual(const Matrix<Scalar> &X) const { return residual_vec(basis_.vec(X)); }

    double objective_value(const Matrix<Scalar> &X) const
    {
        return std::real((C_.adjoint() * X).trace()) + 0.5 * mu_ * X.squaredNorm();
    }

    Solution<Scalar> solve(const Options &opt = {}, const WarmState *warm = nullptr) const
    {
        Solution<Scalar> sol;
        if (impossible_) {
            sol.status = Status::Infeasible;
            sol.infeasibility_certified = true;
            sol.infeasible_constraint = *impossible_;
            sol.X = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
            sol.eigenvalues = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
            return sol;
        }

        const auto d = static_cast<Eigen::Index>(d_);
        const auto m = static_cast<Eigen::Index>(m_);
        Eigen::VectorXd y, u, s, w;
        double t, v, rho;
        if (warm && warm->valid() && warm->y.size() == d && warm->s.size() == m) {
            y = warm->y;
            u = warm->u;
            s = warm->s;
            w = warm->w;
            t = warm->t;
            v = warm->v;
            rho = warm->rho;
        } else {
            y = Eigen::VectorXd::Zero(d);
            u = Eigen::VectorXd::Zero(d);
            s = g_;
            w = Eigen::VectorXd::Zero(m);
            t = has_cap_ ? tau_s_ : 0.0;
            v = 0.0;
            rho = opt.rho;
        }

        const double alpha = opt.relaxation;
        Eigen::VectorXd x(d), xa(static_cast<Eigen::Index>(active_.size())), rhs(d), Ax(m), xhat(d), zs(m);
        Eigen::VectorXd y_prev, s_prev;
        double t_prev = t;

        Eigen::VectorXd best_y = y;
        double best_res = std::numeric_limits<double>::infinity();
        double first_half_best = best_res;

        int it = 0;
        for (; it < opt.max_iter; ++it) {
            // X-step
            rhs = rho * (y - u) - c_;
            for (Eigen::Index a = 0; a < xa.size(); ++a)
                xa[a] = rhs[static_cast<Eigen::Index>(active_[a])];
            if (m > 0)
                xa.noalias() += rho * (A_.transpose() * (s - w));
            if (has_cap_)
                xa += rho * (t - v) * e_;
            Eigen::VectorXd tmp = V_.transpose() * xa;
            tmp.array() /= (mu_ + rho + rho * lambda_.array());
            xa.noalias() = V_ * tmp;
            x = rhs / (mu_ + rho);
            for (Eigen::Index a = 0; a < xa.size(); ++a)
                x[static_cast<Eigen::Index>(active_[a])] = xa[a];

            if (m > 0)
                Ax.noalias() = A_ * xa;
            const double ex = has_cap_ ? e_.dot(xa) : 0.0;

            // projection step with over-relaxation
            y_prev = y;
            s_prev = s;
            t_prev = t;
            xhat = alpha * x + (1.0 - alpha) * y;
            y = basis_.vec(project_psd<Scalar>(basis_.mat(xhat + u)));
            u += xhat - y;
            if (m > 0) {
                zs = alpha * Ax + (1.0 - alpha) * s;
                s = (zs + w).cwiseMax(g_);
                w += zs - s;
            }
            if (has_cap_) {
                const double zt = alpha * ex + (1.0 - alpha) * t;
                t = std::min(tau_s_, zt + v);
                v += zt - t;
            }

            if ((it + 1) % opt.check_every != 0)
                continue;

            const double res = residual_vec(y);
            sol.residual_history.push_back(res);
            if (res < best_res) {
                best_res = res;
                best_y = y;
            }

            bool optimal = res <= opt.tol_feas;
            double obj = 0.0, bound = 0.0;
            if (optimal && has_objective_) {
                obj = objective_vec(y);
                bound = dual_bound(w, v, rho);
                optimal = obj - bound <= opt.tol_gap * std::max(1.0, std::abs(obj));
            }
            if (optimal) {
                sol.converged = true;
                sol.status = Status::Solved;
                sol.dual_bound = has_objective_ ? bound : 0.0;
                ++it;
                break;
            }

            // Farkas-type certificate: any lambda >= 0 with lambda^T gamma > tau * lambda_max(sum lambda B)
            // proves there is no feasible point. Tested on the dual iterate and on its drift.
            if (has_cap_ && m > 0 && res > opt.tol_feas && (it + 1) % (opt.check_every * 10) == 0) {
                if (certifies_infeasible((-w).cwiseMax(0.0))) {
                    sol.status = Status::Infeasible;
                    sol.infeasibility_certified = true;
                    ++it;
                    break;
                }
            }

            // residual balancing
            if ((it + 1) % opt.rho_adapt_every == 0) {
                const double rp = std::sqrt((x - y).squaredNorm() + (m > 0 ? (Ax - s).squaredNorm() : 0.0) +
                                            (has_cap_ ? (ex - t) * (ex - t) : 0.0));
                Eigen::VectorXd dz = y - y_prev;
                if (m > 0) {
                    Eigen::VectorXd back = A_.transpose() * (s - s_prev);
                    for (Eigen::Index a = 0; a < back.size(); ++a)
                        dz[static_cast<Eigen::Index>(active_[a])] += back[a];
                }
                if (has_cap_)
                    for (Eigen::Index a = 0; a < e_.size(); ++a)
                        dz[static_cast<Eigen::Index>(active_[a])] += e_[a] * (t - t_prev);
                const double rd = rho * dz.norm();
                const double sp = std::max({x.norm(), y.norm(), 1e-12});
                const double sd = std::max(rho * u.norm(), 1e-12);
                const double ratio = std::sqrt((rp / sp) / std::max(rd / sd, 1e-300));
                if (ratio > opt.rho_adapt_ratio || ratio < 1.0 / opt.rho_adapt_ratio) {
                    const double nr = std::clamp(rho * ratio, 1e-6, 1e6);
                    u *= rho / nr;
                    w *= rho / nr;
                    v *= rho / nr;
                    rho = nr;
                }
            }

            // track the best residual of each half of the budget for the end-of-run verdict
            if (it + 1 <= opt.max_iter / 2)
                first_half_best = best_res;
        }

        // Budget exhausted without a certificate: call it infeasible only when the second half
        // made no progress while far from feasible. This verdict is heuristic and flagged as such.
        if (!sol.converged && sol.status != Status::Infeasible && it >= opt.max_iter &&
            best_res > 1e3 * opt.tol_feas && best_res > 0.9 * first_half_best) {
            sol.status = Status::Infeasible;
            sol.infeasibility_certified = false;
        }

        sol.iterations = it;
        const Eigen::VectorXd &final_y = sol.converged ? y : best_y;
        sol.X = basis_.mat(final_y);
        sol.X = (sol.X + sol.X.adjoint()) / 2.0;
        sol.eigenvalues = descending_eigenvalues<Scalar>(sol.X);
        sol.primal_residual = residual_vec(basis_.vec(sol.X));
        sol.objective = objective_value(sol.X);
        if (!sol.converged && has_objective_)
            sol.dual_bound = dual_bound(w, v, rho);
        sol.state = WarmState{y, u, s, w, t, v, rho};
        return sol;
    }

private:
    double residual_vec(const Eigen::VectorXd &y) const
    {
        double r = 0.0;
        if (m_ > 0) {
            Eigen::VectorXd ya(static_cast<Eigen::Index>(active_.size()));
            for (Eigen::Index a = 0; a < ya.size(); ++a)
                ya[a] = y[static_cast<Eigen::Index>(active_[a])];
            const Eigen::VectorXd ay = A_ * ya;
            r = (1.0 - ay.cwiseQuotient(g_).array()).maxCoeff();
        }
        if (has_cap_) {
            const double tr = y.head(static_cast<Eigen::Index>(n_)).sum();
            r = std::max(r, tr / tau_ - 1.0);
        }
        return std::max(r, 0.0);
    }

    double objective_vec(const Eigen::VectorXd &y) const { return c_.dot(y) + 0.5 * mu_ * y.squaredNorm(); }

    Matrix<Scalar> operator_adjoint(const Eigen::VectorXd &lambda) const
    {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_));
        if (m_ > 0) {
            const Eigen::VectorXd back = A_.transpose() * lambda;
            for (Eigen::Index a = 0; a < back.size(); ++a)
                full[static_cast<Eigen::Index>(active_[a])] = back[a];
        }
        return basis_.mat(full);
    }

    bool certifies_infeasible(const Eigen::VectorXd &lambda) const
    {
        const double l1 = lambda.sum();
        if (!(l1 > 0.0))
            return false;
        const Eigen::VectorXd lam = lambda / l1;
        const Matrix<Scalar> Z = operator_adjoint(lam);
        const double top = std::max(0.0, descending_eigenvalues<Scalar>(Z)[0]);
        const double lin = lam.dot(g_);
        return lin - tau_ * top > 1e-9 * std::max(lin, 1e-12);
    }

    // Lagrangian lower bound built from the ADMM multipliers (scaled by rho).
    double dual_bound(const Eigen::VectorXd &w, double v, double rho) const
    {
        const Eigen::VectorXd lambda = m_ > 0 ? Eigen::VectorXd((-rho * w).cwiseMax(0.0)) : Eigen::VectorXd();
        const double lin = m_ > 0 ? lambda.dot(g_) : 0.0;
        const Matrix<Scalar> Z = m_ > 0 ? operator_adjoint(lambda) : Matrix<Scalar>::Zero(C_.rows(), C_.cols());
        const Matrix<Scalar> W = C_ - Z;
        const auto I = Matrix<Scalar>::Identity(C_.rows(), C_.cols());

        if (mu_ > 0.0) {
            auto bound_for = [&](double nu) {
                Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(W + nu * I, Eigen::EigenvaluesOnly);
                const double neg = es.eigenvalues().cwiseMin(0.0).squaredNorm();
                return lin - nu * (has_cap_ ? tau_ : 0.0) - neg / (2.0 * mu_);
            };
            double b = bound_for(0.0);
            if (has_cap_)
                b = std::max(b, bound_for(std::max(0.0, rho * v / std::sqrt(static_cast<double>(n_)))));
            return b;
        }
        const double wmin = descending_eigenvalues<Scalar>(W).minCoeff();
        if (has_cap_)
            return lin - std::max(0.0, -wmin) * tau_;
        if (wmin >= 0.0)
            return lin;
        const double cmin = descending_eigenvalues<Scalar>(C_).minCoeff();
        if (cmin <= 0.0)
            return -std::numeric_limits<double>::infinity();
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < 40; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (descending_eigenvalues<Scalar>(Matrix<Scalar>(C_ - mid * Z)).minCoeff() >= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return lo * lin;
    }

    SymmetricBasis<Scalar> basis_;
    std::size_t n_ = 0, d_ = 0, m_ = 0;
    bool has_cap_ = false, has_objective_ = false;
    double tau_ = 0.0, tau_s_ = 0.0, mu_ = 0.0;
    Matrix<Scalar> C_;
    Eigen::VectorXd c_;
    std::vector<double> gamma_;
    std::vector<std::size_t> original_index_;
    std::optional<std::size_t> impossible_;
    std::vector<std::size_t> active_;
    Eigen::MatrixXd A_, V_;
    Eigen::VectorXd g_, e_, lambda_;
};

template <typename Scalar>
Solution<Scalar> solve(const Problem<Scalar> &problem, const Options &opt = {})
{
    return Solver<Scalar>(problem).solve(opt);
}

// Real embedding of a complex problem: X -> [[Re X, -Im X], [Im X, Re X]].
// Every inner product doubles, so gamma, tau and the objective value all scale by 2.
inline Problem<double> realify(const Problem<cplx> &p)
{
    p.validate();
    const auto n = static_cast<Eigen::Index>(p.dim);
    Problem<double> r;
    r.dim = 2 * p.dim;
    r.mu = p.mu;
    if (p.objective.size() != 0) {
        r.objective.resize(2 * n, 2 * n);
        r.objective << p.objective.real(), -p.objective.imag(), p.objective.imag(), p.objective.real();
    }
    if (p.trace_cap)
        r.trace_cap = 2.0 * *p.trace_cap;
    for (const auto &c : p.constraints) {
        Constraint<double> rc;
        rc.gamma = 2.0 * c.gamma;
        for (const auto &b : c.factors) {
            Eigen::VectorXd u(2 * n), v(2 * n);
            u << b.real(), b.imag();
            v << -b.imag(), b.real();
            rc.factors.push_back(std::move(u));
            rc.factors.push_back(std::move(v));
        }
        r.constraints.push_back(std::move(rc));
    }
    return r;
}

inline Matrix<double> realify(const Matrix<cplx> &X)
{
    const auto n = X.rows();
    Matrix<double> R(2 * n, 2 * n);
    R << X.real(), -X.imag(), X.imag(), X.real();
    return R;
}

// Inverse of the embedding; averages the two copies of each block, which also maps any
// feasible real solution to a Hermitian PSD one.
inline Matrix<cplx> derealify(const Matrix<double> &R)
{
    if (R.rows() % 2 != 0 || R.rows() != R.cols())
        throw InvalidArgument("derealify: need a square matrix of even size");
    const auto n = R.rows() / 2;
    const Eigen::MatrixXd re = (R.topLeftCorner(n, n) + R.bottomRightCorner(n, n)) / 2.0;
    const Eigen::MatrixXd im = (R.bottomLeftCorner(n, n) - R.topRightCorner(n, n)) / 2.0;
    Matrix<cplx> X(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            X(i, j) = cplx(re(i, j), im(i, j));
    return X;
}

// Plain-text interchange format, see docs/formats.md.
template <typename Scalar>
void write_dump(std::ostream &os, const Problem<Scalar> &p)
{
    p.validate();
    os.precision(17);
    os << "chcomp-sdp 1\n";
    os << "field " << (is_complex_v<Scalar> ? "complex" : "real") << "\n";
    os << "dim " << p.dim << "\n";
    os << "mu " << p.mu << "\n";
    if (p.trace_cap)
        os << "trace_cap " << *p.trace_cap << "\n";
    else
        os << "trace_cap none\n";
    std::vector<std::tuple<std::size_t, std::size_t, Scalar>> entries;
    for (std::size_t i = 0; i < p.dim && p.objective.size() != 0; ++i)
        for (std::size_t j = i; j < p.dim; ++j)
            if (p.objective(i, j) != Scalar(0))
                entries.emplace_back(i, j, p.objective(i, j));
    os << "objective " << entries.size() << "\n";
    for (auto &[i, j, a] : entries) {
        os << i << " " << j << " " << std::real(a);
        if constexpr (is_complex_v<Scalar>)
            os << " " << std::imag(a);
        os << "\n";
    }
    os << "constraints " << p.constraints.size() << "\n";
    for (const auto &c : p.constraints) {
        os << "gamma " << c.gamma << " factors " << c.factors.size() << "\n";
        for (const auto &b : c.factors) {
            for (Eigen::Index k = 0; k < b.size(); ++k) {
                os << (k ? " " : "") << std::real(b[k]);
                if constexpr (is_complex_v<Scalar>)
                    os << " " << std::imag(b[k]);
            }
            os << "\n";
        }
    }
}

template <typename Scalar>
Problem<Scalar> read_dump(std::istream &is)
{
    auto expect = [&](const std::string &word) {
        std::string got;
        if (!(is >> got) || got != word)
            throw InvalidArgument("sdp dump: expected '" + word + "', got '" + got + "'");
    };
    auto number = [&](auto &out, const char *what) {
        if (!(is >> out))
            throw InvalidArgument(std::string("sdp dump: cannot read ") + what);
    };
    auto scalar = [&]() -> Scalar {
        double re = 0.0, im = 0.0;
        number(re, "value");
        if constexpr (is_complex_v<Scalar>) {
            number(im, "value");
            return Scalar(re, im);
        } else {
            return re;
        }
    };
    expect("chcomp-sdp");
    int version = 0;
    number(version, "version");
    if (version != 1)
        throw InvalidArgument("sdp dump: unsupported version");
    expect("field");
    std::string field;
    number(field, "field");
    if (field != (is_complex_v<Scalar> ? "complex" : "real"))
        throw InvalidArgument("sdp dump: field mismatch");
    Problem<Scalar> p;
    expect("dim");
    number(p.dim, "dim");
    expect("mu");
    number(p.mu, "mu");
    expect("trace_cap");
    std::string cap;
    number(cap, "trace_cap");
    if (cap != "none")
        p.trace_cap = std::stod(cap);
    expect("objective");
    std::size_t nnz = 0;
    number(nnz, "objective count");
    if (nnz > 0)
        p.objective = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(p.dim), static_cast<Eigen::Index>(p.dim));
    for (std::size_t e = 0; e < nnz; ++e) {
        std::size_t i = 0, j = 0;
        number(i, "row");
        number(j, "col");
        if (i >= p.dim || j >= p.dim)
            throw InvalidArgument("sdp dump: objective index out of range");
        const Scalar a = scalar();
        p.objective(i, j) = a;
        if constexpr (is_complex_v<Scalar>)
            p.objective(j, i) = std::conj(a);
        else
            p.objective(j, i) = a;
    }
    expect("constraints");
    std::size_t m = 0;
    number(m, "constraint count");
    for (std::size_t l = 0; l < m; ++l) {
        Constraint<Scalar> c;
        expect("gamma");
        number(c.gamma, "gamma");
        expect("factors");
        std::size_t r = 0;
        number(r, "factor count");
        for (std::size_t f = 0; f < r; ++f) {
            Vector<Scalar> b(static_cast<Eigen::Index>(p.dim));
            for (std::size_t k = 0; k < p.dim; ++k)
                b[static_cast<Eigen::Index>(k)] = scalar();
            c.factors.push_back(std::move(b));
        }
        p.constraints.push_back(std::move(c));
    }
    p.validate();
    return p;
}

} // namespace chcomp::sdp

#endif
