// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------
//
// Independent reference computations used by the tests. Nothing here calls into the
// library's algorithms; the point is to disagree with it when it is wrong.

#ifndef CHCOMP_TESTS_ORACLES_HPP
#define CHCOMP_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{

using cplx = std::complex<double>;

// Number of multisets of size k drawn from n symbols, by explicit enumeration.
inline std::uint64_t count_multisets(int n, int k)
{
    std::uint64_t count = 0;
    std::function<void(int, int)> rec = [&](int first, int left) {
        if (left == 0) {
            ++count;
            return;
        }
        for (int s = first; s < n; ++s)
            rec(s, left - 1);
    };
    rec(0, k);
    return count;
}

// All input tuples in lexicographic order (x_1 slowest), built by nested counting.
inline std::vector<std::vector<int>> all_tuples(int K, int q)
{
    std::vector<std::vector<int>> out;
    std::vector<int> t(K, 0);
    while (true) {
        out.push_back(t);
        int k = K - 1;
        while (k >= 0 && ++t[k] == q) {
            t[k] = 0;
            --k;
        }
        if (k < 0)
            break;
    }
    return out;
}

// Received points sum_k g_k x_k[t_k], one per tuple, straight from the definition.
inline std::vector<cplx> brute_aggregate(const std::vector<std::vector<cplx>> &mods, const std::vector<cplx> &gains = {})
{
    const int K = static_cast<int>(mods.size());
    const int q = static_cast<int>(mods[0].size());
    std::vector<cplx> out;
    for (const auto &t : all_tuples(K, q)) {
        cplx s = 0;
        for (int k = 0; k < K; ++k)
            s += (gains.empty() ? cplx(1) : gains[k]) * mods[k][t[k]];
        out.push_back(s);
    }
    return out;
}

// Number of distinct values up to tol by greedy comparison against representatives (O(n^2)).
inline std::size_t count_distinct(std::vector<cplx> pts, double tol)
{
    std::vector<cplx> reps;
    for (const auto &p : pts) {
        bool found = false;
        for (const auto &r : reps)
            if (std::abs(p - r) <= tol) {
                found = true;
                break;
            }
        if (!found)
            reps.push_back(p);
    }
    return reps.size();
}

// Minimum-trace SDP  min tr X  s.t.  b_l^H X b_l >= gamma_l,  X PSD.
// By homogeneity the optimum is 1/v with v = max over the spectraplex of min_l <B_l/gamma_l, X>,
// and by minimax v = min over the simplex of lambda_max(sum_l w_l B_l/gamma_l). The latter is a
// convex nonsmooth problem in m variables, solved here by exponentiated subgradient descent.
// The ergodic average of the top eigenvectors certifies a lower bound, so the returned pair
// brackets v.
struct TraceOracleResult
{
    double lower;        // certified: 1 / min_t lambda_max(S(w_t)) never exceeds the optimum trace
    double upper;        // from the ergodic primal average; converges slowly
};

template <typename Scalar>
TraceOracleResult min_trace_oracle(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> &b,
                                   const std::vector<double> &gamma, int iterations = 40000)
{
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const std::size_t m = b.size();
    const Eigen::Index n = b[0].size();
    std::vector<Mat> Bt(m);
    for (std::size_t l = 0; l < m; ++l)
        Bt[l] = b[l] * b[l].adjoint() / gamma[l];

    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    Mat avg = Mat::Zero(n, n);
    double upper = std::numeric_limits<double>::infinity();
    double avg_weight = 0.0;
    for (int t = 1; t <= iterations; ++t) {
        Mat S = Mat::Zero(n, n);
        for (std::size_t l = 0; l < m; ++l)
            S += w[l] * Bt[l];
        Eigen::SelfAdjointEigenSolver<Mat> es(S);
        const double top = es.eigenvalues()[n - 1];
        upper = std::min(upper, top);
        const auto u = es.eigenvectors().col(n - 1);
        const double step = 0.5 / std::sqrt(static_cast<double>(t)) / std::max(top, 1e-12);
        const double wt = 1.0 / std::sqrt(static_cast<double>(t));
        avg += wt * (u * u.adjoint());
        avg_weight += wt;
        double z = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            const double g = std::real(u.dot(Bt[l] * u));
            w[l] *= std::exp(-step * g);
            z += w[l];
        }
        for (auto &x : w)
            x /= z;
    }
    const Mat X = avg / avg_weight;
    double lower = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < m; ++l)
        lower = std::min(lower, std::real((Bt[l].adjoint() * X).trace()));
    return {1.0 / upper, 1.0 / lower};
}

} // namespace oracle

#endif
