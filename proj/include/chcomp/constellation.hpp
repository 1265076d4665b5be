// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_CONSTELLATION_HPP
#define CHCOMP_CONSTELLATION_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "detail/cluster.hpp"
#include "error.hpp"
#include "functions.hpp"

namespace chcomp
{

// Per-node constellations. Node k maps level l to vectors()[k][l]; concatenating the
// blocks gives the design vector x of length N = Kq.
class ModulationSet
{
public:
    ModulationSet() = default;

    explicit ModulationSet(std::vector<std::vector<cplx>> vectors) : vectors_(std::move(vectors))
    {
        if (vectors_.empty())
            throw InvalidArgument("vectors: need at least one node");
        const std::size_t q = vectors_.front().size();
        if (q < 2)
            throw InvalidArgument("vectors: need at least two levels per node");
        for (const auto &v : vectors_) {
            if (v.size() != q)
                throw InvalidArgument("vectors: every node needs the same number of levels");
            for (auto p : v)
                if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
                    throw InvalidArgument("vectors: entries must be finite");
        }
    }

    static ModulationSet from_concatenated(std::span<const cplx> x, std::size_t num_nodes)
    {
        if (num_nodes == 0 || x.size() % num_nodes != 0)
            throw InvalidArgument("concatenated vector length is not a multiple of K");
        const std::size_t q = x.size() / num_nodes;
        std::vector<std::vector<cplx>> v(num_nodes);
        for (std::size_t k = 0; k < num_nodes; ++k)
            v[k].assign(x.begin() + static_cast<std::ptrdiff_t>(k * q), x.begin() + static_cast<std::ptrdiff_t>((k + 1) * q));
        return ModulationSet(std::move(v));
    }

    static ModulationSet identical(std::size_t num_nodes, std::vector<cplx> base)
    {
        return ModulationSet(std::vector<std::vector<cplx>>(num_nodes, std::move(base)));
    }

    std::size_t num_nodes() const { return vectors_.size(); }
    std::size_t levels() const { return vectors_.empty() ? 0 : vectors_.front().size(); }
    const std::vector<std::vector<cplx>> &vectors() const { return vectors_; }
    cplx symbol(std::size_t node, std::size_t level) const { return vectors_[node][level]; }

    std::vector<cplx> concatenated() const
    {
        std::vector<cplx> x;
        x.reserve(num_nodes() * levels());
        for (const auto &v : vectors_)
            x.insert(x.end(), v.begin(), v.end());
        return x;
    }

    // squared l2 norm of the concatenated vector
    double power() const
    {
        double p = 0.0;
        for (const auto &v : vectors_)
            for (auto s : v)
                p += std::norm(s);
        return p;
    }

    double peak_amplitude() const
    {
        double p = 0.0;
        for (const auto &v : vectors_)
            for (auto s : v)
                p = std::max(p, std::abs(s));
        return p;
    }

    ModulationSet scaled(cplx factor) const
    {
        auto v = vectors_;
        for (auto &node : v)
            for (auto &s : node)
                s *= factor;
        return ModulationSet(std::move(v));
    }

private:
    std::vector<std::vector<cplx>> vectors_;
};

// Standard alphabets. bpsk follows the antipodal map level 0 -> -1, level 1 -> +1;
// pam<q> uses the integer amplitudes 0..q-1 and cpam<q> the same grid shifted to zero mean
// (the least-power sum design); qam<q> is the square grid with odd-integer
// coordinates, level = row * side + column.
inline std::vector<cplx> named_alphabet(const std::string &name)
{
    using namespace std::complex_literals;
    if (name == "bpsk")
        return {-1.0, 1.0};
    if (name == "qpsk")
        return {1.0, 1.0i, -1.0, -1.0i};
    auto suffix = [&](std::size_t prefix) -> std::size_t {
        try {
            std::size_t used = 0;
            const auto v = std::stoul(name.substr(prefix), &used);
            if (used != name.size() - prefix)
                throw InvalidArgument("");
            return v;
        } catch (const std::exception &) {
            throw InvalidArgument("modulation: cannot parse order in '" + name + "'");
        }
    };
    if (name.rfind("pam", 0) == 0) {
        const std::size_t q = suffix(3);
        if (q < 2)
            throw InvalidArgument("modulation: pam order must be >= 2");
        std::vector<cplx> a(q);
        for (std::size_t l = 0; l < q; ++l)
            a[l] = static_cast<double>(l);
        return a;
    }
    if (name.rfind("cpam", 0) == 0) {
        const std::size_t q = suffix(4);
        if (q < 2)
            throw InvalidArgument("modulation: cpam order must be >= 2");
        std::vector<cplx> a(q);
        for (std::size_t l = 0; l < q; ++l)
            a[l] = static_cast<double>(l) - 0.5 * static_cast<double>(q - 1);
        return a;
    }
    if (name.rfind("psk", 0) == 0) {
        const std::size_t q = suffix(3);
        if (q < 2)
            throw InvalidArgument("modulation: psk order must be >= 2");
        std::vector<cplx> a(q);
        for (std::size_t l = 0; l < q; ++l)
            a[l] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(q));
        return a;
    }
    if (name.rfind("qam", 0) == 0) {
        const std::size_t q = suffix(3);
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(q))));
        if (q < 4 || side * side != q)
            throw InvalidArgument("modulation: qam order must be a square >= 4");
        std::vector<cplx> a(q);
        const double off = static_cast<double>(side - 1);
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c)
                a[r * side + c] = cplx(2.0 * static_cast<double>(c) - off, 2.0 * static_cast<double>(r) - off);
        return a;
    }
    throw InvalidArgument("modulation: unknown name '" + name + "'");
}

inline ModulationSet named_modulation(const std::string &name, std::size_t num_nodes)
{
    return ModulationSet::identical(num_nodes, named_alphabet(name));
}

// Positions of the ones in row i of the selection matrix A (s = A x): one per node block,
// at k*q + digit_k(i). A itself is never materialised.
inline std::vector<std::size_t> index_to_onehot_row(std::size_t i, std::size_t num_nodes, std::size_t levels)
{
    const auto tuple = index_to_tuple(i, num_nodes, levels);
    std::vector<std::size_t> pos(num_nodes);
    for (std::size_t k = 0; k < num_nodes; ++k)
        pos[k] = k * levels + tuple[k];
    return pos;
}

struct AggregatedConstellation
{
    std::vector<cplx> points;           // s_i = a_i^T x
    std::vector<double> function_values; // f^(i), aligned with points
};

inline void check_dimensions(const ModulationSet &mods, const FiniteFunction &f)
{
    if (mods.num_nodes() != f.num_nodes() || mods.levels() != f.levels())
        throw InvalidArgument("modulation is " + std::to_string(mods.num_nodes()) + "x" + std::to_string(mods.levels()) +
                              " but function is " + std::to_string(f.num_nodes()) + "x" + std::to_string(f.levels()));
}

// s_i = sum_k gain_k * x_k[digit_k(i)]; gains default to one (plain superposition).
inline AggregatedConstellation aggregate(const ModulationSet &mods, const FiniteFunction &f,
                                         std::span<const cplx> gains = {})
{
    check_dimensions(mods, f);
    const std::size_t K = f.num_nodes(), q = f.levels();
    if (!gains.empty() && gains.size() != K)
        throw InvalidArgument("gains: expected one entry per node");
    AggregatedConstellation agg;
    agg.points.resize(f.size());
    agg.function_values.assign(f.table().begin(), f.table().end());
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::size_t rest = i;
        cplx s = 0.0;
        for (std::size_t k = K; k-- > 0;) {
            const cplx sym = mods.symbol(k, rest % q);
            s += gains.empty() ? sym : gains[k] * sym;
            rest /= q;
        }
        agg.points[i] = s;
    }
    return agg;
}

struct Conflict
{
    std::size_t i, j;
    double distance;
    double f_i, f_j;
};

// A cluster of coincident points carrying more than one function value.
struct ConflictGroup
{
    cplx point;                       // centroid of the coincident points
    std::vector<double> outputs;      // distinct colliding f-values, ascending
    std::vector<std::size_t> members; // tuple indices
};

struct ConflictReport
{
    std::vector<Conflict> conflicts; // listed pairs, capped at max_listed
    std::size_t total_conflicts = 0;
    std::vector<ConflictGroup> groups;
    bool is_computable = true;
    double tol = 0.0;
};

inline std::vector<double> distinct_sorted(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Lists every pair with f^(i) != f^(j) and |s_i - s_j| <= tol (squared distances are compared).
inline ConflictReport verify_computability(const AggregatedConstellation &agg, double tol,
                                           std::size_t max_listed = 10000)
{
    if (!(tol > 0.0))
        throw InvalidArgument("tol must be positive");
    ConflictReport rep;
    rep.tol = tol;
    const auto &f = agg.function_values;
    detail::for_each_close_pair(agg.points, tol, [&](std::size_t i, std::size_t j) {
        if (f[i] == f[j])
            return;
        ++rep.total_conflicts;
        if (rep.conflicts.size() < max_listed)
            rep.conflicts.push_back({i, j, std::abs(agg.points[i] - agg.points[j]), f[i], f[j]});
    });
    std::sort(rep.conflicts.begin(), rep.conflicts.end(),
              [](const Conflict &a, const Conflict &b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    rep.is_computable = rep.total_conflicts == 0;
    if (rep.is_computable)
        return rep;

    const auto cl = detail::single_linkage(agg.points, tol);
    std::vector<std::vector<std::size_t>> members(cl.count);
    for (std::size_t i = 0; i < agg.points.size(); ++i)
        members[cl.label[i]].push_back(i);
    for (auto &mem : members) {
        std::vector<double> vals;
        cplx c = 0.0;
        for (auto i : mem) {
            vals.push_back(f[i]);
            c += agg.points[i];
        }
        vals = distinct_sorted(std::move(vals));
        if (vals.size() < 2)
            continue;
        rep.groups.push_back({c / static_cast<double>(mem.size()), std::move(vals), std::move(mem)});
    }
    return rep;
}

// Receiver lookup: nearest anchor wins.
struct DecoderTable
{
    std::vector<cplx> anchors;
    std::vector<double> outputs;
};

// 1e-6 of the constellation extent. The bounding-box diagonal bounds the largest pairwise
// distance from above and avoids an O(M^2) scan.
inline double default_cluster_tol(std::span<const cplx> points)
{
    if (points.empty())
        return 1e-300;
    double rmin = points[0].real(), rmax = rmin, imin = points[0].imag(), imax = imin;
    for (auto p : points) {
        rmin = std::min(rmin, p.real());
        rmax = std::max(rmax, p.real());
        imin = std::min(imin, p.imag());
        imax = std::max(imax, p.imag());
    }
    return std::max(1e-6 * std::hypot(rmax - rmin, imax - imin), 1e-300);
}

// Clusters the aggregated points; each anchor outputs the unique f-value of its cluster, or
// the mean of the distinct colliding values when the cluster mixes outputs.
inline DecoderTable build_decoder(const AggregatedConstellation &agg, double cluster_tol)
{
    if (!(cluster_tol > 0.0))
        throw InvalidArgument("cluster_tol must be positive");
    const auto cl = detail::single_linkage(agg.points, cluster_tol);
    std::vector<cplx> sum(cl.count, 0.0);
    std::vector<std::size_t> n(cl.count, 0);
    std::vector<std::vector<double>> vals(cl.count);
    for (std::size_t i = 0; i < agg.points.size(); ++i) {
        const auto c = cl.label[i];
        sum[c] += agg.points[i];
        ++n[c];
        vals[c].push_back(agg.function_values[i]);
    }
    DecoderTable t;
    t.anchors.resize(cl.count);
    t.outputs.resize(cl.count);
    for (std::size_t c = 0; c < cl.count; ++c) {
        t.anchors[c] = sum[c] / static_cast<double>(n[c]);
        const auto d = distinct_sorted(std::move(vals[c]));
        double acc = 0.0;
        for (double v : d)
            acc += v;
        t.outputs[c] = d.size() == 1 ? d.front() : acc / static_cast<double>(d.size());
    }
    return t;
}

inline DecoderTable build_decoder(const AggregatedConstellation &agg)
{
    return build_decoder(agg, default_cluster_tol(agg.points));
}

// Index of the anchor minimising |y - g_m|^2; ties go to the smallest index.
inline std::size_t nearest_anchor(cplx y, std::span<const cplx> anchors)
{
    if (anchors.empty())
        throw InvalidArgument("empty anchor set");
    std::size_t best = 0;
    double best_d = std::norm(y - anchors[0]);
    for (std::size_t m = 1; m < anchors.size(); ++m) {
        const double d = std::norm(y - anchors[m]);
        if (d < best_d) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

inline double decode(cplx y, const DecoderTable &table)
{
    return table.outputs[nearest_anchor(y, table.anchors)];
}

} // namespace chcomp

#endif
