// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_FUNCTIONS_HPP
#define CHCOMP_FUNCTIONS_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "detail/cluster.hpp"
#include "error.hpp"

namespace chcomp
{

using cplx = std::complex<double>;

// Input tuples (x_1, ..., x_K) with x_k in {0, ..., q-1} are numbered in mixed radix,
// x_1 being the most significant digit: i = sum_k x_k q^(K-k).
inline std::size_t domain_size(std::size_t num_nodes, std::size_t levels)
{
    if (num_nodes == 0 || levels < 2)
        throw InvalidArgument("need num_nodes >= 1 and levels >= 2");
    std::size_t m = 1;
    for (std::size_t k = 0; k < num_nodes; ++k) {
        if (m > std::numeric_limits<std::size_t>::max() / levels)
            throw std::overflow_error("q^K overflows");
        m *= levels;
    }
    return m;
}

// digit of node k (0-based) within tuple index i
inline std::size_t tuple_digit(std::size_t i, std::size_t k, std::size_t num_nodes, std::size_t levels)
{
    for (std::size_t r = num_nodes - 1; r > k; --r)
        i /= levels;
    return i % levels;
}

inline std::vector<std::size_t> index_to_tuple(std::size_t i, std::size_t num_nodes, std::size_t levels)
{
    if (i >= domain_size(num_nodes, levels))
        throw InvalidArgument("tuple index out of range");
    std::vector<std::size_t> t(num_nodes);
    for (std::size_t r = num_nodes; r-- > 0;) {
        t[r] = i % levels;
        i /= levels;
    }
    return t;
}

inline std::size_t tuple_to_index(std::span<const std::size_t> tuple, std::size_t levels)
{
    std::size_t i = 0;
    for (std::size_t x : tuple) {
        if (x >= levels)
            throw InvalidArgument("tuple digit out of range");
        i = i * levels + x;
    }
    return i;
}

// Full tabulation of f over {0..q-1}^K. Immutable once built.
class FiniteFunction
{
public:
    FiniteFunction(std::size_t num_nodes, std::size_t levels, std::vector<double> table)
        : num_nodes_(num_nodes), levels_(levels), table_(std::move(table))
    {
        if (table_.size() != domain_size(num_nodes_, levels_))
            throw InvalidArgument("table: expected " + std::to_string(domain_size(num_nodes_, levels_)) +
                                  " entries, got " + std::to_string(table_.size()));
        for (double v : table_)
            if (!std::isfinite(v))
                throw InvalidArgument("table: entries must be finite");
    }

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t levels() const { return levels_; }
    std::size_t size() const { return table_.size(); }
    std::span<const double> table() const { return table_; }
    double operator[](std::size_t i) const { return table_[i]; }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : table_)
            m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t num_nodes_, levels_;
    std::vector<double> table_;
};

enum class FunctionKind { Sum, Product, Max, QuadraticSum, WeightedSum, Fractional, CustomTable };

// Builtin function selector. Fractional patterns:
//   "ratio"     (x_1+1)/(x_2+1), K = 2
//   "ratio-sum" (x_1+1)/(x_2+1) + (x_4+3)/(x_3+1), K = 4
struct FunctionSpec
{
    FunctionKind kind = FunctionKind::Sum;
    std::vector<double> weights;
    std::string pattern;
    std::vector<double> table;

    static FunctionSpec sum() { return {FunctionKind::Sum, {}, {}, {}}; }
    static FunctionSpec product() { return {FunctionKind::Product, {}, {}, {}}; }
    static FunctionSpec max() { return {FunctionKind::Max, {}, {}, {}}; }
    static FunctionSpec quadratic_sum() { return {FunctionKind::QuadraticSum, {}, {}, {}}; }
    static FunctionSpec weighted_sum(std::vector<double> w) { return {FunctionKind::WeightedSum, std::move(w), {}, {}}; }
    static FunctionSpec fractional(std::string p) { return {FunctionKind::Fractional, {}, std::move(p), {}}; }
    static FunctionSpec custom(std::vector<double> t) { return {FunctionKind::CustomTable, {}, {}, std::move(t)}; }
};

inline std::string function_name(const FunctionSpec &spec)
{
    switch (spec.kind) {
    case FunctionKind::Sum: return "sum";
    case FunctionKind::Product: return "product";
    case FunctionKind::Max: return "max";
    case FunctionKind::QuadraticSum: return "quadratic-sum";
    case FunctionKind::WeightedSum: return "weighted-sum";
    case FunctionKind::Fractional: return "fractional:" + spec.pattern;
    case FunctionKind::CustomTable: return "custom-table";
    }
    return "unknown";
}

// Accepts "sum", "product", "max", "quadratic-sum", "weighted-sum:w1,w2,...", "fractional:<pattern>".
inline FunctionSpec parse_function_spec(const std::string &text)
{
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    if (head == "sum") return FunctionSpec::sum();
    if (head == "product") return FunctionSpec::product();
    if (head == "max") return FunctionSpec::max();
    if (head == "quadratic-sum") return FunctionSpec::quadratic_sum();
    if (head == "fractional") return FunctionSpec::fractional(arg.empty() ? "ratio" : arg);
    if (head == "weighted-sum") {
        std::vector<double> w;
        std::size_t pos = 0;
        while (pos < arg.size()) {
            std::size_t next = arg.find(',', pos);
            if (next == std::string::npos)
                next = arg.size();
            try {
                w.push_back(std::stod(arg.substr(pos, next - pos)));
            } catch (const std::exception &) {
                throw InvalidArgument("function: bad weight list '" + arg + "'");
            }
            pos = next + 1;
        }
        if (w.empty())
            throw InvalidArgument("function: weighted-sum needs weights, e.g. weighted-sum:1,2");
        return FunctionSpec::weighted_sum(std::move(w));
    }
    throw InvalidArgument("function: unknown function '" + text + "'");
}

// Evaluates a builtin on real-valued inputs (level values or raw continuous samples).
inline double evaluate(const FunctionSpec &spec, std::span<const double> x)
{
    switch (spec.kind) {
    case FunctionKind::Sum:
        return std::accumulate(x.begin(), x.end(), 0.0);
    case FunctionKind::Product:
        return std::accumulate(x.begin(), x.end(), 1.0, std::multiplies<>());
    case FunctionKind::Max:
        return *std::max_element(x.begin(), x.end());
    case FunctionKind::QuadraticSum: {
        double s = 0.0;
        for (double v : x)
            s += v * v;
        return s;
    }
    case FunctionKind::WeightedSum: {
        if (spec.weights.size() != x.size())
            throw InvalidArgument("weighted-sum: need one weight per node");
        double s = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k)
            s += spec.weights[k] * x[k];
        return s;
    }
    case FunctionKind::Fractional:
        if (spec.pattern == "ratio") {
            if (x.size() != 2)
                throw InvalidArgument("fractional:ratio needs K = 2");
            return (x[0] + 1.0) / (x[1] + 1.0);
        }
        if (spec.pattern == "ratio-sum") {
            if (x.size() != 4)
                throw InvalidArgument("fractional:ratio-sum needs K = 4");
            return (x[0] + 1.0) / (x[1] + 1.0) + (x[3] + 3.0) / (x[2] + 1.0);
        }
        throw InvalidArgument("fractional: unknown pattern '" + spec.pattern + "'");
    case FunctionKind::CustomTable:
        throw InvalidArgument("custom-table cannot be evaluated on continuous inputs");
    }
    throw InvalidArgument("unknown function kind");
}

// Tabulates f with node inputs taking the values level_values[0..q-1] (default: 0..q-1).
inline FiniteFunction tabulate(const FunctionSpec &spec, std::size_t num_nodes, std::size_t levels,
                               std::span<const double> level_values = {})
{
    const std::size_t m = domain_size(num_nodes, levels);
    if (spec.kind == FunctionKind::CustomTable) {
        if (spec.table.size() != m)
            throw InvalidArgument("table: expected " + std::to_string(m) + " entries, got " +
                                  std::to_string(spec.table.size()));
        return FiniteFunction(num_nodes, levels, spec.table);
    }
    std::vector<double> values(level_values.begin(), level_values.end());
    if (values.empty()) {
        values.resize(levels);
        std::iota(values.begin(), values.end(), 0.0);
    }
    if (values.size() != levels)
        throw InvalidArgument("level_values: expected one value per level");

    std::vector<double> table(m), x(num_nodes);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t rest = i;
        for (std::size_t r = num_nodes; r-- > 0;) {
            x[r] = values[rest % levels];
            rest /= levels;
        }
        table[i] = evaluate(spec, x);
    }
    return FiniteFunction(num_nodes, levels, std::move(table));
}

// True iff f is invariant under every permutation of its arguments. Each tuple is compared
// against its sorted representative instead of enumerating all K! permutations.
inline bool is_symmetric(const FiniteFunction &f)
{
    const double tol = 1e-12 * std::max(1.0, f.max_abs());
    std::vector<std::size_t> t;
    for (std::size_t i = 0; i < f.size(); ++i) {
        t = index_to_tuple(i, f.num_nodes(), f.levels());
        std::sort(t.begin(), t.end());
        if (std::abs(f[tuple_to_index(t, f.levels())] - f[i]) > tol)
            return false;
    }
    return true;
}

// Number of distinct tabulated values, exact comparison.
inline std::size_t range_cardinality(const FiniteFunction &f)
{
    std::vector<double> v(f.table().begin(), f.table().end());
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

struct RangeBounds
{
    std::uint64_t lower = 0;
    std::uint64_t upper = 0;
};

// Bounds on the number of distinct points of sum_k E(x_k) under one shared modulation E:
// (q-1)K + 1 <= |R_s| <= binom(K+q-1, q-1). Overflow is reported, never wrapped.
inline RangeBounds sum_range_bounds(std::uint64_t num_nodes, std::uint64_t levels)
{
    if (num_nodes < 1 || levels < 2)
        throw InvalidArgument("need K >= 1 and q >= 2");
    RangeBounds b;
    if (__builtin_mul_overflow(levels - 1, num_nodes, &b.lower) || __builtin_add_overflow(b.lower, 1u, &b.lower))
        throw std::overflow_error("lower bound overflows 64 bits");

    // binom(n, r) built incrementally; every partial product binom(n-r+i, i) is an integer
    const std::uint64_t r = std::min(levels - 1, num_nodes);
    std::uint64_t n;
    if (__builtin_add_overflow(num_nodes, levels - 1, &n))
        throw std::overflow_error("binomial overflows 64 bits");
    unsigned __int128 acc = 1;
    for (std::uint64_t i = 1; i <= r; ++i) {
        acc = acc * (n - r + i) / i;
        if (acc > std::numeric_limits<std::uint64_t>::max())
            throw std::overflow_error("binomial overflows 64 bits");
    }
    b.upper = static_cast<std::uint64_t>(acc);
    return b;
}

// Counts distinct values of sum_k mod[x_k] over all q^K tuples, collapsing sums closer than tol.
inline std::size_t empirical_sum_range(std::span<const cplx> mod, std::size_t num_nodes, double tol)
{
    if (!(tol > 0.0))
        throw InvalidArgument("tol must be positive");
    const std::size_t q = mod.size();
    const std::size_t m = domain_size(num_nodes, q);
    std::vector<cplx> sums(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t rest = i;
        cplx s = 0.0;
        for (std::size_t k = 0; k < num_nodes; ++k) {
            s += mod[rest % q];
            rest /= q;
        }
        sums[i] = s;
    }
    return detail::single_linkage(sums, tol).count;
}

inline double default_sum_range_tol(std::span<const cplx> mod)
{
    double m = 0.0;
    for (auto p : mod)
        m = std::max(m, std::abs(p));
    return 1e-9 * std::max(m, std::numeric_limits<double>::min());
}

// For q = 2: f is computable with one shared antipodal modulation iff its value depends only
// on the Hamming weight of the input, since the received point is then (2w - K)A.
inline bool computable_by_one_bit(const FiniteFunction &f)
{
    if (f.levels() != 2)
        throw InvalidArgument("one-bit check needs q = 2");
    std::vector<double> by_weight(f.num_nodes() + 1, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto w = static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(i)));
        if (std::isnan(by_weight[w]))
            by_weight[w] = f[i];
        else if (by_weight[w] != f[i])
            return false;
    }
    return true;
}

} // namespace chcomp

#endif
