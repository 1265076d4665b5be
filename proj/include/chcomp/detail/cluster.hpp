// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_DETAIL_CLUSTER_HPP
#define CHCOMP_DETAIL_CLUSTER_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "../error.hpp"

namespace chcomp::detail
{

using cplx = std::complex<double>;

class UnionFind
{
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t i)
    {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    // the smaller root wins so that labels follow first appearance
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        if (a < b)
            parent_[b] = a;
        else
            parent_[a] = b;
    }

private:
    std::vector<std::size_t> parent_;
};

struct CellKey
{
    std::int64_t x, y;
    bool operator==(const CellKey &) const = default;
};

struct CellKeyHash
{
    std::size_t operator()(const CellKey &k) const noexcept
    {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::uint64_t>(k.y) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

inline std::int64_t cell_coord(double v, double cell)
{
    const double c = std::floor(v / cell);
    if (!(std::abs(c) < 4.0e18))
        throw InvalidArgument("clustering tolerance too small for the point magnitudes");
    return static_cast<std::int64_t>(c);
}

// Calls fn(i, j) with i < j for every pair of points at distance <= tol.
// Uses a uniform grid of cell size tol, so only the 3x3 neighbourhood of each cell is scanned.
template <typename Fn>
void for_each_close_pair(std::span<const cplx> points, double tol, Fn &&fn)
{
    if (!(tol > 0.0))
        throw InvalidArgument("tolerance must be positive");
    std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> grid;
    grid.reserve(points.size());
    const double tol2 = tol * tol;
    for (std::size_t j = 0; j < points.size(); ++j) {
        const CellKey key{cell_coord(points[j].real(), tol), cell_coord(points[j].imag(), tol)};
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = grid.find(CellKey{key.x + dx, key.y + dy});
                if (it == grid.end())
                    continue;
                for (std::size_t i : it->second) {
                    if (std::norm(points[i] - points[j]) <= tol2)
                        fn(i, j);
                }
            }
        }
        grid[key].push_back(j);
    }
}

struct Clustering
{
    std::vector<std::size_t> label; // per point, cluster id in order of first appearance
    std::size_t count = 0;
};

// Single-linkage clustering with absolute distance threshold tol.
inline Clustering single_linkage(std::span<const cplx> points, double tol)
{
    UnionFind uf(points.size());
    for_each_close_pair(points, tol, [&](std::size_t i, std::size_t j) { uf.unite(i, j); });

    Clustering out;
    out.label.assign(points.size(), 0);
    std::vector<std::size_t> root_to_label(points.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::size_t r = uf.find(i);
        if (root_to_label[r] == static_cast<std::size_t>(-1))
            root_to_label[r] = out.count++;
        out.label[i] = root_to_label[r];
    }
    return out;
}

} // namespace chcomp::detail

#endif
