// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_DETAIL_RNG_HPP
#define CHCOMP_DETAIL_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace chcomp::detail
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Stream key from an ordered list of identifiers; distinct lists give unrelated streams.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> ids)
{
    std::uint64_t h = 0x243F6A8885A308D3ull;
    for (auto id : ids)
        h = splitmix64(h ^ splitmix64(id));
    return h;
}

inline std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> ids)
{
    return std::mt19937_64(stream_key(ids));
}

} // namespace chcomp::detail

#endif
