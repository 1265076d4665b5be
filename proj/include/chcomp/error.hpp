// SPDX-License-Identifier: Apache-2.0
//
// chcomp: digital constellation design for computation over multiple-access channels.
// ------------------------------------------------------------------------

#ifndef CHCOMP_ERROR_HPP
#define CHCOMP_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chcomp
{

// Bad input: wrong dimensions, unknown names, malformed documents.
class InvalidArgument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// A design or adaptation problem has no solution for the requested parameters.
class InfeasibleError : public std::runtime_error
{
public:
    InfeasibleError(const std::string &what, std::size_t witness_i = npos, std::size_t witness_j = npos)
        : std::runtime_error(what), witness_i_(witness_i), witness_j_(witness_j) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    bool has_witness() const { return witness_i_ != npos; }
    std::size_t witness_i() const { return witness_i_; }
    std::size_t witness_j() const { return witness_j_; }

private:
    std::size_t witness_i_, witness_j_;
};

// Solver breakdown, non-finite values, or an iteration budget exhausted without a usable iterate.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace chcomp

#endif
