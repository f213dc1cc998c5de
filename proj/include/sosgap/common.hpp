#pragma once

#include <gmpxx.h>
#include <nlohmann/json_fwd.hpp>

#include <bitset>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sosgap {

using Rational = mpq_class;
using BigInt = mpz_class;

/// Sorted, duplicate-free list of variable indices in [0, n).
using VertexSet = std::vector<int>;

/// Sorted, duplicate-free list of constraint indices.
using ConstraintSet = std::vector<int>;

/// Upper bound on n for the bitmask-based exhaustive searches.
inline constexpr int kMaxMaskVertices = 256;
using VertexMask = std::bitset<kMaxMaskVertices>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input.
class InputError : public Error {
public:
    using Error::Error;
};

/// An enumeration would exceed its configured budget; carries the size it needed.
class BudgetError : public Error {
public:
    BudgetError(const std::string & what, double required) :
        Error(what), _required(required)
    {
    }

    auto required() const -> double { return _required; }

private:
    double _required;
};

/// Z_S = 0: the local product of shifted witnesses vanishes identically.
class LocalContradiction : public Error {
public:
    using Error::Error;
};

/// A set exceeds the locality radius of a family.
class LocalityError : public Error {
public:
    using Error::Error;
};

class UnsupportedForm : public Error {
public:
    using Error::Error;
};

/// A quantity is undefined for the given input (e.g. Val of an empty instance).
class UndefinedValue : public Error {
public:
    using Error::Error;
};

/// A postcondition that the mathematics guarantees did not hold.
class InvariantError : public Error {
public:
    using Error::Error;
};

auto rational_to_string(const Rational & r) -> std::string;
auto parse_rational(std::string_view text) -> Rational;

/// [numerator, denominator] as decimal strings.
auto rational_json(const Rational & r) -> nlohmann::json;
/// Accepts the pair form or a single string such as "3/4".
auto rational_from_json(const nlohmann::json & j) -> Rational;

auto is_sorted_set(const std::vector<int> & v) -> bool;
auto make_set(std::vector<int> v) -> std::vector<int>;
auto set_union(const std::vector<int> & a, const std::vector<int> & b) -> std::vector<int>;
auto set_difference(const std::vector<int> & a, const std::vector<int> & b) -> std::vector<int>;
auto set_intersection(const std::vector<int> & a, const std::vector<int> & b) -> std::vector<int>;
auto is_subset(const std::vector<int> & small, const std::vector<int> & big) -> bool;
auto contains(const std::vector<int> & set, int x) -> bool;

auto mask_of(const VertexSet & s) -> VertexMask;
auto set_of(const VertexMask & m, int n) -> VertexSet;

/// q^e as an exact integer count; throws InputError when it would not fit in 62 bits.
auto checked_power(int q, int e) -> std::uint64_t;

} // namespace sosgap
