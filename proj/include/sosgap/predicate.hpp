#pragma once

#include <sosgap/common.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sosgap {

/// A predicate P : [q]^k -> {0,1} stored as a truth table. Table index of z is
/// sum_i z_i q^(k-1-i), i.e. lexicographic with the first coordinate most
/// significant.
class Predicate {
public:
    Predicate(int k, int q, std::vector<std::uint8_t> table);

    static auto parity(int k, bool even = true) -> Predicate;
    static auto disjunction(int k) -> Predicate;
    static auto not_all_equal(int k) -> Predicate;
    static auto constant_true(int k, int q = 2) -> Predicate;

    /// parityK, parityK-odd, orK, naeK, trueK.
    static auto named(const std::string & name) -> Predicate;
    static auto from_json(const nlohmann::json & j) -> Predicate;
    auto to_json() const -> nlohmann::json;

    auto arity() const -> int { return _k; }
    auto alphabet() const -> int { return _q; }
    auto table_size() const -> std::size_t { return _table.size(); }

    auto eval(std::span<const int> z) const -> bool;
    auto at(std::size_t index) const -> bool { return _table[index] != 0; }

    auto index_of(std::span<const int> z) const -> std::size_t;
    auto point(std::size_t index) const -> std::vector<int>;

    auto satisfying_count() const -> std::size_t;
    auto has_falsifying() const -> bool { return satisfying_count() < _table.size(); }

    auto name() const -> const std::string & { return _name; }
    auto with_name(std::string name) && -> Predicate;

    friend auto operator==(const Predicate & a, const Predicate & b) -> bool
    {
        return a._k == b._k && a._q == b._q && a._table == b._table;
    }

private:
    int _k;
    int _q;
    std::vector<std::uint8_t> _table;
    std::string _name;
};

/// Weights over [q]^k, indexed like the predicate table.
struct SupportDistribution {
    std::vector<Rational> weights;

    auto weight(std::size_t index) const -> const Rational & { return weights[index]; }
    auto to_json(const Predicate & p) const -> nlohmann::json;
    static auto from_json(const Predicate & p, const nlohmann::json & j) -> SupportDistribution;
};

/// Exact decision of t-wise uniform support. Only the size-exactly-t marginal
/// constraints are imposed. Returns a simplex vertex when feasible.
auto twise_support(const Predicate & p, int t) -> std::optional<SupportDistribution>;

/// Recomputes every marginal of size <= t by summation over [q]^k, and checks
/// nonnegativity, normalisation and support. Independent of the LP.
auto is_twise_uniform_supporting(const Predicate & p, const SupportDistribution & mu, int t) -> bool;

struct Complexity {
    int value;
    /// Set when every t <= k is feasible, which only happens for P == 1.
    bool trivial;
};

auto cmplx(const Predicate & p) -> Complexity;

} // namespace sosgap
