#pragma once

#include <sosgap/common.hpp>
#include <sosgap/predicate.hpp>

#include <nlohmann/json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace sosgap {

/// One P-constraint: P(x_S + c) = 1 with component-wise addition mod q.
struct Constraint {
    std::vector<int> negation;
    std::vector<int> scope;

    auto variables() const -> VertexSet { return make_set(scope); }
};

struct ModelFlags {
    /// Draw scopes from [n]^k instead of distinct-entry sequences.
    bool allow_repeats = false;
};

struct Instance {
    Predicate predicate;
    int n = 0;
    std::vector<Constraint> constraints;
    std::uint64_t seed = 0;
    ModelFlags flags;

    auto m() const -> int { return static_cast<int>(constraints.size()); }
    auto validate() const -> void;

    auto to_json() const -> nlohmann::json;
    static auto from_json(const nlohmann::json & j) -> Instance;
};

/// m i.i.d. constraints: negation uniform over [q]^k, scope uniform over
/// distinct-entry sequences (or [n]^k with allow_repeats). Pure in its arguments.
auto generate(const Predicate & p, int n, int m, std::uint64_t seed, ModelFlags flags = {}) -> Instance;

auto satisfies(const Instance & inst, const Constraint & c, std::span<const int> x) -> bool;

/// Fraction of satisfied constraints. Throws UndefinedValue when m = 0.
auto val(const Instance & inst, std::span<const int> x) -> Rational;

struct OptResult {
    Rational value;
    std::vector<int> witness;
};

/// Exhaustive maximum of val; refuses with BudgetError when q^n > 2^log2_budget.
auto opt_bruteforce(const Instance & inst, double log2_budget = 20.0) -> OptResult;

/// Constraint hypergraph. Scopes are kept per constraint (as unordered vertex
/// sets) so that multiset effects are visible to expansion checks; `edges`
/// deduplicates them. Removing a vertex set X yields the residual H - X in
/// which constraints inside X are inactive and the others lose X's vertices.
struct Hypergraph {
    int n = 0;
    int k = 0;
    std::vector<VertexSet> scopes;
    std::vector<bool> active;
    std::vector<VertexSet> edges;
    std::vector<ConstraintSet> edge_constraints;

    static auto from_scopes(int n, int k, std::vector<VertexSet> scopes) -> Hypergraph;

    auto constraint_count() const -> int { return static_cast<int>(scopes.size()); }
    auto active_constraints() const -> ConstraintSet;
    auto without(const VertexSet & x) const -> Hypergraph;

    auto to_json() const -> nlohmann::json;
};

auto hypergraph_of(const Instance & inst) -> Hypergraph;

/// Binary variable x_i (value < 0) or one-hot indicator x_{i,a}.
struct EncVar {
    int var;
    int value = -1;

    auto operator<=>(const EncVar &) const = default;
};

using Monomial = std::vector<EncVar>;
using Polynomial = std::map<Monomial, Rational>;

/// sum_j coeffs[j] x_j + constant >= rhs
struct LinearInequality {
    int constraint;
    std::vector<int> falsifying;
    std::map<int, Rational> coeffs;
    Rational constant;
    Rational rhs;
};

enum class EncodingForm { degk, linear, boolean01 };

auto parse_encoding_form(const std::string & s) -> EncodingForm;
auto encoding_form_name(EncodingForm f) -> std::string;

struct EncodedSystem {
    EncodingForm form;
    /// Equalities poly = 0, one per constraint (degk, boolean01).
    std::vector<std::pair<int, Polynomial>> equations;
    /// One per falsifying pattern per constraint (linear).
    std::vector<LinearInequality> inequalities;
    /// One-hot side conditions sum_a x_{i,a} - 1 = 0 (boolean01).
    std::vector<std::pair<int, Polynomial>> side_conditions;

    auto to_json() const -> nlohmann::json;
};

auto encode(const Instance & inst, EncodingForm form) -> EncodedSystem;

/// Evaluates a polynomial at an assignment x in [q]^n; x_i for binary
/// variables, [x_i == a] for x_{i,a}.
auto evaluate(const Polynomial & poly, std::span<const int> x) -> Rational;
auto evaluate(const LinearInequality & ineq, std::span<const int> x) -> bool;

} // namespace sosgap
