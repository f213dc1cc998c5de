#pragma once

#include <sosgap/common.hpp>
#include <sosgap/instance.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace sosgap {

/// Union of the (residual) scopes of T.
auto gamma(const Hypergraph & h, const ConstraintSet & t) -> VertexSet;

/// Vertices covered by exactly one constraint of T.
auto boundary(const Hypergraph & h, const ConstraintSet & t) -> VertexSet;

enum class ExpansionMode { vertex, boundary };

auto expansion_mode_name(ExpansionMode m) -> const char *;

struct ExpansionOptions {
    /// Exhaustive search refuses when sum_{j<=s} C(m,j) exceeds 2^log2_budget.
    double log2_budget = 24.0;
    /// When set, test this many random subsets instead of refusing.
    std::optional<std::uint64_t> samples;
    std::uint64_t sample_seed = 0;
};

struct ExpansionReport {
    int s = 0;
    Rational e;
    ExpansionMode mode = ExpansionMode::vertex;
    bool holds = true;
    bool exhaustive = true;
    std::uint64_t subsets_checked = 0;
    /// Lexicographically least violating T (exhaustive mode).
    std::optional<ConstraintSet> witness;

    auto to_json() const -> nlohmann::json;
};

/// Checks |Gamma(T)| >= e|T| (or |boundary(T)| >= e|T|) for every nonempty set
/// T of active constraints with |T| <= s.
auto check_expansion(const Hypergraph & h, int s, const Rational & e, ExpansionMode mode, const ExpansionOptions & opts = {})
    -> ExpansionReport;

/// Recomputes the violation claimed by a report's witness from scratch.
auto witness_reverifies(const Hypergraph & h, const ExpansionReport & report) -> bool;

/// Largest s <= cap for which H is (s, e)-expanding (0 if none).
auto largest_expanding_size(const Hypergraph & h, const Rational & e, ExpansionMode mode, int cap, const ExpansionOptions & opts = {})
    -> int;

struct ClosureStep {
    int step;
    int vertex;
    bool violated;
    ConstraintSet absorbed;
    VertexSet added;
    int s2_after;
};

struct ClosureOptions {
    /// Refuse when |S| >= (e1 - e2) s1.
    bool enforce_size_precondition = true;
    /// Re-check residual expansion and the size bounds; throw InvariantError on failure.
    bool check_postconditions = true;
    double log2_budget = 24.0;
};

struct ClosureResult {
    VertexSet closure;
    int s1 = 0;
    int s2 = 0;
    Rational e1;
    Rational e2;
    std::vector<ClosureStep> trace;
    /// e1/(e1-e2) |S|, the bound the proof establishes.
    Rational proved_bound;
    /// (k + 2e1 - e2) / (2(e1-e2)) |S|, the looser closed form; reported only.
    Rational stated_bound;
    bool residual_certified = false;
    bool size_bounds_hold = false;

    auto to_json() const -> nlohmann::json;
};

auto closure(const Hypergraph & h, const std::vector<int> & s, const Rational & e1, const Rational & e2, int s1, const ClosureOptions & opts = {})
    -> ClosureResult;

/// Constraints whose scope lies inside S (inactive constraints excluded).
auto covered_constraints(const Hypergraph & h, const VertexSet & s) -> ConstraintSet;

struct PeelStep {
    int constraint;
    VertexSet removed;
};

struct PeelResult {
    VertexSet remaining;
    std::vector<PeelStep> trace;

    auto to_json() const -> nlohmann::json;
};

/// Repeatedly removes from S the unprotected boundary vertices of the lowest
/// covered constraint that has at least k-t+1 of them.
auto peel(const Hypergraph & h, const VertexSet & s0, const VertexSet & protected_vertices, int t) -> PeelResult;

} // namespace sosgap
