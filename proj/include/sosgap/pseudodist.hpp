#pragma once

#include <sosgap/common.hpp>
#include <sosgap/instance.hpp>
#include <sosgap/predicate.hpp>
#include <sosgap/structure.hpp>

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace sosgap {

/// Exact distribution over [q]^scope. Assignment indices are little-endian
/// base q over the sorted scope: scope[0] is the least significant digit.
struct LocalDistribution {
    VertexSet scope;
    int q = 2;
    std::vector<Rational> probs;

    static auto uniform(VertexSet scope, int q) -> LocalDistribution;

    auto size() const -> std::size_t { return probs.size(); }
    /// Values aligned with `scope`.
    auto assignment(std::size_t index) const -> std::vector<int>;
    auto index_of(std::span<const int> values) const -> std::size_t;
    /// Probability that the variables in `vars` (a subset of scope) take `values`.
    auto prob(const VertexSet & vars, std::span<const int> values) const -> Rational;
    auto marginal(const VertexSet & onto) const -> LocalDistribution;
    auto is_distribution() const -> bool;

    auto to_json() const -> nlohmann::json;
    static auto from_json(const nlohmann::json & j) -> LocalDistribution;

    friend auto operator==(const LocalDistribution &, const LocalDistribution &) -> bool = default;
};

/// C(S) over the instance's constraints.
auto constraints_covered(const Instance & inst, const VertexSet & s) -> ConstraintSet;

/// mu(alpha + c), alpha aligned with the constraint's scope sequence.
auto mu_c(const Predicate & p, const SupportDistribution & mu, const Constraint & c, std::span<const int> alpha) -> Rational;

/// Pi'_U marginalised onto `onto` (a subset of U). Throws LocalContradiction when Z_U = 0.
auto pi_prime(const Instance & inst, const SupportDistribution & mu, const VertexSet & u, const VertexSet & onto) -> LocalDistribution;
auto pi_prime(const Instance & inst, const SupportDistribution & mu, const VertexSet & u) -> LocalDistribution;

/// Z_U as an exact rational (0 allowed).
auto partition_value(const Instance & inst, const SupportDistribution & mu, const VertexSet & u) -> Rational;

struct ClosureParams {
    Rational e1;
    Rational e2;
    int s1 = 0;
    /// Whether closure() enforces |S| < (e1-e2) s1.
    bool enforce_size_precondition = false;
    double log2_budget = 24.0;
};

/// A family S -> D_S. Three kinds share the interface:
///  - pi: Pi_S = marginal of Pi'_{Cl(S)} for a CSP instance;
///  - conditional: D_{S|X=alpha} over a base family;
///  - tables: explicit distributions; a set is served by the first stored
///    superset in key order (marginalised), else refused.
class LocalDistributionFamily : public std::enable_shared_from_this<LocalDistributionFamily> {
public:
    enum class Kind { pi, conditional, tables };

    static auto make_pi(std::shared_ptr<const Instance> inst, SupportDistribution mu, ClosureParams params, int radius)
        -> std::shared_ptr<LocalDistributionFamily>;
    static auto make_tables(int n, int q, std::vector<LocalDistribution> tables, int radius)
        -> std::shared_ptr<LocalDistributionFamily>;

    /// Throws UndefinedValue if D_X(alpha) = 0. alpha is aligned with sorted X.
    auto condition(const VertexSet & x, std::vector<int> alpha) const -> std::shared_ptr<LocalDistributionFamily>;

    auto kind() const -> Kind { return _kind; }
    auto n() const -> int { return _n; }
    auto q() const -> int { return _q; }
    auto radius() const -> int { return _radius; }

    /// D_S; throws LocalityError when |S| exceeds the radius.
    auto get(const VertexSet & s) const -> std::shared_ptr<const LocalDistribution>;
    auto prob(const VertexSet & vars, std::span<const int> values) const -> Rational;

    /// Replace a member (negative controls). Applies to this family only.
    auto override_entry(const LocalDistribution & d) -> void;

    // pi kind
    auto instance() const -> const std::shared_ptr<const Instance> & { return _inst; }
    auto hypergraph() const -> const Hypergraph & { return _hypergraph; }
    auto mu() const -> const SupportDistribution & { return _mu; }
    auto params() const -> const ClosureParams & { return _params; }
    auto closure_of(const VertexSet & s) const -> std::shared_ptr<const ClosureResult>;

    // conditional kind
    auto base() const -> const std::shared_ptr<const LocalDistributionFamily> & { return _base; }
    auto conditioned_set() const -> const VertexSet & { return _x; }
    auto conditioned_values() const -> const std::vector<int> & { return _alpha; }
    auto conditioning_mass() const -> const Rational & { return _mass; }

    auto dump(const std::vector<VertexSet> & sets) const -> nlohmann::json;

private:
    LocalDistributionFamily() = default;

    auto compute(const VertexSet & s) const -> LocalDistribution;

    Kind _kind = Kind::tables;
    int _n = 0;
    int _q = 2;
    int _radius = 0;

    std::shared_ptr<const Instance> _inst;
    Hypergraph _hypergraph;
    SupportDistribution _mu;
    ClosureParams _params;

    std::shared_ptr<const LocalDistributionFamily> _base;
    VertexSet _x;
    std::vector<int> _alpha;
    Rational _mass;

    std::map<VertexSet, LocalDistribution> _tables;

    mutable std::mutex _lock;
    mutable std::map<VertexSet, std::shared_ptr<const LocalDistribution>> _cache;
    mutable std::map<VertexSet, std::shared_ptr<const ClosureResult>> _closures;
    std::map<VertexSet, std::shared_ptr<const LocalDistribution>> _overrides;
};

using FamilyPtr = std::shared_ptr<const LocalDistributionFamily>;

struct ConsistencyViolation {
    VertexSet t;
    VertexSet s;
    std::vector<int> alpha;
    Rational direct;
    Rational marginal;

    auto to_json() const -> nlohmann::json;
};

struct ConsistencyReport {
    bool consistent = true;
    std::uint64_t pairs_checked = 0;
    std::optional<ConsistencyViolation> violation;

    auto to_json() const -> nlohmann::json;
};

/// For every S in `sets` and every nonempty proper T of S, compares D_T with
/// the marginal of D_S. Stops at the first violation.
auto verify_local_consistency(const LocalDistributionFamily & f, const std::vector<VertexSet> & sets) -> ConsistencyReport;

struct SupportViolation {
    int constraint;
    VertexSet scope;
    std::vector<int> alpha;
    Rational probability;

    auto to_json() const -> nlohmann::json;
};

struct SupportReport {
    bool supported = true;
    int constraints_checked = 0;
    std::optional<SupportViolation> violation;

    auto to_json() const -> nlohmann::json;
};

auto verify_support(const LocalDistributionFamily & f, const Instance & inst) -> SupportReport;

/// All subsets of [n] of size 1..r, in lexicographic order.
auto all_sets_up_to(int n, int r) -> std::vector<VertexSet>;

struct ProportionalityReport {
    bool hypothesis = false;
    bool holds = false;
    VertexSet removed;
    /// Pi'_S(T = a) / Pi'_{S\B}(T\B = a_{T\B}) where the latter is positive.
    std::optional<Rational> ratio;

    auto to_json() const -> nlohmann::json;
};

/// Checks Pi'_S(T = a) = q^{-|B & T|} Pi'_{S\B}(T\B = a_{T\B}) for all a, where
/// B is the part of C*'s scope on the boundary of C(S).
auto check_removal_proportionality(const Instance & inst, const SupportDistribution & mu, int t, const VertexSet & s,
    const VertexSet & tset, int cstar) -> ProportionalityReport;

} // namespace sosgap
