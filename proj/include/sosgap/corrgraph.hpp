#pragma once

#include <sosgap/common.hpp>
#include <sosgap/psdlab.hpp>
#include <sosgap/pseudodist.hpp>
#include <sosgap/structure.hpp>

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace sosgap {

/// Undirected graph on [n]; edges are stored once with u < v, sorted.
struct SimpleGraph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;

    auto adjacency() const -> std::vector<std::vector<int>>;
    auto has_edge(int u, int v) const -> bool;
    auto to_json() const -> nlohmann::json;
};

struct CorrelationEdge {
    int u;
    int v;
    /// Entry of largest magnitude in the (u,v) block.
    int a;
    int b;
    Rational entry;
};

struct CorrelationGraph {
    int n = 0;
    int q = 2;
    std::vector<CorrelationEdge> edges;

    auto graph() const -> SimpleGraph;
    auto to_json() const -> nlohmann::json;
};

/// Edge (u,v) iff some Sigma((u,a),(v,b)) is nonzero, decided exactly.
auto build_correlation_graph(const LocalDistributionFamily & f) -> CorrelationGraph;
auto correlation_graph_of(const SymmetricRationalMatrix & sigma, int n, int q) -> CorrelationGraph;

struct Components {
    /// Each part sorted; parts ordered by their smallest vertex.
    std::vector<VertexSet> parts;
    int max_size = 0;

    auto to_json() const -> nlohmann::json;
};

auto connected_components(const SimpleGraph & g) -> Components;

struct CrossEntry {
    int u;
    int a;
    int v;
    int b;
    Rational entry;
};

struct BlockVerdict {
    VertexSet component;
    PsdCertificate block;
    /// Covariance of D_component compared with the block and decided (within radius only).
    bool distribution_checked = false;
    bool matches_distribution = false;
    bool distribution_psd = false;
};

struct BlockPsdReport {
    bool cross_zero = true;
    std::optional<CrossEntry> cross_violation;
    std::vector<BlockVerdict> blocks;
    bool blocks_psd = true;
    PsdCertificate full;
    FloatVerdict full_float;
    /// psd_exact(full) equals the conjunction of the block verdicts.
    bool full_matches_blocks = true;
    /// psd_float(full) agrees with the block conjunction (vacuous inside the tolerance band).
    bool float_matches = true;
    /// A component larger than the locality radius (reported as an error).
    std::optional<VertexSet> oversized_component;
    bool holds = true;

    auto to_json() const -> nlohmann::json;
};

/// Components are those of g; the full covariance is rebuilt from f.
auto block_psd_verify(const LocalDistributionFamily & f, const CorrelationGraph & g) -> BlockPsdReport;

struct BadStructureCheck {
    bool is_bad = false;
    /// 0 when bad, else the first failing condition (1: u,v in Gamma(W); 2: connected; 3: boundary counts).
    int failed_condition = 0;
    /// Per constraint of W: W-boundary variables other than u and v.
    std::vector<int> counts;

    auto to_json() const -> nlohmann::json;
};

auto bad_structure_check(const Hypergraph & h, const ConstraintSet & w, int u, int v, int t) -> BadStructureCheck;

struct BadStructure {
    ConstraintSet w;
    int u;
    int v;
    std::vector<int> counts;

    auto to_json() const -> nlohmann::json;
};

struct EnumerationOptions {
    /// Refuse after visiting this many connected subsets.
    std::uint64_t budget = std::uint64_t{1} << 22;
    bool first_only = false;
};

/// Every connected W with |W| <= max_size that is a bad structure for (u,v), in
/// discovery order. Grows connected sets from the constraints containing u.
auto enumerate_bad_structures(const Hypergraph & h, int u, int v, int t, int max_size, const EnumerationOptions & opts = {},
    std::uint64_t * visited = nullptr) -> std::vector<BadStructure>;

struct GbadOptions {
    /// Global override of the per-pair size bound.
    std::optional<int> max_size;
    /// Per-pair bound; required when max_size is unset.
    std::function<int(int, int)> pair_bound;
    /// Vertices removed from H (pairs touching them are skipped).
    VertexSet removed;
    /// Restrict the search to these pairs (u < v); all pairs when unset.
    std::optional<std::vector<std::pair<int, int>>> pairs;
    EnumerationOptions enumeration;
    /// Refuse once all pairs together have visited this many connected sets.
    std::optional<std::uint64_t> total_budget;
};

struct GbadEdge {
    int u;
    int v;
    BadStructure witness;
};

struct GbadGraph {
    int n = 0;
    int t = 0;
    std::vector<GbadEdge> edges;
    std::uint64_t pairs_checked = 0;
    std::uint64_t subsets_visited = 0;
    /// Witnesses with |Gamma(W)| > (k - t/2)|W| + 1 (expected empty).
    std::vector<BadStructure> density_violations;

    auto graph() const -> SimpleGraph;
    auto witness_for(int u, int v) const -> const GbadEdge *;
    auto to_json() const -> nlohmann::json;
};

auto build_gbad(const Hypergraph & h, int t, const GbadOptions & opts) -> GbadGraph;

/// |C(Cl({u,v}))| under the family's closure, or for a conditioning set X the
/// constraints of H - X covered by Cl({u,v} + X) minus X.
auto closure_pair_bound(const LocalDistributionFamily & pi, const VertexSet & x = {}) -> std::function<int(int, int)>;

struct CorrException {
    int u;
    int v;
    int a;
    int b;
    Rational entry;

    auto to_json() const -> nlohmann::json;
};

struct CorrBadReport {
    std::uint64_t pairs_checked = 0;
    /// Covariance-correlated pairs that are not G_bad edges.
    std::vector<CorrException> exceptions;
    /// Pairs whose own joint D_{u,v} is not a product, without a G_bad edge.
    std::vector<CorrException> intrinsic_exceptions;
    int correlated_pairs = 0;
    int intrinsic_correlated_pairs = 0;
    bool holds = true;

    auto to_json() const -> nlohmann::json;
};

/// Pairs whose joint D_{u,v} is not the product of its own marginals.
auto intrinsic_correlated_pairs(const LocalDistributionFamily & f) -> std::vector<std::pair<int, int>>;

auto verify_corr_implies_bad(const LocalDistributionFamily & f, const CorrelationGraph & corr, const GbadGraph & gbad) -> CorrBadReport;

enum class CheckStatus { pass, fail, skipped };

auto check_status_name(CheckStatus s) -> const char *;

struct ChainLink {
    int u;
    int v;
    ConstraintSet w;
    /// |T_i| and |Gamma(T_i)| for the running union T_i.
    int union_size;
    int union_gamma;
};

struct ComponentBoundReport {
    CheckStatus status = CheckStatus::skipped;
    std::string reason;
    int bound = 0;
    int max_component = 0;
    std::optional<VertexSet> offending;
    /// Edge ordering of the largest component, each edge touching the earlier ones.
    std::vector<ChainLink> chain;

    auto to_json() const -> nlohmann::json;
};

/// Requires a vertex-expansion report with e >= k - t/2 + delta/2 that holds.
auto component_bound_check(const Hypergraph & h, const GbadGraph & gbad, int t, const Rational & delta, const ExpansionReport & expansion)
    -> ComponentBoundReport;

} // namespace sosgap
