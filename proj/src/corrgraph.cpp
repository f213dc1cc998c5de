#include <sosgap/corrgraph.hpp>

#include <algorithm>
#include <numeric>

using nlohmann::json;

namespace sosgap {

auto SimpleGraph::adjacency() const -> std::vector<std::vector<int>>
{
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto & a : adj)
        std::sort(a.begin(), a.end());
    return adj;
}

auto SimpleGraph::has_edge(int u, int v) const -> bool
{
    if (u > v)
        std::swap(u, v);
    return std::binary_search(edges.begin(), edges.end(), std::pair{u, v});
}

auto SimpleGraph::to_json() const -> json
{
    return {{"n", n}, {"edges", edges.size()}, {"adjacency", adjacency()}};
}

auto CorrelationGraph::graph() const -> SimpleGraph
{
    SimpleGraph g{n, {}};
    for (auto & e : edges)
        g.edges.emplace_back(e.u, e.v);
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

auto CorrelationGraph::to_json() const -> json
{
    json j = graph().to_json();
    json list = json::array();
    for (auto & e : edges)
        list.push_back({{"u", e.u}, {"v", e.v}, {"a", e.a}, {"b", e.b}, {"entry", rational_json(e.entry)}});
    j["extremal_entries"] = list;
    return j;
}

auto correlation_graph_of(const SymmetricRationalMatrix & sigma, int n, int q) -> CorrelationGraph
{
    if (sigma.dim() != n * q)
        throw InputError("covariance matrix does not match n and q");
    CorrelationGraph g{n, q, {}};
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            std::optional<CorrelationEdge> best;
            for (int a = 0; a < q; ++a)
                for (int b = 0; b < q; ++b) {
                    auto & x = sigma.at(u * q + a, v * q + b);
                    if (x != 0 && (! best || abs(x) > abs(best->entry)))
                        best = CorrelationEdge{u, v, a, b, x};
                }
            if (best)
                g.edges.push_back(*best);
        }
    return g;
}

auto build_correlation_graph(const LocalDistributionFamily & f) -> CorrelationGraph
{
    return correlation_graph_of(build_covariance(f, {}, {}), f.n(), f.q());
}

auto Components::to_json() const -> json
{
    return {{"parts", parts}, {"max_size", max_size}};
}

auto connected_components(const SimpleGraph & g) -> Components
{
    std::vector<int> parent(static_cast<std::size_t>(g.n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (auto [u, v] : g.edges) {
        auto a = find(u);
        auto b = find(v);
        if (a != b)
            parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
    Components c;
    std::vector<int> slot(static_cast<std::size_t>(g.n), -1);
    for (int x = 0; x < g.n; ++x) {
        auto root = find(x);
        if (slot[static_cast<std::size_t>(root)] < 0) {
            slot[static_cast<std::size_t>(root)] = static_cast<int>(c.parts.size());
            c.parts.emplace_back();
        }
        c.parts[static_cast<std::size_t>(slot[static_cast<std::size_t>(root)])].push_back(x);
    }
    for (auto & p : c.parts)
        c.max_size = std::max(c.max_size, static_cast<int>(p.size()));
    return c;
}

auto BlockPsdReport::to_json() const -> json
{
    json j{{"cross_zero", cross_zero}, {"blocks_psd", blocks_psd}, {"full_matches_blocks", full_matches_blocks}, {"float_matches", float_matches},
        {"holds", holds}};
    if (cross_violation)
        j["cross_violation"] = {{"u", cross_violation->u}, {"a", cross_violation->a}, {"v", cross_violation->v}, {"b", cross_violation->b},
            {"entry", rational_json(cross_violation->entry)}};
    else
        j["cross_violation"] = nullptr;
    json blocks_json = json::array();
    for (auto & b : blocks) {
        json bj{{"component", b.component}, {"verdict", b.block.psd ? "psd" : "not_psd"}, {"distribution_checked", b.distribution_checked}};
        if (b.distribution_checked) {
            bj["matches_distribution"] = b.matches_distribution;
            bj["distribution_psd"] = b.distribution_psd;
        }
        if (! b.block.psd)
            bj["certificate"] = b.block.to_json();
        blocks_json.push_back(bj);
    }
    j["blocks"] = blocks_json;
    j["full"] = full.to_json();
    j["full_float"] = full_float.to_json();
    j["oversized_component"] = oversized_component ? json(*oversized_component) : json(nullptr);
    return j;
}

auto block_psd_verify(const LocalDistributionFamily & f, const CorrelationGraph & g) -> BlockPsdReport
{
    const int n = f.n();
    const int q = f.q();
    if (g.n != n || g.q != q)
        throw InputError("correlation graph does not match the family");
    auto sigma = build_covariance(f, {}, {});
    auto comps = connected_components(g.graph());
    std::vector<int> comp_of(static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < comps.parts.size(); ++c)
        for (int v : comps.parts[c])
            comp_of[static_cast<std::size_t>(v)] = static_cast<int>(c);

    BlockPsdReport r;
    for (int u = 0; u < n && r.cross_zero; ++u)
        for (int v = u + 1; v < n && r.cross_zero; ++v) {
            if (comp_of[static_cast<std::size_t>(u)] == comp_of[static_cast<std::size_t>(v)])
                continue;
            for (int a = 0; a < q && r.cross_zero; ++a)
                for (int b = 0; b < q; ++b)
                    if (auto & x = sigma.at(u * q + a, v * q + b); x != 0) {
                        r.cross_zero = false;
                        r.cross_violation = CrossEntry{u, a, v, b, x};
                        break;
                    }
        }

    bool distributions_ok = true;
    for (auto & part : comps.parts) {
        std::vector<int> rows;
        for (int v : part)
            for (int a = 0; a < q; ++a)
                rows.push_back(v * q + a);
        BlockVerdict b;
        b.component = part;
        auto block = sigma.submatrix(rows);
        b.block = psd_exact(block);
        r.blocks_psd = r.blocks_psd && b.block.psd;
        if (static_cast<int>(part.size()) <= f.radius()) {
            auto cov = covariance_of(*f.get(part));
            b.distribution_checked = true;
            b.matches_distribution = cov == block;
            b.distribution_psd = psd_exact(cov).psd;
            distributions_ok = distributions_ok && b.matches_distribution && b.distribution_psd;
        }
        else if (! r.oversized_component) {
            r.oversized_component = part;
        }
        r.blocks.push_back(std::move(b));
    }
    r.full = psd_exact(sigma);
    r.full_float = psd_float(sigma);
    r.full_matches_blocks = r.full.psd == r.blocks_psd;
    r.float_matches = r.full_float.in_band || r.full_float.psd == r.blocks_psd;
    r.holds = r.cross_zero && r.blocks_psd && distributions_ok && r.full_matches_blocks && r.float_matches && ! r.oversized_component;
    return r;
}

auto BadStructureCheck::to_json() const -> json
{
    return {{"is_bad", is_bad}, {"failed_condition", failed_condition}, {"counts", counts}};
}

namespace {
    auto incidence(const Hypergraph & h) -> std::vector<std::vector<int>>
    {
        std::vector<std::vector<int>> at(static_cast<std::size_t>(h.n));
        for (int c = 0; c < h.constraint_count(); ++c)
            if (h.active[static_cast<std::size_t>(c)])
                for (int v : h.scopes[static_cast<std::size_t>(c)])
                    at[static_cast<std::size_t>(v)].push_back(c);
        return at;
    }

    auto connected(const Hypergraph & h, const ConstraintSet & w) -> bool
    {
        if (w.size() <= 1)
            return true;
        std::vector<char> seen(w.size(), 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (! stack.empty()) {
            auto i = stack.back();
            stack.pop_back();
            auto & si = h.scopes[static_cast<std::size_t>(w[i])];
            for (std::size_t j = 0; j < w.size(); ++j)
                if (! seen[j] && ! set_intersection(si, h.scopes[static_cast<std::size_t>(w[j])]).empty()) {
                    seen[j] = 1;
                    ++count;
                    stack.push_back(j);
                }
        }
        return count == w.size();
    }

    auto density_ok(const Hypergraph & h, const ConstraintSet & w, int t) -> bool
    {
        // |Gamma(W)| <= (k - t/2)|W| + 1
        auto g = static_cast<long>(gamma(h, w).size());
        return 2 * g <= (2L * h.k - t) * static_cast<long>(w.size()) + 2;
    }
}

auto bad_structure_check(const Hypergraph & h, const ConstraintSet & w, int u, int v, int t) -> BadStructureCheck
{
    if (w.empty())
        throw InputError("bad structure candidate must be nonempty");
    if (! is_sorted_set(w))
        throw InputError("constraint sets must be sorted and duplicate-free");
    for (int c : w)
        if (c < 0 || c >= h.constraint_count() || ! h.active[static_cast<std::size_t>(c)])
            throw InputError("constraint " + std::to_string(c) + " is not an active constraint");
    BadStructureCheck r;
    auto g = gamma(h, w);
    auto bd = boundary(h, w);
    for (int c : w) {
        int count = 0;
        for (int x : h.scopes[static_cast<std::size_t>(c)])
            if (x != u && x != v && contains(bd, x))
                ++count;
        r.counts.push_back(count);
    }
    if (! contains(g, u) || ! contains(g, v))
        r.failed_condition = 1;
    else if (! connected(h, w))
        r.failed_condition = 2;
    else if (std::any_of(r.counts.begin(), r.counts.end(), [&](int c) { return c > h.k - t; }))
        r.failed_condition = 3;
    r.is_bad = r.failed_condition == 0;
    return r;
}

auto BadStructure::to_json() const -> json
{
    return {{"W", w}, {"u", u}, {"v", v}, {"counts", counts}};
}

namespace {
    struct Enumerator {
        const Hypergraph & h;
        int u;
        int v;
        int t;
        int max_size;
        const EnumerationOptions & opts;
        std::vector<std::vector<int>> neighbours;
        std::vector<int> mark;
        std::vector<char> allowed;
        std::vector<int> sub;
        std::uint64_t visits = 0;
        std::vector<BadStructure> found;
        std::vector<int> degree;

        auto done() const -> bool { return opts.first_only && ! found.empty(); }

        auto visit() -> void
        {
            if (++visits > opts.budget)
                throw BudgetError("bad-structure enumeration exceeded its budget of " + std::to_string(opts.budget) + " connected sets",
                    static_cast<double>(visits));
            // cheap rejection on conditions 1 and 3 before building the set
            if (degree[static_cast<std::size_t>(u)] == 0 || degree[static_cast<std::size_t>(v)] == 0)
                return;
            for (int c : sub) {
                int count = 0;
                for (int x : h.scopes[static_cast<std::size_t>(c)])
                    if (x != u && x != v && degree[static_cast<std::size_t>(x)] == 1)
                        ++count;
                if (count > h.k - t)
                    return;
            }
            auto w = make_set(sub);
            auto check = bad_structure_check(h, w, u, v, t);
            if (check.is_bad)
                found.push_back({std::move(w), u, v, std::move(check.counts)});
        }

        auto add_marks(int w, int delta) -> void
        {
            for (int x : h.scopes[static_cast<std::size_t>(w)])
                degree[static_cast<std::size_t>(x)] += delta;
            mark[static_cast<std::size_t>(w)] += delta;
            for (int x : neighbours[static_cast<std::size_t>(w)])
                mark[static_cast<std::size_t>(x)] += delta;
        }

        // ESU: each connected set containing the root is reached exactly once.
        auto extend(const std::vector<int> & ext) -> void
        {
            visit();
            if (done() || static_cast<int>(sub.size()) >= max_size)
                return;
            for (std::size_t i = 0; i < ext.size() && ! done(); ++i) {
                int w = ext[i];
                std::vector<int> next(ext.begin() + static_cast<std::ptrdiff_t>(i) + 1, ext.end());
                for (int x : neighbours[static_cast<std::size_t>(w)])
                    if (allowed[static_cast<std::size_t>(x)] && mark[static_cast<std::size_t>(x)] == 0)
                        next.push_back(x);
                sub.push_back(w);
                add_marks(w, 1);
                extend(next);
                add_marks(w, -1);
                sub.pop_back();
            }
        }
    };
}

auto enumerate_bad_structures(const Hypergraph & h, int u, int v, int t, int max_size, const EnumerationOptions & opts, std::uint64_t * visited)
    -> std::vector<BadStructure>
{
    if (u < 0 || v < 0 || u >= h.n || v >= h.n || u == v)
        throw InputError("bad structures need two distinct variables in [0,n)");
    Enumerator e{h, u, v, t, max_size, opts, {}, {}, {}, {}, 0, {}, {}};
    if (max_size <= 0) {
        if (visited)
            *visited = 0;
        return {};
    }
    const auto m = static_cast<std::size_t>(h.constraint_count());
    auto at = incidence(h);
    e.neighbours.resize(m);
    for (auto & list : at)
        for (int a : list)
            for (int b : list)
                if (a != b)
                    e.neighbours[static_cast<std::size_t>(a)].push_back(b);
    for (auto & nb : e.neighbours)
        nb = make_set(std::move(nb));
    e.mark.assign(m, 0);
    e.degree.assign(static_cast<std::size_t>(h.n), 0);

    auto & roots = at[static_cast<std::size_t>(u)];
    for (int root : roots) {
        e.allowed.assign(m, 0);
        for (std::size_t c = 0; c < m; ++c)
            e.allowed[c] = h.active[c] && (! contains(h.scopes[c], u) || static_cast<int>(c) > root);
        e.sub = {root};
        e.add_marks(root, 1);
        std::vector<int> ext;
        for (int x : e.neighbours[static_cast<std::size_t>(root)])
            if (e.allowed[static_cast<std::size_t>(x)])
                ext.push_back(x);
        e.extend(ext);
        e.add_marks(root, -1);
        if (e.done())
            break;
    }
    if (visited)
        *visited = e.visits;
    return std::move(e.found);
}

auto GbadGraph::graph() const -> SimpleGraph
{
    SimpleGraph g{n, {}};
    for (auto & e : edges)
        g.edges.emplace_back(e.u, e.v);
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

auto GbadGraph::witness_for(int u, int v) const -> const GbadEdge *
{
    if (u > v)
        std::swap(u, v);
    for (auto & e : edges)
        if (e.u == u && e.v == v)
            return &e;
    return nullptr;
}

auto GbadGraph::to_json() const -> json
{
    json j = graph().to_json();
    j["t"] = t;
    j["pairs_checked"] = pairs_checked;
    j["subsets_visited"] = subsets_visited;
    json w = json::array();
    for (auto & e : edges)
        w.push_back(e.witness.to_json());
    j["witnesses"] = w;
    json d = json::array();
    for (auto & b : density_violations)
        d.push_back(b.to_json());
    j["density_violations"] = d;
    return j;
}

auto build_gbad(const Hypergraph & h, int t, const GbadOptions & opts) -> GbadGraph
{
    if (! opts.max_size && ! opts.pair_bound)
        throw InputError("build_gbad needs either a global max_size or a per-pair bound");
    GbadGraph g;
    g.n = h.n;
    g.t = t;
    auto at = incidence(h);
    auto enumeration = opts.enumeration;
    enumeration.first_only = true;
    auto visit = [&](int u, int v) {
        if (contains(opts.removed, u) || contains(opts.removed, v) || at[static_cast<std::size_t>(u)].empty() || at[static_cast<std::size_t>(v)].empty())
            return;
        ++g.pairs_checked;
        int bound = opts.max_size ? *opts.max_size : opts.pair_bound(u, v);
        if (bound <= 0)
            return;
        if (opts.total_budget) {
            if (g.subsets_visited >= *opts.total_budget)
                throw BudgetError("G_bad construction exceeded its total budget of " + std::to_string(*opts.total_budget) + " connected sets",
                    static_cast<double>(g.subsets_visited));
            enumeration.budget = std::min(opts.enumeration.budget, *opts.total_budget - g.subsets_visited);
        }
        std::uint64_t visits = 0;
        auto found = enumerate_bad_structures(h, u, v, t, bound, enumeration, &visits);
        g.subsets_visited += visits;
        if (found.empty())
            return;
        if (! density_ok(h, found.front().w, t))
            g.density_violations.push_back(found.front());
        g.edges.push_back({u, v, std::move(found.front())});
    };
    if (opts.pairs) {
        auto pairs = *opts.pairs;
        for (auto & [u, v] : pairs) {
            if (u == v || u < 0 || v < 0 || u >= h.n || v >= h.n)
                throw InputError("pair outside [0,n) or degenerate");
            if (u > v)
                std::swap(u, v);
        }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        for (auto [u, v] : pairs)
            visit(u, v);
    }
    else {
        for (int u = 0; u < h.n; ++u)
            for (int v = u + 1; v < h.n; ++v)
                visit(u, v);
    }
    return g;
}

auto closure_pair_bound(const LocalDistributionFamily & pi, const VertexSet & x) -> std::function<int(int, int)>
{
    if (pi.kind() != LocalDistributionFamily::Kind::pi)
        throw InputError("pair bounds need a pi family");
    auto residual = std::make_shared<const Hypergraph>(pi.hypergraph().without(x));
    return [&pi, x, residual](int u, int v) {
        auto s = make_set(set_union({u, v}, x));
        auto cl = pi.closure_of(s)->closure;
        return static_cast<int>(covered_constraints(*residual, set_difference(cl, x)).size());
    };
}

auto CorrException::to_json() const -> json
{
    return {{"u", u}, {"v", v}, {"a", a}, {"b", b}, {"entry", rational_json(entry)}};
}

auto CorrBadReport::to_json() const -> json
{
    auto list = [](const std::vector<CorrException> & xs) {
        json out = json::array();
        for (auto & x : xs)
            out.push_back(x.to_json());
        return out;
    };
    return {{"pairs_checked", pairs_checked}, {"correlated_pairs", correlated_pairs}, {"intrinsic_correlated_pairs", intrinsic_correlated_pairs},
        {"exceptions", list(exceptions)}, {"intrinsic_exceptions", list(intrinsic_exceptions)}, {"holds", holds}};
}

namespace {
    // Largest |P(a,b) - P_u(a) P_v(b)| under the pair table's own marginals, if nonzero.
    auto intrinsic_correlation(const LocalDistribution & d, int u, int v) -> std::optional<CorrException>
    {
        const int q = d.q;
        Rational total;
        for (auto & p : d.probs)
            total += p;
        if (total == 0)
            return std::nullopt;
        std::vector<Rational> pu(static_cast<std::size_t>(q));
        std::vector<Rational> pv(static_cast<std::size_t>(q));
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) {
                Rational p = d.probs[static_cast<std::size_t>(a + q * b)] / total;
                pu[static_cast<std::size_t>(a)] += p;
                pv[static_cast<std::size_t>(b)] += p;
            }
        std::optional<CorrException> best;
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) {
                Rational x = d.probs[static_cast<std::size_t>(a + q * b)] / total - pu[static_cast<std::size_t>(a)] * pv[static_cast<std::size_t>(b)];
                if (x != 0 && (! best || abs(x) > abs(best->entry)))
                    best = CorrException{u, v, a, b, x};
            }
        return best;
    }
}

auto intrinsic_correlated_pairs(const LocalDistributionFamily & f) -> std::vector<std::pair<int, int>>
{
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < f.n(); ++u)
        for (int v = u + 1; v < f.n(); ++v)
            if (intrinsic_correlation(*f.get({u, v}), u, v))
                out.emplace_back(u, v);
    return out;
}

auto verify_corr_implies_bad(const LocalDistributionFamily & f, const CorrelationGraph & corr, const GbadGraph & gbad) -> CorrBadReport
{
    if (corr.n != gbad.n)
        throw InputError("graphs are over different vertex sets");
    CorrBadReport r;
    auto bad = gbad.graph();
    for (auto & e : corr.edges) {
        ++r.correlated_pairs;
        if (! bad.has_edge(e.u, e.v))
            r.exceptions.push_back({e.u, e.v, e.a, e.b, e.entry});
    }
    for (int u = 0; u < f.n(); ++u)
        for (int v = u + 1; v < f.n(); ++v) {
            ++r.pairs_checked;
            if (auto c = intrinsic_correlation(*f.get({u, v}), u, v)) {
                ++r.intrinsic_correlated_pairs;
                if (! bad.has_edge(u, v))
                    r.intrinsic_exceptions.push_back(*c);
            }
        }
    r.holds = r.exceptions.empty();
    return r;
}

auto check_status_name(CheckStatus s) -> const char *
{
    switch (s) {
    case CheckStatus::pass:
        return "pass";
    case CheckStatus::fail:
        return "fail";
    case CheckStatus::skipped:
        return "skipped";
    }
    return "?";
}

auto ComponentBoundReport::to_json() const -> json
{
    json c = json::array();
    for (auto & link : chain)
        c.push_back({{"edge", {link.u, link.v}}, {"W", link.w}, {"union_size", link.union_size}, {"union_gamma", link.union_gamma}});
    return {{"status", check_status_name(status)}, {"reason", reason}, {"bound", bound}, {"max_component", max_component},
        {"offending", offending ? json(*offending) : json(nullptr)}, {"chain", c}};
}

namespace {
    auto edge_chain(const Hypergraph & h, const GbadGraph & gbad, const VertexSet & component) -> std::vector<ChainLink>
    {
        std::vector<const GbadEdge *> pending;
        for (auto & e : gbad.edges)
            if (contains(component, e.u))
                pending.push_back(&e);
        std::vector<ChainLink> chain;
        VertexSet touched;
        ConstraintSet running;
        while (! pending.empty()) {
            auto it = pending.begin();
            if (! chain.empty())
                it = std::find_if(pending.begin(), pending.end(), [&](const GbadEdge * e) { return contains(touched, e->u) || contains(touched, e->v); });
            if (it == pending.end())
                throw InvariantError("component edges do not form a connected chain");
            auto e = *it;
            pending.erase(it);
            touched = set_union(touched, make_set({e->u, e->v}));
            running = set_union(running, e->witness.w);
            chain.push_back({e->u, e->v, e->witness.w, static_cast<int>(running.size()), static_cast<int>(gamma(h, running).size())});
        }
        return chain;
    }
}

auto component_bound_check(const Hypergraph & h, const GbadGraph & gbad, int t, const Rational & delta, const ExpansionReport & expansion)
    -> ComponentBoundReport
{
    ComponentBoundReport r;
    if (delta <= 0)
        throw InputError("delta must be positive");
    Rational bound = Rational{2 * h.k} / delta;
    r.bound = static_cast<int>(mpz_class{bound.get_num() / bound.get_den()}.get_si());
    auto comps = connected_components(gbad.graph());
    r.max_component = comps.max_size;
    Rational needed = Rational{2 * h.k - t, 2} + delta / 2;
    if (expansion.mode != ExpansionMode::vertex || ! expansion.holds || expansion.e < needed || expansion.s < 1) {
        r.status = CheckStatus::skipped;
        r.reason = "precondition not certified";
        return r;
    }
    const VertexSet * largest = nullptr;
    for (auto & p : comps.parts)
        if (! largest || p.size() > largest->size())
            largest = &p;
    if (largest && largest->size() > 1)
        r.chain = edge_chain(h, gbad, *largest);
    if (r.max_component > r.bound) {
        r.status = CheckStatus::fail;
        r.offending = *largest;
        r.reason = "component exceeds floor(2k/delta)";
    }
    else {
        r.status = CheckStatus::pass;
    }
    return r;
}

} // namespace sosgap
