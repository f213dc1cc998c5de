#include <sosgap/structure.hpp>
#include <sosgap/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

using nlohmann::json;

namespace sosgap {

auto gamma(const Hypergraph & h, const ConstraintSet & t) -> VertexSet
{
    VertexSet out;
    for (int j : t)
        out = set_union(out, h.scopes.at(static_cast<std::size_t>(j)));
    return out;
}

auto boundary(const Hypergraph & h, const ConstraintSet & t) -> VertexSet
{
    std::vector<int> count(static_cast<std::size_t>(h.n), 0);
    for (int j : t)
        for (int v : h.scopes.at(static_cast<std::size_t>(j)))
            ++count[static_cast<std::size_t>(v)];
    VertexSet out;
    for (int v = 0; v < h.n; ++v)
        if (count[static_cast<std::size_t>(v)] == 1)
            out.push_back(v);
    return out;
}

auto expansion_mode_name(ExpansionMode m) -> const char *
{
    return m == ExpansionMode::vertex ? "vertex" : "boundary";
}

auto ExpansionReport::to_json() const -> json
{
    json j{{"s", s},
        {"e", rational_to_string(e)},
        {"mode", expansion_mode_name(mode)},
        {"holds", holds},
        {"exhaustive", exhaustive},
        {"subsets_checked", subsets_checked}};
    j["witness"] = witness ? json(*witness) : json(nullptr);
    return j;
}

namespace {
    // Ratio e = num/den as machine integers, so that comparisons in the inner
    // loops stay exact without touching GMP.
    struct Ratio {
        long num;
        long den;

        explicit Ratio(const Rational & e)
        {
            if (e < 0 || ! e.get_num().fits_slong_p() || ! e.get_den().fits_slong_p() || e.get_num() > (1L << 30) || e.get_den() > (1L << 30))
                throw InputError("expansion ratio " + rational_to_string(e) + " is out of the supported range");
            num = e.get_num().get_si();
            den = e.get_den().get_si();
        }

        // size < e * count
        auto below(long size, long count) const -> bool { return size * den < num * count; }
        // size <= e * count
        auto at_most(long size, long count) const -> bool { return size * den <= num * count; }
    };

    auto log2_subset_count(int m, int s) -> double
    {
        double total = 0;
        double c = 1;
        for (int j = 1; j <= std::min(m, s); ++j) {
            c = c * (m - j + 1) / j;
            total += c;
        }
        return total > 0 ? std::log2(total) : 0.0;
    }

    auto check_mask_capacity(const Hypergraph & h) -> void
    {
        if (h.n > kMaxMaskVertices)
            throw InputError("exhaustive hypergraph searches support at most " + std::to_string(kMaxMaskVertices) + " vertices");
    }

    struct Searcher {
        const Hypergraph & h;
        ConstraintSet active;
        std::vector<VertexMask> masks;

        explicit Searcher(const Hypergraph & hg) :
            h(hg), active(hg.active_constraints())
        {
            check_mask_capacity(hg);
            for (int j : active)
                masks.push_back(mask_of(hg.scopes[static_cast<std::size_t>(j)]));
        }

        auto m() const -> int { return static_cast<int>(active.size()); }

        auto to_constraints(const std::vector<int> & positions) const -> ConstraintSet
        {
            ConstraintSet out;
            for (int p : positions)
                out.push_back(active[static_cast<std::size_t>(p)]);
            return out;
        }
    };

    // Preorder DFS over subsets of size <= s; preorder on increasing index
    // sequences is lexicographic order, so the first violator is the least one.
    struct VertexDfs {
        const Searcher & sr;
        int s;
        Ratio e;
        std::uint64_t visited = 0;
        std::vector<int> chosen;
        std::vector<VertexMask> unions;

        auto run(int from) -> bool
        {
            for (int p = from; p < sr.m(); ++p) {
                chosen.push_back(p);
                unions.push_back(unions.back() | sr.masks[static_cast<std::size_t>(p)]);
                ++visited;
                long size = static_cast<long>(unions.back().count());
                if (e.below(size, static_cast<long>(chosen.size())))
                    return true;
                if (static_cast<int>(chosen.size()) < s && run(p + 1))
                    return true;
                chosen.pop_back();
                unions.pop_back();
            }
            return false;
        }
    };

    struct BoundaryDfs {
        const Searcher & sr;
        int s;
        Ratio e;
        std::uint64_t visited = 0;
        std::vector<int> chosen;
        std::vector<int> cover;
        long ones = 0;

        auto add(int p) -> void
        {
            for (int v : sr.h.scopes[static_cast<std::size_t>(sr.active[static_cast<std::size_t>(p)])]) {
                auto & c = cover[static_cast<std::size_t>(v)];
                if (c == 0)
                    ++ones;
                else if (c == 1)
                    --ones;
                ++c;
            }
        }

        auto remove(int p) -> void
        {
            for (int v : sr.h.scopes[static_cast<std::size_t>(sr.active[static_cast<std::size_t>(p)])]) {
                auto & c = cover[static_cast<std::size_t>(v)];
                --c;
                if (c == 0)
                    --ones;
                else if (c == 1)
                    ++ones;
            }
        }

        auto run(int from) -> bool
        {
            for (int p = from; p < sr.m(); ++p) {
                chosen.push_back(p);
                add(p);
                ++visited;
                if (e.below(ones, static_cast<long>(chosen.size())))
                    return true;
                if (static_cast<int>(chosen.size()) < s && run(p + 1))
                    return true;
                remove(p);
                chosen.pop_back();
            }
            return false;
        }
    };

    auto violates(const Hypergraph & h, const ConstraintSet & t, const Rational & e, ExpansionMode mode) -> bool
    {
        auto size = mode == ExpansionMode::vertex ? gamma(h, t).size() : boundary(h, t).size();
        return Rational{static_cast<long>(size)} < e * static_cast<long>(t.size());
    }
}

auto check_expansion(const Hypergraph & h, int s, const Rational & e, ExpansionMode mode, const ExpansionOptions & opts) -> ExpansionReport
{
    ExpansionReport report;
    report.s = s;
    report.e = e;
    report.mode = mode;
    // sizes are nonnegative, so e <= 0 holds trivially
    if (s <= 0 || e <= 0)
        return report;

    Searcher sr{h};
    const int limit = std::min(s, sr.m());
    if (limit == 0)
        return report;
    const double need = log2_subset_count(sr.m(), limit);

    if (need > opts.log2_budget) {
        if (! opts.samples)
            throw BudgetError("exhaustive expansion check needs 2^" + std::to_string(need) + " subsets, budget is 2^" + std::to_string(opts.log2_budget), need);
        report.exhaustive = false;
        CounterRng rng{opts.sample_seed, 0x65787061ULL};
        std::vector<int> pool(static_cast<std::size_t>(sr.m()));
        for (std::uint64_t i = 0; i < *opts.samples; ++i) {
            int size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(limit)));
            std::iota(pool.begin(), pool.end(), 0);
            for (int a = 0; a < size; ++a) {
                auto b = a + static_cast<int>(rng.below(static_cast<std::uint64_t>(sr.m() - a)));
                std::swap(pool[static_cast<std::size_t>(a)], pool[static_cast<std::size_t>(b)]);
            }
            std::vector<int> positions(pool.begin(), pool.begin() + size);
            std::sort(positions.begin(), positions.end());
            auto t = sr.to_constraints(positions);
            ++report.subsets_checked;
            if (violates(h, t, e, mode)) {
                report.holds = false;
                report.witness = t;
                break;
            }
        }
        return report;
    }

    Ratio ratio{e};
    if (mode == ExpansionMode::vertex) {
        VertexDfs dfs{sr, limit, ratio, 0, {}, {VertexMask{}}};
        bool found = dfs.run(0);
        report.subsets_checked = dfs.visited;
        if (found) {
            report.holds = false;
            report.witness = sr.to_constraints(dfs.chosen);
        }
    }
    else {
        BoundaryDfs dfs{sr, limit, ratio, 0, {}, std::vector<int>(static_cast<std::size_t>(h.n), 0), 0};
        bool found = dfs.run(0);
        report.subsets_checked = dfs.visited;
        if (found) {
            report.holds = false;
            report.witness = sr.to_constraints(dfs.chosen);
        }
    }
    return report;
}

auto witness_reverifies(const Hypergraph & h, const ExpansionReport & report) -> bool
{
    if (report.holds || ! report.witness)
        return false;
    auto & t = *report.witness;
    if (t.empty() || static_cast<int>(t.size()) > report.s || ! is_sorted_set(t))
        return false;
    for (int j : t)
        if (j < 0 || j >= h.constraint_count() || ! h.active[static_cast<std::size_t>(j)])
            return false;
    return violates(h, t, report.e, report.mode);
}

auto largest_expanding_size(const Hypergraph & h, const Rational & e, ExpansionMode mode, int cap, const ExpansionOptions & opts) -> int
{
    // expansion at s implies expansion at every smaller s, and the DFS at s
    // covers all smaller sizes, so the first violator's size settles it
    auto report = check_expansion(h, cap, e, mode, opts);
    if (report.holds)
        return std::max(cap, 0);
    int best = 0;
    int lo = 1;
    int hi = cap;
    while (lo <= hi) {
        int mid = lo + (hi - lo) / 2;
        if (check_expansion(h, mid, e, mode, opts).holds) {
            best = mid;
            lo = mid + 1;
        }
        else
            hi = mid - 1;
    }
    return best;
}

auto covered_constraints(const Hypergraph & h, const VertexSet & s) -> ConstraintSet
{
    ConstraintSet out;
    for (int j = 0; j < h.constraint_count(); ++j)
        if (h.active[static_cast<std::size_t>(j)] && is_subset(h.scopes[static_cast<std::size_t>(j)], s))
            out.push_back(j);
    return out;
}

namespace {
    // Largest, then lexicographically least, N with |N| <= s2 and
    // |Gamma(N)| <= e2 |N| among the active constraints of h.
    auto largest_dense_set(const Hypergraph & h, int s2, const Rational & e2, double log2_budget) -> ConstraintSet
    {
        Searcher sr{h};
        const int limit = std::min(s2, sr.m());
        const double need = log2_subset_count(sr.m(), limit);
        if (need > log2_budget)
            throw BudgetError("closure search needs 2^" + std::to_string(need) + " subsets, budget is 2^" + std::to_string(log2_budget), need);
        Ratio ratio{e2};
        for (int size = limit; size >= 1; --size) {
            // |Gamma| only grows along a branch, so prune once it exceeds e2*size
            long cap = (ratio.num * size) / ratio.den;
            std::vector<int> chosen;
            std::vector<VertexMask> unions{VertexMask{}};
            auto dfs = [&](auto && self, int from) -> bool {
                int missing = size - static_cast<int>(chosen.size());
                for (int p = from; p <= sr.m() - missing; ++p) {
                    auto u = unions.back() | sr.masks[static_cast<std::size_t>(p)];
                    if (static_cast<long>(u.count()) > cap)
                        continue;
                    chosen.push_back(p);
                    unions.push_back(u);
                    if (missing == 1 || self(self, p + 1))
                        return true;
                    chosen.pop_back();
                    unions.pop_back();
                }
                return false;
            };
            if (dfs(dfs, 0))
                return sr.to_constraints(chosen);
        }
        return {};
    }
}

auto ClosureResult::to_json() const -> json
{
    json steps = json::array();
    for (auto & st : trace)
        steps.push_back({{"step", st.step},
            {"vertex", st.vertex},
            {"violated", st.violated},
            {"absorbed", st.absorbed},
            {"added", st.added},
            {"s2", st.s2_after}});
    return {{"closure", closure},
        {"s1", s1},
        {"s2", s2},
        {"e1", rational_to_string(e1)},
        {"e2", rational_to_string(e2)},
        {"proved_bound", rational_to_string(proved_bound)},
        {"stated_bound", rational_to_string(stated_bound)},
        {"residual_certified", residual_certified},
        {"size_bounds_hold", size_bounds_hold},
        {"trace", steps}};
}

auto closure(const Hypergraph & h, const std::vector<int> & s, const Rational & e1, const Rational & e2, int s1, const ClosureOptions & opts) -> ClosureResult
{
    if (! (e2 > 0 && e2 < e1))
        throw InputError("closure needs 0 < e2 < e1");
    if (s1 < 0)
        throw InputError("closure needs s1 >= 0");
    for (int v : s)
        if (v < 0 || v >= h.n)
            throw InputError("closure vertex " + std::to_string(v) + " outside [0,n)");
    const auto distinct = static_cast<long>(make_set(s).size());
    const Rational gap = e1 - e2;
    if (opts.enforce_size_precondition && ! (Rational{distinct} < gap * s1))
        throw InputError("closure precondition |S| < (e1-e2) s1 fails: |S| = " + std::to_string(distinct) + ", (e1-e2) s1 = " + rational_to_string(gap * s1));

    ClosureResult out;
    out.s1 = s1;
    out.s2 = s1;
    out.e1 = e1;
    out.e2 = e2;
    out.proved_bound = e1 / gap * distinct;
    out.stated_bound = (Rational{h.k} + 2 * e1 - e2) / (2 * gap) * distinct;

    ExpansionOptions exp_opts;
    exp_opts.log2_budget = opts.log2_budget;
    int step = 0;
    for (int x : s) {
        ++step;
        ClosureStep record{step, x, false, {}, {}, out.s2};
        if (! contains(out.closure, x)) {
            out.closure = set_union(out.closure, {x});
            record.added = {x};
        }
        auto residual = h.without(out.closure);
        if (! check_expansion(residual, out.s2, e2, ExpansionMode::vertex, exp_opts).holds) {
            record.violated = true;
            record.absorbed = largest_dense_set(residual, out.s2, e2, opts.log2_budget);
            if (record.absorbed.empty())
                throw InvariantError("closure found a violator but no dense set");
            auto grown = gamma(residual, record.absorbed);
            record.added = set_union(record.added, set_difference(grown, out.closure));
            out.closure = set_union(out.closure, grown);
            out.s2 -= static_cast<int>(record.absorbed.size());
        }
        record.s2_after = out.s2;
        out.trace.push_back(std::move(record));
    }

    out.residual_certified = check_expansion(h.without(out.closure), out.s2, e2, ExpansionMode::vertex, exp_opts).holds;
    out.size_bounds_hold = Rational{static_cast<long>(out.closure.size())} <= out.proved_bound
        && Rational{out.s2} >= Rational{s1} - Rational{distinct} / gap;
    if (opts.check_postconditions) {
        if (! out.residual_certified)
            throw InvariantError("closure residual is not (s2,e2)-expanding");
        if (! out.size_bounds_hold)
            throw InvariantError("closure size bounds fail: |Cl| = " + std::to_string(out.closure.size()) + ", bound " + rational_to_string(out.proved_bound) + ", s2 = " + std::to_string(out.s2));
    }
    return out;
}

auto PeelResult::to_json() const -> json
{
    json steps = json::array();
    for (auto & st : trace)
        steps.push_back({{"constraint", st.constraint}, {"removed", st.removed}});
    return {{"remaining", remaining}, {"trace", steps}};
}

auto peel(const Hypergraph & h, const VertexSet & s0, const VertexSet & protected_vertices, int t) -> PeelResult
{
    const int need = h.k - t + 1;
    if (need < 1)
        throw InputError("peel needs t <= k");
    PeelResult out{make_set(s0), {}};
    while (true) {
        auto covered = covered_constraints(h, out.remaining);
        auto edge = boundary(h, covered);
        bool removed = false;
        for (int j : covered) {
            auto b = set_difference(set_intersection(edge, h.scopes[static_cast<std::size_t>(j)]), protected_vertices);
            if (static_cast<int>(b.size()) >= need) {
                out.remaining = set_difference(out.remaining, b);
                out.trace.push_back(PeelStep{j, std::move(b)});
                removed = true;
                break;
            }
        }
        if (! removed)
            return out;
    }
}

} // namespace sosgap
