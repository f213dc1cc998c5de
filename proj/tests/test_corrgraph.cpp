#include <doctest.h>

#include <sosgap/corrgraph.hpp>

#include <random>
#include <set>

using namespace sosgap;

namespace {
    auto single_constraint_pi(const Predicate & p, int n, std::vector<int> scope, int t) -> std::shared_ptr<LocalDistributionFamily>
    {
        auto mu = twise_support(p, t - 1);
        REQUIRE(mu);
        Instance inst{p, n, {{std::vector<int>(scope.size(), 0), std::move(scope)}}, 0, {}};
        return LocalDistributionFamily::make_pi(std::make_shared<const Instance>(inst), *mu,
            ClosureParams{Rational{7, 4}, Rational{13, 8}, 41, false, 24.0}, n);
    }

    auto table(VertexSet scope, std::vector<Rational> probs) -> LocalDistribution
    {
        LocalDistribution d = LocalDistribution::uniform(std::move(scope), 2);
        d.probs = std::move(probs);
        return d;
    }

    // Written from the definition directly: vertex union-find for connectivity,
    // degree counts for the boundary.
    auto naive_is_bad(const Hypergraph & h, const std::vector<int> & w, int u, int v, int t) -> bool
    {
        std::map<int, int> degree;
        for (int c : w)
            for (int x : h.scopes[static_cast<std::size_t>(c)])
                ++degree[x];
        if (! degree.count(u) || ! degree.count(v))
            return false;
        std::map<int, int> parent;
        std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
        for (auto & [x, d] : degree)
            parent[x] = x;
        for (int c : w) {
            auto & s = h.scopes[static_cast<std::size_t>(c)];
            for (int x : s)
                parent[find(x)] = find(s.front());
        }
        std::set<int> roots;
        for (int c : w)
            roots.insert(find(h.scopes[static_cast<std::size_t>(c)].front()));
        if (roots.size() != 1)
            return false;
        for (int c : w) {
            int count = 0;
            for (int x : h.scopes[static_cast<std::size_t>(c)])
                if (x != u && x != v && degree[x] == 1)
                    ++count;
            if (count > h.k - t)
                return false;
        }
        return true;
    }

    auto naive_connected(const Hypergraph & h, const std::vector<int> & w) -> bool
    {
        std::vector<int> reach{w.front()};
        std::set<int> seen{w.front()};
        for (std::size_t i = 0; i < reach.size(); ++i)
            for (int c : w)
                if (! seen.count(c) && ! set_intersection(h.scopes[static_cast<std::size_t>(reach[i])], h.scopes[static_cast<std::size_t>(c)]).empty()) {
                    seen.insert(c);
                    reach.push_back(c);
                }
        return seen.size() == w.size();
    }
}

TEST_CASE("covariance entries decide correlation edges")
{
    SUBCASE("a 2-variable disjunction under its 1-wise distribution")
    {
        auto pi = single_constraint_pi(Predicate::disjunction(2), 2, {0, 1}, 2);
        auto sigma = build_covariance(*pi, {}, {});
        CHECK(sigma.at(1, 3) == Rational{-1, 4});
        auto g = build_correlation_graph(*pi);
        REQUIRE(g.edges.size() == 1);
        CHECK(g.edges[0].u == 0);
        CHECK(g.edges[0].v == 1);
        CHECK(abs(g.edges[0].entry) == Rational{1, 4});
    }
    SUBCASE("a single 3-parity constraint is pairwise independent")
    {
        auto pi = single_constraint_pi(Predicate::parity(3), 4, {0, 1, 2}, 3);
        CHECK(build_correlation_graph(*pi).edges.empty());
    }
}

TEST_CASE("connected components")
{
    auto c = connected_components(SimpleGraph{5, {{0, 1}, {1, 2}, {3, 4}}});
    CHECK(c.parts == std::vector<VertexSet>{{0, 1, 2}, {3, 4}});
    CHECK(c.max_size == 3);
    auto lone = connected_components(SimpleGraph{3, {}});
    CHECK(lone.parts.size() == 3);
    CHECK(lone.max_size == 1);
    CHECK(connected_components(SimpleGraph{4, {{0, 3}}}).parts == std::vector<VertexSet>{{0, 3}, {1}, {2}});
}

TEST_CASE("bad structure conditions")
{
    auto parity = Hypergraph::from_scopes(3, 3, {{0, 1, 2}});
    auto r = bad_structure_check(parity, {0}, 0, 1, 3);
    CHECK_FALSE(r.is_bad);
    CHECK(r.failed_condition == 3);
    CHECK(r.counts == std::vector<int>{1});

    auto or2 = Hypergraph::from_scopes(2, 2, {{0, 1}});
    CHECK(bad_structure_check(or2, {0}, 0, 1, 2).is_bad);

    auto split = Hypergraph::from_scopes(4, 2, {{0, 1}, {2, 3}});
    CHECK(bad_structure_check(split, {0, 1}, 0, 2, 2).failed_condition == 2);
    CHECK(bad_structure_check(split, {0}, 0, 2, 2).failed_condition == 1);

    // two overlapping 3-constraints: the inner variables 1,2 are not boundary
    auto pair = Hypergraph::from_scopes(4, 3, {{0, 1, 2}, {1, 2, 3}});
    CHECK(bad_structure_check(pair, {0, 1}, 0, 3, 3).is_bad);

    CHECK_THROWS_AS(bad_structure_check(or2, {}, 0, 1, 2), InputError);
    CHECK_THROWS_AS(bad_structure_check(or2.without({0, 1}), {0}, 0, 1, 2), InputError);
}

TEST_CASE("enumeration matches an all-subsets oracle")
{
    std::mt19937_64 rng(7);
    for (int round = 0; round < 60; ++round) {
        const int n = 7;
        const int k = 3;
        const int m = 4 + static_cast<int>(rng() % 8);
        std::vector<VertexSet> scopes;
        for (int i = 0; i < m; ++i) {
            std::vector<int> s;
            while (s.size() < k) {
                int x = static_cast<int>(rng() % n);
                if (! contains(make_set(s), x))
                    s.push_back(x);
            }
            scopes.push_back(make_set(s));
        }
        auto h = Hypergraph::from_scopes(n, k, scopes);
        if (round % 3 == 0)
            h = h.without({static_cast<int>(rng() % n)});
        const int t = 2 + round % 2;
        const int max_size = 1 + static_cast<int>(rng() % 5);
        const int u = static_cast<int>(rng() % n);
        int v = static_cast<int>(rng() % n);
        if (v == u)
            v = (u + 1) % n;

        std::set<std::vector<int>> expected;
        std::uint64_t connected_with_u = 0;
        auto active = h.active_constraints();
        for (std::uint32_t mask = 1; mask < (1u << active.size()); ++mask) {
            std::vector<int> w;
            for (std::size_t i = 0; i < active.size(); ++i)
                if (mask & (1u << i))
                    w.push_back(active[i]);
            if (static_cast<int>(w.size()) > max_size || ! naive_connected(h, w))
                continue;
            bool has_u = std::any_of(w.begin(), w.end(), [&](int c) { return contains(h.scopes[static_cast<std::size_t>(c)], u); });
            if (has_u)
                ++connected_with_u;
            if (naive_is_bad(h, w, u, v, t))
                expected.insert(w);
        }

        std::uint64_t visited = 0;
        auto found = enumerate_bad_structures(h, u, v, t, max_size, {}, &visited);
        std::set<std::vector<int>> got;
        for (auto & b : found) {
            CHECK(got.insert(b.w).second);
            CHECK(bad_structure_check(h, b.w, u, v, t).is_bad);
        }
        CHECK(got == expected);
        CHECK(visited == connected_with_u);

        auto first = enumerate_bad_structures(h, u, v, t, max_size, {.budget = std::uint64_t{1} << 22, .first_only = true});
        CHECK(first.size() == std::min<std::size_t>(1, expected.size()));
        if (! first.empty())
            CHECK(expected.count(first.front().w));
    }
}

TEST_CASE("enumeration refuses past its budget")
{
    std::vector<VertexSet> scopes;
    for (int i = 0; i < 10; ++i)
        scopes.push_back({0, i + 1});
    auto h = Hypergraph::from_scopes(11, 2, scopes);
    CHECK_THROWS_AS(enumerate_bad_structures(h, 0, 1, 2, 10, {.budget = 100}), BudgetError);
    CHECK(enumerate_bad_structures(h, 0, 1, 2, 0).empty());

    // the total budget is shared by all pairs of one construction
    GbadOptions opts{.max_size = 3};
    auto full = build_gbad(h, 2, opts);
    REQUIRE(full.subsets_visited > 1);
    opts.total_budget = full.subsets_visited;
    CHECK(build_gbad(h, 2, opts).edges.size() == full.edges.size());
    opts.total_budget = full.subsets_visited - 1;
    CHECK_THROWS_AS(build_gbad(h, 2, opts), BudgetError);
}

TEST_CASE("G_bad construction")
{
    SUBCASE("disjunction edge")
    {
        auto h = Hypergraph::from_scopes(3, 2, {{0, 1}});
        auto g = build_gbad(h, 2, {.max_size = 4});
        REQUIRE(g.edges.size() == 1);
        CHECK(g.edges[0].witness.w == ConstraintSet{0});
        CHECK(g.density_violations.empty());
        CHECK(g.pairs_checked == 1);
        CHECK(g.witness_for(1, 0) != nullptr);
    }
    SUBCASE("parity has no bad structures of one constraint")
    {
        auto h = Hypergraph::from_scopes(3, 3, {{0, 1, 2}});
        CHECK(build_gbad(h, 3, {.max_size = 4}).edges.empty());
    }
    SUBCASE("removed vertices are skipped")
    {
        auto h = Hypergraph::from_scopes(4, 3, {{0, 1, 2}, {1, 2, 3}});
        auto full = build_gbad(h, 3, {.max_size = 2});
        CHECK(full.graph().has_edge(0, 3));
        auto g = build_gbad(h, 3, {.max_size = 2, .removed = {0}});
        CHECK_FALSE(g.graph().has_edge(0, 3));
    }
    SUBCASE("closure bound")
    {
        auto pi = single_constraint_pi(Predicate::disjunction(2), 2, {0, 1}, 2);
        auto bound = closure_pair_bound(*pi);
        CHECK(bound(0, 1) == 1);
        auto g = build_gbad(pi->hypergraph(), 2, {.pair_bound = bound});
        CHECK(g.edges.size() == 1);
    }
    CHECK_THROWS_AS(build_gbad(Hypergraph::from_scopes(2, 2, {{0, 1}}), 2, {}), InputError);
}

TEST_CASE("correlation implies a bad structure")
{
    auto pi = single_constraint_pi(Predicate::disjunction(2), 2, {0, 1}, 2);
    auto corr = build_correlation_graph(*pi);
    auto gbad = build_gbad(pi->hypergraph(), 2, {.max_size = 2});
    auto ok = verify_corr_implies_bad(*pi, corr, gbad);
    CHECK(ok.holds);
    CHECK(ok.correlated_pairs == 1);
    CHECK(ok.intrinsic_correlated_pairs == 1);

    GbadGraph empty;
    empty.n = 2;
    auto bad = verify_corr_implies_bad(*pi, corr, empty);
    CHECK_FALSE(bad.holds);
    REQUIRE(bad.exceptions.size() == 1);
    CHECK(bad.intrinsic_exceptions.size() == 1);
}

TEST_CASE("block psd verification")
{
    SUBCASE("consistent correlated pair")
    {
        auto f = LocalDistributionFamily::make_tables(3, 2, {table({0, 1, 2}, {Rational{3, 8}, 0, 0, Rational{1, 8}, Rational{3, 8}, 0, 0, Rational{1, 8}})}, 3);
        auto g = build_correlation_graph(*f);
        CHECK(g.graph().edges == std::vector<std::pair<int, int>>{{0, 1}});
        auto r = block_psd_verify(*f, g);
        CHECK(r.holds);
        CHECK(r.cross_zero);
        CHECK(r.blocks.size() == 2);
        CHECK(r.blocks[0].matches_distribution);
    }
    SUBCASE("negative control localizes the cross entry")
    {
        auto f = LocalDistributionFamily::make_tables(2, 2, {table({0, 1}, {Rational{3, 4}, 0, 0, Rational{1, 4}})}, 2);
        auto r = block_psd_verify(*f, CorrelationGraph{2, 2, {}});
        CHECK_FALSE(r.holds);
        REQUIRE(r.cross_violation);
        CHECK(r.cross_violation->u == 0);
        CHECK(r.cross_violation->v == 1);
        CHECK(r.cross_violation->entry != 0);
    }
    SUBCASE("a component beyond the radius is reported")
    {
        auto f = LocalDistributionFamily::make_tables(3, 2, {table({0, 1, 2}, {Rational{1, 2}, 0, 0, 0, 0, 0, 0, Rational{1, 2}})}, 2);
        auto g = build_correlation_graph(*f);
        auto r = block_psd_verify(*f, g);
        REQUIRE(r.oversized_component);
        CHECK(*r.oversized_component == VertexSet{0, 1, 2});
        CHECK_FALSE(r.holds);
        CHECK(r.blocks_psd);
    }
}

TEST_CASE("component bound")
{
    auto h = Hypergraph::from_scopes(16, 3, {{0, 1, 2}});
    ExpansionReport certified;
    certified.s = 33;
    certified.e = Rational{7, 4};
    certified.holds = true;

    GbadGraph none;
    none.n = 16;
    auto pass = component_bound_check(h, none, 3, Rational{1, 2}, certified);
    CHECK(pass.status == CheckStatus::pass);
    CHECK(pass.bound == 12);
    CHECK(pass.max_component == 1);

    auto failed_expansion = certified;
    failed_expansion.holds = false;
    CHECK(component_bound_check(h, none, 3, Rational{1, 2}, failed_expansion).status == CheckStatus::skipped);
    auto weak = certified;
    weak.e = Rational{3, 2};
    CHECK(component_bound_check(h, none, 3, Rational{1, 2}, weak).status == CheckStatus::skipped);

    GbadGraph path;
    path.n = 16;
    for (int i = 0; i + 1 < 14; ++i)
        path.edges.push_back({i, i + 1, {{0}, i, i + 1, {0}}});
    auto fail = component_bound_check(h, path, 3, Rational{1, 2}, certified);
    CHECK(fail.status == CheckStatus::fail);
    CHECK(fail.max_component == 14);
    REQUIRE(fail.offending);
    CHECK(fail.offending->size() == 14);
    CHECK(fail.chain.size() == 13);
    CHECK(fail.chain.back().union_gamma == 3);
}

TEST_CASE("reports serialise")
{
    auto pi = single_constraint_pi(Predicate::disjunction(2), 2, {0, 1}, 2);
    auto corr = build_correlation_graph(*pi);
    auto gbad = build_gbad(pi->hypergraph(), 2, {.max_size = 2});
    CHECK(corr.to_json()["edges"] == 1);
    CHECK(gbad.to_json()["witnesses"].size() == 1);
    CHECK(block_psd_verify(*pi, corr).to_json()["holds"] == true);
}
