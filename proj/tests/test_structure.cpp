#include <doctest.h>

#include <sosgap/structure.hpp>

#include <algorithm>

using namespace sosgap;

namespace {
    auto hg(int n, std::vector<VertexSet> scopes, int k = 3) -> Hypergraph
    {
        return Hypergraph::from_scopes(n, k, std::move(scopes));
    }

    auto random_hypergraph(std::uint64_t & state, int n, int m, int k) -> Hypergraph
    {
        auto next = [&] {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            return static_cast<int>(state >> 33);
        };
        std::vector<VertexSet> scopes;
        for (int j = 0; j < m; ++j) {
            VertexSet s;
            while (static_cast<int>(s.size()) < k) {
                int v = next() % n;
                if (! contains(s, v))
                    s = set_union(s, {v});
            }
            scopes.push_back(s);
        }
        return hg(n, scopes, k);
    }

    // Naive oracle: every subset as a bitmask, ordered lexicographically by
    // its sorted index list.
    auto naive_lex_violator(const Hypergraph & h, int s, const Rational & e, bool boundary_mode) -> std::optional<ConstraintSet>
    {
        const int m = h.constraint_count();
        std::vector<ConstraintSet> violators;
        for (unsigned mask = 1; mask < (1u << m); ++mask) {
            ConstraintSet t;
            for (int j = 0; j < m; ++j)
                if (mask & (1u << j))
                    t.push_back(j);
            if (static_cast<int>(t.size()) > s)
                continue;
            std::vector<int> cover(static_cast<std::size_t>(h.n), 0);
            for (int j : t)
                for (int v : h.scopes[static_cast<std::size_t>(j)])
                    ++cover[static_cast<std::size_t>(v)];
            long size = 0;
            for (int c : cover)
                size += boundary_mode ? (c == 1) : (c > 0);
            if (Rational{size} < e * static_cast<long>(t.size()))
                violators.push_back(t);
        }
        if (violators.empty())
            return std::nullopt;
        return *std::min_element(violators.begin(), violators.end());
    }
}

TEST_CASE("gamma and boundary")
{
    auto h = hg(6, {{1, 2, 3}, {3, 4, 5}, {1, 2, 4}});
    CHECK(gamma(h, {0, 1}) == VertexSet{1, 2, 3, 4, 5});
    CHECK(gamma(h, {}).empty());
    CHECK(gamma(h, {0}) == VertexSet{1, 2, 3});
    CHECK(boundary(h, {0, 1}) == VertexSet{1, 2, 4, 5});
    CHECK(boundary(h, {1}) == VertexSet{3, 4, 5});
    CHECK(boundary(h, {0, 2}) == VertexSet{3, 4});
}

TEST_CASE("check_expansion examples")
{
    auto disjoint = hg(7, {{1, 2, 3}, {4, 5, 6}});
    CHECK(check_expansion(disjoint, 2, 3, ExpansionMode::vertex).holds);

    auto overlap = hg(5, {{1, 2, 3}, {1, 2, 4}});
    auto r = check_expansion(overlap, 2, 3, ExpansionMode::vertex);
    CHECK_FALSE(r.holds);
    REQUIRE(r.witness);
    CHECK(*r.witness == ConstraintSet{0, 1});
    CHECK(witness_reverifies(overlap, r));

    CHECK(check_expansion(overlap, 0, 100, ExpansionMode::vertex).holds);
    CHECK(check_expansion(overlap, 0, 100, ExpansionMode::boundary).holds);
}

TEST_CASE("budget refusal and sampling mode")
{
    std::uint64_t state = 9;
    auto h = random_hypergraph(state, 40, 30, 3);
    ExpansionOptions tight;
    tight.log2_budget = 10;
    CHECK_THROWS_AS(check_expansion(h, 5, 2, ExpansionMode::vertex, tight), BudgetError);
    tight.samples = 200;
    auto r = check_expansion(h, 5, 2, ExpansionMode::vertex, tight);
    CHECK_FALSE(r.exhaustive);
    CHECK(r.subsets_checked <= 200);
    if (! r.holds)
        CHECK(witness_reverifies(h, r));
}

TEST_CASE("exhaustive search matches the naive oracle")
{
    std::uint64_t state = 4242;
    for (int trial = 0; trial < 150; ++trial) {
        int n = 6 + trial % 7;
        int m = 3 + trial % 8;
        auto h = random_hypergraph(state, n, m, 3);
        int s = 1 + trial % 5;
        Rational e{3 + trial % 6, 2 + trial % 3};
        for (bool boundary_mode : {false, true}) {
            auto mode = boundary_mode ? ExpansionMode::boundary : ExpansionMode::vertex;
            auto r = check_expansion(h, s, e, mode);
            auto oracle = naive_lex_violator(h, s, e, boundary_mode);
            CHECK(r.holds == ! oracle.has_value());
            if (oracle) {
                REQUIRE(r.witness);
                CHECK(*r.witness == *oracle);
                CHECK(witness_reverifies(h, r));
            }
        }
    }
}

TEST_CASE("expansion implies boundary expansion")
{
    std::uint64_t state = 77;
    int certified = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        int k = 3 + trial % 2;
        int n = 8 + trial % 9;
        int m = 2 + trial % 9;
        auto h = random_hypergraph(state, n, m, k);
        int s = 1 + trial % 4;
        Rational d{trial % 5, 2};
        if (check_expansion(h, s, Rational{k} - d, ExpansionMode::vertex).holds) {
            ++certified;
            CHECK(check_expansion(h, s, Rational{k} - 2 * d, ExpansionMode::boundary).holds);
        }
    }
    CHECK(certified > 100);
}

TEST_CASE("largest_expanding_size")
{
    auto overlap = hg(5, {{1, 2, 3}, {1, 2, 4}});
    CHECK(largest_expanding_size(overlap, 2, ExpansionMode::vertex, 5) == 5);
    CHECK(largest_expanding_size(overlap, 3, ExpansionMode::vertex, 5) == 1);
    auto dup = hg(5, {{1, 2, 3}, {1, 2, 3}});
    CHECK(largest_expanding_size(dup, Rational{7, 4}, ExpansionMode::vertex, 5) == 1);
}

TEST_CASE("closure examples")
{
    auto h = hg(7, {{1, 2, 3}, {4, 5, 6}});
    auto empty = closure(h, {}, 3, 2, 2);
    CHECK(empty.closure.empty());
    CHECK(empty.s2 == 2);

    // no violating subset ever appears in the residual
    ClosureOptions loose;
    loose.enforce_size_precondition = false;
    auto plain = closure(h, {1}, Rational{3}, Rational{1, 2}, 2, loose);
    CHECK(plain.closure == VertexSet{1});

    // two constraints sharing {1,2}: absorbing vertex 1 leaves {2,3},{2,4}
    auto overlap = hg(5, {{1, 2, 3}, {1, 2, 4}});
    ClosureOptions opts;
    opts.check_postconditions = false;
    auto c = closure(overlap, {1}, 3, 2, 2, opts);
    CHECK(c.closure == VertexSet{1, 2, 3, 4});
    REQUIRE(c.trace.size() == 1);
    CHECK(c.trace[0].absorbed == ConstraintSet{0, 1});
    CHECK(c.s2 == 0);
    CHECK(c.residual_certified);

    CHECK_THROWS_AS(closure(overlap, {1, 2}, 3, 2, 1), InputError);
    CHECK_THROWS_AS(closure(overlap, {1}, 2, 3, 5), InputError);
}

TEST_CASE("closure postconditions on random expanding hypergraphs")
{
    std::uint64_t state = 31337;
    int exercised = 0;
    for (int trial = 0; trial < 200 && exercised < 40; ++trial) {
        auto h = random_hypergraph(state, 30, 8, 3);
        Rational e1{5, 2};
        Rational e2{3, 2};
        int s1 = largest_expanding_size(h, e1, ExpansionMode::vertex, 8);
        if (s1 < 2)
            continue;
        int size = std::min(s1 - 1, 2);
        std::vector<int> s;
        for (int i = 0; i < size; ++i)
            s.push_back((trial * 7 + i * 11) % 30);
        if (! (Rational{static_cast<long>(make_set(s).size())} < (e1 - e2) * s1))
            continue;
        auto c = closure(h, s, e1, e2, s1);
        ++exercised;
        CHECK(is_subset(make_set(s), c.closure));
        CHECK(c.residual_certified);
        CHECK(c.size_bounds_hold);
        auto again = closure(h, s, e1, e2, s1);
        CHECK(again.to_json() == c.to_json());
        // maximality of each absorbed set against the naive oracle
        VertexSet cl;
        int s2 = s1;
        for (auto & st : c.trace) {
            cl = set_union(cl, {st.vertex});
            if (! st.violated)
                continue;
            auto residual = h.without(cl);
            auto active = residual.active_constraints();
            std::vector<ConstraintSet> best;
            for (unsigned mask = 1; mask < (1u << active.size()); ++mask) {
                ConstraintSet t;
                for (std::size_t b = 0; b < active.size(); ++b)
                    if (mask & (1u << b))
                        t.push_back(active[b]);
                if (static_cast<int>(t.size()) <= s2 && Rational{static_cast<long>(gamma(residual, t).size())} <= e2 * static_cast<long>(t.size()))
                    best.push_back(t);
            }
            std::sort(best.begin(), best.end(), [](auto & a, auto & b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
            REQUIRE_FALSE(best.empty());
            CHECK(st.absorbed == best.front());
            cl = set_union(cl, gamma(residual, st.absorbed));
            s2 -= static_cast<int>(st.absorbed.size());
        }
        CHECK(cl == c.closure);
    }
    CHECK(exercised >= 20);
}

TEST_CASE("peel examples")
{
    auto h = hg(5, {{1, 2, 3}});
    auto r = peel(h, {1, 2, 3}, {1, 2}, 3);
    CHECK(r.remaining == VertexSet{1, 2});
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].constraint == 0);
    CHECK(r.trace[0].removed == VertexSet{3});

    auto none = peel(h, {1, 2, 3}, {0, 1, 2, 3, 4}, 3);
    CHECK(none.remaining == VertexSet{1, 2, 3});
    CHECK(none.trace.empty());

    auto bare = peel(h, {1, 4}, {}, 3);
    CHECK(bare.remaining == VertexSet{1, 4});
}

TEST_CASE("peel terminates within the covered count and removes eligible sets")
{
    std::uint64_t state = 5;
    for (int trial = 0; trial < 200; ++trial) {
        auto h = random_hypergraph(state, 10, 6, 3);
        int t = 2 + trial % 2;
        VertexSet s0;
        for (int v = 0; v < 10; ++v)
            if ((trial >> (v % 5)) & 1 || v % 3 == 0)
                s0.push_back(v);
        VertexSet prot{s0.empty() ? 0 : s0.front()};
        auto r = peel(h, s0, prot, t);
        CHECK(r.trace.size() <= covered_constraints(h, s0).size());
        VertexSet cur = s0;
        for (auto & st : r.trace) {
            CHECK(static_cast<int>(st.removed.size()) >= h.k - t + 1);
            CHECK(set_intersection(st.removed, prot).empty());
            cur = set_difference(cur, st.removed);
        }
        CHECK(cur == r.remaining);
    }
}
