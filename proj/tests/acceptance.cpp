// Acceptance suite: one PASS/FAIL line per criterion, followed by indented info lines.
// Exit status is 0 only when every criterion passes.
#include <sosgap/corrgraph.hpp>
#include <sosgap/pipeline.hpp>
#include <sosgap/psdlab.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <bit>
#include <map>
#include <sstream>

using namespace sosgap;
using nlohmann::json;

namespace {
    using Clock = std::chrono::steady_clock;

    auto seconds_since(Clock::time_point t0) -> double
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    struct Verdict {
        bool pass = false;
        std::string summary;
        std::vector<std::string> info;
    };

    auto fmt(double s) -> std::string
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2fs", s);
        return buf;
    }

    template <typename... Ts>
    auto cat(const Ts &... parts) -> std::string
    {
        std::ostringstream out;
        (out << ... << parts);
        return out.str();
    }

    // Shared pipeline runs.
    struct Runs {
        PipelineReport dense;      // the criterion-2 instances, exploratory mode
        double dense_seconds = 0;
        PipelineReport sparse;     // certified supplement at m = n/3
        PipelineReport corrupted;  // negative control
        PipelineConfig corrupted_config;
    };

    auto dense_config() -> PipelineConfig
    {
        PipelineConfig c;
        c.predicate = "parity3";
        c.n = 24;
        c.m_schedule = {MSpec::parse("24")};
        c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        c.conditional_samples = 20;
        c.conditional_max_x = 2;
        c.conditional_graph_families = 5;
        c.run_uncertified = true;
        return c;
    }

    auto make_runs() -> Runs
    {
        auto start = Clock::now();
        auto dense = run_pipeline(dense_config());
        double dense_seconds = seconds_since(start);

        auto sparse_config = dense_config();
        sparse_config.m_schedule = {MSpec::parse("8")};
        sparse_config.run_uncertified = false;

        auto c = dense_config();
        c.n = 16;
        c.m_schedule = {MSpec::parse("4")};
        c.seeds = {0, 1};
        c.run_uncertified = false;
        c.conditional_samples = 2;
        c.conditional_graph_families = 1;
        c.negative_control = NegativeControl::corrupt;
        return Runs{std::move(dense), dense_seconds, run_pipeline(sparse_config), run_pipeline(c), c};
    }

    auto checks_named(const PipelineReport & r, const std::string & name) -> std::vector<std::pair<const SeedRecord *, const CheckOutcome *>>
    {
        std::vector<std::pair<const SeedRecord *, const CheckOutcome *>> out;
        for (auto & s : r.seeds)
            if (auto * c = s.check(name))
                out.emplace_back(&s, c);
        return out;
    }

    auto certified_count(const PipelineReport & r) -> int
    {
        return static_cast<int>(std::count_if(r.seeds.begin(), r.seeds.end(), [](auto & s) { return s.certified; }));
    }

    // "consistency: pass 5, error 5 (first: ...)"
    auto tally(const PipelineReport & r, const std::string & name, bool certified_only) -> std::string
    {
        std::map<std::string, int> counts;
        std::string first_reason;
        for (auto [s, c] : checks_named(r, name)) {
            if (certified_only && ! s->certified)
                continue;
            ++counts[outcome_name(c->status)];
            if (c->status != Outcome::pass && first_reason.empty() && ! c->reason.empty())
                first_reason = cat("seed ", s->seed, ": ", c->reason);
        }
        std::string out = name + ":";
        for (auto & [k, v] : counts)
            out += cat(" ", k, " ", v);
        if (counts.empty())
            out += " not run";
        if (! first_reason.empty())
            out += " (" + first_reason + ")";
        return out;
    }

    auto status_is(const CheckOutcome * c, Outcome o) -> bool
    {
        return c && c->status == o;
    }

    auto criterion_1() -> Verdict
    {
        Verdict v{true, "", {}};
        struct Case {
            Predicate p;
            int expected;
        };
        std::vector<Case> cases{{Predicate::parity(3), 3}, {Predicate::disjunction(3), 3}, {Predicate::disjunction(2), 2}};
        std::vector<std::string> parts;
        for (auto & c : cases) {
            auto t0 = Clock::now();
            auto got = cmplx(c.p);
            double s = seconds_since(t0);
            bool ok = got.value == c.expected && ! got.trivial && s < 1.0;
            v.pass = v.pass && ok;
            parts.push_back(cat(c.p.name(), "=", got.value, " (", fmt(s), ")"));
        }
        for (auto & p : parts)
            v.summary += (v.summary.empty() ? "" : ", ") + p;
        return v;
    }

    auto criterion_2(const Runs & runs) -> Verdict
    {
        Verdict v;
        int certified = certified_count(runs.dense);
        int failures = 0;
        for (auto & s : runs.dense.seeds) {
            if (! s.certified)
                continue;
            for (auto name : {"consistency", "support", "block_psd"})
                if (! status_is(s.check(name), Outcome::pass))
                    ++failures;
        }
        v.pass = certified > 0 && failures == 0 && runs.dense_seconds < 300;
        v.summary = cat(certified, "/10 seeds expander-certified, ", failures, " failures among certified, run ", fmt(runs.dense_seconds));
        if (certified == 0)
            v.info.push_back("no seed satisfies the (s1,e1)-expansion hypothesis at this density; nothing is established");
        for (auto & s : runs.dense.seeds)
            if (! s.certified && s.expansion.contains("certificate") && s.expansion["certificate"].contains("witness")) {
                v.info.push_back(cat("seed ", s.seed, " expansion witness: ", s.expansion["certificate"]["witness"].dump(), ", largest expanding size ",
                    s.expansion["largest_expanding_size"].dump()));
                break;
            }
        for (auto name : {"consistency", "support", "block_psd"})
            v.info.push_back("exploratory " + tally(runs.dense, name, false));
        v.info.push_back(cat("supplement parity3 n=24 m=8: ", certified_count(runs.sparse), "/10 certified; ", tally(runs.sparse, "consistency", true), "; ",
            tally(runs.sparse, "support", true), "; ", tally(runs.sparse, "block_psd", true)));
        return v;
    }

    auto criterion_3(const Runs & runs) -> Verdict
    {
        Verdict v;
        int certified = 0, failures = 0, matrices = 0;
        for (auto & s : runs.dense.seeds) {
            if (! s.certified)
                continue;
            ++certified;
            auto * c = s.check("conditional_moments");
            if (! status_is(c, Outcome::pass) || c->detail["checked"] != 20)
                ++failures;
            if (c && c->detail.contains("checked"))
                matrices += c->detail["checked"].get<int>();
        }
        v.pass = certified > 0 && failures == 0 && runs.dense_seconds < 300;
        v.summary = cat(certified, " certified seeds, ", matrices, " conditioned moment matrices, ", failures, " failures");
        int explored = 0, psd = 0;
        for (auto [s, c] : checks_named(runs.dense, "conditional_moments")) {
            if (s->certified || ! c->detail.contains("samples"))
                continue;
            for (auto & smp : c->detail["samples"])
                if (smp.contains("moment_psd")) {
                    ++explored;
                    psd += smp["moment_psd"].get<bool>();
                }
        }
        v.info.push_back(cat("exploratory: ", psd, "/", explored, " sampled M_{X,alpha} exactly psd; ", tally(runs.dense, "conditional_moments", false)));
        v.info.push_back("supplement m=8 " + tally(runs.sparse, "conditional_moments", true));
        return v;
    }

    auto criterion_4(const Runs & runs) -> Verdict
    {
        Verdict v;
        auto t0 = Clock::now();
        CounterRng rng{2024};
        int synthetic_agree = 0, non_psd = 0;
        for (int trial = 0; trial < 200; ++trial) {
            SyntheticOptions opts;
            opts.n = static_cast<int>(rng.below(3)) + 2;
            opts.q = static_cast<int>(rng.below(2)) + 2;
            opts.radius = opts.n;
            opts.consistent = trial % 2 == 0;
            auto f = random_synthetic_family(rng, opts);
            auto r = schur_equivalence_check(*f, {}, {});
            synthetic_agree += r.agree;
            non_psd += ! r.moment.psd;
        }
        double synthetic_seconds = seconds_since(t0);
        int families = 0, agree = 0;
        double pipeline_seconds = 0;
        for (auto * r : {&runs.dense, &runs.sparse}) {
            for (auto [s, c] : checks_named(*r, "schur")) {
                if (c->status == Outcome::error || c->status == Outcome::skipped)
                    continue;
                ++families;
                agree += c->status == Outcome::pass;
                pipeline_seconds += c->seconds;
            }
            for (auto [s, c] : checks_named(*r, "conditional_schur")) {
                if (! c->detail.contains("checked"))
                    continue;
                families += c->detail["checked"].get<int>();
                agree += c->detail["passed"].get<int>();
            }
        }
        v.pass = synthetic_agree == 200 && agree == families && synthetic_seconds + pipeline_seconds < 60;
        v.summary = cat("synthetic ", synthetic_agree, "/200 agree (", non_psd, " not psd), pipeline ", agree, "/", families, " agree, ",
            fmt(synthetic_seconds + pipeline_seconds));
        return v;
    }

    auto criterion_5(const Runs & runs) -> Verdict
    {
        Verdict v;
        int decided = 0, exceptions = 0, undecided = 0, conditional_checked = 0;
        double seconds = 0;
        for (auto & s : runs.dense.seeds) {
            auto * base = s.check("corr_bad");
            auto * cond = s.check("conditional_corr_bad");
            seconds += base ? base->seconds : 0;
            if (status_is(base, Outcome::pass) || status_is(base, Outcome::fail)) {
                ++decided;
                exceptions += base->detail["exceptions"].size();
            }
            else {
                ++undecided;
            }
            if (cond && cond->detail.contains("checked"))
                conditional_checked += cond->detail["checked"].get<int>();
            if (cond && cond->status == Outcome::fail)
                ++exceptions;
        }
        v.pass = undecided == 0 && exceptions == 0 && conditional_checked == 50 && seconds + runs.dense_seconds < 600;
        v.summary = cat(decided, "/10 instances decided, ", exceptions, " exceptions, ", undecided, " undecided, ", conditional_checked,
            "/50 conditional families checked");
        v.info.push_back(tally(runs.dense, "corr_bad", false));
        v.info.push_back(tally(runs.dense, "conditional_corr_bad", false));
        int intrinsic = 0, intrinsic_covered = 0;
        for (auto [s, c] : checks_named(runs.dense, "corr_bad")) {
            if (! c->detail.contains("intrinsic_correlated_pairs"))
                continue;
            intrinsic += c->detail["intrinsic_correlated_pairs"].get<int>();
            intrinsic_covered += c->detail["intrinsic_correlated_pairs"].get<int>() - static_cast<int>(c->detail["intrinsic_exceptions"].size());
        }
        if (intrinsic > 0)
            v.info.push_back(cat("intrinsically correlated pairs with a bad structure: ", intrinsic_covered, "/", intrinsic));
        v.info.push_back("supplement m=8 " + tally(runs.sparse, "corr_bad", true) + "; " + tally(runs.sparse, "conditional_corr_bad", true));
        return v;
    }

    auto criterion_6(const Runs & runs) -> Verdict
    {
        Verdict v;
        int certified = 0, exceptions = 0;
        for (auto & s : runs.dense.seeds) {
            if (! s.certified)
                continue;
            ++certified;
            if (! status_is(s.check("component_bound"), Outcome::pass))
                ++exceptions;
        }
        v.pass = certified > 0 && exceptions == 0;
        v.summary = cat(certified, " certified instances, ", exceptions, " exceptions");
        int sparse_certified = 0, sparse_ok = 0, largest = 0;
        std::string bound = "?";
        for (auto & s : runs.sparse.seeds) {
            if (! s.certified)
                continue;
            ++sparse_certified;
            auto * c = s.check("component_bound");
            sparse_ok += status_is(c, Outcome::pass);
            if (c && c->detail.contains("bound"))
                bound = c->detail["bound"].dump();
            if (s.max_gbad_component)
                largest = std::max(largest, *s.max_gbad_component);
        }
        v.info.push_back(cat("supplement m=8: ", sparse_ok, "/", sparse_certified, " certified instances within the bound ", bound,
            ", largest G_bad component ", largest));
        return v;
    }

    auto criterion_7(const Runs & runs) -> Verdict
    {
        Verdict v;
        int compared = 0, agree = 0, not_psd = 0, in_band = 0, off_block = 0, off_block_caught = 0;
        for (auto * r : {&runs.dense, &runs.sparse, &runs.corrupted})
            for (auto [s, c] : checks_named(*r, "block_psd")) {
                if (! c->detail.contains("full_float"))
                    continue;
                bool fl = c->detail["full_float"]["verdict"] == "psd";
                if (! c->detail["cross_zero"].get<bool>()) {
                    // not block diagonal for its partition: the block conjunction says nothing about the full matrix
                    ++off_block;
                    off_block_caught += c->status == Outcome::fail && ! fl && c->detail["full"]["verdict"] == "not_psd";
                    continue;
                }
                ++compared;
                bool blocks = c->detail["blocks_psd"].get<bool>();
                agree += blocks == fl;
                not_psd += ! blocks;
                in_band += c->detail["full_float"]["in_band"].get<bool>();
            }
        v.pass = compared > 0 && agree == compared;
        v.summary = cat(agree, "/", compared, " block-diagonal Sigma matrices: float verdict (tol 1e-9 relative) matches the exact block conjunction");
        v.info.push_back(cat(not_psd, " not psd, ", in_band, " with lambda_min inside the tolerance band"));
        v.info.push_back(cat(off_block, " negative-control Sigma with nonzero cross entries; ", off_block_caught, " rejected by the cross-zero check, full matrix not psd"));
        return v;
    }

    auto random_hypergraph(CounterRng & rng, int n, int m, int k) -> Hypergraph
    {
        std::vector<VertexSet> scopes;
        for (int j = 0; j < m; ++j) {
            VertexSet s;
            while (static_cast<int>(s.size()) < k) {
                int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                if (! contains(s, x))
                    s = set_union(s, {x});
            }
            scopes.push_back(s);
        }
        return Hypergraph::from_scopes(n, k, std::move(scopes));
    }

    // Every nonempty set of at most s active constraints has |Gamma| >= e|T|, by bitmask enumeration.
    auto naive_expanding(const Hypergraph & h, int s, const Rational & e) -> bool
    {
        auto active = h.active_constraints();
        const auto m = active.size();
        for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
            if (std::popcount(mask) > s)
                continue;
            std::vector<char> seen(static_cast<std::size_t>(h.n), 0);
            long size = 0;
            for (std::size_t b = 0; b < m; ++b)
                if (mask & (1u << b))
                    for (int x : h.scopes[static_cast<std::size_t>(active[b])])
                        if (! seen[static_cast<std::size_t>(x)]++)
                            ++size;
            if (Rational{size} < e * std::popcount(mask))
                return false;
        }
        return true;
    }

    auto criterion_8() -> Verdict
    {
        Verdict v;
        auto t0 = Clock::now();
        CounterRng rng{808};
        const std::vector<std::pair<Rational, Rational>> params{{Rational{5, 2}, Rational{3, 2}}, {Rational{2}, Rational{3, 2}}, {Rational{9, 4}, Rational{7, 4}}};
        int draws = 0, attempts = 0, exceptions = 0, grew = 0;
        while (draws < 100 && attempts < 20000) {
            ++attempts;
            int n = 18 + static_cast<int>(rng.below(15));
            int m = 6 + static_cast<int>(rng.below(7));
            auto h = random_hypergraph(rng, n, m, 3);
            auto [e1, e2] = params[rng.below(params.size())];
            int s1 = largest_expanding_size(h, e1, ExpansionMode::vertex, m);
            if (s1 < 1 || ! naive_expanding(h, s1, e1))
                continue;
            int max_s = 0;
            while (Rational{max_s + 1} < (e1 - e2) * s1)
                ++max_s;
            if (max_s < 1)
                continue;
            int size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(max_s, 4))));
            VertexSet s;
            while (static_cast<int>(s.size()) < size)
                s = set_union(s, {static_cast<int>(rng.below(static_cast<std::uint64_t>(n)))});
            ClosureOptions opts;
            opts.check_postconditions = false;
            auto c = closure(h, s, e1, e2, s1, opts);
            ++draws;
            grew += c.closure.size() > s.size();
            bool ok = is_subset(s, c.closure);
            ok = ok && Rational{static_cast<long>(c.closure.size())} <= e1 / (e1 - e2) * static_cast<long>(s.size());
            ok = ok && naive_expanding(h.without(c.closure), c.s2, e2);
            exceptions += ! ok;
        }
        double seconds = seconds_since(t0);
        v.pass = draws == 100 && exceptions == 0 && seconds < 300;
        v.summary = cat(draws, " draws with valid preconditions, ", exceptions, " exceptions, ", fmt(seconds));
        v.info.push_back(cat(grew, " draws where the closure strictly grew S"));
        return v;
    }

    auto parity_mu() -> SupportDistribution
    {
        auto p = Predicate::parity(3);
        SupportDistribution mu{std::vector<Rational>(8)};
        for (std::size_t i = 0; i < 8; ++i)
            if (p.at(i))
                mu.weights[i] = Rational{1, 4};
        return mu;
    }

    // Pi'_S(T = a) = q^{-|B & T|} Pi'_{S\B}(T\B = a restricted), recomputed from pi_prime.
    auto proportional(const Instance & inst, const SupportDistribution & mu, const VertexSet & s, const VertexSet & t, const VertexSet & b) -> bool
    {
        const int q = inst.predicate.alphabet();
        auto lhs = pi_prime(inst, mu, s, t);
        auto rest = set_difference(t, b);
        auto removed_s = set_difference(s, b);
        std::optional<LocalDistribution> rhs;
        if (! rest.empty())
            rhs = pi_prime(inst, mu, removed_s, rest);
        Rational scale{1};
        for (std::size_t i = 0; i < set_intersection(b, t).size(); ++i)
            scale /= q;
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            auto a = lhs.assignment(i);
            std::vector<int> sub;
            for (std::size_t j = 0; j < t.size(); ++j)
                if (contains(rest, t[j]))
                    sub.push_back(a[j]);
            Rational expected = scale * (rhs ? rhs->prob(rest, sub) : Rational{1});
            if (lhs.probs[i] != expected)
                return false;
        }
        return true;
    }

    auto criterion_9() -> Verdict
    {
        Verdict v;
        auto t0 = Clock::now();
        auto p = Predicate::parity(3);
        auto mu = parity_mu();
        CounterRng rng{909};
        int triples = 0, exceptions = 0;
        for (std::uint64_t seed = 0; seed < 5000 && triples < 50; ++seed) {
            int n = 7 + static_cast<int>(rng.below(3));
            int m = 3 + static_cast<int>(rng.below(4));
            auto inst = generate(p, n, m, seed);
            VertexSet s;
            for (int i = 0; i < n; ++i)
                if (i < n - 2 || rng.below(2) == 0)
                    s.push_back(i);
            auto covered = constraints_covered(inst, s);
            if (covered.empty() || partition_value(inst, mu, s) == 0)
                continue;
            int cstar = covered[rng.below(covered.size())];
            VertexSet t;
            int size = 1 + static_cast<int>(rng.below(3));
            while (static_cast<int>(t.size()) < size)
                t = set_union(t, {s[rng.below(s.size())]});
            auto r = check_removal_proportionality(inst, mu, 3, s, t, cstar);
            if (! r.hypothesis)
                continue;
            ++triples;
            bool ok = r.holds && proportional(inst, mu, s, t, r.removed);
            exceptions += ! ok;
        }
        v.pass = triples == 50 && exceptions == 0;
        v.summary = cat(triples, " triples satisfying the hypothesis, ", exceptions, " exceptions, ", fmt(seconds_since(t0)));
        return v;
    }

    auto criterion_10(const Runs & runs) -> Verdict
    {
        Verdict v;
        int sampled = 0, literal = 0, unnormalised = 0, normalised = 0, strict = 0, strict_literal = 0;
        for (auto * r : {&runs.dense, &runs.sparse})
            for (auto [s, c] : checks_named(*r, "conditional_moments")) {
                if (! c->detail.contains("samples"))
                    continue;
                for (auto & smp : c->detail["samples"]) {
                    if (sampled == 50 || ! smp.contains("decomposition"))
                        continue;
                    auto & d = smp["decomposition"];
                    ++sampled;
                    literal += d["literal"].get<bool>();
                    unnormalised += d["unnormalised"].get<bool>();
                    normalised += d["normalised"].get<bool>();
                    bool inside = d["T"].size() > smp["X"].size();
                    strict += inside;
                    strict_literal += inside && d["literal"].get<bool>();
                }
            }
        v.pass = sampled == 50 && literal == 50;
        v.summary = cat("stated weighted identity exact on ", literal, "/", sampled, " sampled (X,T,alpha)");
        v.info.push_back(cat("every mismatch has X strictly inside T (", strict, " samples, ", strict_literal,
            " of them exact because D_{T|X=alpha} is a point mass there)"));
        v.info.push_back(cat("unnormalised sum identity: ", unnormalised, "/", sampled, ", both sides divided by their mass: ", normalised, "/", sampled));
        return v;
    }

    auto criterion_11(const Runs & runs) -> Verdict
    {
        Verdict v;
        CounterRng rng{1111};
        int synthetic = 0, synthetic_ok = 0;
        for (int trial = 0; trial < 60; ++trial) {
            SyntheticOptions opts;
            opts.n = 3 + static_cast<int>(rng.below(3));
            opts.q = 2 + static_cast<int>(rng.below(2));
            opts.radius = opts.n;
            opts.consistent = true;
            auto f = random_synthetic_family(rng, opts);
            int xs = 1 + static_cast<int>(rng.below(2));
            VertexSet x;
            while (static_cast<int>(x.size()) < xs)
                x = set_union(x, {static_cast<int>(rng.below(static_cast<std::uint64_t>(opts.n)))});
            auto d = f->get(x);
            std::vector<std::size_t> positive;
            for (std::size_t i = 0; i < d->size(); ++i)
                if (d->probs[i] > 0)
                    positive.push_back(i);
            if (positive.empty())
                continue;
            auto cond = f->condition(x, d->assignment(positive[rng.below(positive.size())]));
            ++synthetic;
            synthetic_ok += verify_local_consistency(*cond, all_sets_up_to(opts.n, opts.radius - xs)).consistent;
        }
        int pipeline = 0, pipeline_ok = 0, pipeline_errors = 0;
        for (auto * r : {&runs.dense, &runs.sparse})
            for (auto [s, c] : checks_named(*r, "conditional_consistency")) {
                if (c->status == Outcome::skipped)
                    continue;
                if (c->status == Outcome::error || c->status == Outcome::refused) {
                    ++pipeline_errors;
                    continue;
                }
                pipeline += c->detail["checked"].get<int>();
                pipeline_ok += c->detail["passed"].get<int>();
            }
        v.pass = synthetic > 0 && synthetic_ok == synthetic && pipeline_ok == pipeline && pipeline_errors == 0;
        v.summary = cat("synthetic ", synthetic_ok, "/", synthetic, ", pipeline conditionals ", pipeline_ok, "/", pipeline, " consistent");
        v.info.push_back(cat("pipeline families whose base did not pass consistency are not conditioned: ",
            tally(runs.dense, "conditional_consistency", false)));
        return v;
    }

    auto small_rational(CounterRng & rng) -> Rational
    {
        Rational r{static_cast<long>(rng.below(9)) - 4, static_cast<long>(rng.below(3)) + 1};
        r.canonicalize();
        return r;
    }

    auto random_matrix(CounterRng & rng, int d) -> SymmetricRationalMatrix
    {
        std::vector<MatrixLabel> labels;
        for (int i = 0; i < d; ++i)
            labels.push_back({i, 0});
        SymmetricRationalMatrix m{labels};
        auto kind = rng.below(3);
        if (kind == 0) {
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j)
                    m.set(i, j, small_rational(rng));
            return m;
        }
        auto rank = static_cast<int>(rng.below(static_cast<std::uint64_t>(d))) + 1;
        std::vector<std::vector<Rational>> b(static_cast<std::size_t>(rank), std::vector<Rational>(static_cast<std::size_t>(d)));
        for (auto & row : b)
            for (auto & x : row)
                x = small_rational(rng);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                Rational s;
                for (auto & row : b)
                    s += row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)];
                m.set(i, j, s);
            }
        if (kind == 2) {
            auto i = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
            m.set(i, i, m.at(i, i) - Rational{1, 2});
        }
        return m;
    }

    auto criterion_12(const Runs & runs) -> Verdict
    {
        Verdict v;
        Instance pair{Predicate::parity(3), 3, {{{0, 0, 0}, {0, 1, 2}}, {{1, 0, 0}, {0, 1, 2}}}, 0, {}};
        auto opt = opt_bruteforce(pair);
        bool opt_ok = opt.value == Rational{1, 2} && val(pair, opt.witness) == opt.value;

        int witnesses = 0, reverified = 0;
        for (auto & s : runs.dense.seeds)
            if (s.expansion.contains("witness_reverifies")) {
                ++witnesses;
                reverified += s.expansion["witness_reverifies"].get<bool>();
            }
        CounterRng hrng{1212};
        for (int trial = 0; trial < 100; ++trial) {
            auto h = random_hypergraph(hrng, 10 + static_cast<int>(hrng.below(10)), 4 + static_cast<int>(hrng.below(8)), 3);
            auto r = check_expansion(h, 1 + static_cast<int>(hrng.below(5)), Rational{2}, ExpansionMode::vertex);
            if (r.holds)
                continue;
            ++witnesses;
            reverified += witness_reverifies(h, r);
        }

        CounterRng rng{1213};
        int outside = 0, agree = 0, band = 0;
        for (int trial = 0; trial < 500; ++trial) {
            auto m = random_matrix(rng, static_cast<int>(rng.below(5)) + 2);
            auto exact = psd_exact(m);
            auto fl = psd_float(m);
            if (fl.in_band) {
                ++band;
                continue;
            }
            ++outside;
            agree += fl.psd == exact.psd;
        }
        v.pass = opt_ok && witnesses > 0 && reverified == witnesses && agree == outside;
        v.summary = cat("opt(contradictory pair) = ", rational_to_string(opt.value), ", ", reverified, "/", witnesses, " expansion witnesses re-verify, ",
            agree, "/", outside, " exact/float agree outside the band (", band, " in band)");
        return v;
    }

    auto criterion_13(const Runs & runs) -> Verdict
    {
        Verdict v;
        auto & r = runs.corrupted;
        auto params = resolve_params(runs.corrupted_config);
        int seeds = 0, localized = 0, replayed = 0;
        for (auto & s : r.seeds) {
            if (! s.certified)
                continue;
            ++seeds;
            auto * nc = s.check("negative_control");
            auto * cons = s.check("consistency");
            auto * sup = s.check("support");
            auto * block = s.check("block_psd");
            if (! nc || ! status_is(cons, Outcome::fail) || ! status_is(sup, Outcome::fail) || ! status_is(block, Outcome::fail))
                continue;
            auto & cv = cons->detail["violation"];
            auto & sv = sup->detail["violation"];
            auto & xv = block->detail["cross_violation"];
            if (cv.is_null() || sv.is_null() || xv.is_null())
                continue;
            ++localized;

            // Rebuild the corrupted family from scratch and replay each witness.
            auto inst = std::make_shared<const Instance>(generate(params.predicate, s.n, s.m, s.seed));
            auto pi = LocalDistributionFamily::make_pi(inst, params.mu,
                ClosureParams{params.e1, params.e2, params.s1, true, runs.corrupted_config.log2_budget}, runs.corrupted_config.radius);
            auto clean = connected_components(build_correlation_graph(*pi).graph());
            auto scope = inst->constraints.front().variables();
            pi->override_entry(LocalDistribution::uniform(scope, pi->q()));
            int u = nc->detail["pair"][0], w = nc->detail["pair"][1];
            auto d = LocalDistribution::uniform({u, w}, pi->q());
            std::fill(d.probs.begin(), d.probs.end(), Rational{0});
            d.probs[0] = Rational{3, 4};
            d.probs[d.index_of(std::vector<int>{1, 1})] = Rational{1, 4};
            pi->override_entry(d);

            VertexSet t = cv["T"], big = cv["S"];
            std::vector<int> alpha = cv["alpha"];
            bool cons_ok = pi->get(t)->prob(t, alpha) != pi->get(big)->prob(t, alpha);

            int j = sv["constraint"];
            VertexSet sscope = sv["scope"];
            std::vector<int> salpha = sv["alpha"];
            std::vector<int> x(static_cast<std::size_t>(inst->n), 0);
            for (std::size_t i = 0; i < sscope.size(); ++i)
                x[static_cast<std::size_t>(sscope[i])] = salpha[i];
            bool sup_ok = j == 0 && pi->get(sscope)->prob(sscope, salpha) > 0 && ! satisfies(*inst, inst->constraints[static_cast<std::size_t>(j)], x);

            auto sigma = build_covariance(*pi, {}, {});
            int cu = xv["u"], ca = xv["a"], cw = xv["v"], cb = xv["b"];
            auto entry = sigma.at(sigma.index_of({cu, ca}), sigma.index_of({cw, cb}));
            auto part_of = [&](int y) {
                for (std::size_t i = 0; i < clean.parts.size(); ++i)
                    if (contains(clean.parts[i], y))
                        return static_cast<int>(i);
                return -1;
            };
            bool cross_ok = entry != 0 && part_of(cu) != part_of(cw) && cu == u && cw == w;
            replayed += cons_ok && sup_ok && cross_ok;
        }
        v.pass = r.exit_code == 1 && seeds > 0 && localized == seeds && replayed == seeds;
        v.summary = cat("exit code ", r.exit_code, ", ", localized, "/", seeds, " certified seeds localized in consistency, support and cross-zero, ",
            replayed, " witnesses replayed");
        return v;
    }
}

int main()
{
    auto t0 = Clock::now();
    auto runs = make_runs();

    std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"predicate complexity", [] { return criterion_1(); }},
        {"SA+ feasibility, parity3 n=24 m=24", [&] { return criterion_2(runs); }},
        {"static LS+ conditioned moments", [&] { return criterion_3(runs); }},
        {"Schur equivalence", [&] { return criterion_4(runs); }},
        {"correlation implies bad structure", [&] { return criterion_5(runs); }},
        {"G_bad component bound", [&] { return criterion_6(runs); }},
        {"block-diagonal float/exact agreement", [&] { return criterion_7(runs); }},
        {"closure postconditions", [] { return criterion_8(); }},
        {"removal proportionality", [] { return criterion_9(); }},
        {"conditioned moment decomposition", [&] { return criterion_10(runs); }},
        {"conditional consistency", [&] { return criterion_11(runs); }},
        {"brute-force oracle agreement", [&] { return criterion_12(runs); }},
        {"negative control", [&] { return criterion_13(runs); }},
    };
    int passed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        }
        catch (const std::exception & e) {
            v = {false, std::string("error: ") + e.what(), {}};
        }
        passed += v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  " << (i + 1 < 10 ? " " : "") << i + 1 << ". " << criteria[i].first << ": " << v.summary << '\n';
        for (auto & line : v.info)
            std::cout << "          " << line << '\n';
        std::cout.flush();
    }
    std::cout << passed << "/" << criteria.size() << " criteria pass (" << fmt(seconds_since(t0)) << ")\n";
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
