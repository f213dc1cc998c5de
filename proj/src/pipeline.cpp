#include <sosgap/pipeline.hpp>
#include <sosgap/psdlab.hpp>
#include <sosgap/rng.hpp>
#include <sosgap/structure.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

using nlohmann::json;

namespace sosgap {

namespace {
    using Clock = std::chrono::steady_clock;

    auto seconds_since(Clock::time_point t0) -> double
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    auto read_rational(const json & j) -> Rational
    {
        if (j.is_string())
            return parse_rational(j.get<std::string>());
        if (j.is_number_integer())
            return Rational{j.get<long>()};
        return rational_from_json(j);
    }

    auto floor_of(const Rational & r) -> BigInt
    {
        BigInt out;
        mpz_fdiv_q(out.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
        return out;
    }

    auto to_int(const BigInt & b, const char * what) -> int
    {
        if (! b.fits_sint_p())
            throw ConfigError(std::string(what) + " does not fit in an int");
        return static_cast<int>(b.get_si());
    }

    // floor(n^(p/q)) for p/q >= 0
    auto floor_power(int n, const Rational & g) -> BigInt
    {
        BigInt base;
        mpz_ui_pow_ui(base.get_mpz_t(), static_cast<unsigned long>(n), g.get_num().get_ui());
        BigInt out;
        mpz_root(out.get_mpz_t(), base.get_mpz_t(), g.get_den().get_ui());
        return out;
    }
}

auto MSpec::resolve(int n) const -> int
{
    switch (kind) {
    case Kind::fixed:
        return to_int(floor_of(value), "m");
    case Kind::ratio:
        return to_int(floor_of(value * n), "m");
    case Kind::gamma:
        return to_int(floor_power(n, value), "m");
    }
    return 0;
}

auto MSpec::to_json() const -> json
{
    switch (kind) {
    case Kind::fixed:
        return {{"m", to_int(floor_of(value), "m")}};
    case Kind::ratio:
        return {{"ratio", rational_to_string(value)}};
    case Kind::gamma:
        return {{"gamma", rational_to_string(value)}};
    }
    return nullptr;
}

auto MSpec::parse(const std::string & text) -> MSpec
{
    MSpec out;
    std::string body = text;
    if (text.starts_with("ratio:")) {
        out.kind = Kind::ratio;
        body = text.substr(6);
    }
    else if (text.starts_with("gamma:")) {
        out.kind = Kind::gamma;
        body = text.substr(6);
    }
    try {
        out.value = parse_rational(body);
    }
    catch (const InputError &) {
        throw ConfigError("bad m-schedule entry '" + text + "'");
    }
    if (out.value < 0)
        throw ConfigError("m-schedule entries must be nonnegative");
    if (out.kind == Kind::fixed && out.value.get_den() != 1)
        throw ConfigError("a fixed m must be an integer");
    if (out.kind == Kind::gamma && (! out.value.get_num().fits_ulong_p() || ! out.value.get_den().fits_ulong_p() || out.value > 4))
        throw ConfigError("gamma must lie in [0, 4]");
    return out;
}

auto MSpec::from_json(const json & j) -> MSpec
{
    if (j.is_number_integer())
        return parse(std::to_string(j.get<long>()));
    if (j.is_string())
        return parse(j.get<std::string>());
    if (j.is_object() && j.size() == 1) {
        auto [key, value] = *j.items().begin();
        auto text = value.is_string() ? value.get<std::string>() : value.dump();
        if (key == "m")
            return parse(text);
        if (key == "ratio" || key == "gamma")
            return parse(key + ":" + text);
    }
    throw ConfigError("m-schedule entries are integers, \"ratio:a/b\", \"gamma:a/b\" or {\"m\"|\"ratio\"|\"gamma\": value}");
}

auto PipelineConfig::to_json() const -> json
{
    json schedule = json::array();
    for (auto & e : m_schedule)
        schedule.push_back(e.to_json());
    json j{{"predicate", predicate}, {"n", n}, {"m_schedule", schedule}, {"seeds", seeds}, {"radius", radius},
        {"epsilon", rational_to_string(epsilon)}, {"consistency_size", consistency_size}, {"conditional_samples", conditional_samples},
        {"conditional_max_x", conditional_max_x}, {"conditional_graph_families", conditional_graph_families}, {"run_uncertified", run_uncertified},
        {"allow_repeats", allow_repeats}, {"negative_control", negative_control == NegativeControl::corrupt ? "corrupt" : "none"},
        {"log2_budget", log2_budget}, {"enumeration_budget", enumeration_budget}, {"gbad_budget", gbad_budget},
        {"timings", timings}};
    j["t"] = t ? json(*t) : json("auto");
    j["e1"] = e1 ? json(rational_to_string(*e1)) : json("auto");
    j["e2"] = e2 ? json(rational_to_string(*e2)) : json("auto");
    j["s1"] = s1 ? json(*s1) : json("auto");
    return j;
}

auto PipelineConfig::from_json(const json & j) -> PipelineConfig
{
    if (! j.is_object())
        throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"predicate", "n", "m", "m_schedule", "seeds", "t", "radius", "epsilon", "e1", "e2", "s1",
        "consistency_size", "conditional_samples", "conditional_max_x", "conditional_graph_families", "run_uncertified", "allow_repeats",
        "negative_control", "log2_budget", "enumeration_budget", "gbad_budget", "timings", "report_path", "csv_path"};
    for (auto & [key, value] : j.items())
        if (! known.count(key))
            throw ConfigError("unknown config key '" + key + "'");
    PipelineConfig c;
    auto is_auto = [](const json & v) { return v.is_string() && v.get<std::string>() == "auto"; };
    try {
        if (j.contains("predicate"))
            c.predicate = j["predicate"];
        if (j.contains("n"))
            c.n = j["n"].get<int>();
        if (j.contains("m") && j.contains("m_schedule"))
            throw ConfigError("give either m or m_schedule");
        if (j.contains("m"))
            c.m_schedule = {MSpec::from_json(j["m"])};
        if (j.contains("m_schedule")) {
            c.m_schedule.clear();
            for (auto & e : j["m_schedule"])
                c.m_schedule.push_back(MSpec::from_json(e));
        }
        if (j.contains("seeds")) {
            auto & s = j["seeds"];
            c.seeds.clear();
            if (s.is_object()) {
                auto first = s.value("first", std::uint64_t{0});
                auto count = s.at("count").get<std::uint64_t>();
                for (std::uint64_t i = 0; i < count; ++i)
                    c.seeds.push_back(first + i);
            }
            else {
                c.seeds = s.get<std::vector<std::uint64_t>>();
            }
        }
        if (j.contains("t") && ! is_auto(j["t"]))
            c.t = j["t"].get<int>();
        if (j.contains("radius"))
            c.radius = j["radius"].get<int>();
        if (j.contains("epsilon"))
            c.epsilon = read_rational(j["epsilon"]);
        if (j.contains("e1") && ! is_auto(j["e1"]))
            c.e1 = read_rational(j["e1"]);
        if (j.contains("e2") && ! is_auto(j["e2"]))
            c.e2 = read_rational(j["e2"]);
        if (j.contains("s1") && ! is_auto(j["s1"]))
            c.s1 = j["s1"].get<int>();
        c.consistency_size = j.value("consistency_size", c.consistency_size);
        c.conditional_samples = j.value("conditional_samples", c.conditional_samples);
        c.conditional_max_x = j.value("conditional_max_x", c.conditional_max_x);
        c.conditional_graph_families = j.value("conditional_graph_families", c.conditional_graph_families);
        c.run_uncertified = j.value("run_uncertified", c.run_uncertified);
        c.allow_repeats = j.value("allow_repeats", c.allow_repeats);
        if (j.contains("negative_control")) {
            auto mode = j["negative_control"].get<std::string>();
            if (mode == "corrupt")
                c.negative_control = NegativeControl::corrupt;
            else if (mode != "none")
                throw ConfigError("negative_control is \"none\" or \"corrupt\"");
        }
        c.log2_budget = j.value("log2_budget", c.log2_budget);
        c.enumeration_budget = j.value("enumeration_budget", c.enumeration_budget);
        c.gbad_budget = j.value("gbad_budget", c.gbad_budget);
        c.timings = j.value("timings", c.timings);
        c.report_path = j.value("report_path", c.report_path);
        c.csv_path = j.value("csv_path", c.csv_path);
    }
    catch (const json::exception & e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    catch (const ConfigError &) {
        throw;
    }
    catch (const InputError & e) {
        throw ConfigError(e.what());
    }
    return c;
}

auto ResolvedParams::to_json() const -> json
{
    return {{"predicate", predicate.to_json()}, {"mu", mu.to_json(predicate)}, {"t", t}, {"e1", rational_to_string(e1)},
        {"e2", rational_to_string(e2)}, {"s1", s1}, {"s1_auto", s1_auto}};
}

auto resolve_params(const PipelineConfig & c) -> ResolvedParams
{
    std::optional<Predicate> p;
    try {
        p = Predicate::from_json(c.predicate);
    }
    catch (const InputError & e) {
        throw ConfigError(e.what());
    }
    if (c.n < 1 || c.n > kMaxMaskVertices)
        throw ConfigError("n must lie in [1, " + std::to_string(kMaxMaskVertices) + "]");
    if (c.seeds.empty())
        throw ConfigError("no seeds given");
    if (c.m_schedule.empty())
        throw ConfigError("empty m-schedule");
    if (c.radius < 2)
        throw ConfigError("radius must be at least 2");
    if (c.epsilon <= 0)
        throw ConfigError("epsilon must be positive");
    if (c.consistency_size < 1 || c.consistency_size > c.radius)
        throw ConfigError("consistency_size must lie in [1, radius]");
    if (c.conditional_samples < 0 || c.conditional_graph_families < 0)
        throw ConfigError("sample counts must be nonnegative");
    if (c.conditional_max_x < 1 || c.conditional_max_x >= c.radius)
        throw ConfigError("conditional_max_x must lie in [1, radius)");
    const int k = p->arity();
    auto complexity = cmplx(*p);
    int t = c.t.value_or(complexity.value);
    if (t < 2)
        throw ConfigError("t must be at least 2");
    auto mu = twise_support(*p, t - 1);
    if (! mu)
        throw ConfigError("no (t-1)-wise witness: t = " + std::to_string(t) + " exceeds cmplx(P) = " + std::to_string(complexity.value));
    Rational base = Rational{2 * k - t, 2};
    Rational e1 = c.e1.value_or(Rational{base + c.epsilon / 2});
    Rational e2 = c.e2.value_or(Rational{base + c.epsilon / 4});
    if (! (e2 > 0 && e2 < e1))
        throw ConfigError("closure parameters need 0 < e2 < e1");
    int s1 = 0;
    if (c.s1) {
        s1 = *c.s1;
        if (s1 < 1)
            throw ConfigError("s1 must be positive");
    }
    else {
        s1 = to_int(floor_of(Rational{c.radius / (e1 - e2)}), "s1") + 1;
    }
    return {std::move(*p), std::move(*mu), t, e1, e2, s1, ! c.s1};
}

auto outcome_name(Outcome o) -> const char *
{
    switch (o) {
    case Outcome::pass:
        return "pass";
    case Outcome::fail:
        return "fail";
    case Outcome::skipped:
        return "skipped";
    case Outcome::refused:
        return "refused";
    case Outcome::error:
        return "error";
    }
    return "?";
}

auto CheckOutcome::to_json(bool timings) const -> json
{
    json j{{"name", name}, {"status", outcome_name(status)}};
    if (! reason.empty())
        j["reason"] = reason;
    if (! detail.is_null())
        j["detail"] = detail;
    if (timings)
        j["seconds"] = seconds;
    return j;
}

auto SeedRecord::check(const std::string & name) const -> const CheckOutcome *
{
    for (auto & c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

auto SeedRecord::to_json(bool timings) const -> json
{
    json cs = json::array();
    for (auto & c : checks)
        cs.push_back(c.to_json(timings));
    json j{{"n", n}, {"m", m}, {"seed", seed}, {"certified", certified}, {"exploratory", exploratory}, {"status", outcome_name(status)},
        {"expansion", expansion}, {"checks", cs}};
    j["max_gbad_component"] = max_gbad_component ? json(*max_gbad_component) : json(nullptr);
    if (timings)
        j["runtime"] = runtime;
    return j;
}

auto PipelineReport::to_json() const -> json
{
    json records = json::array();
    int certified = 0, passed = 0, failed = 0, skipped = 0;
    for (auto & s : seeds) {
        records.push_back(s.to_json(config.timings));
        certified += s.certified;
        passed += s.status == Outcome::pass;
        failed += s.status == Outcome::fail || s.status == Outcome::error;
        skipped += s.status == Outcome::skipped;
    }
    json aggregate{{"seeds", seeds.size()}, {"certified", certified}, {"passed", passed}, {"failed", failed}, {"skipped", skipped}};
    aggregate["pass_rate_certified"] = certified ? json(static_cast<double>(passed) / certified) : json(nullptr);
    return {{"schema", "sosgap-report/1"}, {"config", config.to_json()}, {"params", params.to_json()}, {"seeds", records},
        {"aggregate", aggregate}, {"exit_code", exit_code}};
}

namespace {
    auto pair_list(const CorrelationGraph & g, const std::vector<std::pair<int, int>> & extra) -> std::vector<std::pair<int, int>>
    {
        std::vector<std::pair<int, int>> out = extra;
        for (auto & e : g.edges)
            out.emplace_back(e.u, e.v);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    auto graph_summary(const SimpleGraph & g) -> json
    {
        auto comps = connected_components(g);
        return {{"edges", g.edges}, {"max_component", comps.max_size}};
    }

    // Runs fn and maps budget refusals and library errors onto the outcome.
    template <typename Fn>
    auto attempt(std::vector<CheckOutcome> & out, const std::string & name, Fn && fn) -> CheckOutcome &
    {
        auto t0 = Clock::now();
        CheckOutcome c;
        try {
            c = fn();
        }
        catch (const BudgetError & e) {
            c.status = Outcome::refused;
            c.reason = e.what();
            c.detail = {{"required", e.required()}};
        }
        catch (const Error & e) {
            c.status = Outcome::error;
            c.reason = e.what();
        }
        c.name = name;
        c.seconds = seconds_since(t0);
        out.push_back(std::move(c));
        return out.back();
    }

    auto verdict(bool ok) -> Outcome { return ok ? Outcome::pass : Outcome::fail; }

    // Some completion of alpha on each constraint's scope has mu_C > 0.
    auto mu_compatible(const Instance & inst, const SupportDistribution & mu, const VertexSet & x, const std::vector<int> & alpha) -> bool
    {
        const int q = inst.predicate.alphabet();
        for (auto & c : inst.constraints) {
            auto vars = c.variables();
            if (set_intersection(vars, x).empty())
                continue;
            bool found = false;
            auto total = checked_power(q, static_cast<int>(vars.size()));
            for (std::uint64_t code = 0; code < total && ! found; ++code) {
                std::vector<int> values(vars.size());
                auto rest = code;
                bool agrees = true;
                for (std::size_t i = 0; i < vars.size(); ++i) {
                    values[i] = static_cast<int>(rest % static_cast<std::uint64_t>(q));
                    rest /= static_cast<std::uint64_t>(q);
                    auto at = std::lower_bound(x.begin(), x.end(), vars[i]);
                    if (at != x.end() && *at == vars[i] && alpha[static_cast<std::size_t>(at - x.begin())] != values[i])
                        agrees = false;
                }
                if (! agrees)
                    continue;
                std::vector<int> aligned;
                for (int v : c.scope)
                    aligned.push_back(values[static_cast<std::size_t>(std::lower_bound(vars.begin(), vars.end(), v) - vars.begin())]);
                found = mu_c(inst.predicate, mu, c, aligned) > 0;
            }
            if (! found)
                return false;
        }
        return true;
    }

    struct ConditionalSample {
        VertexSet x;
        std::vector<int> alpha;
        Rational mass;
    };

    auto draw_sample(CounterRng & rng, const LocalDistributionFamily & pi, const Instance & inst, const SupportDistribution & mu, int max_x)
        -> std::optional<ConditionalSample>
    {
        const int n = pi.n();
        for (int tries = 0; tries < 64; ++tries) {
            int size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(max_x, n))));
            std::vector<int> pool(static_cast<std::size_t>(n));
            std::iota(pool.begin(), pool.end(), 0);
            VertexSet x;
            for (int i = 0; i < size; ++i) {
                auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(n - i));
                std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
                x.push_back(pool[static_cast<std::size_t>(i)]);
            }
            x = make_set(std::move(x));
            auto d = pi.get(x);
            std::vector<std::size_t> candidates;
            double total = 0;
            for (std::size_t index = 0; index < d->size(); ++index)
                if (d->probs[index] > 0 && mu_compatible(inst, mu, x, d->assignment(index))) {
                    candidates.push_back(index);
                    total += d->probs[index].get_d();
                }
            if (candidates.empty())
                continue;
            double pick = rng.uniform01() * total;
            std::size_t chosen = candidates.back();
            for (auto index : candidates) {
                pick -= d->probs[index].get_d();
                if (pick < 0) {
                    chosen = index;
                    break;
                }
            }
            return ConditionalSample{x, d->assignment(chosen), d->probs[chosen]};
        }
        return std::nullopt;
    }

    struct Corruption {
        int constraint = -1;
        std::pair<int, int> pair{-1, -1};
    };

    auto corrupt(LocalDistributionFamily & pi, const Instance & inst, const CorrelationGraph & clean) -> Corruption
    {
        Corruption c;
        if (inst.m() == 0)
            throw InputError("negative control needs at least one constraint");
        auto scope = inst.constraints.front().variables();
        if (static_cast<int>(scope.size()) > pi.radius())
            throw InputError("negative control scope exceeds the radius");
        c.constraint = 0;
        pi.override_entry(LocalDistribution::uniform(scope, pi.q()));
        auto comps = connected_components(clean.graph());
        std::vector<int> comp_of(static_cast<std::size_t>(pi.n()));
        for (std::size_t i = 0; i < comps.parts.size(); ++i)
            for (int v : comps.parts[i])
                comp_of[static_cast<std::size_t>(v)] = static_cast<int>(i);
        for (int u = 0; u < pi.n() && c.pair.first < 0; ++u)
            for (int v = u + 1; v < pi.n(); ++v)
                if (! contains(scope, u) && ! contains(scope, v) && comp_of[static_cast<std::size_t>(u)] != comp_of[static_cast<std::size_t>(v)]) {
                    c.pair = {u, v};
                    break;
                }
        if (c.pair.first < 0)
            throw InputError("no cross-component pair available for the negative control");
        // {00: 3/4, 11: 1/4}
        auto d = LocalDistribution::uniform({c.pair.first, c.pair.second}, pi.q());
        std::fill(d.probs.begin(), d.probs.end(), Rational{0});
        d.probs[0] = Rational{3, 4};
        d.probs[d.index_of(std::vector<int>{1, 1})] = Rational{1, 4};
        pi.override_entry(d);
        return c;
    }

    auto expansion_certificate(const PipelineConfig & config, const ResolvedParams & params, const Hypergraph & h, SeedRecord & record)
        -> std::optional<ExpansionReport>
    {
        ExpansionOptions opts;
        opts.log2_budget = config.log2_budget;
        json ex;
        Rational margin = (params.e1 - params.e2) * params.s1;
        bool precondition = Rational{config.radius} < margin;
        ex["precondition"] = {{"radius", config.radius}, {"bound", rational_to_string(margin)}, {"holds", precondition}};
        std::optional<ExpansionReport> cert;
        try {
            cert = check_expansion(h, params.s1, params.e1, ExpansionMode::vertex, opts);
            ex["certificate"] = cert->to_json();
            if (! cert->holds)
                ex["witness_reverifies"] = witness_reverifies(h, *cert);
        }
        catch (const BudgetError & e) {
            ex["certificate"] = {{"status", "refused"}, {"reason", e.what()}};
        }
        const int m = h.constraint_count();
        try {
            ex["largest_expanding_size"] = largest_expanding_size(h, params.e1, ExpansionMode::vertex, std::min(params.s1, m), opts);
        }
        catch (const BudgetError &) {
            ex["largest_expanding_size"] = "refused";
        }
        if (params.t > 2) {
            // s = floor(n^(eps/(t-2)))
            Rational g = config.epsilon / (params.t - 2);
            int s = g > 4 ? m : std::min(to_int(floor_power(config.n, g), "s"), std::max(m, 1));
            try {
                auto r = check_expansion(h, std::max(s, 1), params.e1, ExpansionMode::vertex, opts);
                ex["expansion_scale"] = r.to_json();
            }
            catch (const BudgetError & e) {
                ex["expansion_scale"] = {{"status", "refused"}, {"reason", e.what()}};
            }
        }
        else {
            ex["expansion_scale"] = "not applicable for t <= 2";
        }
        record.certified = precondition && cert && cert->holds;
        if (! record.certified)
            ex["reason"] = ! precondition ? "radius is not below (e1-e2)s1" : ! cert ? "expansion check refused by budget" : "not (s1,e1)-vertex-expanding";
        ex["certified"] = record.certified;
        record.expansion = std::move(ex);
        return cert;
    }

    auto conditional_checks(const PipelineConfig & config, const ResolvedParams & params, const Instance & inst,
        const std::shared_ptr<LocalDistributionFamily> & pi, bool base_consistent, std::uint64_t seed, std::vector<CheckOutcome> & out) -> void
    {
        if (config.conditional_samples == 0)
            return;
        CounterRng rng{seed, 0xc0de};
        json samples = json::array();
        int moments_ok = 0, schur_ok = 0, decomposition_ok = 0, literal_ok = 0, consistency_ok = 0, consistency_checked = 0;
        int graph_checked = 0, graph_ok = 0, errors = 0;
        bool refused = false;
        std::string first_error;
        std::string graph_refusal;
        int drawn = 0;
        auto t0 = Clock::now();
        for (int i = 0; i < config.conditional_samples; ++i) {
            json s;
            try {
                auto sample = draw_sample(rng, *pi, inst, params.mu, config.conditional_max_x);
                if (! sample) {
                    s["error"] = "no positive, mu-compatible assignment found";
                    ++errors;
                    samples.push_back(s);
                    continue;
                }
                ++drawn;
                auto & [x, alpha, mass] = *sample;
                s["X"] = x;
                s["alpha"] = alpha;
                s["mass"] = rational_json(mass);
                auto moment = psd_exact(build_moment(*pi, x, alpha));
                s["moment_psd"] = moment.psd;
                if (! moment.psd)
                    s["moment_certificate"] = moment.to_json();
                moments_ok += moment.psd;
                auto schur = schur_equivalence_check(*pi, x, alpha);
                s["schur_agree"] = schur.agree;
                schur_ok += schur.agree;

                // T = X plus one fresh variable while M_{T,beta} stays within the radius
                VertexSet t = x;
                if (static_cast<int>(x.size()) + 3 <= config.radius && static_cast<int>(x.size()) < config.n)
                    while (t.size() == x.size()) {
                        int w = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n)));
                        if (! contains(t, w))
                            t = make_set(set_union(t, {w}));
                    }
                auto dec = psd_sum_decomposition_check(*pi, x, t, alpha);
                s["decomposition"] = {{"T", t}, {"literal", dec.literal_holds}, {"unnormalised", dec.unnormalised_holds}, {"normalised", dec.normalised_holds}};
                decomposition_ok += dec.unnormalised_holds && dec.normalised_holds;
                literal_ok += dec.literal_holds;

                auto cond = pi->condition(x, alpha);
                if (base_consistent) {
                    ++consistency_checked;
                    int size = std::min(config.consistency_size, config.radius - static_cast<int>(x.size()));
                    auto rep = verify_local_consistency(*cond, all_sets_up_to(config.n, size));
                    s["consistency"] = rep.to_json();
                    consistency_ok += rep.consistent;
                }
                if (i < config.conditional_graph_families) try {
                    auto corr = build_correlation_graph(*cond);
                    auto residual = pi->hypergraph().without(x);
                    GbadOptions gopts;
                    gopts.pair_bound = closure_pair_bound(*pi, x);
                    gopts.removed = x;
                    gopts.pairs = pair_list(corr, intrinsic_correlated_pairs(*cond));
                    gopts.enumeration.budget = config.enumeration_budget;
                    gopts.total_budget = config.gbad_budget;
                    auto gbad = build_gbad(residual, params.t, gopts);
                    auto rep = verify_corr_implies_bad(*cond, corr, gbad);
                    s["corr_bad"] = rep.to_json();
                    ++graph_checked;
                    graph_ok += rep.holds;
                }
                catch (const BudgetError & e) {
                    // only the G_bad search is refused; the moment checks above stand
                    s["corr_bad_refused"] = e.what();
                    if (graph_refusal.empty())
                        graph_refusal = e.what();
                }
            }
            catch (const BudgetError & e) {
                s["refused"] = e.what();
                refused = true;
                ++errors;
            }
            catch (const Error & e) {
                s["error"] = e.what();
                if (first_error.empty())
                    first_error = e.what();
                ++errors;
            }
            samples.push_back(std::move(s));
        }
        double elapsed = seconds_since(t0);
        auto emit = [&](const std::string & name, int ok, int checked, json extra = {}) {
            CheckOutcome c;
            c.name = name;
            c.status = errors ? (refused ? Outcome::refused : Outcome::error) : verdict(ok == checked);
            if (errors)
                c.reason = first_error.empty() ? "budget refusal in a sample" : first_error;
            c.detail = {{"checked", checked}, {"passed", ok}};
            for (auto & [k, v] : extra.items())
                c.detail[k] = v;
            c.seconds = elapsed;
            out.push_back(std::move(c));
        };
        emit("conditional_moments", moments_ok, drawn, {{"samples", samples}});
        emit("conditional_schur", schur_ok, drawn);
        emit("decomposition", decomposition_ok, drawn, {{"literal_passed", literal_ok}});
        if (base_consistent) {
            emit("conditional_consistency", consistency_ok, consistency_checked);
        }
        else {
            out.push_back({"conditional_consistency", Outcome::skipped, "base family not verified consistent", nullptr, 0});
        }
        if (! errors && ! graph_refusal.empty())
            out.push_back({"conditional_corr_bad", Outcome::refused, graph_refusal, {{"checked", graph_checked}, {"passed", graph_ok}}, elapsed});
        else
            emit("conditional_corr_bad", graph_ok, graph_checked);
    }
}

auto run_seed(const PipelineConfig & config, const ResolvedParams & params, int m, std::uint64_t seed) -> SeedRecord
{
    auto t0 = Clock::now();
    SeedRecord record;
    record.n = config.n;
    record.m = m;
    record.seed = seed;
    try {
        auto inst = std::make_shared<const Instance>(generate(params.predicate, config.n, m, seed, ModelFlags{config.allow_repeats}));
        auto h = hypergraph_of(*inst);
        auto cert = expansion_certificate(config, params, h, record);
        if (! record.certified && ! config.run_uncertified) {
            record.status = Outcome::skipped;
            for (auto name : {"consistency", "support", "block_psd", "schur", "corr_bad", "gbad", "density", "component_bound"})
                record.checks.push_back({name, Outcome::skipped, "hypothesis not certified", nullptr, 0});
            record.runtime = seconds_since(t0);
            return record;
        }
        record.exploratory = ! record.certified;
        auto & checks = record.checks;

        auto pi = LocalDistributionFamily::make_pi(inst, params.mu,
            ClosureParams{params.e1, params.e2, params.s1, record.certified, config.log2_budget}, config.radius);

        std::optional<CorrelationGraph> clean;
        if (config.negative_control == NegativeControl::corrupt) {
            attempt(checks, "negative_control", [&] {
                clean = build_correlation_graph(*pi);
                auto c = corrupt(*pi, *inst, *clean);
                return CheckOutcome{"", Outcome::pass, "", {{"constraint", c.constraint}, {"pair", {c.pair.first, c.pair.second}}}, 0};
            });
        }

        bool consistent = false;
        attempt(checks, "consistency", [&] {
            auto rep = verify_local_consistency(*pi, all_sets_up_to(config.n, config.consistency_size));
            consistent = rep.consistent;
            return CheckOutcome{"", verdict(rep.consistent), "", rep.to_json(), 0};
        });
        attempt(checks, "support", [&] {
            auto rep = verify_support(*pi, *inst);
            return CheckOutcome{"", verdict(rep.supported), "", rep.to_json(), 0};
        });

        std::optional<CorrelationGraph> corr;
        attempt(checks, "block_psd", [&] {
            corr = build_correlation_graph(*pi);
            auto & partition = clean ? *clean : *corr;
            auto rep = block_psd_verify(*pi, partition);
            json d = rep.to_json();
            d["correlation_graph"] = graph_summary(corr->graph());
            d["partition"] = clean ? "clean family correlation graph" : "correlation graph";
            std::string reason;
            if (rep.oversized_component)
                reason = "component larger than the locality radius";
            return CheckOutcome{"", verdict(rep.holds), reason, d, 0};
        });
        attempt(checks, "schur", [&] {
            auto rep = schur_equivalence_check(*pi, {}, {});
            return CheckOutcome{"", verdict(rep.agree), "", rep.to_json(), 0};
        });
        attempt(checks, "corr_bad", [&] {
            if (! corr)
                return CheckOutcome{"", Outcome::skipped, "no correlation graph", nullptr, 0};
            GbadOptions opts;
            opts.pair_bound = closure_pair_bound(*pi);
            opts.pairs = pair_list(*corr, intrinsic_correlated_pairs(*pi));
            opts.enumeration.budget = config.enumeration_budget;
            opts.total_budget = config.gbad_budget;
            auto gbad = build_gbad(h, params.t, opts);
            auto rep = verify_corr_implies_bad(*pi, *corr, gbad);
            return CheckOutcome{"", verdict(rep.holds), "", rep.to_json(), 0};
        });

        std::optional<GbadGraph> gbad;
        attempt(checks, "gbad", [&] {
            GbadOptions opts;
            opts.pair_bound = closure_pair_bound(*pi);
            opts.enumeration.budget = config.enumeration_budget;
            opts.total_budget = config.gbad_budget;
            gbad = build_gbad(h, params.t, opts);
            record.max_gbad_component = connected_components(gbad->graph()).max_size;
            return CheckOutcome{"", Outcome::pass, "", gbad->to_json(), 0};
        });
        attempt(checks, "density", [&] {
            if (! gbad)
                return CheckOutcome{"", Outcome::skipped, "G_bad unavailable", nullptr, 0};
            json v = json::array();
            for (auto & b : gbad->density_violations)
                v.push_back(b.to_json());
            return CheckOutcome{"", verdict(gbad->density_violations.empty()), "", {{"violations", v}}, 0};
        });
        attempt(checks, "component_bound", [&] {
            if (! gbad)
                return CheckOutcome{"", Outcome::skipped, "G_bad unavailable", nullptr, 0};
            if (! cert)
                return CheckOutcome{"", Outcome::skipped, "precondition not certified", nullptr, 0};
            auto rep = component_bound_check(h, *gbad, params.t, config.epsilon, *cert);
            Outcome o = rep.status == CheckStatus::pass ? Outcome::pass : rep.status == CheckStatus::fail ? Outcome::fail : Outcome::skipped;
            return CheckOutcome{"", o, rep.reason, rep.to_json(), 0};
        });

        conditional_checks(config, params, *inst, pi, consistent, seed, checks);

        if (record.exploratory) {
            record.status = Outcome::skipped;
        }
        else {
            record.status = Outcome::pass;
            for (auto & c : checks)
                if (c.status == Outcome::fail || c.status == Outcome::refused || c.status == Outcome::error)
                    record.status = Outcome::fail;
        }
    }
    catch (const Error & e) {
        record.status = Outcome::error;
        record.checks.push_back({"seed", Outcome::error, e.what(), nullptr, 0});
    }
    record.runtime = seconds_since(t0);
    return record;
}

auto worker_count() -> int
{
    if (const char * env = std::getenv("SOSGAP_WORKERS")) {
        char * end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 1024)
            return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {
    auto run_all(const PipelineConfig & config, const ResolvedParams & params) -> std::vector<SeedRecord>
    {
        std::vector<std::pair<int, std::uint64_t>> jobs;
        for (auto & spec : config.m_schedule) {
            int m = spec.resolve(config.n);
            for (auto seed : config.seeds)
                jobs.emplace_back(m, seed);
        }
        std::vector<SeedRecord> out(jobs.size());
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();)
                out[i] = run_seed(config, params, jobs[i].first, jobs[i].second);
        };
        int workers = std::min<int>(worker_count(), static_cast<int>(jobs.size()));
        std::vector<std::thread> pool;
        for (int w = 1; w < workers; ++w)
            pool.emplace_back(work);
        work();
        for (auto & th : pool)
            th.join();
        return out;
    }
}

auto run_pipeline(const PipelineConfig & config) -> PipelineReport
{
    PipelineReport report{config, resolve_params(config), {}, 0};
    report.seeds = run_all(config, report.params);
    for (auto & s : report.seeds)
        if (s.status == Outcome::fail || s.status == Outcome::error)
            report.exit_code = 1;
    return report;
}

auto sweep(const PipelineConfig & config) -> std::vector<SweepRow>
{
    auto params = resolve_params(config);
    std::vector<SweepRow> rows;
    for (auto & s : run_all(config, params))
        rows.push_back({s.n, s.m, s.seed, s.certified, s.status, s.max_gbad_component, s.runtime});
    return rows;
}

auto sweep_csv(const std::vector<SweepRow> & rows, bool timings) -> std::string
{
    std::ostringstream out;
    out << kSweepHeader << '\n';
    for (auto & r : rows) {
        out << r.n << ',' << r.m << ',' << r.seed << ',' << (r.expansion_pass ? "true" : "false") << ',' << outcome_name(r.pipeline) << ',';
        if (r.max_gbad_component)
            out << *r.max_gbad_component;
        out << ',';
        if (timings)
            out << std::fixed << std::setprecision(3) << r.runtime << std::defaultfloat;
        out << '\n';
    }
    return out.str();
}

auto report_predicate(const Predicate & p) -> json
{
    auto c = cmplx(p);
    json witnesses = json::object();
    for (int t = 1; t < c.value && t <= p.arity(); ++t)
        if (auto mu = twise_support(p, t))
            witnesses[std::to_string(t)] = mu->to_json(p);
    return {{"predicate", p.to_json()}, {"k", p.arity()}, {"q", p.alphabet()}, {"satisfying", p.satisfying_count()}, {"cmplx", c.value},
        {"trivial", c.trivial}, {"witnesses", witnesses}};
}

} // namespace sosgap
