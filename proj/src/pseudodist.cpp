#include <sosgap/pseudodist.hpp>

#include <algorithm>
#include <numeric>

using nlohmann::json;

namespace sosgap {

namespace {
    auto check_set(const VertexSet & s, int n) -> void
    {
        if (! is_sorted_set(s))
            throw InputError("vertex sets must be sorted and duplicate-free");
        if (! s.empty() && (s.front() < 0 || s.back() >= n))
            throw InputError("vertex outside [0,n)");
    }
}

auto LocalDistribution::uniform(VertexSet scope, int q) -> LocalDistribution
{
    auto size = checked_power(q, static_cast<int>(scope.size()));
    Rational p{1, static_cast<unsigned long>(size)};
    return LocalDistribution{std::move(scope), q, std::vector<Rational>(size, p)};
}

auto LocalDistribution::assignment(std::size_t index) const -> std::vector<int>
{
    std::vector<int> values(scope.size());
    for (auto & v : values) {
        v = static_cast<int>(index % static_cast<std::size_t>(q));
        index /= static_cast<std::size_t>(q);
    }
    return values;
}

auto LocalDistribution::index_of(std::span<const int> values) const -> std::size_t
{
    if (values.size() != scope.size())
        throw InputError("assignment length does not match the scope");
    std::size_t index = 0;
    for (std::size_t i = values.size(); i-- > 0;) {
        if (values[i] < 0 || values[i] >= q)
            throw InputError("assignment entry outside [0,q)");
        index = index * static_cast<std::size_t>(q) + static_cast<std::size_t>(values[i]);
    }
    return index;
}

auto LocalDistribution::prob(const VertexSet & vars, std::span<const int> values) const -> Rational
{
    if (vars.size() != values.size())
        throw InputError("variables and values differ in length");
    if (vars == scope)
        return probs[index_of(values)];
    auto m = marginal(vars);
    return m.probs[m.index_of(values)];
}

auto LocalDistribution::marginal(const VertexSet & onto) const -> LocalDistribution
{
    if (! is_subset(onto, scope))
        throw InputError("marginal target is not a subset of the scope");
    // digit weight in the target index for each scope position
    std::vector<std::size_t> weight(scope.size(), 0);
    std::size_t w = 1;
    for (std::size_t i = 0, j = 0; i < scope.size(); ++i)
        if (j < onto.size() && onto[j] == scope[i]) {
            weight[i] = w;
            w *= static_cast<std::size_t>(q);
            ++j;
        }
    LocalDistribution out{onto, q, std::vector<Rational>(checked_power(q, static_cast<int>(onto.size())))};
    std::vector<int> digits(scope.size(), 0);
    std::size_t target = 0;
    for (std::size_t index = 0; index < probs.size(); ++index) {
        out.probs[target] += probs[index];
        // increment the little-endian counter, tracking the target index
        for (std::size_t i = 0; i < digits.size(); ++i) {
            if (++digits[i] < q) {
                target += weight[i];
                break;
            }
            target -= weight[i] * static_cast<std::size_t>(q - 1);
            digits[i] = 0;
        }
    }
    return out;
}

auto LocalDistribution::is_distribution() const -> bool
{
    Rational total;
    for (auto & p : probs) {
        if (p < 0)
            return false;
        total += p;
    }
    return total == 1;
}

auto LocalDistribution::to_json() const -> json
{
    json table = json::array();
    for (std::size_t i = 0; i < probs.size(); ++i)
        table.push_back({{"alpha", assignment(i)}, {"p", rational_json(probs[i])}});
    return {{"scope", scope}, {"q", q}, {"probs", table}};
}

auto LocalDistribution::from_json(const json & j) -> LocalDistribution
{
    try {
        auto scope = j.at("scope").get<VertexSet>();
        if (! is_sorted_set(scope))
            throw InputError("distribution scope must be sorted and duplicate-free");
        LocalDistribution d{scope, j.at("q").get<int>(), {}};
        d.probs.assign(checked_power(d.q, static_cast<int>(scope.size())), Rational{});
        for (auto & e : j.at("probs")) {
            auto alpha = e.at("alpha").get<std::vector<int>>();
            d.probs[d.index_of(alpha)] = rational_from_json(e.at("p"));
        }
        return d;
    }
    catch (const json::exception & e) {
        throw InputError(std::string{"distribution JSON: "} + e.what());
    }
}

auto constraints_covered(const Instance & inst, const VertexSet & s) -> ConstraintSet
{
    ConstraintSet out;
    for (int j = 0; j < inst.m(); ++j)
        if (is_subset(inst.constraints[static_cast<std::size_t>(j)].variables(), s))
            out.push_back(j);
    return out;
}

auto mu_c(const Predicate & p, const SupportDistribution & mu, const Constraint & c, std::span<const int> alpha) -> Rational
{
    if (alpha.size() != c.scope.size())
        throw InputError("mu_C needs one value per scope position");
    std::vector<int> z(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i)
        z[i] = (alpha[i] + c.negation[i]) % p.alphabet();
    return mu.weights[p.index_of(z)];
}

namespace {
    // Enumerates [q]^V for the variables V that matter (those of `onto` and
    // of C(U)); the remaining variables of U only scale every weight by q.
    struct ProductSum {
        const Instance & inst;
        int q;
        std::vector<int> order;
        std::vector<std::size_t> onto_weight;
        // per constraint: positions (into order) per scope entry, and integer weights
        struct Factor {
            std::vector<int> positions;
            std::vector<int> negation;
            int last;
        };
        std::vector<Factor> factors;
        std::vector<std::vector<const Factor *>> completes_at;
        std::vector<BigInt> weight;
        BigInt denominator;
        std::vector<int> values;
        std::vector<BigInt> partial;
        std::vector<BigInt> acc;

        ProductSum(const Instance & in, const SupportDistribution & mu, const VertexSet & u, const VertexSet & onto) :
            inst(in), q(in.predicate.alphabet())
        {
            if (! is_sorted_set(u) || ! is_subset(onto, u))
                throw InputError("pi_prime needs sorted sets with onto inside U");
            auto covered = constraints_covered(inst, u);

            // greedy order: finish constraints as early as possible
            std::vector<char> placed(static_cast<std::size_t>(inst.n), 0);
            std::vector<int> pos(static_cast<std::size_t>(inst.n), -1);
            std::vector<char> done(covered.size(), 0);
            while (true) {
                int best = -1;
                int best_missing = 0;
                for (std::size_t c = 0; c < covered.size(); ++c) {
                    if (done[c])
                        continue;
                    int missing = 0;
                    for (int v : inst.constraints[static_cast<std::size_t>(covered[c])].variables())
                        missing += ! placed[static_cast<std::size_t>(v)];
                    if (best < 0 || missing < best_missing) {
                        best = static_cast<int>(c);
                        best_missing = missing;
                    }
                }
                if (best < 0)
                    break;
                done[static_cast<std::size_t>(best)] = 1;
                for (int v : inst.constraints[static_cast<std::size_t>(covered[static_cast<std::size_t>(best)])].variables())
                    if (! placed[static_cast<std::size_t>(v)]) {
                        placed[static_cast<std::size_t>(v)] = 1;
                        pos[static_cast<std::size_t>(v)] = static_cast<int>(order.size());
                        order.push_back(v);
                    }
            }
            for (int v : onto)
                if (! placed[static_cast<std::size_t>(v)]) {
                    placed[static_cast<std::size_t>(v)] = 1;
                    pos[static_cast<std::size_t>(v)] = static_cast<int>(order.size());
                    order.push_back(v);
                }

            onto_weight.assign(order.size(), 0);
            std::size_t w = 1;
            for (int v : onto) {
                onto_weight[static_cast<std::size_t>(pos[static_cast<std::size_t>(v)])] = w;
                w *= static_cast<std::size_t>(q);
            }
            acc.assign(w, BigInt{0});

            denominator = 1;
            for (auto & x : mu.weights)
                mpz_lcm(denominator.get_mpz_t(), denominator.get_mpz_t(), x.get_den().get_mpz_t());
            for (auto & x : mu.weights)
                weight.push_back(BigInt{x.get_num() * (denominator / x.get_den())});

            factors.reserve(covered.size());
            completes_at.resize(order.size());
            for (int j : covered) {
                auto & c = inst.constraints[static_cast<std::size_t>(j)];
                Factor f{{}, c.negation, 0};
                for (int v : c.scope) {
                    f.positions.push_back(pos[static_cast<std::size_t>(v)]);
                    f.last = std::max(f.last, pos[static_cast<std::size_t>(v)]);
                }
                factors.push_back(std::move(f));
            }
            for (auto & f : factors)
                completes_at[static_cast<std::size_t>(f.last)].push_back(&f);
            values.assign(order.size(), 0);
            partial.assign(order.size() + 1, BigInt{1});
        }

        auto factor_weight(const Factor & f) const -> const BigInt &
        {
            std::size_t index = 0;
            for (std::size_t i = 0; i < f.positions.size(); ++i)
                index = index * static_cast<std::size_t>(q) + static_cast<std::size_t>((values[static_cast<std::size_t>(f.positions[i])] + f.negation[i]) % q);
            return weight[index];
        }

        auto run(std::size_t depth, std::size_t target) -> void
        {
            if (depth == order.size()) {
                acc[target] += partial[depth];
                return;
            }
            for (int a = 0; a < q; ++a) {
                values[depth] = a;
                auto & prod = partial[depth + 1];
                prod = partial[depth];
                for (auto * f : completes_at[depth]) {
                    auto & wt = factor_weight(*f);
                    if (wt == 0) {
                        prod = 0;
                        break;
                    }
                    prod *= wt;
                }
                if (prod != 0)
                    run(depth + 1, target + onto_weight[depth] * static_cast<std::size_t>(a));
            }
        }

        auto total() const -> BigInt
        {
            BigInt z = 0;
            for (auto & x : acc)
                z += x;
            return z;
        }
    };
}

auto pi_prime(const Instance & inst, const SupportDistribution & mu, const VertexSet & u, const VertexSet & onto) -> LocalDistribution
{
    ProductSum ps{inst, mu, u, onto};
    ps.run(0, 0);
    BigInt z = ps.total();
    if (z == 0)
        throw LocalContradiction("Z = 0 on a set of " + std::to_string(u.size()) + " variables covering " + std::to_string(ps.factors.size()) + " constraints");
    LocalDistribution out{onto, inst.predicate.alphabet(), {}};
    out.probs.reserve(ps.acc.size());
    for (auto & x : ps.acc) {
        Rational r{x, z};
        r.canonicalize();
        out.probs.push_back(std::move(r));
    }
    return out;
}

auto pi_prime(const Instance & inst, const SupportDistribution & mu, const VertexSet & u) -> LocalDistribution
{
    return pi_prime(inst, mu, u, u);
}

auto partition_value(const Instance & inst, const SupportDistribution & mu, const VertexSet & u) -> Rational
{
    ProductSum ps{inst, mu, u, {}};
    ps.run(0, 0);
    BigInt scale = 1;
    for (std::size_t i = 0; i < ps.factors.size(); ++i)
        scale *= ps.denominator;
    BigInt free_factor;
    mpz_ui_pow_ui(free_factor.get_mpz_t(), static_cast<unsigned long>(ps.q), static_cast<unsigned long>(u.size() - ps.order.size()));
    Rational z{ps.total() * free_factor, scale};
    z.canonicalize();
    return z;
}

auto LocalDistributionFamily::make_pi(std::shared_ptr<const Instance> inst, SupportDistribution mu, ClosureParams params, int radius)
    -> std::shared_ptr<LocalDistributionFamily>
{
    if (! inst)
        throw InputError("null instance");
    if (mu.weights.size() != inst->predicate.table_size())
        throw InputError("support distribution does not match the predicate");
    auto f = std::shared_ptr<LocalDistributionFamily>(new LocalDistributionFamily);
    f->_kind = Kind::pi;
    f->_n = inst->n;
    f->_q = inst->predicate.alphabet();
    f->_radius = radius;
    f->_hypergraph = hypergraph_of(*inst);
    f->_inst = std::move(inst);
    f->_mu = std::move(mu);
    f->_params = std::move(params);
    return f;
}

auto LocalDistributionFamily::make_tables(int n, int q, std::vector<LocalDistribution> tables, int radius) -> std::shared_ptr<LocalDistributionFamily>
{
    auto f = std::shared_ptr<LocalDistributionFamily>(new LocalDistributionFamily);
    f->_kind = Kind::tables;
    f->_n = n;
    f->_q = q;
    f->_radius = radius;
    for (auto & t : tables) {
        check_set(t.scope, n);
        if (t.q != q || t.probs.size() != checked_power(q, static_cast<int>(t.scope.size())))
            throw InputError("table does not match the alphabet");
        auto key = t.scope;
        f->_tables.insert_or_assign(std::move(key), std::move(t));
    }
    return f;
}

auto LocalDistributionFamily::condition(const VertexSet & x, std::vector<int> alpha) const -> std::shared_ptr<LocalDistributionFamily>
{
    check_set(x, _n);
    if (alpha.size() != x.size())
        throw InputError("conditioning assignment does not match X");
    auto mass = get(x)->prob(x, alpha);
    if (mass == 0)
        throw UndefinedValue("cannot condition on an event of probability zero");
    auto f = std::shared_ptr<LocalDistributionFamily>(new LocalDistributionFamily);
    f->_kind = Kind::conditional;
    f->_n = _n;
    f->_q = _q;
    f->_radius = _radius - static_cast<int>(x.size());
    f->_base = shared_from_this();
    f->_x = x;
    f->_alpha = std::move(alpha);
    f->_mass = mass;
    return f;
}

auto LocalDistributionFamily::closure_of(const VertexSet & s) const -> std::shared_ptr<const ClosureResult>
{
    if (_kind != Kind::pi)
        throw InputError("closures exist only for pi families");
    {
        std::lock_guard guard{_lock};
        if (auto it = _closures.find(s); it != _closures.end())
            return it->second;
    }
    ClosureOptions opts;
    opts.enforce_size_precondition = _params.enforce_size_precondition;
    opts.check_postconditions = false;
    opts.log2_budget = _params.log2_budget;
    auto result = std::make_shared<const ClosureResult>(closure(_hypergraph, s, _params.e1, _params.e2, _params.s1, opts));
    std::lock_guard guard{_lock};
    return _closures.try_emplace(s, std::move(result)).first->second;
}

auto LocalDistributionFamily::compute(const VertexSet & s) const -> LocalDistribution
{
    switch (_kind) {
    case Kind::pi: {
        auto cl = closure_of(s);
        return pi_prime(*_inst, _mu, cl->closure, s);
    }
    case Kind::conditional: {
        auto u = set_union(s, _x);
        auto joint = _base->get(u);
        LocalDistribution out{s, _q, std::vector<Rational>(checked_power(_q, static_cast<int>(s.size())))};
        for (std::size_t index = 0; index < joint->size(); ++index) {
            if (joint->probs[index] == 0)
                continue;
            auto values = joint->assignment(index);
            bool match = true;
            std::vector<int> beta;
            for (std::size_t i = 0, xi = 0; i < u.size(); ++i) {
                if (xi < _x.size() && _x[xi] == u[i]) {
                    match = match && values[i] == _alpha[xi];
                    ++xi;
                }
                if (contains(s, u[i]))
                    beta.push_back(values[i]);
            }
            if (match)
                out.probs[out.index_of(beta)] += joint->probs[index] / _mass;
        }
        return out;
    }
    case Kind::tables: {
        if (auto it = _tables.find(s); it != _tables.end())
            return it->second;
        for (auto & [key, table] : _tables)
            if (is_subset(s, key))
                return table.marginal(s);
        throw LocalityError("no stored table covers the requested set");
    }
    }
    throw InvariantError("unknown family kind");
}

auto LocalDistributionFamily::get(const VertexSet & s) const -> std::shared_ptr<const LocalDistribution>
{
    check_set(s, _n);
    if (static_cast<int>(s.size()) > _radius)
        throw LocalityError("set of size " + std::to_string(s.size()) + " exceeds the locality radius " + std::to_string(_radius));
    if (auto it = _overrides.find(s); it != _overrides.end())
        return it->second;
    {
        std::lock_guard guard{_lock};
        if (auto it = _cache.find(s); it != _cache.end())
            return it->second;
    }
    auto d = std::make_shared<const LocalDistribution>(compute(s));
    std::lock_guard guard{_lock};
    return _cache.try_emplace(s, std::move(d)).first->second;
}

auto LocalDistributionFamily::prob(const VertexSet & vars, std::span<const int> values) const -> Rational
{
    return get(vars)->prob(vars, values);
}

auto LocalDistributionFamily::override_entry(const LocalDistribution & d) -> void
{
    check_set(d.scope, _n);
    _overrides.insert_or_assign(d.scope, std::make_shared<const LocalDistribution>(d));
}

auto LocalDistributionFamily::dump(const std::vector<VertexSet> & sets) const -> json
{
    json out = json::array();
    for (auto & s : sets)
        out.push_back(get(s)->to_json());
    return out;
}

auto ConsistencyViolation::to_json() const -> json
{
    return {{"T", t}, {"S", s}, {"alpha", alpha}, {"D_T", rational_json(direct)}, {"marginal_of_D_S", rational_json(marginal)}};
}

auto ConsistencyReport::to_json() const -> json
{
    json j{{"consistent", consistent}, {"pairs_checked", pairs_checked}};
    j["violation"] = violation ? violation->to_json() : json(nullptr);
    return j;
}

auto verify_local_consistency(const LocalDistributionFamily & f, const std::vector<VertexSet> & sets) -> ConsistencyReport
{
    ConsistencyReport report;
    for (auto & s : sets) {
        auto ds = f.get(s);
        const auto size = s.size();
        if (size > 20)
            throw InputError("consistency check supports sets of at most 20 variables");
        for (std::uint32_t mask = 1; mask + 1 < (1u << size); ++mask) {
            VertexSet t;
            for (std::size_t i = 0; i < size; ++i)
                if (mask & (1u << i))
                    t.push_back(s[i]);
            auto dt = f.get(t);
            auto m = ds->marginal(t);
            ++report.pairs_checked;
            for (std::size_t index = 0; index < m.size(); ++index)
                if (m.probs[index] != dt->probs[index]) {
                    report.consistent = false;
                    report.violation = ConsistencyViolation{t, s, m.assignment(index), dt->probs[index], m.probs[index]};
                    return report;
                }
        }
    }
    return report;
}

auto SupportViolation::to_json() const -> json
{
    return {{"constraint", constraint}, {"scope", scope}, {"alpha", alpha}, {"probability", rational_json(probability)}};
}

auto SupportReport::to_json() const -> json
{
    json j{{"supported", supported}, {"constraints_checked", constraints_checked}};
    j["violation"] = violation ? violation->to_json() : json(nullptr);
    return j;
}

auto verify_support(const LocalDistributionFamily & f, const Instance & inst) -> SupportReport
{
    SupportReport report;
    const int q = inst.predicate.alphabet();
    for (int j = 0; j < inst.m(); ++j) {
        auto & c = inst.constraints[static_cast<std::size_t>(j)];
        auto vars = c.variables();
        auto d = f.get(vars);
        ++report.constraints_checked;
        for (std::size_t index = 0; index < d->size(); ++index) {
            if (d->probs[index] == 0)
                continue;
            auto values = d->assignment(index);
            std::vector<int> z;
            for (std::size_t i = 0; i < c.scope.size(); ++i) {
                auto at = std::lower_bound(vars.begin(), vars.end(), c.scope[i]) - vars.begin();
                z.push_back((values[static_cast<std::size_t>(at)] + c.negation[i]) % q);
            }
            if (! inst.predicate.eval(z)) {
                report.supported = false;
                report.violation = SupportViolation{j, vars, values, d->probs[index]};
                return report;
            }
        }
    }
    return report;
}

auto all_sets_up_to(int n, int r) -> std::vector<VertexSet>
{
    std::vector<VertexSet> out;
    VertexSet cur;
    auto rec = [&](auto && self, int from) -> void {
        for (int v = from; v < n; ++v) {
            cur.push_back(v);
            out.push_back(cur);
            if (static_cast<int>(cur.size()) < r)
                self(self, v + 1);
            cur.pop_back();
        }
    };
    if (r > 0)
        rec(rec, 0);
    return out;
}

auto ProportionalityReport::to_json() const -> json
{
    json j{{"hypothesis", hypothesis}, {"holds", holds}, {"B", removed}};
    j["ratio"] = ratio ? rational_json(*ratio) : json(nullptr);
    return j;
}

auto check_removal_proportionality(const Instance & inst, const SupportDistribution & mu, int t, const VertexSet & s, const VertexSet & tset,
    int cstar) -> ProportionalityReport
{
    if (! is_subset(tset, s))
        throw InputError("T must be a subset of S");
    auto covered = constraints_covered(inst, s);
    if (! contains(covered, cstar))
        throw InputError("C* must be covered by S");
    std::map<int, int> count;
    for (int j : covered)
        for (int v : inst.constraints[static_cast<std::size_t>(j)].variables())
            ++count[v];
    ProportionalityReport report;
    for (int v : inst.constraints[static_cast<std::size_t>(cstar)].variables())
        if (count[v] == 1)
            report.removed.push_back(v);
    const auto & b = report.removed;
    report.hypothesis = static_cast<int>(set_difference(b, tset).size()) >= inst.predicate.arity() - t + 1;

    auto lhs = pi_prime(inst, mu, s, tset);
    auto rest = set_difference(tset, b);
    auto rhs = pi_prime(inst, mu, set_difference(s, b), rest);
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), static_cast<unsigned long>(inst.predicate.alphabet()), set_intersection(b, tset).size());
    Rational factor{BigInt{1}, scale};

    report.holds = true;
    for (std::size_t index = 0; index < lhs.size(); ++index) {
        auto values = lhs.assignment(index);
        std::vector<int> reduced;
        for (std::size_t i = 0; i < tset.size(); ++i)
            if (! contains(b, tset[i]))
                reduced.push_back(values[i]);
        auto & r = rhs.probs[rhs.index_of(reduced)];
        if (! report.ratio && r != 0)
            report.ratio = lhs.probs[index] / r;
        if (lhs.probs[index] != factor * r)
            report.holds = false;
    }
    return report;
}

} // namespace sosgap
