#include <sosgap/instance.hpp>
#include <sosgap/rng.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

using nlohmann::json;

namespace sosgap {

auto Instance::validate() const -> void
{
    const int k = predicate.arity();
    const int q = predicate.alphabet();
    if (n < 0)
        throw InputError("n must be nonnegative");
    for (std::size_t j = 0; j < constraints.size(); ++j) {
        auto & c = constraints[j];
        if (static_cast<int>(c.negation.size()) != k || static_cast<int>(c.scope.size()) != k)
            throw InputError("constraint " + std::to_string(j) + " does not have arity " + std::to_string(k));
        for (int a : c.negation)
            if (a < 0 || a >= q)
                throw InputError("constraint " + std::to_string(j) + " has a negation entry outside [0,q)");
        for (int v : c.scope)
            if (v < 0 || v >= n)
                throw InputError("constraint " + std::to_string(j) + " has a scope entry outside [0,n)");
        if (! flags.allow_repeats && static_cast<int>(make_set(c.scope).size()) != k)
            throw InputError("constraint " + std::to_string(j) + " repeats a variable but allow_repeats is off");
    }
}

auto Instance::to_json() const -> json
{
    json j;
    j["predicate"] = predicate.to_json();
    j["n"] = n;
    j["seed"] = seed;
    j["flags"] = {{"allow_repeats", flags.allow_repeats}};
    j["constraints"] = json::array();
    for (auto & c : constraints)
        j["constraints"].push_back({{"c", c.negation}, {"S", c.scope}});
    return j;
}

auto Instance::from_json(const json & j) -> Instance
{
    try {
        Instance inst{Predicate::from_json(j.at("predicate")), j.at("n").get<int>(), {}, j.value("seed", std::uint64_t{0}), {}};
        if (j.contains("flags"))
            inst.flags.allow_repeats = j.at("flags").value("allow_repeats", false);
        for (auto & c : j.at("constraints"))
            inst.constraints.push_back(Constraint{c.at("c").get<std::vector<int>>(), c.at("S").get<std::vector<int>>()});
        inst.validate();
        return inst;
    }
    catch (const json::exception & e) {
        throw InputError(std::string{"instance JSON: "} + e.what());
    }
}

auto generate(const Predicate & p, int n, int m, std::uint64_t seed, ModelFlags flags) -> Instance
{
    const int k = p.arity();
    const int q = p.alphabet();
    if (m < 0)
        throw InputError("m must be nonnegative");
    if (! flags.allow_repeats && n < k)
        throw InputError("n = " + std::to_string(n) + " < k = " + std::to_string(k) + " leaves no distinct-variable scope");
    if (n < 1 && m > 0)
        throw InputError("cannot draw constraints over zero variables");

    Instance inst{p, n, {}, seed, flags};
    inst.constraints.reserve(static_cast<std::size_t>(m));
    CounterRng root{seed};
    for (int j = 0; j < m; ++j) {
        // one stream per constraint index keeps constraint j independent of m
        auto rng = root.split(static_cast<std::uint64_t>(j));
        Constraint c;
        for (int i = 0; i < k; ++i)
            c.negation.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(q))));
        while (static_cast<int>(c.scope.size()) < k) {
            int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            if (! flags.allow_repeats && std::find(c.scope.begin(), c.scope.end(), v) != c.scope.end())
                continue;
            c.scope.push_back(v);
        }
        inst.constraints.push_back(std::move(c));
    }
    return inst;
}

auto satisfies(const Instance & inst, const Constraint & c, std::span<const int> x) -> bool
{
    const int q = inst.predicate.alphabet();
    std::size_t index = 0;
    for (std::size_t i = 0; i < c.scope.size(); ++i) {
        int z = (x[static_cast<std::size_t>(c.scope[i])] + c.negation[i]) % q;
        index = index * static_cast<std::size_t>(q) + static_cast<std::size_t>(z);
    }
    return inst.predicate.at(index);
}

auto val(const Instance & inst, std::span<const int> x) -> Rational
{
    if (inst.constraints.empty())
        throw UndefinedValue("Val is undefined for an instance with no constraints");
    if (static_cast<int>(x.size()) != inst.n)
        throw InputError("assignment length does not match n");
    for (int v : x)
        if (v < 0 || v >= inst.predicate.alphabet())
            throw InputError("assignment entry outside [0,q)");
    long satisfied = 0;
    for (auto & c : inst.constraints)
        if (satisfies(inst, c, x))
            ++satisfied;
    Rational r{satisfied, static_cast<long>(inst.constraints.size())};
    r.canonicalize();
    return r;
}

auto opt_bruteforce(const Instance & inst, double log2_budget) -> OptResult
{
    if (inst.constraints.empty())
        throw UndefinedValue("Opt is undefined for an instance with no constraints");
    const int q = inst.predicate.alphabet();
    double needed = inst.n * std::log2(static_cast<double>(q));
    if (needed > log2_budget + 1e-9)
        throw BudgetError("brute force over q^n = 2^" + std::to_string(needed) + " assignments exceeds the budget 2^" + std::to_string(log2_budget), needed);

    std::vector<int> x(static_cast<std::size_t>(inst.n), 0);
    long best = -1;
    std::vector<int> witness;
    while (true) {
        long satisfied = 0;
        for (auto & c : inst.constraints)
            if (satisfies(inst, c, x))
                ++satisfied;
        if (satisfied > best) {
            best = satisfied;
            witness = x;
            if (best == inst.m())
                break;
        }
        // odometer, last variable fastest
        int i = inst.n - 1;
        while (i >= 0 && x[static_cast<std::size_t>(i)] == q - 1) {
            x[static_cast<std::size_t>(i)] = 0;
            --i;
        }
        if (i < 0)
            break;
        ++x[static_cast<std::size_t>(i)];
    }
    Rational value{best, static_cast<long>(inst.m())};
    value.canonicalize();
    return OptResult{value, witness};
}

auto Hypergraph::from_scopes(int n, int k, std::vector<VertexSet> scopes) -> Hypergraph
{
    Hypergraph h;
    h.n = n;
    h.k = k;
    for (auto & s : scopes) {
        s = make_set(std::move(s));
        for (int v : s)
            if (v < 0 || v >= n)
                throw InputError("hyperedge vertex " + std::to_string(v) + " outside [0,n)");
    }
    h.scopes = std::move(scopes);
    h.active.assign(h.scopes.size(), true);
    std::map<VertexSet, int> seen;
    for (int j = 0; j < h.constraint_count(); ++j) {
        auto [it, fresh] = seen.try_emplace(h.scopes[static_cast<std::size_t>(j)], static_cast<int>(h.edges.size()));
        if (fresh) {
            h.edges.push_back(h.scopes[static_cast<std::size_t>(j)]);
            h.edge_constraints.emplace_back();
        }
        h.edge_constraints[static_cast<std::size_t>(it->second)].push_back(j);
    }
    return h;
}

auto Hypergraph::active_constraints() const -> ConstraintSet
{
    ConstraintSet out;
    for (int j = 0; j < constraint_count(); ++j)
        if (active[static_cast<std::size_t>(j)])
            out.push_back(j);
    return out;
}

auto Hypergraph::without(const VertexSet & x) const -> Hypergraph
{
    Hypergraph h;
    h.n = n;
    h.k = k;
    h.scopes.resize(scopes.size());
    h.active.assign(scopes.size(), false);
    std::map<VertexSet, int> seen;
    for (int j = 0; j < constraint_count(); ++j) {
        auto idx = static_cast<std::size_t>(j);
        if (! active[idx] || is_subset(scopes[idx], x))
            continue;
        h.scopes[idx] = set_difference(scopes[idx], x);
        h.active[idx] = true;
        auto [it, fresh] = seen.try_emplace(h.scopes[idx], static_cast<int>(h.edges.size()));
        if (fresh) {
            h.edges.push_back(h.scopes[idx]);
            h.edge_constraints.emplace_back();
        }
        h.edge_constraints[static_cast<std::size_t>(it->second)].push_back(j);
    }
    return h;
}

auto Hypergraph::to_json() const -> json
{
    json j;
    j["n"] = n;
    j["k"] = k;
    j["edges"] = json::array();
    for (std::size_t e = 0; e < edges.size(); ++e)
        j["edges"].push_back({{"vertices", edges[e]}, {"constraints", edge_constraints[e]}});
    return j;
}

auto hypergraph_of(const Instance & inst) -> Hypergraph
{
    std::vector<VertexSet> scopes;
    scopes.reserve(inst.constraints.size());
    for (auto & c : inst.constraints)
        scopes.push_back(c.variables());
    return Hypergraph::from_scopes(inst.n, inst.predicate.arity(), std::move(scopes));
}

auto parse_encoding_form(const std::string & s) -> EncodingForm
{
    if (s == "degk")
        return EncodingForm::degk;
    if (s == "linear")
        return EncodingForm::linear;
    if (s == "boolean01")
        return EncodingForm::boolean01;
    throw InputError("unknown encoding form '" + s + "'");
}

auto encoding_form_name(EncodingForm f) -> std::string
{
    switch (f) {
    case EncodingForm::degk: return "degk";
    case EncodingForm::linear: return "linear";
    case EncodingForm::boolean01: return "boolean01";
    }
    return "?";
}

namespace {
    // Product of two monomials under x^2 = x and x_{i,a} x_{i,b} = 0 for a != b.
    auto multiply(const Monomial & a, const Monomial & b) -> std::optional<Monomial>
    {
        Monomial out;
        std::size_t i = 0, j = 0;
        while (i < a.size() || j < b.size()) {
            if (j == b.size() || (i < a.size() && a[i] < b[j]))
                out.push_back(a[i++]);
            else if (i == a.size() || b[j] < a[i])
                out.push_back(b[j++]);
            else {
                out.push_back(a[i]);
                ++i;
                ++j;
            }
        }
        for (std::size_t p = 1; p < out.size(); ++p)
            if (out[p].var == out[p - 1].var && out[p].value >= 0)
                return std::nullopt;
        return out;
    }

    auto multiply(const Polynomial & a, const Polynomial & b) -> Polynomial
    {
        Polynomial out;
        for (auto & [ma, ca] : a)
            for (auto & [mb, cb] : b)
                if (auto mono = multiply(ma, mb)) {
                    auto & slot = out[*mono];
                    slot += ca * cb;
                }
        std::erase_if(out, [](auto & kv) { return kv.second == 0; });
        return out;
    }

    auto add_constant(Polynomial & p, const Rational & c) -> void
    {
        p[Monomial{}] += c;
        if (p[Monomial{}] == 0)
            p.erase(Monomial{});
    }

    auto monomial_json(const Monomial & m) -> json
    {
        json vars = json::array();
        for (auto & v : m)
            if (v.value < 0)
                vars.push_back(v.var);
            else
                vars.push_back(json::array({v.var, v.value}));
        return vars;
    }

    auto polynomial_json(const Polynomial & p) -> json
    {
        json terms = json::array();
        for (auto & [m, c] : p)
            terms.push_back({{"vars", monomial_json(m)}, {"coef", rational_to_string(c)}});
        return terms;
    }
}

auto EncodedSystem::to_json() const -> json
{
    json j;
    j["form"] = encoding_form_name(form);
    if (! equations.empty() || form != EncodingForm::linear) {
        j["equations"] = json::array();
        for (auto & [c, p] : equations)
            j["equations"].push_back({{"constraint", c}, {"terms", polynomial_json(p)}, {"relation", "= 0"}});
    }
    if (form == EncodingForm::linear) {
        j["inequalities"] = json::array();
        for (auto & ineq : inequalities) {
            json coeffs = json::array();
            for (auto & [v, c] : ineq.coeffs)
                coeffs.push_back({{"var", v}, {"coef", rational_to_string(c)}});
            j["inequalities"].push_back({{"constraint", ineq.constraint},
                {"falsifying", ineq.falsifying},
                {"coeffs", coeffs},
                {"constant", rational_to_string(ineq.constant)},
                {"rhs", rational_to_string(ineq.rhs)}});
        }
    }
    if (! side_conditions.empty()) {
        j["side_conditions"] = json::array();
        for (auto & [v, p] : side_conditions)
            j["side_conditions"].push_back({{"variable", v}, {"terms", polynomial_json(p)}, {"relation", "= 0"}});
    }
    return j;
}

auto encode(const Instance & inst, EncodingForm form) -> EncodedSystem
{
    const auto & pred = inst.predicate;
    const int k = pred.arity();
    const int q = pred.alphabet();
    EncodedSystem out{form, {}, {}, {}};

    if (form == EncodingForm::linear) {
        if (q != 2)
            throw UnsupportedForm("the linear clause encoding needs a binary alphabet");
        for (int j = 0; j < inst.m(); ++j) {
            auto & c = inst.constraints[static_cast<std::size_t>(j)];
            for (std::size_t f = 0; f < pred.table_size(); ++f) {
                if (pred.at(f))
                    continue;
                auto fz = pred.point(f);
                LinearInequality ineq{j, fz, {}, 0, 1};
                for (int i = 0; i < k; ++i) {
                    auto ii = static_cast<std::size_t>(i);
                    int var = c.scope[ii];
                    // x^(0) = x, x^(1) = 1 - x
                    if ((c.negation[ii] ^ fz[ii]) == 0)
                        ineq.coeffs[var] += 1;
                    else {
                        ineq.constant += 1;
                        ineq.coeffs[var] -= 1;
                    }
                }
                std::erase_if(ineq.coeffs, [](auto & kv) { return kv.second == 0; });
                out.inequalities.push_back(std::move(ineq));
            }
        }
        return out;
    }

    const bool binary_vars = form == EncodingForm::degk && q == 2;
    for (int j = 0; j < inst.m(); ++j) {
        auto & c = inst.constraints[static_cast<std::size_t>(j)];
        Polynomial poly;
        for (std::size_t a = 0; a < pred.table_size(); ++a) {
            if (! pred.at(a))
                continue;
            auto alpha = pred.point(a);
            Polynomial term{{Monomial{}, Rational{1}}};
            for (int i = 0; i < k; ++i) {
                auto ii = static_cast<std::size_t>(i);
                int var = c.scope[ii];
                Polynomial factor;
                if (binary_vars) {
                    // literal equals 1 exactly when x_var + c_i = alpha_i
                    if ((alpha[ii] ^ c.negation[ii]) == 1)
                        factor[Monomial{EncVar{var}}] = 1;
                    else {
                        factor[Monomial{}] = 1;
                        factor[Monomial{EncVar{var}}] = -1;
                    }
                }
                else {
                    int value = ((alpha[ii] - c.negation[ii]) % q + q) % q;
                    factor[Monomial{EncVar{var, value}}] = 1;
                }
                term = multiply(term, factor);
            }
            for (auto & [m, coef] : term) {
                poly[m] += coef;
            }
        }
        std::erase_if(poly, [](auto & kv) { return kv.second == 0; });
        add_constant(poly, -1);
        out.equations.emplace_back(j, std::move(poly));
    }

    if (form == EncodingForm::boolean01) {
        for (int v = 0; v < inst.n; ++v) {
            Polynomial onehot;
            for (int a = 0; a < q; ++a)
                onehot[Monomial{EncVar{v, a}}] = 1;
            add_constant(onehot, -1);
            out.side_conditions.emplace_back(v, std::move(onehot));
        }
    }
    return out;
}

auto evaluate(const Polynomial & poly, std::span<const int> x) -> Rational
{
    Rational total;
    for (auto & [m, c] : poly) {
        Rational term = c;
        for (auto & v : m) {
            int xv = x[static_cast<std::size_t>(v.var)];
            int value = v.value < 0 ? xv : (xv == v.value ? 1 : 0);
            term *= value;
        }
        total += term;
    }
    return total;
}

auto evaluate(const LinearInequality & ineq, std::span<const int> x) -> bool
{
    Rational lhs = ineq.constant;
    for (auto & [v, c] : ineq.coeffs)
        lhs += c * x[static_cast<std::size_t>(v)];
    return lhs >= ineq.rhs;
}

} // namespace sosgap
