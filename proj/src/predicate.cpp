#include <sosgap/predicate.hpp>
#include <sosgap/simplex.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <numeric>
#include <utility>

using nlohmann::json;

namespace sosgap {

namespace {
    auto for_each_subset_of_size(int k, int t, auto && fn) -> void
    {
        std::vector<int> subset(static_cast<std::size_t>(t));
        std::iota(subset.begin(), subset.end(), 0);
        if (t > k)
            return;
        while (true) {
            fn(std::as_const(subset));
            int i = t - 1;
            while (i >= 0 && subset[static_cast<std::size_t>(i)] == k - t + i)
                --i;
            if (i < 0)
                return;
            ++subset[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < t; ++j)
                subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
        }
    }

    auto parse_suffix(const std::string & name, std::string_view prefix) -> std::optional<int>
    {
        if (name.rfind(prefix, 0) != 0)
            return std::nullopt;
        int value = 0;
        auto first = name.data() + prefix.size();
        auto last = name.data() + name.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last || value < 1)
            return std::nullopt;
        return value;
    }
}

Predicate::Predicate(int k, int q, std::vector<std::uint8_t> table) :
    _k(k), _q(q), _table(std::move(table))
{
    if (k < 1)
        throw InputError("predicate arity must be positive");
    if (q < 2)
        throw InputError("predicate alphabet must be at least 2");
    if (_table.size() != checked_power(q, k))
        throw InputError("predicate table has " + std::to_string(_table.size()) + " entries, expected q^k = " + std::to_string(checked_power(q, k)));
    for (auto & b : _table) {
        if (b > 1)
            throw InputError("predicate table entries must be 0 or 1");
    }
    if (satisfying_count() == 0)
        throw InputError("predicate has no satisfying assignment");
}

auto Predicate::with_name(std::string name) && -> Predicate
{
    _name = std::move(name);
    return std::move(*this);
}

auto Predicate::parity(int k, bool even) -> Predicate
{
    std::vector<std::uint8_t> table(checked_power(2, k));
    for (std::size_t i = 0; i < table.size(); ++i) {
        bool odd = std::popcount(i) % 2 == 1;
        table[i] = (odd != even) ? 1 : 0;
    }
    return Predicate{k, 2, std::move(table)}.with_name("parity" + std::to_string(k) + (even ? "" : "-odd"));
}

auto Predicate::disjunction(int k) -> Predicate
{
    std::vector<std::uint8_t> table(checked_power(2, k), 1);
    table[0] = 0;
    return Predicate{k, 2, std::move(table)}.with_name("or" + std::to_string(k));
}

auto Predicate::not_all_equal(int k) -> Predicate
{
    std::vector<std::uint8_t> table(checked_power(2, k), 1);
    const auto last = table.size() - 1;
    table[0] = 0;
    table[last] = 0;
    return Predicate{k, 2, std::move(table)}.with_name("nae" + std::to_string(k));
}

auto Predicate::constant_true(int k, int q) -> Predicate
{
    return Predicate{k, q, std::vector<std::uint8_t>(checked_power(q, k), 1)}.with_name("true" + std::to_string(k));
}

auto Predicate::named(const std::string & name) -> Predicate
{
    if (name.size() > 4 && name.ends_with("-odd"))
        if (auto k = parse_suffix(name.substr(0, name.size() - 4), "parity"))
            return parity(*k, false);
    if (auto k = parse_suffix(name, "parity"))
        return parity(*k, true);
    if (auto k = parse_suffix(name, "or"))
        return disjunction(*k);
    if (auto k = parse_suffix(name, "nae"); k && *k >= 2)
        return not_all_equal(*k);
    if (auto k = parse_suffix(name, "true"))
        return constant_true(*k);
    throw InputError("unknown predicate name '" + name + "'");
}

auto Predicate::from_json(const json & j) -> Predicate
{
    if (j.is_string())
        return named(j.get<std::string>());
    if (! j.is_object())
        throw InputError("predicate JSON must be an object or a name");
    if (j.contains("name") && ! j.contains("table"))
        return named(j.at("name").get<std::string>());
    try {
        auto k = j.at("k").get<int>();
        auto q = j.at("q").get<int>();
        std::vector<std::uint8_t> table;
        for (auto & e : j.at("table"))
            table.push_back(static_cast<std::uint8_t>(e.get<int>()));
        Predicate p{k, q, std::move(table)};
        if (j.contains("name"))
            p._name = j.at("name").get<std::string>();
        return p;
    }
    catch (const json::exception & e) {
        throw InputError(std::string{"predicate JSON: "} + e.what());
    }
}

auto Predicate::to_json() const -> json
{
    json j;
    j["k"] = _k;
    j["q"] = _q;
    j["table"] = json::array();
    for (auto b : _table)
        j["table"].push_back(static_cast<int>(b));
    if (! _name.empty())
        j["name"] = _name;
    return j;
}

auto Predicate::index_of(std::span<const int> z) const -> std::size_t
{
    if (static_cast<int>(z.size()) != _k)
        throw InputError("assignment length " + std::to_string(z.size()) + " does not match arity " + std::to_string(_k));
    std::size_t index = 0;
    for (int v : z) {
        if (v < 0 || v >= _q)
            throw InputError("assignment entry " + std::to_string(v) + " outside [0," + std::to_string(_q) + ")");
        index = index * static_cast<std::size_t>(_q) + static_cast<std::size_t>(v);
    }
    return index;
}

auto Predicate::point(std::size_t index) const -> std::vector<int>
{
    std::vector<int> z(static_cast<std::size_t>(_k));
    for (int i = _k - 1; i >= 0; --i) {
        z[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(_q));
        index /= static_cast<std::size_t>(_q);
    }
    return z;
}

auto Predicate::eval(std::span<const int> z) const -> bool
{
    return at(index_of(z));
}

auto Predicate::satisfying_count() const -> std::size_t
{
    return static_cast<std::size_t>(std::count(_table.begin(), _table.end(), 1));
}

auto SupportDistribution::to_json(const Predicate & p) const -> json
{
    json out = json::array();
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (weights[i] != 0)
            out.push_back({{"z", p.point(i)}, {"w", rational_to_string(weights[i])}});
    return out;
}

auto SupportDistribution::from_json(const Predicate & p, const json & j) -> SupportDistribution
{
    SupportDistribution mu{std::vector<Rational>(p.table_size())};
    for (auto & e : j) {
        auto z = e.at("z").get<std::vector<int>>();
        mu.weights[p.index_of(z)] = parse_rational(e.at("w").get<std::string>());
    }
    return mu;
}

auto twise_support(const Predicate & p, int t) -> std::optional<SupportDistribution>
{
    const int k = p.arity();
    const int q = p.alphabet();
    if (t < 1 || t > k)
        throw InputError("t must lie in [1,k]");

    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < p.table_size(); ++i)
        if (p.at(i))
            support.push_back(i);

    std::vector<std::vector<int>> points;
    points.reserve(support.size());
    for (auto i : support)
        points.push_back(p.point(i));

    EqualityLp lp;
    lp.columns = support.size();
    const Rational target{1, static_cast<unsigned long>(checked_power(q, t))};
    const auto patterns = checked_power(q, t);
    for_each_subset_of_size(k, t, [&](const std::vector<int> & coords) {
        for (std::uint64_t a = 0; a < patterns; ++a) {
            // pattern a written in base q, first coordinate most significant
            std::vector<int> alpha(coords.size());
            auto rest = a;
            for (int i = t - 1; i >= 0; --i) {
                alpha[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::uint64_t>(q));
                rest /= static_cast<std::uint64_t>(q);
            }
            std::vector<Rational> row(support.size());
            for (std::size_t c = 0; c < support.size(); ++c) {
                bool match = true;
                for (std::size_t i = 0; i < coords.size() && match; ++i)
                    match = points[c][static_cast<std::size_t>(coords[i])] == alpha[i];
                if (match)
                    row[c] = 1;
            }
            lp.rows.push_back(std::move(row));
            lp.rhs.push_back(target);
        }
    });

    auto x = find_feasible_point(lp);
    if (! x)
        return std::nullopt;
    SupportDistribution mu{std::vector<Rational>(p.table_size())};
    for (std::size_t c = 0; c < support.size(); ++c)
        mu.weights[support[c]] = (*x)[c];
    return mu;
}

auto is_twise_uniform_supporting(const Predicate & p, const SupportDistribution & mu, int t) -> bool
{
    const int k = p.arity();
    const int q = p.alphabet();
    if (mu.weights.size() != p.table_size())
        return false;
    Rational total;
    for (std::size_t i = 0; i < p.table_size(); ++i) {
        if (mu.weights[i] < 0)
            return false;
        if (! p.at(i) && mu.weights[i] != 0)
            return false;
        total += mu.weights[i];
    }
    if (total != 1)
        return false;

    for (int size = 1; size <= t; ++size) {
        bool ok = true;
        const Rational target{1, static_cast<unsigned long>(checked_power(q, size))};
        for_each_subset_of_size(k, size, [&](const std::vector<int> & coords) {
            if (! ok)
                return;
            std::vector<Rational> marginal(checked_power(q, size));
            for (std::size_t i = 0; i < p.table_size(); ++i) {
                auto z = p.point(i);
                std::size_t idx = 0;
                for (int c : coords)
                    idx = idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(z[static_cast<std::size_t>(c)]);
                marginal[idx] += mu.weights[i];
            }
            for (auto & m : marginal)
                if (m != target)
                    ok = false;
        });
        if (! ok)
            return false;
    }
    return true;
}

auto cmplx(const Predicate & p) -> Complexity
{
    if (p.satisfying_count() == 0)
        throw InputError("cmplx is undefined for an unsatisfiable predicate");
    for (int t = 1; t <= p.arity(); ++t)
        if (! twise_support(p, t))
            return Complexity{t, false};
    return Complexity{p.arity() + 1, true};
}

} // namespace sosgap
