#include <sosgap/common.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <iterator>

namespace sosgap {

auto rational_to_string(const Rational & r) -> std::string
{
    return r.get_str();
}

auto parse_rational(std::string_view text) -> Rational
{
    std::string s{text};
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        // decimal literal such as "0.5"
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        if (digits.empty() || digits == "-")
            throw InputError("malformed rational '" + s + "'");
        Rational value;
        try {
            value = Rational{BigInt{digits}, 1};
        }
        catch (const std::invalid_argument &) {
            throw InputError("malformed rational '" + s + "'");
        }
        BigInt scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, s.size() - dot - 1);
        value /= scale;
        value.canonicalize();
        return value;
    }
    Rational value;
    try {
        value = Rational{s};
    }
    catch (const std::invalid_argument &) {
        throw InputError("malformed rational '" + s + "'");
    }
    if (value.get_den() == 0)
        throw InputError("zero denominator in '" + s + "'");
    value.canonicalize();
    return value;
}

auto rational_json(const Rational & r) -> nlohmann::json
{
    return nlohmann::json::array({r.get_num().get_str(), r.get_den().get_str()});
}

auto rational_from_json(const nlohmann::json & j) -> Rational
{
    if (j.is_string())
        return parse_rational(j.get<std::string>());
    if (! j.is_array() || j.size() != 2)
        throw InputError("expected a rational as [num, den]");
    Rational r{BigInt{j.at(0).get<std::string>()}, BigInt{j.at(1).get<std::string>()}};
    if (r.get_den() == 0)
        throw InputError("zero denominator");
    r.canonicalize();
    return r;
}

auto is_sorted_set(const std::vector<int> & v) -> bool
{
    return std::adjacent_find(v.begin(), v.end(), [](int a, int b) { return a >= b; }) == v.end();
}

auto make_set(std::vector<int> v) -> std::vector<int>
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

auto set_union(const std::vector<int> & a, const std::vector<int> & b) -> std::vector<int>
{
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

auto set_difference(const std::vector<int> & a, const std::vector<int> & b) -> std::vector<int>
{
    std::vector<int> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

auto set_intersection(const std::vector<int> & a, const std::vector<int> & b) -> std::vector<int>
{
    std::vector<int> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

auto is_subset(const std::vector<int> & small, const std::vector<int> & big) -> bool
{
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

auto contains(const std::vector<int> & set, int x) -> bool
{
    return std::binary_search(set.begin(), set.end(), x);
}

auto mask_of(const VertexSet & s) -> VertexMask
{
    VertexMask m;
    for (int v : s) {
        if (v < 0 || v >= kMaxMaskVertices)
            throw InputError("vertex " + std::to_string(v) + " outside mask range");
        m.set(static_cast<std::size_t>(v));
    }
    return m;
}

auto set_of(const VertexMask & m, int n) -> VertexSet
{
    VertexSet out;
    for (int v = 0; v < n && v < kMaxMaskVertices; ++v)
        if (m.test(static_cast<std::size_t>(v)))
            out.push_back(v);
    return out;
}

auto checked_power(int q, int e) -> std::uint64_t
{
    std::uint64_t result = 1;
    for (int i = 0; i < e; ++i) {
        if (result > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(q))
            throw InputError("q^" + std::to_string(e) + " overflows the enumeration range");
        result *= static_cast<std::uint64_t>(q);
    }
    return result;
}

} // namespace sosgap
