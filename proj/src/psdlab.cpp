#include <sosgap/psdlab.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

using nlohmann::json;

namespace sosgap {

SymmetricRationalMatrix::SymmetricRationalMatrix(std::vector<MatrixLabel> labels) :
    _dim(static_cast<int>(labels.size())), _labels(std::move(labels))
{
    for (std::size_t i = 0; i < _labels.size(); ++i)
        for (std::size_t j = i + 1; j < _labels.size(); ++j)
            if (_labels[i] == _labels[j])
                throw InputError("duplicate matrix label");
    _upper.assign(static_cast<std::size_t>(_dim) * static_cast<std::size_t>(_dim + 1) / 2, Rational{0});
}

auto SymmetricRationalMatrix::labelled(int n, int q, bool with_constant) -> SymmetricRationalMatrix
{
    std::vector<MatrixLabel> labels;
    if (with_constant)
        labels.push_back({});
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < q; ++a)
            labels.push_back({i, a});
    return SymmetricRationalMatrix{std::move(labels)};
}

auto SymmetricRationalMatrix::index_of(MatrixLabel label) const -> int
{
    auto it = std::find(_labels.begin(), _labels.end(), label);
    if (it == _labels.end())
        throw InputError("unknown matrix label");
    return static_cast<int>(it - _labels.begin());
}

auto SymmetricRationalMatrix::offset(int i, int j) const -> std::size_t
{
    if (i > j)
        std::swap(i, j);
    if (i < 0 || j >= _dim)
        throw InputError("matrix index out of range");
    // rows 0..i-1 hold dim, dim-1, ... entries
    auto ui = static_cast<std::size_t>(i);
    auto d = static_cast<std::size_t>(_dim);
    return ui * d - ui * (ui - 1) / 2 + static_cast<std::size_t>(j - i);
}

auto SymmetricRationalMatrix::at(int i, int j) const -> const Rational &
{
    return _upper[offset(i, j)];
}

auto SymmetricRationalMatrix::set(int i, int j, Rational value) -> void
{
    _upper[offset(i, j)] = std::move(value);
}

auto SymmetricRationalMatrix::submatrix(const std::vector<int> & rows) const -> SymmetricRationalMatrix
{
    std::vector<MatrixLabel> labels;
    for (int r : rows)
        labels.push_back(_labels.at(static_cast<std::size_t>(r)));
    SymmetricRationalMatrix out{std::move(labels)};
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i; j < rows.size(); ++j)
            out.set(static_cast<int>(i), static_cast<int>(j), at(rows[i], rows[j]));
    return out;
}

auto SymmetricRationalMatrix::max_abs() const -> Rational
{
    Rational m;
    for (auto & x : _upper)
        if (abs(x) > m)
            m = abs(x);
    return m;
}

auto SymmetricRationalMatrix::is_zero() const -> bool
{
    return std::all_of(_upper.begin(), _upper.end(), [](const Rational & x) { return x == 0; });
}

auto SymmetricRationalMatrix::quadratic_form(const std::vector<Rational> & v) const -> Rational
{
    if (static_cast<int>(v.size()) != _dim)
        throw InputError("vector length does not match the matrix");
    Rational sum;
    for (int i = 0; i < _dim; ++i) {
        if (v[static_cast<std::size_t>(i)] == 0)
            continue;
        sum += at(i, i) * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < _dim; ++j)
            if (v[static_cast<std::size_t>(j)] != 0)
                sum += 2 * at(i, j) * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
    }
    return sum;
}

auto SymmetricRationalMatrix::operator+=(const SymmetricRationalMatrix & other) -> SymmetricRationalMatrix &
{
    if (other._labels != _labels)
        throw InputError("label mismatch in matrix sum");
    for (std::size_t i = 0; i < _upper.size(); ++i)
        _upper[i] += other._upper[i];
    return *this;
}

auto SymmetricRationalMatrix::operator*=(const Rational & c) -> SymmetricRationalMatrix &
{
    for (auto & x : _upper)
        x *= c;
    return *this;
}

namespace {
    auto label_json(const MatrixLabel & l) -> json
    {
        if (l.is_constant())
            return 0;
        return json::array({l.var, l.value});
    }

    auto label_from_json(const json & j) -> MatrixLabel
    {
        if (j.is_number())
            return {};
        return {j.at(0).get<int>(), j.at(1).get<int>()};
    }
}

auto SymmetricRationalMatrix::to_json() const -> json
{
    json labels = json::array();
    for (auto & l : _labels)
        labels.push_back(label_json(l));
    json upper = json::array();
    for (auto & x : _upper)
        upper.push_back(rational_json(x));
    return {{"dim", _dim}, {"labels", labels}, {"upper", upper}};
}

auto SymmetricRationalMatrix::from_json(const json & j) -> SymmetricRationalMatrix
{
    std::vector<MatrixLabel> labels;
    for (auto & l : j.at("labels"))
        labels.push_back(label_from_json(l));
    if (j.at("dim").get<int>() != static_cast<int>(labels.size()))
        throw InputError("dim does not match the label count");
    SymmetricRationalMatrix m{std::move(labels)};
    auto & upper = j.at("upper");
    if (upper.size() != m._upper.size())
        throw InputError("wrong number of upper-triangle entries");
    for (std::size_t i = 0; i < upper.size(); ++i)
        m._upper[i] = rational_from_json(upper[i]);
    return m;
}

namespace {
    // Probability of a partial assignment under f; 0 when the assignment contradicts itself.
    auto event_prob(const LocalDistributionFamily & f, const std::map<int, int> & event) -> Rational
    {
        VertexSet vars;
        std::vector<int> values;
        for (auto & [v, a] : event) {
            vars.push_back(v);
            values.push_back(a);
        }
        if (vars.empty())
            return 1;
        return f.prob(vars, values);
    }

    auto with_event(const VertexSet & x, const std::vector<int> & alpha, std::initializer_list<std::pair<int, int>> extra, bool & conflict)
        -> std::map<int, int>
    {
        std::map<int, int> event;
        for (std::size_t i = 0; i < x.size(); ++i)
            event[x[i]] = alpha[i];
        conflict = false;
        for (auto [v, a] : extra) {
            auto [it, fresh] = event.try_emplace(v, a);
            if (! fresh && it->second != a)
                conflict = true;
        }
        return event;
    }

    auto covariance_from(const LocalDistributionFamily & f) -> SymmetricRationalMatrix
    {
        const int n = f.n();
        const int q = f.q();
        auto out = SymmetricRationalMatrix::labelled(n, q, false);
        std::vector<std::shared_ptr<const LocalDistribution>> single;
        for (int i = 0; i < n; ++i)
            single.push_back(f.get({i}));
        for (int i = 0; i < n; ++i) {
            auto & di = *single[static_cast<std::size_t>(i)];
            for (int a = 0; a < q; ++a)
                for (int b = a; b < q; ++b) {
                    Rational v = -di.probs[static_cast<std::size_t>(a)] * di.probs[static_cast<std::size_t>(b)];
                    if (a == b)
                        v += di.probs[static_cast<std::size_t>(a)];
                    out.set(i * q + a, i * q + b, v);
                }
            for (int j = i + 1; j < n; ++j) {
                auto dij = f.get({i, j});
                auto & dj = *single[static_cast<std::size_t>(j)];
                for (int a = 0; a < q; ++a)
                    for (int b = 0; b < q; ++b) {
                        // little-endian: i is the low digit
                        auto joint = dij->probs[static_cast<std::size_t>(a + q * b)];
                        out.set(i * q + a, j * q + b, joint - di.probs[static_cast<std::size_t>(a)] * dj.probs[static_cast<std::size_t>(b)]);
                    }
            }
        }
        return out;
    }
}

auto build_moment(const LocalDistributionFamily & f, const VertexSet & x, const std::vector<int> & alpha) -> SymmetricRationalMatrix
{
    if (x.size() != alpha.size())
        throw InputError("conditioning assignment does not match X");
    const int n = f.n();
    const int q = f.q();
    auto m = SymmetricRationalMatrix::labelled(n, q, true);
    bool conflict = false;
    m.set(0, 0, event_prob(f, with_event(x, alpha, {}, conflict)));
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < q; ++a) {
            auto e = with_event(x, alpha, {{i, a}}, conflict);
            m.set(0, 1 + i * q + a, conflict ? Rational{0} : event_prob(f, e));
        }
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < q; ++a) {
            const int row = 1 + i * q + a;
            m.set(row, row, m.at(0, row));
            for (int j = i; j < n; ++j)
                for (int b = 0; b < q; ++b) {
                    const int col = 1 + j * q + b;
                    if (col <= row)
                        continue;
                    if (i == j) {
                        m.set(row, col, 0);
                        continue;
                    }
                    auto e = with_event(x, alpha, {{i, a}, {j, b}}, conflict);
                    m.set(row, col, conflict ? Rational{0} : event_prob(f, e));
                }
        }
    return m;
}

auto build_covariance(const LocalDistributionFamily & f, const VertexSet & x, const std::vector<int> & alpha) -> SymmetricRationalMatrix
{
    if (x.size() != alpha.size())
        throw InputError("conditioning assignment does not match X");
    if (x.empty())
        return covariance_from(f);
    if (f.prob(x, alpha) == 0)
        return SymmetricRationalMatrix::labelled(f.n(), f.q(), false);
    return covariance_from(*f.condition(x, alpha));
}

auto covariance_of(const LocalDistribution & d) -> SymmetricRationalMatrix
{
    const int q = d.q;
    std::vector<MatrixLabel> labels;
    for (int v : d.scope)
        for (int a = 0; a < q; ++a)
            labels.push_back({v, a});
    SymmetricRationalMatrix out{std::move(labels)};
    const int dim = out.dim();
    std::vector<Rational> mean(static_cast<std::size_t>(dim));
    std::vector<Rational> second(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
    for (std::size_t index = 0; index < d.size(); ++index) {
        auto & p = d.probs[index];
        if (p == 0)
            continue;
        auto values = d.assignment(index);
        for (std::size_t u = 0; u < values.size(); ++u) {
            auto r = static_cast<std::size_t>(u) * static_cast<std::size_t>(q) + static_cast<std::size_t>(values[u]);
            mean[r] += p;
            for (std::size_t w = u; w < values.size(); ++w) {
                auto c = static_cast<std::size_t>(w) * static_cast<std::size_t>(q) + static_cast<std::size_t>(values[w]);
                second[r * static_cast<std::size_t>(dim) + c] += p;
            }
        }
    }
    for (int r = 0; r < dim; ++r)
        for (int c = r; c < dim; ++c)
            out.set(r, c, second[static_cast<std::size_t>(r) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)]
                    - mean[static_cast<std::size_t>(r)] * mean[static_cast<std::size_t>(c)]);
    return out;
}

auto PsdCertificate::to_json() const -> json
{
    json j{{"verdict", psd ? "psd" : "not_psd"}};
    json p = json::array();
    for (auto & x : pivots)
        p.push_back(rational_json(x));
    j["pivots"] = p;
    j["pivot_order"] = pivot_order;
    if (witness) {
        json w = json::array();
        for (auto & x : *witness)
            w.push_back(rational_json(x));
        j["witness"] = w;
        j["witness_value"] = rational_json(witness_value);
    }
    else
        j["witness"] = nullptr;
    return j;
}

auto psd_exact(const SymmetricRationalMatrix & a) -> PsdCertificate
{
    const int d = a.dim();
    const auto ud = static_cast<std::size_t>(d);
    std::vector<Rational> w(ud * ud);
    auto cell = [&](int i, int j) -> Rational & { return w[static_cast<std::size_t>(i) * ud + static_cast<std::size_t>(j)]; };
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            cell(i, j) = a.at(i, j);

    struct Step {
        int pivot;
        Rational value;
        std::vector<std::pair<int, Rational>> row;
    };
    std::vector<Step> steps;
    std::vector<char> active(ud, 1);
    PsdCertificate cert;
    std::vector<Rational> y;

    for (;;) {
        int p = -1;
        for (int i = 0; i < d; ++i)
            if (active[static_cast<std::size_t>(i)] && (p < 0 || cell(i, i) > cell(p, p)))
                p = i;
        if (p < 0)
            break;
        if (cell(p, p) > 0) {
            Step step{p, cell(p, p), {}};
            for (int j = 0; j < d; ++j)
                if (active[static_cast<std::size_t>(j)] && j != p && cell(p, j) != 0)
                    step.row.emplace_back(j, cell(p, j));
            for (auto & [i, api] : step.row)
                for (auto & [j, apj] : step.row)
                    if (j >= i) {
                        cell(i, j) -= api * apj / step.value;
                        cell(j, i) = cell(i, j);
                    }
            active[static_cast<std::size_t>(p)] = 0;
            cert.pivots.push_back(step.value);
            cert.pivot_order.push_back(p);
            steps.push_back(std::move(step));
            continue;
        }
        // every remaining diagonal entry is <= 0
        y.assign(ud, Rational{0});
        int negative = -1;
        for (int i = 0; i < d && negative < 0; ++i)
            if (active[static_cast<std::size_t>(i)] && cell(i, i) < 0)
                negative = i;
        if (negative >= 0) {
            y[static_cast<std::size_t>(negative)] = 1;
        }
        else {
            for (int i = 0; i < d && negative < 0; ++i)
                for (int j = i + 1; j < d; ++j)
                    if (active[static_cast<std::size_t>(i)] && active[static_cast<std::size_t>(j)] && cell(i, j) != 0) {
                        // [[0,c],[c,0]] with (1,-c) gives -2c^2
                        y[static_cast<std::size_t>(i)] = 1;
                        y[static_cast<std::size_t>(j)] = -cell(i, j);
                        negative = i;
                        break;
                    }
        }
        if (negative < 0) {
            for (int i = 0; i < d; ++i)
                if (active[static_cast<std::size_t>(i)]) {
                    cert.pivots.push_back(0);
                    cert.pivot_order.push_back(i);
                }
            y.clear();
        }
        break;
    }
    if (y.empty())
        return cert;

    // Back-substitute the eliminated coordinates so that v^T A v equals the residual form.
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        Rational s;
        for (auto & [j, apj] : it->row)
            s += apj * y[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(it->pivot)] = -s / it->value;
    }
    cert.psd = false;
    cert.witness_value = a.quadratic_form(y);
    if (cert.witness_value >= 0)
        throw InvariantError("psd_exact produced a witness without a negative quadratic form");
    cert.witness = std::move(y);
    return cert;
}

auto FloatVerdict::to_json() const -> json
{
    return {{"verdict", psd ? "psd" : "not_psd"}, {"min_eigenvalue", min_eigenvalue}, {"tol", tol}, {"in_band", in_band}};
}

auto psd_float(const SymmetricRationalMatrix & a, std::optional<double> tol) -> FloatVerdict
{
    const int d = a.dim();
    FloatVerdict out;
    Eigen::MatrixXd m(d, d);
    double biggest = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double x = a.at(i, j).get_d();
            if (! std::isfinite(x))
                throw InputError("matrix entry does not fit in a double");
            m(i, j) = x;
            m(j, i) = x;
            biggest = std::max(biggest, std::abs(x));
        }
    out.tol = tol ? *tol : 1e-9 * biggest;
    if (d == 0)
        return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw InvariantError("eigensolver did not converge");
    out.min_eigenvalue = solver.eigenvalues().minCoeff();
    out.psd = out.min_eigenvalue >= -out.tol;
    out.in_band = std::abs(out.min_eigenvalue) <= out.tol;
    return out;
}

auto SchurReport::to_json() const -> json
{
    return {{"moment", moment.to_json()}, {"covariance", covariance.to_json()}, {"agree", agree}};
}

auto schur_equivalence_check(const LocalDistributionFamily & f, const VertexSet & x, const std::vector<int> & alpha) -> SchurReport
{
    SchurReport r;
    r.moment = psd_exact(build_moment(f, x, alpha));
    r.covariance = psd_exact(build_covariance(f, x, alpha));
    r.agree = r.moment.psd == r.covariance.psd;
    return r;
}

auto EntryMismatch::to_json() const -> json
{
    return {{"row", label_json(row)}, {"col", label_json(col)}, {"lhs", rational_json(lhs)}, {"rhs", rational_json(rhs)}};
}

auto DecompositionReport::to_json() const -> json
{
    auto opt = [](const std::optional<EntryMismatch> & m) { return m ? m->to_json() : json(nullptr); };
    return {
        {"X", x},
        {"T", t},
        {"alpha", alpha},
        {"mass", rational_json(mass)},
        {"terms", terms},
        {"literal_holds", literal_holds},
        {"literal_mismatch", opt(literal_mismatch)},
        {"unnormalised_holds", unnormalised_holds},
        {"unnormalised_mismatch", opt(unnormalised_mismatch)},
        {"normalised_holds", normalised_holds},
        {"normalised_mismatch", opt(normalised_mismatch)},
    };
}

namespace {
    auto first_mismatch(const SymmetricRationalMatrix & lhs, const SymmetricRationalMatrix & rhs) -> std::optional<EntryMismatch>
    {
        for (int i = 0; i < lhs.dim(); ++i)
            for (int j = i; j < lhs.dim(); ++j)
                if (lhs.at(i, j) != rhs.at(i, j))
                    return EntryMismatch{lhs.labels()[static_cast<std::size_t>(i)], lhs.labels()[static_cast<std::size_t>(j)], lhs.at(i, j), rhs.at(i, j)};
        return std::nullopt;
    }
}

auto psd_sum_decomposition_check(const LocalDistributionFamily & f, const VertexSet & x, const VertexSet & t, const std::vector<int> & alpha)
    -> DecompositionReport
{
    if (! is_subset(x, t))
        throw InputError("X must be a subset of T");
    if (x.size() != alpha.size())
        throw InputError("conditioning assignment does not match X");
    DecompositionReport r;
    r.x = x;
    r.t = t;
    r.alpha = alpha;
    r.mass = x.empty() ? Rational{1} : f.prob(x, alpha);
    if (r.mass == 0)
        throw UndefinedValue("D_X(alpha) = 0");

    auto lhs = build_moment(f, x, alpha);
    auto lhs_normalised = lhs;
    lhs_normalised *= 1 / r.mass;
    auto zero = SymmetricRationalMatrix::labelled(f.n(), f.q(), true);
    auto literal = zero;
    auto unnormalised = zero;
    auto normalised = zero;

    auto dt = f.get(t);
    for (std::size_t index = 0; index < dt->size(); ++index) {
        auto beta = dt->assignment(index);
        bool match = true;
        for (std::size_t i = 0, xi = 0; i < t.size() && xi < x.size(); ++i)
            if (t[i] == x[xi]) {
                match = match && beta[i] == alpha[xi];
                ++xi;
            }
        if (! match)
            continue;
        auto mt = build_moment(f, t, beta);
        ++r.terms;
        unnormalised += mt;
        const auto & pt = dt->probs[index];
        Rational conditional = pt / r.mass;
        if (pt != 0) {
            auto scaled = mt;
            scaled *= conditional / pt;
            normalised += scaled;
        }
        mt *= conditional;
        literal += mt;
    }
    r.literal_mismatch = first_mismatch(lhs, literal);
    r.literal_holds = ! r.literal_mismatch;
    r.unnormalised_mismatch = first_mismatch(lhs, unnormalised);
    r.unnormalised_holds = ! r.unnormalised_mismatch;
    r.normalised_mismatch = first_mismatch(lhs_normalised, normalised);
    r.normalised_holds = ! r.normalised_mismatch;
    return r;
}

namespace {
    auto random_table(CounterRng & rng, VertexSet scope, int q, const SyntheticOptions & opts) -> LocalDistribution
    {
        auto size = checked_power(q, static_cast<int>(scope.size()));
        LocalDistribution d{std::move(scope), q, std::vector<Rational>(size)};
        Rational total;
        for (auto & p : d.probs) {
            if (rng.uniform01() < opts.zero_fraction)
                continue;
            p = static_cast<long>(rng.below(static_cast<std::uint64_t>(opts.max_weight))) + 1;
            total += p;
        }
        if (total == 0) {
            d.probs[rng.below(size)] = 1;
            total = 1;
        }
        for (auto & p : d.probs)
            p /= total;
        return d;
    }
}

auto random_synthetic_family(CounterRng & rng, const SyntheticOptions & opts) -> std::shared_ptr<LocalDistributionFamily>
{
    if (opts.n < 1 || opts.q < 2 || opts.radius < 2 || opts.max_weight < 1)
        throw InputError("invalid synthetic family options");
    std::vector<LocalDistribution> tables;
    if (opts.consistent) {
        VertexSet all(static_cast<std::size_t>(opts.n));
        for (int i = 0; i < opts.n; ++i)
            all[static_cast<std::size_t>(i)] = i;
        tables.push_back(random_table(rng, all, opts.q, opts));
    }
    else {
        for (auto & s : all_sets_up_to(opts.n, std::min(opts.radius, opts.n)))
            tables.push_back(random_table(rng, s, opts.q, opts));
    }
    return LocalDistributionFamily::make_tables(opts.n, opts.q, std::move(tables), opts.radius);
}

} // namespace sosgap
