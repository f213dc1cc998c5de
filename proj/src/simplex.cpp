#include <sosgap/simplex.hpp>

namespace sosgap {

auto find_feasible_point(const EqualityLp & lp, SimplexStats * stats) -> std::optional<std::vector<Rational>>
{
    const std::size_t m = lp.rows.size();
    const std::size_t n = lp.columns;
    if (lp.rhs.size() != m)
        throw InputError("lp: rhs size does not match row count");
    for (auto & row : lp.rows)
        if (row.size() != n)
            throw InputError("lp: ragged constraint matrix");

    // Tableau columns: n structural, m artificial, then the rhs.
    const std::size_t width = n + m + 1;
    std::vector<std::vector<Rational>> tab(m, std::vector<Rational>(width));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        Rational sign = lp.rhs[i] < 0 ? -1 : 1;
        for (std::size_t j = 0; j < n; ++j)
            tab[i][j] = sign * lp.rows[i][j];
        tab[i][n + i] = 1;
        tab[i][width - 1] = sign * lp.rhs[i];
        basis[i] = n + i;
    }

    // Phase-one objective: minimise the sum of artificials. Reduced costs of
    // the structural columns are minus the column sums.
    std::vector<Rational> cost(width);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[j] -= tab[i][j];
    for (std::size_t i = 0; i < m; ++i)
        cost[width - 1] -= tab[i][width - 1];

    std::size_t pivots = 0;
    while (true) {
        // Bland: lowest-index column with negative reduced cost enters.
        std::size_t enter = width;
        for (std::size_t j = 0; j + 1 < width; ++j)
            if (cost[j] < 0) {
                enter = j;
                break;
            }
        if (enter == width)
            break;

        // Ratio test; ties go to the lowest basic variable index.
        std::size_t leave = m;
        Rational best_ratio;
        for (std::size_t i = 0; i < m; ++i) {
            if (tab[i][enter] <= 0)
                continue;
            Rational ratio = tab[i][width - 1] / tab[i][enter];
            if (leave == m || ratio < best_ratio || (ratio == best_ratio && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave == m)
            break; // unbounded direction; cannot happen for phase one, objective is bounded below by 0

        Rational piv = tab[leave][enter];
        for (auto & x : tab[leave])
            x /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave || tab[i][enter] == 0)
                continue;
            Rational f = tab[i][enter];
            for (std::size_t j = 0; j < width; ++j)
                if (tab[leave][j] != 0)
                    tab[i][j] -= f * tab[leave][j];
        }
        if (cost[enter] != 0) {
            Rational f = cost[enter];
            for (std::size_t j = 0; j < width; ++j)
                if (tab[leave][j] != 0)
                    cost[j] -= f * tab[leave][j];
        }
        basis[leave] = enter;
        ++pivots;
    }

    if (stats)
        stats->pivots = pivots;

    // cost[rhs] holds minus the phase-one optimum.
    if (cost[width - 1] != 0)
        return std::nullopt;

    std::vector<Rational> x(n);
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n)
            x[basis[i]] = tab[i][width - 1];
    return x;
}

} // namespace sosgap
