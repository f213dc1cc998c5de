#pragma once

#include <sosgap/common.hpp>

#include <optional>
#include <vector>

namespace sosgap {

/// Dense equality-form feasibility problem: find x >= 0 with A x = b.
struct EqualityLp {
    std::vector<std::vector<Rational>> rows;
    std::vector<Rational> rhs;
    std::size_t columns = 0;
};

struct SimplexStats {
    std::size_t pivots = 0;
};

/// Phase-one simplex over exact rationals with Bland's rule. Returns a basic
/// feasible point, or nullopt when the system has no nonnegative solution.
auto find_feasible_point(const EqualityLp & lp, SimplexStats * stats = nullptr) -> std::optional<std::vector<Rational>>;

} // namespace sosgap
