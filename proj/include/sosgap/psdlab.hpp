#pragma once

#include <sosgap/common.hpp>
#include <sosgap/pseudodist.hpp>
#include <sosgap/rng.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace sosgap {

/// Row/column label: var < 0 is the constant label 0, otherwise (var, value).
struct MatrixLabel {
    int var = -1;
    int value = 0;

    auto is_constant() const -> bool { return var < 0; }
    friend auto operator==(const MatrixLabel &, const MatrixLabel &) -> bool = default;
};

/// Dense symmetric matrix of rationals; the upper triangle is stored row by row.
class SymmetricRationalMatrix {
public:
    SymmetricRationalMatrix() = default;
    explicit SymmetricRationalMatrix(std::vector<MatrixLabel> labels);

    /// Labels 0 then (i,a) for i in [n], a in [q] (with_constant), or only (i,a).
    static auto labelled(int n, int q, bool with_constant) -> SymmetricRationalMatrix;

    auto dim() const -> int { return _dim; }
    auto labels() const -> const std::vector<MatrixLabel> & { return _labels; }
    auto index_of(MatrixLabel label) const -> int;

    auto at(int i, int j) const -> const Rational &;
    auto set(int i, int j, Rational value) -> void;

    auto submatrix(const std::vector<int> & rows) const -> SymmetricRationalMatrix;
    auto max_abs() const -> Rational;
    auto is_zero() const -> bool;
    auto quadratic_form(const std::vector<Rational> & v) const -> Rational;

    auto operator+=(const SymmetricRationalMatrix & other) -> SymmetricRationalMatrix &;
    auto operator*=(const Rational & c) -> SymmetricRationalMatrix &;
    friend auto operator==(const SymmetricRationalMatrix &, const SymmetricRationalMatrix &) -> bool = default;

    auto to_json() const -> nlohmann::json;
    static auto from_json(const nlohmann::json & j) -> SymmetricRationalMatrix;

private:
    auto offset(int i, int j) const -> std::size_t;

    int _dim = 0;
    std::vector<MatrixLabel> _labels;
    std::vector<Rational> _upper;
};

/// M_{X,alpha}; X empty gives the degree-2 moment matrix with M(0,0) = 1.
auto build_moment(const LocalDistributionFamily & f, const VertexSet & x, const std::vector<int> & alpha) -> SymmetricRationalMatrix;

/// Sigma_{X,alpha}; the all-zero matrix when D_X(alpha) = 0.
auto build_covariance(const LocalDistributionFamily & f, const VertexSet & x, const std::vector<int> & alpha) -> SymmetricRationalMatrix;

/// Covariance of the single distribution d over its own scope.
auto covariance_of(const LocalDistribution & d) -> SymmetricRationalMatrix;

struct PsdCertificate {
    bool psd = true;
    /// Pivots in elimination order (trailing zeros for an all-zero residual).
    std::vector<Rational> pivots;
    std::vector<int> pivot_order;
    /// For not_psd: v with v^T A v < 0.
    std::optional<std::vector<Rational>> witness;
    Rational witness_value;

    auto to_json() const -> nlohmann::json;
};

/// Exact decision by symmetric LDL^T with largest-diagonal pivoting.
auto psd_exact(const SymmetricRationalMatrix & a) -> PsdCertificate;

struct FloatVerdict {
    bool psd = true;
    double min_eigenvalue = 0;
    double tol = 0;
    /// |lambda_min| <= tol: too close to call in floating point.
    bool in_band = false;

    auto to_json() const -> nlohmann::json;
};

/// Dense symmetric eigensolve; tol defaults to 1e-9 times the largest |entry|.
auto psd_float(const SymmetricRationalMatrix & a, std::optional<double> tol = std::nullopt) -> FloatVerdict;

struct SchurReport {
    PsdCertificate moment;
    PsdCertificate covariance;
    bool agree = true;

    auto to_json() const -> nlohmann::json;
};

auto schur_equivalence_check(const LocalDistributionFamily & f, const VertexSet & x, const std::vector<int> & alpha) -> SchurReport;

struct EntryMismatch {
    MatrixLabel row;
    MatrixLabel col;
    Rational lhs;
    Rational rhs;

    auto to_json() const -> nlohmann::json;
};

struct DecompositionReport {
    VertexSet x;
    VertexSet t;
    std::vector<int> alpha;
    Rational mass;
    int terms = 0;
    /// M_{X,a} = sum_b D_{T|X=a}(b) M_{T,b}
    bool literal_holds = false;
    std::optional<EntryMismatch> literal_mismatch;
    /// M_{X,a} = sum_b M_{T,b}
    bool unnormalised_holds = false;
    std::optional<EntryMismatch> unnormalised_mismatch;
    /// M_{X,a} / D_X(a) = sum_b D_{T|X=a}(b) M_{T,b} / D_T(b)
    bool normalised_holds = false;
    std::optional<EntryMismatch> normalised_mismatch;

    auto to_json() const -> nlohmann::json;
};

/// Requires X a subset of T and D_X(alpha) > 0.
auto psd_sum_decomposition_check(const LocalDistributionFamily & f, const VertexSet & x, const VertexSet & t, const std::vector<int> & alpha)
    -> DecompositionReport;

struct SyntheticOptions {
    int n = 4;
    int q = 2;
    int radius = 4;
    /// Marginals of one global distribution; otherwise independent tables per set.
    bool consistent = true;
    int max_weight = 6;
    /// Probability that a weight is forced to zero.
    double zero_fraction = 0.25;
};

auto random_synthetic_family(CounterRng & rng, const SyntheticOptions & opts) -> std::shared_ptr<LocalDistributionFamily>;

} // namespace sosgap
