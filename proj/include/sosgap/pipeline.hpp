#pragma once

#include <sosgap/common.hpp>
#include <sosgap/corrgraph.hpp>
#include <sosgap/predicate.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace sosgap {

/// Bad configuration; the CLI maps it to exit code 2.
class ConfigError : public InputError {
public:
    using InputError::InputError;
};

/// One entry of an m-schedule: a fixed m, m = ratio * n (rounded down), or m = floor(n^gamma).
struct MSpec {
    enum class Kind { fixed, ratio, gamma };
    Kind kind = Kind::fixed;
    Rational value;

    auto resolve(int n) const -> int;
    auto to_json() const -> nlohmann::json;
    /// "24", "ratio:1/2" or "gamma:3/2"; objects {"m"|"ratio"|"gamma": ...} in JSON.
    static auto parse(const std::string & text) -> MSpec;
    static auto from_json(const nlohmann::json & j) -> MSpec;
};

enum class NegativeControl { none, corrupt };

struct PipelineConfig {
    nlohmann::json predicate = "parity3";
    int n = 24;
    std::vector<MSpec> m_schedule{MSpec{MSpec::Kind::fixed, 24}};
    std::vector<std::uint64_t> seeds{0};
    /// Defaults to cmplx(P).
    std::optional<int> t;
    int radius = 4;
    Rational epsilon{1, 2};
    /// Unset: e1 = k - t/2 + eps/2, e2 = k - t/2 + eps/4, s1 = floor(r/(e1-e2)) + 1.
    std::optional<Rational> e1;
    std::optional<Rational> e2;
    std::optional<int> s1;
    /// Local consistency is checked on all sets up to this size.
    int consistency_size = 3;
    int conditional_samples = 20;
    int conditional_max_x = 2;
    /// Conditional families that also get the correlation / bad-structure check.
    int conditional_graph_families = 5;
    /// Run downstream checks on seeds whose expansion is not certified (reported, never counted).
    bool run_uncertified = false;
    bool allow_repeats = false;
    NegativeControl negative_control = NegativeControl::none;
    double log2_budget = 24.0;
    std::uint64_t enumeration_budget = std::uint64_t{1} << 22;
    /// Connected sets visited over all pairs of one G_bad construction.
    std::uint64_t gbad_budget = std::uint64_t{1} << 24;
    bool timings = true;
    std::string report_path;
    std::string csv_path;

    auto to_json() const -> nlohmann::json;
    static auto from_json(const nlohmann::json & j) -> PipelineConfig;
};

/// Parameters derived from a config at startup.
struct ResolvedParams {
    Predicate predicate;
    SupportDistribution mu;
    int t;
    Rational e1;
    Rational e2;
    int s1;
    bool s1_auto;

    auto to_json() const -> nlohmann::json;
};

/// Throws ConfigError, e.g. "no (t-1)-wise witness" when t exceeds cmplx(P).
auto resolve_params(const PipelineConfig & config) -> ResolvedParams;

enum class Outcome { pass, fail, skipped, refused, error };

auto outcome_name(Outcome o) -> const char *;

struct CheckOutcome {
    std::string name;
    Outcome status = Outcome::skipped;
    std::string reason;
    nlohmann::json detail;
    double seconds = 0;

    auto to_json(bool timings) const -> nlohmann::json;
};

struct SeedRecord {
    int n = 0;
    int m = 0;
    std::uint64_t seed = 0;
    bool certified = false;
    /// Uncertified but run anyway; its checks do not affect the exit code.
    bool exploratory = false;
    Outcome status = Outcome::skipped;
    nlohmann::json expansion;
    std::vector<CheckOutcome> checks;
    std::optional<int> max_gbad_component;
    double runtime = 0;

    auto check(const std::string & name) const -> const CheckOutcome *;
    auto to_json(bool timings) const -> nlohmann::json;
};

struct PipelineReport {
    PipelineConfig config;
    ResolvedParams params;
    std::vector<SeedRecord> seeds;
    int exit_code = 0;

    auto to_json() const -> nlohmann::json;
};

auto run_seed(const PipelineConfig & config, const ResolvedParams & params, int m, std::uint64_t seed) -> SeedRecord;

/// Every (m, seed) of the schedule; exit code 0 iff no counted check failed.
auto run_pipeline(const PipelineConfig & config) -> PipelineReport;

struct SweepRow {
    int n;
    int m;
    std::uint64_t seed;
    bool expansion_pass;
    Outcome pipeline;
    std::optional<int> max_gbad_component;
    double runtime;
};

auto sweep(const PipelineConfig & config) -> std::vector<SweepRow>;

inline constexpr const char * kSweepHeader = "n,m,seed,expansion_pass,pipeline_pass,max_gbad_component,runtime";

auto sweep_csv(const std::vector<SweepRow> & rows, bool timings) -> std::string;

/// cmplx, t-wise witnesses for every feasible t, satisfying-assignment count.
auto report_predicate(const Predicate & p) -> nlohmann::json;

/// Worker count from SOSGAP_WORKERS, else hardware concurrency.
auto worker_count() -> int;

} // namespace sosgap
