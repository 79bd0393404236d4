#pragma once

#include "redsched/analysis.hpp"
#include "redsched/distributions.hpp"
#include "redsched/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace redsched {

struct LambdaSweep {
    double lo = 0.0;
    double hi = 0.0;
    int steps = 2;

    std::vector<double> points() const;
};

/// Warm-up given either as a job count or as a fraction of the run.
using Warmup = std::variant<long, double>;

/// One experiment as written in a config file.
struct Scenario {
    std::string name;
    int n = 1;
    int r = 1;
    std::variant<double, LambdaSweep> lambda = 0.0;
    Policy policy = Policy::ForkJoin;
    ServiceDistribution dist = ServiceDistribution::exponential(1.0);
    long jobs = 100000;
    std::uint64_t seed = 1;
    std::optional<Warmup> warmup;
    int replications = 1;

    std::vector<double> lambdas() const;
    SystemSpec system(double lambda) const;
    RunSpec run_spec(double lambda, int replication) const;
    void validate() const;
};

/// Parses a JSON config (comments allowed): either one scenario object or
/// {"scenarios": [...]}. Errors carry the line of the offending entry.
std::vector<Scenario> parse_scenarios(const std::string& text);
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);

struct ComparisonRow {
    std::string scenario;
    Policy policy = Policy::ForkJoin;
    int n = 1;
    int r = 1;
    double lambda = 0.0;
    std::optional<double> et_sim;
    std::optional<double> et_ci;
    std::optional<double> ec_sim;
    std::optional<double> ec_ci;
    std::optional<double> et_analytic;
    LatencyKind et_kind = LatencyKind::Exact;
    std::optional<double> ec_lo;
    std::optional<double> ec_hi;
    std::optional<double> capacity;
    std::optional<bool> stable;
};

struct RunOptions {
    bool simulate = true;
    std::optional<std::uint64_t> seed;  // overrides every scenario's seed
    std::optional<long> jobs;           // overrides every scenario's job count
    unsigned workers = 0;               // 0 = hardware concurrency
};

/// Every sweep point x replication of every scenario, in config order.
std::vector<ComparisonRow> run_scenarios(const std::vector<Scenario>& scenarios,
                                         const RunOptions& options = {});

std::vector<ComparisonRow> run_scenario(const std::filesystem::path& config,
                                        const RunOptions& options = {});

ComparisonRow analytic_row(const Scenario& s, double lambda);

inline constexpr const char* kCsvHeader =
    "scenario,policy,n,r,lambda,ET_sim,ET_ci,EC_sim,EC_ci,ET_analytic,ET_kind,"
    "EC_analytic_lo,EC_analytic_hi,capacity,stable";

void write_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);
/// Throws IoError when the file cannot be written.
void emit_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);
std::vector<ComparisonRow> parse_csv(std::istream& in);

enum class Load { Low, High };

Load parse_load(const std::string& text);

struct OptionFigures {
    std::string label;
    double cost = 0.0;
    double capacity = 0.0;
};

struct DecisionReport {
    ConcavityClass concavity = ConcavityClass::Neither;
    Load load = Load::Low;
    bool rule_available = false;
    bool cancel_early = false;
    int recommended_r = 0;
    std::string note;
    std::vector<OptionFigures> options;

    std::string render() const;
};

/// Redundancy recommendation for n servers at the given load, from the
/// log-concavity of the service tail.
DecisionReport decision_report(const ServiceDistribution& dist, int n, Load load);

struct ConjecturePoint {
    double lambda = 0.0;
    std::vector<stats::Estimate> latency;  // index r-1
    std::vector<stats::Estimate> cost;
    int best_latency_r = 0;
    int best_cost_r = 0;
    bool full_fork_minimizes_latency = false;
    bool full_fork_minimizes_cost = false;
    bool counterexample = false;  // some r < n beats r = n beyond CI overlap
};

struct ConjectureReport {
    int n = 0;
    std::vector<ConjecturePoint> points;

    std::string render() const;
};

/// Simulates uniform-random forking for r = 1..n at each lambda and checks
/// whether r = n minimizes latency and cost. An empty lambda list uses
/// 0.1..0.9 of the smallest capacity over r.
ConjectureReport conjecture_probe(const ServiceDistribution& dist, int n,
                                  std::vector<double> lambdas, long jobs = 100000,
                                  std::uint64_t seed = 1);

/// Smallest service capacity over r = 1..n for uniform-random forking, using
/// the cost upper bound where the cost is not exact.
double min_capacity_over_r(const ServiceDistribution& dist, int n);

/// True when the two 95% intervals do not overlap and a < b.
bool below_beyond_ci(const stats::Estimate& a, const stats::Estimate& b);

}  // namespace redsched
