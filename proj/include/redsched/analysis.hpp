#pragma once

#include "redsched/distributions.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace redsched {

enum class Policy {
    ForkJoin,
    ForkEarlyCancel,
    PartialGroupRandom,
    PartialUniformRandom,
    PartialRoundRobin,
    PartialCancellation,
};

std::string to_string(Policy p);
/// Accepts the names produced by to_string (case-insensitive, '-' or '_'
/// separators). Throws ConfigError.
Policy parse_policy(const std::string& name);

bool is_partial(Policy p);

/// System under study: n servers, fork degree r, Poisson arrivals at `lambda`.
struct SystemSpec {
    int n = 1;
    int r = 1;
    double lambda = 0.0;
    Policy policy = Policy::ForkJoin;
    ServiceDistribution dist = ServiceDistribution::exponential(1.0);

    /// Throws ConfigError on violated policy/r/n constraints.
    void validate() const;
};

enum class LatencyKind { Exact, Approximation, BoundsOnly };

std::string to_string(LatencyKind k);

struct CostInterval {
    double lo = 0.0;
    double hi = 0.0;

    bool exact() const { return lo == hi; }
    bool contains(double v, double slack = 0.0) const { return v >= lo - slack && v <= hi + slack; }
};

struct AnalyticMetrics {
    std::optional<double> expected_latency;  // empty when unstable or not derivable
    LatencyKind latency_kind = LatencyKind::Exact;
    std::optional<CostInterval> expected_cost;
    std::optional<double> capacity;          // jobs/sec; needs an exact cost
    std::optional<double> utilization;       // lambda / capacity
};

/// Pollaczek-Khinchine latency of an M/G/1 queue given the first two service
/// moments. Empty when arrival_rate * m1 >= 1.
std::optional<double> mg1_latency(double arrival_rate, double m1, double m2);

AnalyticMetrics fork_join_metrics(const SystemSpec& spec);
AnalyticMetrics early_cancel_metrics(const SystemSpec& spec);
AnalyticMetrics group_fork_metrics(const SystemSpec& spec);

/// Mean wait in an M/M/n queue (Erlang-C). Throws InstabilityError when the
/// load lambda * mean_service / n is at least 1.
double erlang_c_wait(int n, double lambda, double mean_service);

/// Probability that an arrival waits in an M/M/n queue with offered load a.
double erlang_c_probability(int n, double offered_load);

/// Service capacity of a symmetric policy: n / E[C].
double capacity(const SystemSpec& spec, double expected_cost);

/// Cost bounds that hold for every relative start-time pattern of r replicas.
/// Empty when the tail is neither log-concave nor log-convex.
std::optional<CostInterval> cost_bounds(const SystemSpec& spec);

/// Dispatches on spec.policy. Partial policies without a closed form carry
/// BoundsOnly with the cost bounds; their capacity stays empty unless the
/// bounds collapse to a point.
AnalyticMetrics analyze(const SystemSpec& spec);

struct CostDecomposition {
    double mean_s = 0.0;
    double se_s = 0.0;
    double mean_cost = 0.0;
    double se_cost = 0.0;
    std::function<double(double)> tail_s;  // exact Pr(S > s)
};

/// Monte-Carlo evaluation of S = min_i(X_i + t_i) and C = S + sum_{i>=2}(S - t_i)^+
/// for fixed relative start times. Offsets may be +infinity (never started).
CostDecomposition cost_decomposition(const std::vector<double>& offsets,
                                     const ServiceDistribution& d, long samples,
                                     std::uint64_t seed = 1);

}  // namespace redsched
