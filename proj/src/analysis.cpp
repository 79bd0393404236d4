#include "redsched/analysis.hpp"

#include "redsched/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace redsched {

std::string to_string(Policy p) {
    switch (p) {
        case Policy::ForkJoin: return "fork-join";
        case Policy::ForkEarlyCancel: return "fork-early-cancel";
        case Policy::PartialGroupRandom: return "group-random";
        case Policy::PartialUniformRandom: return "uniform-random";
        case Policy::PartialRoundRobin: return "round-robin";
        case Policy::PartialCancellation: return "partial-cancel";
    }
    return "?";
}

Policy parse_policy(const std::string& name) {
    std::string key;
    for (char c : name) {
        if (c == '-' || c == '_' || c == ' ') continue;
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (key == "forkjoin") return Policy::ForkJoin;
    if (key == "forkearlycancel" || key == "earlycancel") return Policy::ForkEarlyCancel;
    if (key == "grouprandom" || key == "partialgrouprandom") return Policy::PartialGroupRandom;
    if (key == "uniformrandom" || key == "partialuniformrandom") return Policy::PartialUniformRandom;
    if (key == "roundrobin" || key == "partialroundrobin") return Policy::PartialRoundRobin;
    if (key == "partialcancel" || key == "partialcancellation") return Policy::PartialCancellation;
    throw ConfigError("unknown policy '" + name + "'");
}

bool is_partial(Policy p) {
    return p != Policy::ForkJoin && p != Policy::ForkEarlyCancel;
}

void SystemSpec::validate() const {
    if (n < 1) throw ConfigError("server count n must be >= 1");
    if (r < 1 || r > n) throw ConfigError("fork degree r must satisfy 1 <= r <= n");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("arrival rate must be finite and >= 0");
    if ((policy == Policy::ForkJoin || policy == Policy::ForkEarlyCancel) && r != n)
        throw ConfigError(to_string(policy) + " requires r = n");
    if (policy == Policy::PartialGroupRandom && n % r != 0)
        throw ConfigError("group-random requires r to divide n");
}

std::string to_string(LatencyKind k) {
    switch (k) {
        case LatencyKind::Exact: return "Exact";
        case LatencyKind::Approximation: return "Approximation";
        case LatencyKind::BoundsOnly: return "BoundsOnly";
    }
    return "?";
}

std::optional<double> mg1_latency(double arrival_rate, double m1, double m2) {
    const double rho = arrival_rate * m1;
    if (rho >= 1.0) return std::nullopt;
    return m1 + arrival_rate * m2 / (2.0 * (1.0 - rho));
}

AnalyticMetrics fork_join_metrics(const SystemSpec& spec) {
    spec.validate();
    if (spec.policy != Policy::ForkJoin && spec.r != spec.n)
        throw ConfigError("fork-join metrics need every job forked to all n servers");
    const double m1 = spec.dist.min_moment(spec.n, 1);
    const double m2 = spec.dist.min_moment(spec.n, 2);
    AnalyticMetrics out;
    out.latency_kind = LatencyKind::Exact;
    out.expected_latency = mg1_latency(spec.lambda, m1, m2);
    const double cost = spec.n * m1;
    out.expected_cost = CostInterval{cost, cost};
    out.capacity = capacity(spec, cost);
    out.utilization = spec.lambda / *out.capacity;
    return out;
}

double erlang_c_probability(int n, double offered_load) {
    if (n < 1) throw ConfigError("Erlang-C needs at least one server");
    if (offered_load <= 0.0) return 0.0;
    const double rho = offered_load / n;
    if (rho >= 1.0) return 1.0;
    // Erlang-B recurrence, then convert to Erlang-C; no factorials involved.
    double b = 1.0;
    for (int k = 1; k <= n; ++k) b = offered_load * b / (k + offered_load * b);
    return b / (1.0 - rho * (1.0 - b));
}

double erlang_c_wait(int n, double lambda, double mean_service) {
    if (n < 1) throw ConfigError("Erlang-C needs at least one server");
    if (!(mean_service > 0.0)) throw ConfigError("mean service time must be positive");
    const double a = lambda * mean_service;
    if (a / n >= 1.0)
        throw InstabilityError("M/M/n load lambda*E[X]/n must be < 1 for a finite wait");
    if (a <= 0.0) return 0.0;
    return erlang_c_probability(n, a) / (n / mean_service - lambda);
}

AnalyticMetrics early_cancel_metrics(const SystemSpec& spec) {
    spec.validate();
    const double ex = spec.dist.mean();
    const double ex2 = spec.dist.second_moment();
    AnalyticMetrics out;
    out.latency_kind = LatencyKind::Approximation;
    out.expected_cost = CostInterval{ex, ex};
    out.capacity = capacity(spec, ex);
    out.utilization = spec.lambda / *out.capacity;
    if (spec.lambda < *out.capacity) {
        const double factor = ex2 / (2.0 * ex * ex);
        out.expected_latency = ex + factor * erlang_c_wait(spec.n, spec.lambda, ex);
    }
    return out;
}

AnalyticMetrics group_fork_metrics(const SystemSpec& spec) {
    spec.validate();
    if (spec.n % spec.r != 0) throw ConfigError("group-random requires r to divide n");
    const double m1 = spec.dist.min_moment(spec.r, 1);
    const double m2 = spec.dist.min_moment(spec.r, 2);
    AnalyticMetrics out;
    out.latency_kind = LatencyKind::Exact;
    // Each of the n/r groups is an (r,1) fork-join queue fed at lambda r / n.
    out.expected_latency = mg1_latency(spec.lambda * spec.r / spec.n, m1, m2);
    const double cost = spec.r * m1;
    out.expected_cost = CostInterval{cost, cost};
    out.capacity = capacity(spec, cost);
    out.utilization = spec.lambda / *out.capacity;
    return out;
}

double capacity(const SystemSpec& spec, double expected_cost) {
    if (!(expected_cost > 0.0)) throw ConfigError("expected cost must be positive");
    return spec.n / expected_cost;
}

std::optional<CostInterval> cost_bounds(const SystemSpec& spec) {
    spec.validate();
    const auto& d = spec.dist;
    const double ex = d.mean();
    if (spec.policy == Policy::ForkEarlyCancel || spec.r == 1) return CostInterval{ex, ex};
    const double simultaneous = spec.r * d.min_moment(spec.r, 1);
    // Every replica starts together under these placements.
    if (spec.policy == Policy::ForkJoin || spec.policy == Policy::PartialGroupRandom || spec.r == spec.n)
        return CostInterval{simultaneous, simultaneous};
    switch (d.classify()) {
        case ConcavityClass::LogConcave: return CostInterval{ex, simultaneous};
        case ConcavityClass::LogConvex: return CostInterval{simultaneous, ex};
        case ConcavityClass::Both: return CostInterval{simultaneous, simultaneous};
        case ConcavityClass::Neither: return std::nullopt;
    }
    return std::nullopt;
}

AnalyticMetrics analyze(const SystemSpec& spec) {
    spec.validate();
    switch (spec.policy) {
        case Policy::ForkJoin: return fork_join_metrics(spec);
        case Policy::ForkEarlyCancel: return early_cancel_metrics(spec);
        case Policy::PartialGroupRandom: return group_fork_metrics(spec);
        default: break;
    }

    // Partial policies that degenerate to a system with a closed form.
    if (spec.r == spec.n) {
        SystemSpec full = spec;
        full.policy = Policy::ForkJoin;
        return fork_join_metrics(full);
    }
    if (spec.r == 1 && spec.policy == Policy::PartialUniformRandom) {
        SystemSpec single = spec;
        single.policy = Policy::PartialGroupRandom;
        return group_fork_metrics(single);
    }
    if (spec.r == 1 && spec.policy == Policy::PartialCancellation) {
        SystemSpec early = spec;
        early.policy = Policy::ForkEarlyCancel;
        early.r = early.n;
        return early_cancel_metrics(early);
    }

    AnalyticMetrics out;
    out.latency_kind = LatencyKind::BoundsOnly;
    out.expected_cost = cost_bounds(spec);
    if (out.expected_cost && out.expected_cost->exact()) {
        out.capacity = capacity(spec, out.expected_cost->lo);
        out.utilization = spec.lambda / *out.capacity;
    }
    return out;
}

CostDecomposition cost_decomposition(const std::vector<double>& offsets,
                                     const ServiceDistribution& d, long samples,
                                     std::uint64_t seed) {
    if (offsets.empty() || offsets.front() != 0.0)
        throw ConfigError("relative start times must begin with t1 = 0");
    if (!std::is_sorted(offsets.begin(), offsets.end()))
        throw ConfigError("relative start times must be non-decreasing");
    if (samples < 1) throw ConfigError("need at least one sample");

    std::vector<double> started;
    for (double t : offsets)
        if (std::isfinite(t)) started.push_back(t);

    Rng rng(seed);
    double sum_s = 0.0, sum_s2 = 0.0, sum_c = 0.0, sum_c2 = 0.0;
    for (long i = 0; i < samples; ++i) {
        double s = std::numeric_limits<double>::infinity();
        for (double t : started) s = std::min(s, t + d.sample(rng));
        double c = 0.0;
        for (double t : started) c += std::max(0.0, s - t);
        sum_s += s;
        sum_s2 += s * s;
        sum_c += c;
        sum_c2 += c * c;
    }
    const double m = static_cast<double>(samples);
    auto se = [m](double sum, double sum2) {
        if (m < 2) return 0.0;
        const double mean = sum / m;
        const double var = std::max(0.0, (sum2 - m * mean * mean) / (m - 1.0));
        return std::sqrt(var / m);
    };

    CostDecomposition out;
    out.mean_s = sum_s / m;
    out.se_s = se(sum_s, sum_s2);
    out.mean_cost = sum_c / m;
    out.se_cost = se(sum_c, sum_c2);
    out.tail_s = [d, started](double s) {
        double p = 1.0;
        for (double t : started) p *= d.tail(s - t);
        return p;
    };
    return out;
}

}  // namespace redsched
