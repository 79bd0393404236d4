#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace redsched {

using Rng = std::mt19937_64;

// Uniform draw in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Exponential {
    double mu;
};

struct ShiftedExp {
    double delta;
    double mu;
};

// Mixture: rate mu1 with probability p, rate mu2 otherwise.
struct HyperExp {
    double p;
    double mu1;
    double mu2;
};

// Distribution defined only through its tail Pr(X > x). `support_hint` is a
// rough scale of the bulk of the distribution, used to seed integration and
// quantile searches.
struct GenericTail {
    std::function<double(double)> tail;
    double support_hint = 1.0;
};

enum class ConcavityClass { LogConcave, LogConvex, Both, Neither };

std::string to_string(ConcavityClass c);

/// Service-time law X of one task at one server.
///
/// Values are immutable after construction and may be shared across threads.
/// Parametric kinds answer moment queries in closed form; GenericTail falls
/// back to adaptive quadrature of the tail.
class ServiceDistribution {
public:
    using Kind = std::variant<Exponential, ShiftedExp, HyperExp, GenericTail>;

    static ServiceDistribution exponential(double mu);
    static ServiceDistribution shifted_exp(double delta, double mu);
    static ServiceDistribution hyper_exp(double p, double mu1, double mu2);
    static ServiceDistribution generic(std::function<double(double)> tail,
                                       double support_hint = 1.0);

    const Kind& kind() const { return kind_; }
    bool is_generic() const { return std::holds_alternative<GenericTail>(kind_); }

    /// Pr(X > x). Equal to 1 for x <= 0.
    double tail(double x) const;

    /// One draw of X.
    double sample(Rng& rng) const;

    /// E[X_{1:r}^k] for k in {1, 2}: moments of the minimum of r i.i.d. copies.
    double min_moment(int r, int k) const;

    /// Same quantity by numerical integration of k x^{k-1} tail(x)^r, whatever
    /// the kind. Throws NonFiniteMomentError when the integral diverges.
    double min_moment_quadrature(int r, int k) const;

    double mean() const { return min_moment(1, 1); }
    double second_moment() const { return min_moment(1, 2); }

    /// Smallest x with tail(x) <= level (bisection for GenericTail).
    double quantile_tail(double level) const;

    ConcavityClass classify() const;

    /// Config literal, e.g. {kind = "shiftedexp", delta = 1, mu = 0.5}.
    std::string to_literal() const;

private:
    explicit ServiceDistribution(Kind kind) : kind_(std::move(kind)) {}

    double mean_scale_hint() const;

    Kind kind_;
};

/// Grid-based log-concavity test on log tail(x); used for GenericTail and
/// exposed for cross-checking the analytic classification.
ConcavityClass classify_numerically(const ServiceDistribution& d, int points = 200);

struct NbuReport {
    bool nbu_holds = true;  // tail(x+t)/tail(t) <= tail(x) at every checked point
    bool nwu_holds = true;  // reversed inequality at every checked point
    int checked = 0;
    int skipped = 0;        // points with tail(t) == 0
};

NbuReport nbu_check(const ServiceDistribution& d,
                    const std::vector<std::pair<double, double>>& grid);

/// Parses {kind = "exp", mu = 1.0} style literals. JSON objects with the same
/// keys are accepted too. Throws ConfigError.
ServiceDistribution parse_distribution_literal(const std::string& text);

}  // namespace redsched
