#include "redsched/distributions.hpp"

#include "redsched/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace redsched {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double draw_exp(Rng& rng, double mu) { return -std::log1p(-uniform01(rng)) / mu; }

// Binomial(r, p) probability mass at j, evaluated in log space so that large r
// does not overflow the coefficient.
double binomial_pmf(int r, int j, double p) {
    if (p <= 0.0) return j == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return j == r ? 1.0 : 0.0;
    const double log_coeff = std::lgamma(r + 1.0) - std::lgamma(j + 1.0) - std::lgamma(r - j + 1.0);
    return std::exp(log_coeff + j * std::log(p) + (r - j) * std::log1p(-p));
}

void require(bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string to_string(ConcavityClass c) {
    switch (c) {
        case ConcavityClass::LogConcave: return "log-concave";
        case ConcavityClass::LogConvex: return "log-convex";
        case ConcavityClass::Both: return "both";
        case ConcavityClass::Neither: return "neither";
    }
    return "?";
}

ServiceDistribution ServiceDistribution::exponential(double mu) {
    require(mu > 0.0 && std::isfinite(mu), "exponential rate mu must be positive");
    return ServiceDistribution(Exponential{mu});
}

ServiceDistribution ServiceDistribution::shifted_exp(double delta, double mu) {
    require(delta >= 0.0 && std::isfinite(delta), "shift delta must be non-negative");
    require(mu > 0.0 && std::isfinite(mu), "shifted exponential rate mu must be positive");
    return ServiceDistribution(ShiftedExp{delta, mu});
}

ServiceDistribution ServiceDistribution::hyper_exp(double p, double mu1, double mu2) {
    require(p >= 0.0 && p <= 1.0, "hyperexp weight p must lie in [0, 1]");
    require(mu1 > 0.0 && mu2 > 0.0 && std::isfinite(mu1) && std::isfinite(mu2),
            "hyperexp rates must be positive");
    return ServiceDistribution(HyperExp{p, mu1, mu2});
}

ServiceDistribution ServiceDistribution::generic(std::function<double(double)> tail,
                                                 double support_hint) {
    require(static_cast<bool>(tail), "generic tail function is empty");
    require(support_hint > 0.0, "support hint must be positive");
    return ServiceDistribution(GenericTail{std::move(tail), support_hint});
}

double ServiceDistribution::tail(double x) const {
    if (x <= 0.0) return 1.0;
    return std::visit(
        overloaded{
            [&](const Exponential& e) { return std::exp(-e.mu * x); },
            [&](const ShiftedExp& s) {
                return x <= s.delta ? 1.0 : std::exp(-s.mu * (x - s.delta));
            },
            [&](const HyperExp& h) {
                return h.p * std::exp(-h.mu1 * x) + (1.0 - h.p) * std::exp(-h.mu2 * x);
            },
            [&](const GenericTail& g) { return std::clamp(g.tail(x), 0.0, 1.0); },
        },
        kind_);
}

double ServiceDistribution::quantile_tail(double level) const {
    if (level >= 1.0) return 0.0;
    if (level <= 0.0) return std::numeric_limits<double>::infinity();
    if (const auto* e = std::get_if<Exponential>(&kind_)) return -std::log(level) / e->mu;
    if (const auto* s = std::get_if<ShiftedExp>(&kind_)) return s->delta - std::log(level) / s->mu;

    double hi = 1.0;
    if (const auto* g = std::get_if<GenericTail>(&kind_)) hi = g->support_hint;
    double lo = 0.0;
    for (int i = 0; tail(hi) > level; ++i) {
        if (i > 1100) return std::numeric_limits<double>::infinity();
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) > level ? lo : hi) = mid;
    }
    return hi;
}

double ServiceDistribution::sample(Rng& rng) const {
    return std::visit(
        overloaded{
            [&](const Exponential& e) { return draw_exp(rng, e.mu); },
            [&](const ShiftedExp& s) { return s.delta + draw_exp(rng, s.mu); },
            [&](const HyperExp& h) {
                const double u = uniform01(rng);
                return draw_exp(rng, u < h.p ? h.mu1 : h.mu2);
            },
            [&](const GenericTail&) {
                // Inverse transform: X = inf{x : tail(x) <= U}.
                double u = uniform01(rng);
                if (u <= 0.0) u = 0x1.0p-53;
                return quantile_tail(u);
            },
        },
        kind_);
}

double ServiceDistribution::min_moment(int r, int k) const {
    require(r >= 1, "order-statistic count r must be >= 1");
    require(k == 1 || k == 2, "moment order must be 1 or 2");
    return std::visit(
        overloaded{
            [&](const Exponential& e) {
                // min of r exponentials is Exp(r mu)
                const double rate = r * e.mu;
                return k == 1 ? 1.0 / rate : 2.0 / (rate * rate);
            },
            [&](const ShiftedExp& s) {
                const double rate = r * s.mu;
                if (k == 1) return s.delta + 1.0 / rate;
                return s.delta * s.delta + 2.0 * s.delta / rate + 2.0 / (rate * rate);
            },
            [&](const HyperExp& h) {
                // Condition on j of the r copies drawing the mu1 branch.
                double sum = 0.0;
                for (int j = 0; j <= r; ++j) {
                    const double w = binomial_pmf(r, j, h.p);
                    if (w == 0.0) continue;
                    const double rate = j * h.mu1 + (r - j) * h.mu2;
                    sum += k == 1 ? w / rate : 2.0 * w / (rate * rate);
                }
                return sum;
            },
            [&](const GenericTail&) { return min_moment_quadrature(r, k); },
        },
        kind_);
}

double ServiceDistribution::min_moment_quadrature(int r, int k) const {
    require(r >= 1, "order-statistic count r must be >= 1");
    require(k == 1 || k == 2, "moment order must be 1 or 2");
    using boost::math::quadrature::gauss_kronrod;

    auto integrand = [&](double x) {
        const double t = std::pow(tail(x), r);
        return k == 1 ? t : 2.0 * x * t;
    };

    double start = 1.0;
    if (const auto* g = std::get_if<GenericTail>(&kind_)) start = g->support_hint;
    else start = std::max(1e-3, mean_scale_hint());

    // Integrate over dyadic pieces [0, b], [b, 2b], ... until the remaining
    // tail mass is negligible.
    double total = 0.0;
    double total_err = 0.0;
    double a = 0.0;
    double b = start;
    for (int piece = 0; piece < 200; ++piece) {
        // The library takes a relative tolerance; derive it from a coarse
        // estimate so each piece is resolved to ~1e-11 absolute.
        const double coarse = gauss_kronrod<double, 31>::integrate(integrand, a, b, 0, 0.0);
        const double rel_tol = std::clamp(1e-11 / std::max(std::abs(coarse), 1e-300), 1e-13, 1e-3);
        double err = 0.0;
        const double part = gauss_kronrod<double, 31>::integrate(integrand, a, b, 18, rel_tol, &err);
        if (!std::isfinite(part)) break;
        total += part;
        total_err += err;
        const double tail_r = std::pow(tail(b), r);
        const double weight = k == 1 ? std::max(1.0, b) : std::max(1.0, b * b);
        if (tail_r * weight < 1e-12 && part < 1e-10 * std::max(1.0, total)) {
            if (total_err > 1e-6 * std::max(1.0, total)) break;
            return total;
        }
        if (b > 1e15) break;
        a = b;
        b *= 2.0;
    }
    throw NonFiniteMomentError("moment integral of order " + std::to_string(k) +
                               " for the minimum of " + std::to_string(r) +
                               " copies does not converge");
}

double ServiceDistribution::mean_scale_hint() const {
    return std::visit(overloaded{
                          [](const Exponential& e) { return 1.0 / e.mu; },
                          [](const ShiftedExp& s) { return s.delta + 1.0 / s.mu; },
                          [](const HyperExp& h) { return h.p / h.mu1 + (1.0 - h.p) / h.mu2; },
                          [](const GenericTail& g) { return g.support_hint; },
                      },
                      kind_);
}

ConcavityClass ServiceDistribution::classify() const {
    return std::visit(
        overloaded{
            [](const Exponential&) { return ConcavityClass::Both; },
            [](const ShiftedExp& s) {
                return s.delta > 0.0 ? ConcavityClass::LogConcave : ConcavityClass::Both;
            },
            [](const HyperExp& h) {
                const bool mixed = h.p > 0.0 && h.p < 1.0 && h.mu1 != h.mu2;
                return mixed ? ConcavityClass::LogConvex : ConcavityClass::Both;
            },
            [this](const GenericTail&) { return classify_numerically(*this); },
        },
        kind_);
}

std::string ServiceDistribution::to_literal() const {
    return std::visit(
        overloaded{
            [](const Exponential& e) { return "{kind = \"exp\", mu = " + fmt_num(e.mu) + "}"; },
            [](const ShiftedExp& s) {
                return "{kind = \"shiftedexp\", delta = " + fmt_num(s.delta) +
                       ", mu = " + fmt_num(s.mu) + "}";
            },
            [](const HyperExp& h) {
                return "{kind = \"hyperexp\", p = " + fmt_num(h.p) + ", mu1 = " + fmt_num(h.mu1) +
                       ", mu2 = " + fmt_num(h.mu2) + "}";
            },
            [](const GenericTail& g) {
                return "{kind = \"generic\", hint = " + fmt_num(g.support_hint) + "}";
            },
        },
        kind_);
}

ConcavityClass classify_numerically(const ServiceDistribution& d, int points) {
    constexpr double eps = 1e-9;
    const double x_lo = 1e-4 * d.mean();
    const double x_hi = d.quantile_tail(1e-6);
    if (!(x_hi > x_lo) || points < 3) return ConcavityClass::Both;

    // Geometric grid resolves curvature near the origin.
    const double ratio = std::pow(x_hi / x_lo, 1.0 / (points - 1));
    std::vector<double> xs;
    std::vector<double> gs;
    xs.reserve(points);
    gs.reserve(points);
    double x = x_lo;
    for (int i = 0; i < points; ++i, x *= ratio) {
        const double t = d.tail(x);
        if (t <= 0.0) break;
        xs.push_back(x);
        gs.push_back(std::log(t));
    }

    bool concave = true;
    bool convex = true;
    for (std::size_t i = 0; i + 2 < xs.size(); ++i) {
        const double s1 = (gs[i + 1] - gs[i]) / (xs[i + 1] - xs[i]);
        const double s2 = (gs[i + 2] - gs[i + 1]) / (xs[i + 2] - xs[i + 1]);
        const double scale = std::max({std::abs(s1), std::abs(s2), 1e-300});
        const double diff = s2 - s1;
        if (diff > eps * scale) concave = false;
        if (diff < -eps * scale) convex = false;
    }
    if (concave && convex) return ConcavityClass::Both;
    if (concave) return ConcavityClass::LogConcave;
    if (convex) return ConcavityClass::LogConvex;
    return ConcavityClass::Neither;
}

NbuReport nbu_check(const ServiceDistribution& d,
                    const std::vector<std::pair<double, double>>& grid) {
    NbuReport report;
    for (const auto& [x, t] : grid) {
        const double used = d.tail(t);
        if (used <= 0.0) {
            ++report.skipped;
            continue;
        }
        const double residual = d.tail(x + t) / used;
        const double fresh = d.tail(x);
        const double tol = 1e-12 * std::max(residual, fresh) + 1e-300;
        if (residual > fresh + tol) report.nbu_holds = false;
        if (residual < fresh - tol) report.nwu_holds = false;
        ++report.checked;
    }
    return report;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

ServiceDistribution parse_distribution_literal(const std::string& text) {
    std::string body = trim(text);
    if (body.size() < 2 || body.front() != '{' || body.back() != '}')
        throw ConfigError("distribution literal must be enclosed in braces: " + text);
    body = body.substr(1, body.size() - 2);

    std::map<std::string, std::string> fields;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        auto sep = item.find('=');
        if (sep == std::string::npos) sep = item.find(':');
        if (sep == std::string::npos)
            throw ConfigError("expected key = value in distribution literal, got '" + trim(item) + "'");
        const std::string key = unquote(item.substr(0, sep));
        const std::string value = unquote(item.substr(sep + 1));
        if (!fields.emplace(key, value).second)
            throw ConfigError("duplicate key '" + key + "' in distribution literal");
    }

    auto kind_it = fields.find("kind");
    if (kind_it == fields.end()) throw ConfigError("distribution literal is missing 'kind'");
    std::string kind = kind_it->second;
    std::transform(kind.begin(), kind.end(), kind.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    fields.erase(kind_it);

    auto number = [&](const std::string& key) {
        auto it = fields.find(key);
        if (it == fields.end())
            throw ConfigError("distribution '" + kind + "' requires parameter '" + key + "'");
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing");
            fields.erase(it);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("parameter '" + key + "' is not a number: '" + it->second + "'");
        }
    };
    auto finish = [&](ServiceDistribution d) {
        if (!fields.empty())
            throw ConfigError("unknown parameter '" + fields.begin()->first +
                              "' for distribution '" + kind + "'");
        return d;
    };

    if (kind == "exp" || kind == "exponential") {
        const double mu = number("mu");
        return finish(ServiceDistribution::exponential(mu));
    }
    if (kind == "shiftedexp") {
        const double delta = number("delta");
        const double mu = number("mu");
        return finish(ServiceDistribution::shifted_exp(delta, mu));
    }
    if (kind == "hyperexp") {
        const double p = number("p");
        const double mu1 = number("mu1");
        const double mu2 = number("mu2");
        return finish(ServiceDistribution::hyper_exp(p, mu1, mu2));
    }
    throw ConfigError("unknown distribution kind '" + kind + "'");
}

}  // namespace redsched
