#include "redsched/stats.hpp"

#include "redsched/errors.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace redsched::stats {

double t_quantile_975(int dof) {
    if (dof < 1) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.975);
}

Estimate sample_mean(std::span<const double> values) {
    Estimate e;
    const auto n = values.size();
    if (n == 0) return e;
    e.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    if (n < 2) return e;
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    const double var = ss / static_cast<double>(n - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n));
    e.half_width = t_quantile_975(static_cast<int>(n - 1)) * e.std_error;
    return e;
}

Estimate batch_means(std::span<const double> series, int batches) {
    if (batches < 2) throw ConfigError("batch means needs at least 2 batches");
    const std::size_t per = series.size() / static_cast<std::size_t>(batches);
    if (per == 0) return sample_mean(series);
    std::vector<double> avgs(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) {
        auto chunk = series.subspan(static_cast<std::size_t>(b) * per, per);
        avgs[static_cast<std::size_t>(b)] =
            std::accumulate(chunk.begin(), chunk.end(), 0.0) / static_cast<double>(per);
    }
    return sample_mean(avgs);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) return 1.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double best = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    LinearFit fit;
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return fit;
    const double mx = std::accumulate(x.begin(), x.begin() + n, 0.0) / n;
    const double my = std::accumulate(y.begin(), y.begin() + n, 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double res = y[i] - fit.intercept - fit.slope * x[i];
            rss += res * res;
        }
        fit.slope_std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

}  // namespace redsched::stats
