#pragma once

#include <span>
#include <vector>

namespace redsched::stats {

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;  // 95% confidence half-width
    double std_error = 0.0;
};

/// Batch-means estimate of a steady-state mean from an autocorrelated series.
/// The series is cut into `batches` contiguous equal batches (trailing
/// remainder dropped); the batch averages are treated as i.i.d.
Estimate batch_means(std::span<const double> series, int batches = 20);

/// Plain i.i.d. sample mean with a Student-t interval.
Estimate sample_mean(std::span<const double> values);

/// Two-sided Student-t quantile for a 95% interval with `dof` degrees of freedom.
double t_quantile_975(int dof);

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_std_error = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace redsched::stats
