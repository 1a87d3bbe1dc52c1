#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lml/rng.hpp"

namespace lml {

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);
double std_error(const std::vector<double>& v);

// One-sided tail quantile constant of the Kolmogorov distribution,
// c(level) = sqrt(-log(level/2)/2); exact to ~1e-8 for level <= 0.05.
double ks_critical_constant(double level);

struct KsResult {
    double statistic = 0.0;
    double critical = 0.0;
    bool pass = false;
};

// One-sample KS against a continuous CDF.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf,
                 double level);

// Two-sample KS.
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b, double level);

// Dvoretzky-Kiefer-Wolfowitz half-width: sup|F_n - F| <= eps with prob >= 1-delta.
double dkw_epsilon(std::size_t n, double delta);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
    std::size_t n_points = 0;
};

// Weighted least squares y ~ intercept + slope*x. Weights are inverse variances.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w);

struct MeanCi {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Percentile bootstrap CI for the mean.
MeanCi bootstrap_mean_ci(const std::vector<double>& samples, double level, std::size_t n_resamples,
                         Rng& rng);

}  // namespace lml
