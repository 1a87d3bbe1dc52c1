#include "lml/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lml {

double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean: empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need n >= 2");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double std_error(const std::vector<double>& v) {
    return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

double ks_critical_constant(double level) {
    if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("ks_critical_constant: level in (0,1)");
    return std::sqrt(-0.5 * std::log(level / 2.0));
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf,
                 double level) {
    if (samples.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    KsResult r;
    r.statistic = d;
    r.critical = ks_critical_constant(level) / std::sqrt(n);
    r.pass = d <= r.critical;
    return r;
}

KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b, double level) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_test_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult r;
    r.statistic = d;
    r.critical = ks_critical_constant(level) * std::sqrt((na + nb) / (na * nb));
    r.pass = d <= r.critical;
    return r;
}

double dkw_epsilon(std::size_t n, double delta) {
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size())
        throw std::invalid_argument("weighted_linear_fit: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("weighted_linear_fit: need n >= 2");
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
        swxx += w[i] * x[i] * x[i];
        swxy += w[i] * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0) throw std::runtime_error("weighted_linear_fit: degenerate design");
    LinearFit fit;
    fit.n_points = x.size();
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;
    fit.slope_se = std::sqrt(sw / det);
    // weighted R^2 against the weighted mean
    const double ybar = swy / sw;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = fit.intercept + fit.slope * x[i];
        ss_res += w[i] * (y[i] - pred) * (y[i] - pred);
        ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

MeanCi bootstrap_mean_ci(const std::vector<double>& samples, double level,
                         std::size_t n_resamples, Rng& rng) {
    if (samples.empty()) throw std::invalid_argument("bootstrap_mean_ci: empty sample");
    MeanCi ci;
    ci.estimate = mean(samples);
    std::vector<double> means(n_resamples);
    const std::size_t n = samples.size();
    for (std::size_t b = 0; b < n_resamples; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += samples[rng.uniform_index(n)];
        means[b] = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double a = (1.0 - level) / 2.0;
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n_resamples - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n_resamples - 1);
        const double frac = pos - static_cast<double>(lo);
        return means[lo] * (1.0 - frac) + means[hi] * frac;
    };
    ci.lo = quantile(a);
    ci.hi = quantile(1.0 - a);
    return ci;
}

}  // namespace lml
