#include "lml/stable_noise.hpp"

#include <cmath>
#include <stdexcept>

namespace lml {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

void StableSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("StableSpec: alpha must be in (0,2)");
    if (!(c_alpha > 0.0)) throw std::invalid_argument("StableSpec: c_alpha must be positive");
    if (!(K > 0.0)) throw std::invalid_argument("StableSpec: K must be positive");
}

double StableSpec::gamma_K() const {
    return 2.0 * c_alpha / (alpha * std::pow(K, alpha));
}

double StableSpec::p_K_density(double z) const {
    const double az = std::abs(z);
    if (az <= K) return 0.0;
    return 0.5 * alpha * std::pow(K, alpha) * std::pow(az, -alpha - 1.0);
}

double StableSpec::nu_K_cdf(double z) const {
    if (z <= -K) return 0.5 * std::pow(K / -z, alpha);
    if (z < K) return 0.5;
    return 1.0 - 0.5 * std::pow(K / z, alpha);
}

double StableSpec::truncated_variance(double cutoff) const {
    return 2.0 * c_alpha * std::pow(cutoff, 2.0 - alpha) / (2.0 - alpha);
}

double StableSpec::sigma_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("sigma_alpha: alpha in (0,2)");
    if (std::abs(alpha - 1.0) < 1e-9) return kPi;
    return 2.0 * std::tgamma(2.0 - alpha) * std::cos(kPi * alpha / 2.0) / (alpha * (1.0 - alpha));
}

double StableSpec::canonical_c_alpha(double alpha) { return 1.0 / sigma_alpha(alpha); }

double StableSpec::scale() const { return c_alpha * sigma_alpha(alpha); }

StableSpec StableSpec::unit_scale(double alpha, double K) {
    return StableSpec{alpha, canonical_c_alpha(alpha), K};
}

std::complex<double> StableSpec::char_function(double xi, double t) const {
    if (t < 0.0) throw std::invalid_argument("char_function: t must be >= 0");
    return {std::exp(-scale() * std::pow(std::abs(xi), alpha) * t), 0.0};
}

double sample_large_jump(const StableSpec& spec, Rng& rng) {
    const double mag = spec.K * std::pow(rng.uniform(), -1.0 / spec.alpha);
    return rng.bernoulli(0.5) ? mag : -mag;
}

double small_gaussian_variance(const StableSpec& spec, const SmallJumpConfig& cfg) {
    const double cutoff =
        cfg.scheme == SmallJumpScheme::gaussian ? spec.K : cfg.eps_inner * spec.K;
    return spec.truncated_variance(cutoff);
}

namespace {

// one draw of |x| from nu restricted to [a, b), both sides folded together
double truncated_pareto_magnitude(double a, double b, double alpha, Rng& rng) {
    const double ia = std::pow(a, -alpha);
    const double ib = std::pow(b, -alpha);
    const double u = rng.uniform();
    return std::pow(ia - u * (ia - ib), -1.0 / alpha);
}

}  // namespace

double sample_small_increment(const StableSpec& spec, const SmallJumpConfig& cfg, double dt,
                              Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_small_increment: dt must be positive");
    double inc = std::sqrt(small_gaussian_variance(spec, cfg) * dt) * rng.normal();
    if (cfg.scheme == SmallJumpScheme::gaussian_plus_poisson) {
        const double a = cfg.eps_inner * spec.K;
        const double b = spec.K;
        // layer rate: nu({a <= |x| < b}) = 2 c (a^-alpha - b^-alpha)/alpha
        const double rate =
            2.0 * spec.c_alpha * (std::pow(a, -spec.alpha) - std::pow(b, -spec.alpha)) / spec.alpha;
        double t = rng.exponential(rate);
        while (t < dt) {
            const double mag = truncated_pareto_magnitude(a, b, spec.alpha, rng);
            inc += rng.bernoulli(0.5) ? mag : -mag;
            t += rng.exponential(rate);
        }
    }
    return inc;
}

double small_jump_cf_bias_bound(const StableSpec& spec, const SmallJumpConfig& cfg, double xi,
                                double t) {
    const double b = cfg.scheme == SmallJumpScheme::gaussian ? spec.K : cfg.eps_inner * spec.K;
    const double x4 = xi * xi * xi * xi;
    return t * x4 * spec.c_alpha * std::pow(b, 4.0 - spec.alpha) / (12.0 * (4.0 - spec.alpha));
}

std::vector<double> JumpStream::sampled_times() const {
    std::vector<double> out;
    out.reserve(sampled.size());
    for (std::size_t i : sampled) out.push_back(arrivals[i].time);
    return out;
}

JumpStream sample_jump_stream(const StableSpec& spec, double waiting_T, double horizon, Rng& rng) {
    spec.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_jump_stream: horizon must be positive");
    if (waiting_T < 0.0) throw std::invalid_argument("sample_jump_stream: waiting_T must be >= 0");
    if (waiting_T >= horizon)
        throw std::invalid_argument("sample_jump_stream: need horizon > waiting_T");

    JumpStream s;
    s.horizon = horizon;
    s.waiting_T = waiting_T;
    const double rate = spec.gamma_K();
    double t = rng.exponential(rate);
    while (t <= horizon) {
        s.arrivals.push_back({t, sample_large_jump(spec, rng)});
        t += rng.exponential(rate);
    }
    double window_end = waiting_T;  // next sampled time is the first arrival > tau_{k-1} + T
    for (std::size_t i = 0; i < s.arrivals.size(); ++i) {
        if (s.arrivals[i].time > window_end) {
            s.sampled.push_back(i);
            window_end = s.arrivals[i].time + waiting_T;
        }
    }
    return s;
}

}  // namespace lml
