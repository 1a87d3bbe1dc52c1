#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "lml/rng.hpp"

namespace lml {

// Symmetric alpha-stable jump intensity nu(dx) = c_alpha |x|^{-alpha-1} dx with a
// large-jump cutoff K. Everything downstream (jump rates, the normalized
// large-jump law nu_K, the coupling densities) derives from these three numbers.
struct StableSpec {
    double alpha = 1.0;    // stability index, in (0,2)
    double c_alpha = 1.0;  // intensity constant, > 0
    double K = 1.0;        // large-jump threshold, > 0

    void validate() const;

    // total intensity of jumps with |x| >= K: 2 c_alpha / (alpha K^alpha)
    double gamma_K() const;

    // density of nu_K = nu restricted to {|x| >= K}, normalized:
    // (alpha K^alpha / 2) |z|^{-alpha-1} on |z| > K, zero otherwise
    double p_K_density(double z) const;

    // CDF of nu_K (two-sided Pareto), used as an analytic oracle by samplers' tests
    double nu_K_cdf(double z) const;

    // variance per unit time of the residual jumps |x| < cutoff:
    // 2 c_alpha cutoff^{2-alpha} / (2-alpha)
    double truncated_variance(double cutoff) const;

    // ---- scale bookkeeping (the c_alpha <-> characteristic-exponent map) ----
    // The process with intensity c_alpha |x|^{-1-alpha} has E e^{i xi z(t)}
    // = exp(-scale() |xi|^alpha t) with scale() = c_alpha * sigma_alpha(alpha),
    // sigma_alpha = 2 int_0^inf (1-cos u) u^{-1-alpha} du
    //             = 2 Gamma(2-alpha) cos(pi alpha/2) / (alpha (1-alpha))  (pi at alpha=1).
    static double sigma_alpha(double alpha);
    static double canonical_c_alpha(double alpha);  // 1/sigma_alpha: makes scale()=1
    double scale() const;
    static StableSpec unit_scale(double alpha, double K);

    std::complex<double> char_function(double xi, double t) const;
};

// One draw from nu_K: sign +-1 with prob 1/2, magnitude K U^{-1/alpha}.
double sample_large_jump(const StableSpec& spec, Rng& rng);

// Approximation scheme for the residual process z - z^K.
enum class SmallJumpScheme {
    gaussian,               // variance-matched Gaussian for all jumps |x| < K
    gaussian_plus_poisson,  // Gaussian below eps_inner*K plus an exact compound-Poisson
                            // layer for jumps in [eps_inner*K, K)
};

struct SmallJumpConfig {
    SmallJumpScheme scheme = SmallJumpScheme::gaussian;
    double eps_inner = 0.05;
};

// Gaussian variance per unit time under the given scheme (cutoff K or eps_inner*K).
double small_gaussian_variance(const StableSpec& spec, const SmallJumpConfig& cfg);

// Increment of the residual process over dt. Throws on dt <= 0.
double sample_small_increment(const StableSpec& spec, const SmallJumpConfig& cfg, double dt,
                              Rng& rng);

// Bound on |log CF_true - log CF_scheme| for the residual process at frequency xi
// over horizon t: t xi^4 c_alpha b^{4-alpha} / (12 (4-alpha)), b = Gaussian cutoff.
// Quantifies the Gaussian-substitution bias; exact-law tests widen tolerances by it.
double small_jump_cf_bias_bound(const StableSpec& spec, const SmallJumpConfig& cfg, double xi,
                                double t);

struct JumpEvent {
    double time = 0.0;
    double size = 0.0;  // |size| >= K
    bool operator==(const JumpEvent&) const = default;
};

// A realized large-jump timeline plus the sampled subsequence tau_1 < tau_2 < ...
// where tau_k is the first arrival strictly after tau_{k-1} + T. Arrivals landing
// inside a waiting window stay in `arrivals` but are never sampled.
struct JumpStream {
    double horizon = 0.0;
    double waiting_T = 0.0;
    std::vector<JumpEvent> arrivals;
    std::vector<std::size_t> sampled;  // indices into arrivals

    std::vector<double> sampled_times() const;
    bool operator==(const JumpStream&) const = default;
};

JumpStream sample_jump_stream(const StableSpec& spec, double waiting_T, double horizon, Rng& rng);

}  // namespace lml
