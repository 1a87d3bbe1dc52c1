#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lml/coupling.hpp"
#include "lml/rng.hpp"

namespace lml {

// A detected stopping time, counted in chain steps from the detector's start
// index. `censored` means not triggered within the realized chain; infinity is
// only ever observable as censoring at the horizon.
struct StopResult {
    long k = 0;
    bool censored = false;
};

// first k >= 1 with |S^x(k)| + |S^y(k)| <= M (norms Euclidean), from `start`
StopResult detect_sigma_tilde(std::span<const CoupledChainRecord> chain, double M,
                              std::size_t start = 0);

// first k >= 1 with |S^x(k) - S^y(k)| <= d, from `start`
StopResult detect_sigma(std::span<const CoupledChainRecord> chain, double d,
                        std::size_t start = 0);

// first k >= 1 with |S^x(k) - S^y(k)| > (delta_0 ... delta_{k-1}) |S^x(0)-S^y(0)|,
// the deltas evaluated on the realized gaps from `start`
StopResult detect_sigma_hat(std::span<const CoupledChainRecord> chain, double lambda2, double flip,
                            std::size_t start = 0);

// sigma + sigma_hat restarted at the sigma index (strong-Markov composition on
// the realized chain); censored inner parts make the composite censored
StopResult detect_sigma_dagger(std::span<const CoupledChainRecord> chain, double d, double lambda2,
                               double flip, std::size_t start = 0);

// sigma_dagger + sigma_tilde restarted at the sigma_dagger index
StopResult detect_sigma_bar(std::span<const CoupledChainRecord> chain, double d, double M,
                            double lambda2, double flip, std::size_t start = 0);

// k-fold composition of sigma_bar restarts
StopResult detect_sigma_bar_k(std::span<const CoupledChainRecord> chain, double d, double M,
                              double lambda2, double flip, int kfold);

struct StoppingSummary {
    std::string name;
    std::size_t n = 0;
    std::vector<StopResult> samples;
    double censored_fraction = 0.0;
    std::vector<double> tail;  // tail[k] = P(sigma > k), k = 0..horizon
    // weighted log-linear fit of the tail over the segment [fit_begin, fit_end]
    double geom_rate = 0.0;  // slope of log tail per step (negative when decaying)
    double rate_ci_lo = 0.0;
    double rate_ci_hi = 0.0;
    double fit_r2 = 0.0;
    std::size_t fit_begin = 0;
    std::size_t fit_end = 0;
    bool fit_available = false;
    // plug-in estimate of E[e^{vartheta sigma} 1{sigma finite}] with bootstrap CI
    double vartheta = 0.0;
    double exp_moment = 0.0;
    double moment_ci_lo = 0.0;
    double moment_ci_hi = 0.0;
    bool moment_available = false;

    std::string to_json() const;
};

// Tail curve, geometric-rate fit and exponential moment for a batch of detected
// stopping times sharing one horizon. Censored samples contribute to the tail
// up to the horizon and are excluded from the moment (reported separately via
// censored_fraction). min_tail_count sets the fitted segment: k is included
// while at least that many samples still exceed k.
StoppingSummary tail_and_moment(const std::string& name, const std::vector<StopResult>& samples,
                                long horizon, double vartheta, Rng& boot_rng,
                                std::size_t min_tail_count = 30);

}  // namespace lml
