#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lml/coupling.hpp"
#include "lml/sde_core.hpp"

namespace lml {

// Standing assumptions on the noise/coupling constants, evaluated numerically
// for a concrete configuration:
//   (A1) bounded p-th moments of the stochastic convolution (see check_A1),
//   (A2) L1 distance of shifted jump densities <= beta1 |z1-z2|^{beta2},
//   (A3) L1 distance <= beta0 < 2 whenever |z1|+|z2| <= M,
//   (A4) gamma_K >= 2 beta2 ||F||_Lip.
struct AssumptionReport {
    double gamma_K = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta0 = 0.0;  // grid sup of the unhalved L1 distance over |z1|+|z2| <= M
    double beta0_arg_z1 = 0.0;
    double beta0_arg_z2 = 0.0;
    bool beta0_computed = false;
    bool a3_holds = false;
    bool a3_marginal = false;  // grid max within 1e-6 of the A3 ceiling 2
    bool a4_holds = false;
    double T0 = 0.0;     // waiting-time threshold ((p-1) log 3)/(p lambda1) v 0
    bool T_ok = false;   // T exceeds T0 (always true when T0 == 0)
    double kappa = 0.0;
    double d_max = 0.0;  // (1/(4 kappa))^{1/beta2}
    bool d_ok = false;
    double theta = 0.0;
    bool theta_below_half = false;
    double delta_moment = 0.0;      // E[delta(tau)^{beta2}] by quadrature
    double delta_gap_bound = 0.0;   // valid bound including the e^{beta2 Flip T} factor
    double q_tail = 0.0;            // sqrt((3^{p-1} v 1) gamma e^{-p l1 T} / (gamma + p l1))
    bool all_gates = false;

    std::string to_json() const;
};

// grid_n intervals per half-axis (step M/grid_n, spec default 200) for the
// beta0 sweep with one Nelder-Mead refinement; grid_n = 0 skips the sweep and
// fills only the closed-form constants and gates.
AssumptionReport compute_report(const ModelConfig& cfg, int grid_n = 200);

// E|X|^p for a symmetric stable law with characteristic function e^{-s|xi|^alpha},
// via the closed form 2^p G((1+p)/2) G(1-p/alpha) / (G(1-p/2) sqrt(pi)) * s^{p/alpha}.
double stable_abs_moment(double p, double alpha, double s);

struct A1CfCell {
    double t = 0.0;
    double xi = 0.0;
    double emp_re = 0.0;
    double emp_im = 0.0;
    double closed = 0.0;
    double tol = 0.0;  // 4 sigma Monte Carlo band plus the Gaussian-substitution bias
    bool pass = false;
};

struct A1MomentCell {
    double t = 0.0;
    double value = 0.0;
    double se = 0.0;
};

struct A1Report {
    double lambda = 0.0;
    double p = 0.0;
    std::size_t n_trials = 0;
    std::vector<A1CfCell> cf;
    std::vector<A1MomentCell> moments;
    double slope = 0.0;  // moment trend over the top half of the t-grid
    double slope_ci_lo = 0.0;
    double slope_ci_hi = 0.0;
    bool moment_flat = false;  // slope CI contains 0
    double stationary_prediction = 0.0;
    bool stationary_ok = false;
    bool cf_ok = false;
    bool pass = false;

    std::string to_json() const;
};

A1Report check_A1(const StableSpec& spec, const SmallJumpConfig& small_cfg, double lambda, double p,
                  const std::vector<double>& t_grid, const std::vector<double>& xi_grid,
                  std::size_t n_trials, double step_h, std::uint64_t seed, int threads);

struct MixingCurve {
    std::vector<double> t;
    std::vector<double> D;      // mean of 1 ^ |X^x(t) - X^y(t)|
    std::vector<double> ci_lo;  // 95% band
    std::vector<double> ci_hi;
    double c_hat = 0.0;  // fitted decay rate of the geometric segment
    double c_ci_lo = 0.0;
    double c_ci_hi = 0.0;
    double fit_r2 = 0.0;
    std::size_t fit_begin = 0;
    std::size_t fit_end = 0;
    bool fit_available = false;
    bool synchronous_only = false;
    AssumptionReport gates;  // regime labels (theta, d, T, A4) for this config

    std::string to_csv() const;  // t,D,ci_lo,ci_hi
};

// Coupled-pair decay of D(t) = E[1 ^ |X^x(t) - X^y(t)|] on t_grid: an upper
// bound for the dual-Lipschitz distance between the two time-t laws. With
// synchronous_only the sampled jumps are applied identically to both solutions
// instead of through the maximal coupling (the linear-case oracle mode).
MixingCurve estimate_mixing(const ModelConfig& cfg, Vec2 x, Vec2 y,
                            const std::vector<double>& t_grid, std::size_t n_pairs,
                            std::uint64_t seed, int threads, bool synchronous_only = false);

struct PairwiseBoundsReport {
    int n_seeds = 0;
    long points_checked = 0;
    long violations = 0;
    // most negative (bound - value) margins; nonnegative means the bound held
    double worst_margin_gronwall = 0.0;
    double worst_margin_dissipative = 0.0;
    double worst_margin_coord2 = 0.0;
    bool pass = false;

    std::string to_json() const;
};

// Synchronous-pair pathwise inequalities at every grid point, over n_seeds
// random pairs: the Gronwall bound e^{t Flip}|x-y|, the dissipative-gap bound
// e^{-l1 t}|x-y| + 2 sqrt(2) F0 (1-e^{-l1 t})/l1, and the second-coordinate
// bound (e^{-l2 t} + Flip/(Flip+l2) e^{t Flip})|x-y|, each with scheme slack.
PairwiseBoundsReport pathwise_bounds_suite(const ModelConfig& cfg, int n_seeds, double horizon_t,
                                   std::uint64_t seed, double start_box = 3.0);

}  // namespace lml
