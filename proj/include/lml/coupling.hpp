#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lml/rng.hpp"
#include "lml/sde_core.hpp"
#include "lml/stable_noise.hpp"

namespace lml {

// L1 distance between the densities of z1 + eta and z2 + eta (eta ~ nu_K),
// by adaptive quadrature with forced breakpoints at the support edges and the
// midpoint, plus rationally-mapped tails. Throws if the requested absolute
// tolerance is not reached.
double l1_shifted(const StableSpec& spec, double z1, double z2, double abs_tol = 2e-8);

// Total-variation distance = half the L1 distance; in [0, 1).
double tv_shifted(const StableSpec& spec, double z1, double z2, double abs_tol = 1e-8);

struct CouplingOutcome {
    double xi_x = 0.0;
    double xi_y = 0.0;
    bool coalesced = false;
};

// Maximal coupling of the laws of x1_hat + eta and y1_hat + eta, realized as a
// gamma coupling: with probability 1 - TV draw once from the normalized
// overlap min(p_x, p_y) and copy it to both margins, otherwise draw each margin
// from its normalized residual. Rejection-samples from the shifted nu_K
// proposals: expected proposals per draw are 1/(1-TV) in the overlap branch and
// 1/TV per residual margin, so the expected total work per call is O(1); the
// iteration cap (1e6) throws rather than looping on adversarial shifts.
CouplingOutcome maximal_couple(const StableSpec& spec, double x1_hat, double y1_hat, Rng& rng);

// Jump application to a pair of pre-jump states: first coordinates through
// maximal_couple, second coordinates passed through unchanged.
std::pair<Vec2, Vec2> coupled_jump(Vec2 x_hat, Vec2 y_hat, const StableSpec& spec, Rng& rng);

struct CoupledChainRecord {
    int k = 0;
    Vec2 s_x;
    Vec2 s_y;
    double gap = 0.0;         // tau_k - tau_{k-1}; 0 for the k=0 record
    double delta_prev = 1.0;  // contraction factor of this gap; 1 for k=0
    bool coalesced_at_k = false;
};

// The coupled chain: between sampled jump times both solutions see the
// identical realized noise (same small increments, same waiting-window jumps);
// at each sampled time the jump is added through the maximal coupling of the
// shifted laws of the first coordinates. records[0] holds the initial pair.
std::vector<CoupledChainRecord> coupled_chain(const ModelConfig& cfg, Vec2 x, Vec2 y, int n_steps,
                                              Rng& rng);

std::string chain_to_csv(const std::vector<CoupledChainRecord>& chain);

// contraction factor of one inter-jump gap:
// e^{-lambda2 gap} + Flip e^{gap Flip} / (lambda2 + Flip)
double delta_of_gap(double gap, double lambda2, double flip);

// coupling-failure prefactor beta1 e^{beta2 Flip T}
double kappa(double beta1, double beta2, double flip, double T);

struct ThetaResult {
    double value = 0.0;
    bool below_half = false;
};

// theta = gamma_K/(gamma_K + lambda2 beta2) e^{-lambda2 beta2 T}
//       + 2 (Flip/(Flip + lambda2))^{beta2}
ThetaResult theta(double gamma_K, double lambda2, double beta2, double T, double flip);

struct DeltaMomentResult {
    double value = 0.0;      // E[delta(tau)^{beta2}] under the gap law, by quadrature
    double theta = 0.0;      // the theta formula above, for reference
    double gap_bound = 0.0;  // valid upper bound including the e^{beta2 Flip T} gap factor
    bool within_theta = false;
    bool within_gap_bound = false;
};

// Expected contraction power per step. The gap law is T + Exp(gamma_K); the
// integral converges iff gamma_K > beta2 * flip (throws otherwise). `gap_bound`
// is the subadditivity bound
//   gamma/(gamma + l2 b2) e^{-l2 b2 T} + (f/(f+l2))^{b2} gamma/(gamma - b2 f) e^{b2 f T}
// (times 2^{b2-1} when b2 > 1); `theta` drops the e^{b2 f T} factor and can be
// exceeded when T > 0 and f > 0.
DeltaMomentResult expected_delta_power(double gamma_K, double T, double lambda2, double flip,
                                       double beta2, double abs_tol = 1e-10);

}  // namespace lml
