#include "lml/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "lml/quadrature.hpp"

namespace lml {

namespace {

constexpr long kRejectionCap = 1000000;

double l1_quad(const StableSpec& spec, double z1, double z2, double abs_tol, QuadResult* detail) {
    auto f = [&](double z) {
        return std::abs(spec.p_K_density(z - z1) - spec.p_K_density(z - z2));
    };
    const double pts[5] = {z1 - spec.K, z1 + spec.K, z2 - spec.K, z2 + spec.K,
                           0.5 * (z1 + z2)};
    const double lo = std::min({pts[0], pts[1], pts[2], pts[3]});
    const double hi = std::max({pts[0], pts[1], pts[2], pts[3]});
    QuadResult core = integrate_with_breakpoints(f, lo, hi, pts, 0.5 * abs_tol);
    QuadResult right = integrate_upper_tail(f, hi, 0.25 * abs_tol);
    QuadResult left = integrate_lower_tail(f, lo, 0.25 * abs_tol);
    if (detail) {
        detail->value = core.value + right.value + left.value;
        detail->error_estimate = core.error_estimate + right.error_estimate + left.error_estimate;
        detail->converged = core.converged && right.converged && left.converged;
    }
    return core.value + right.value + left.value;
}

}  // namespace

double l1_shifted(const StableSpec& spec, double z1, double z2, double abs_tol) {
    spec.validate();
    if (z1 == z2) return 0.0;
    QuadResult detail;
    const double v = l1_quad(spec, z1, z2, abs_tol, &detail);
    if (!detail.converged) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "l1_shifted: quadrature did not reach tol %.3g (achieved %.3g)", abs_tol,
                      detail.error_estimate);
        throw std::runtime_error(buf);
    }
    return v;
}

double tv_shifted(const StableSpec& spec, double z1, double z2, double abs_tol) {
    return 0.5 * l1_shifted(spec, z1, z2, 2.0 * abs_tol);
}

CouplingOutcome maximal_couple(const StableSpec& spec, double x1_hat, double y1_hat, Rng& rng) {
    spec.validate();
    if (x1_hat == y1_hat) {
        const double xi = x1_hat + sample_large_jump(spec, rng);
        return {xi, xi, true};
    }
    const double tv = tv_shifted(spec, x1_hat, y1_hat);
    auto px = [&](double z) { return spec.p_K_density(z - x1_hat); };
    auto py = [&](double z) { return spec.p_K_density(z - y1_hat); };
    if (rng.bernoulli(1.0 - tv)) {
        // overlap component: min(px,py)/(1-tv), via rejection from px
        for (long it = 0; it < kRejectionCap; ++it) {
            const double w = x1_hat + sample_large_jump(spec, rng);
            const double a = px(w);
            const double m = std::min(a, py(w));
            if (rng.uniform() * a <= m) return {w, w, true};
        }
        throw std::runtime_error("maximal_couple: overlap rejection cap exceeded");
    }
    CouplingOutcome out;
    out.coalesced = false;
    bool ok = false;
    for (long it = 0; it < kRejectionCap; ++it) {
        const double w = x1_hat + sample_large_jump(spec, rng);
        const double a = px(w);
        if (rng.uniform() * a <= a - std::min(a, py(w))) {
            out.xi_x = w;
            ok = true;
            break;
        }
    }
    if (!ok) throw std::runtime_error("maximal_couple: x-residual rejection cap exceeded");
    ok = false;
    for (long it = 0; it < kRejectionCap; ++it) {
        const double w = y1_hat + sample_large_jump(spec, rng);
        const double a = py(w);
        if (rng.uniform() * a <= a - std::min(a, px(w))) {
            out.xi_y = w;
            ok = true;
            break;
        }
    }
    if (!ok) throw std::runtime_error("maximal_couple: y-residual rejection cap exceeded");
    return out;
}

std::pair<Vec2, Vec2> coupled_jump(Vec2 x_hat, Vec2 y_hat, const StableSpec& spec, Rng& rng) {
    const CouplingOutcome c = maximal_couple(spec, x_hat.x1, y_hat.x1, rng);
    return {Vec2{c.xi_x, x_hat.x2}, Vec2{c.xi_y, y_hat.x2}};
}

std::vector<CoupledChainRecord> coupled_chain(const ModelConfig& cfg, Vec2 x, Vec2 y, int n_steps,
                                              Rng& rng) {
    cfg.validate();
    if (n_steps < 1) throw std::invalid_argument("coupled_chain: n_steps >= 1");
    const double rate = cfg.noise.gamma_K();
    std::vector<CoupledChainRecord> chain;
    chain.reserve(static_cast<std::size_t>(n_steps) + 1);
    chain.push_back({0, x, y, 0.0, 1.0, false});

    Vec2 sx = x, sy = y;
    for (int k = 1; k <= n_steps; ++k) {
        const double gap = cfg.waiting_T + rng.exponential(rate);
        // common large jumps inside the waiting window (0, T]; the post-window
        // segment holds none by construction of the sampled times
        JumpStream seg;
        seg.horizon = gap;
        seg.waiting_T = cfg.waiting_T;
        double t = rng.exponential(rate);
        while (t <= cfg.waiting_T) {
            seg.arrivals.push_back({t, sample_large_jump(cfg.noise, rng)});
            t += rng.exponential(rate);
        }
        Rng replay = rng;  // snapshot: both solutions see the identical small noise
        const CadlagPath path_x = integrate(cfg, sx, seg, rng, gap);
        const CadlagPath path_y = integrate(cfg, sy, seg, replay, gap);
        const Vec2 x_hat = path_x.states.back();
        const Vec2 y_hat = path_y.states.back();
        const CouplingOutcome c = maximal_couple(cfg.noise, x_hat.x1, y_hat.x1, rng);
        sx = Vec2{c.xi_x, x_hat.x2};
        sy = Vec2{c.xi_y, y_hat.x2};
        chain.push_back(
            {k, sx, sy, gap, delta_of_gap(gap, cfg.lambda2, cfg.drift.Flip_bound), c.coalesced});
    }
    return chain;
}

std::string chain_to_csv(const std::vector<CoupledChainRecord>& chain) {
    std::string out = "k,s_x1,s_x2,s_y1,s_y2,gap,delta,coalesced\n";
    char buf[220];
    for (const auto& r : chain) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.k, r.s_x.x1,
                      r.s_x.x2, r.s_y.x1, r.s_y.x2, r.gap, r.delta_prev,
                      r.coalesced_at_k ? 1 : 0);
        out += buf;
    }
    return out;
}

double delta_of_gap(double gap, double lambda2, double flip) {
    if (!(gap > 0.0)) throw std::invalid_argument("delta_of_gap: gap must be positive");
    return std::exp(-lambda2 * gap) + flip * std::exp(gap * flip) / (lambda2 + flip);
}

double kappa(double beta1, double beta2, double flip, double T) {
    return beta1 * std::exp(beta2 * flip * T);
}

ThetaResult theta(double gamma_K, double lambda2, double beta2, double T, double flip) {
    ThetaResult r;
    r.value = gamma_K / (gamma_K + lambda2 * beta2) * std::exp(-lambda2 * beta2 * T) +
              2.0 * std::pow(flip / (flip + lambda2), beta2);
    r.below_half = r.value < 0.5;
    return r;
}

DeltaMomentResult expected_delta_power(double gamma_K, double T, double lambda2, double flip,
                                       double beta2, double abs_tol) {
    if (!(gamma_K > 0.0 && lambda2 > 0.0 && beta2 > 0.0 && flip >= 0.0 && T >= 0.0))
        throw std::invalid_argument("expected_delta_power: nonpositive argument");
    if (!(gamma_K > beta2 * flip))
        throw std::domain_error(
            "expected_delta_power: gap integral diverges; requires gamma_K > beta2*||F||_Lip "
            "(the large-jump rate condition (A4))");
    // log-space evaluation so the mapped tail (huge s) cannot produce inf*0
    auto integrand = [&](double s) {
        const double g = T + s;
        double log_delta;
        if (flip <= 0.0) {
            log_delta = -lambda2 * g;
        } else {
            const double t1 = -lambda2 * g;
            const double t2 = g * flip + std::log(flip / (lambda2 + flip));
            log_delta = std::max(t1, t2) + std::log1p(std::exp(-std::abs(t1 - t2)));
        }
        const double le = beta2 * log_delta - gamma_K * s;
        return le < -745.0 ? 0.0 : std::exp(le) * gamma_K;
    };
    QuadResult q = integrate_upper_tail(integrand, 0.0, abs_tol);
    if (!q.converged)
        throw std::runtime_error("expected_delta_power: quadrature did not converge");
    DeltaMomentResult r;
    r.value = q.value;
    r.theta = theta(gamma_K, lambda2, beta2, T, flip).value;
    double bound = gamma_K / (gamma_K + lambda2 * beta2) * std::exp(-lambda2 * beta2 * T);
    if (flip > 0.0) {
        // E[e^{b f tau}] pays gamma/(gamma - b f); under (A4) that is at most 2
        const double factor = gamma_K >= 2.0 * beta2 * flip
                                  ? 2.0
                                  : gamma_K / (gamma_K - beta2 * flip);
        bound += std::pow(flip / (flip + lambda2), beta2) * factor * std::exp(beta2 * flip * T);
    }
    if (beta2 > 1.0) bound *= std::pow(2.0, beta2 - 1.0);
    r.gap_bound = bound;
    r.within_theta = r.value <= r.theta + abs_tol;
    r.within_gap_bound = r.value <= r.gap_bound + abs_tol;
    return r;
}

}  // namespace lml
