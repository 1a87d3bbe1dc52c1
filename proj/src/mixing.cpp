#include "lml/mixing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>

#include "lml/parallel.hpp"
#include "lml/stats.hpp"

namespace lml {

namespace {

constexpr double kSqrtPi = 1.772453850905516027298167483341;

// Nelder-Mead ascent of f on the diamond |z1|+|z2| <= M, started at (z1, z2).
// The L1 objective is cheap and unimodal along rays, one simplex pass suffices.
void nelder_mead_refine(const std::function<double(double, double)>& f, double M, double& z1,
                        double& z2, double& best, int max_iter = 120) {
    auto project = [M](double a, double b) {
        const double l1 = std::abs(a) + std::abs(b);
        if (l1 > M && l1 > 0.0) {
            a *= M / l1;
            b *= M / l1;
        }
        return std::pair<double, double>{a, b};
    };
    struct Pt {
        double a, b, v;
    };
    const double h = std::max(M * 1e-2, 1e-8);
    std::array<Pt, 3> s;
    auto eval = [&](double a, double b) {
        auto [pa, pb] = project(a, b);
        return Pt{pa, pb, f(pa, pb)};
    };
    s[0] = eval(z1, z2);
    s[1] = eval(z1 + h, z2);
    s[2] = eval(z1, z2 + h);
    for (int it = 0; it < max_iter; ++it) {
        std::sort(s.begin(), s.end(), [](const Pt& x, const Pt& y) { return x.v > y.v; });
        if (std::abs(s[0].v - s[2].v) < 1e-12) break;
        const double ca = 0.5 * (s[0].a + s[1].a);
        const double cb = 0.5 * (s[0].b + s[1].b);
        Pt refl = eval(ca + (ca - s[2].a), cb + (cb - s[2].b));
        if (refl.v > s[0].v) {
            Pt expand = eval(ca + 2.0 * (ca - s[2].a), cb + 2.0 * (cb - s[2].b));
            s[2] = expand.v > refl.v ? expand : refl;
        } else if (refl.v > s[1].v) {
            s[2] = refl;
        } else {
            Pt contr = eval(ca + 0.5 * (s[2].a - ca), cb + 0.5 * (s[2].b - cb));
            if (contr.v > s[2].v) {
                s[2] = contr;
            } else {
                s[1] = eval(s[0].a + 0.5 * (s[1].a - s[0].a), s[0].b + 0.5 * (s[1].b - s[0].b));
                s[2] = eval(s[0].a + 0.5 * (s[2].a - s[0].a), s[0].b + 0.5 * (s[2].b - s[0].b));
            }
        }
    }
    std::sort(s.begin(), s.end(), [](const Pt& x, const Pt& y) { return x.v > y.v; });
    if (s[0].v > best) {
        best = s[0].v;
        z1 = s[0].a;
        z2 = s[0].b;
    }
}

}  // namespace

AssumptionReport compute_report(const ModelConfig& cfg, int grid_n) {
    cfg.validate();
    AssumptionReport r;
    const double flip = cfg.drift.Flip_bound;
    const double p = cfg.moment_p;
    r.gamma_K = cfg.noise.gamma_K();
    r.beta1 = cfg.beta1();
    r.beta2 = cfg.beta2();
    r.a4_holds = cfg.a4_holds();
    r.T0 = std::max((p - 1.0) * std::log(3.0) / (p * cfg.lambda1), 0.0);
    r.T_ok = cfg.waiting_T > r.T0 || r.T0 == 0.0;
    r.kappa = kappa(r.beta1, r.beta2, flip, cfg.waiting_T);
    r.d_max = std::pow(1.0 / (4.0 * r.kappa), 1.0 / r.beta2);
    r.d_ok = cfg.close_dist < r.d_max;
    const ThetaResult th = theta(r.gamma_K, cfg.lambda2, r.beta2, cfg.waiting_T, flip);
    r.theta = th.value;
    r.theta_below_half = th.below_half;
    if (r.gamma_K > r.beta2 * flip) {
        const DeltaMomentResult dm =
            expected_delta_power(r.gamma_K, cfg.waiting_T, cfg.lambda2, flip, r.beta2);
        r.delta_moment = dm.value;
        r.delta_gap_bound = dm.gap_bound;
    }
    r.q_tail = std::sqrt(std::max(std::pow(3.0, p - 1.0), 1.0) * r.gamma_K *
                         std::exp(-p * cfg.lambda1 * cfg.waiting_T) / (r.gamma_K + p * cfg.lambda1));

    if (grid_n > 0) {
        const double M = cfg.ball_radius;
        const double step = M / static_cast<double>(grid_n);
        auto f = [&](double z1, double z2) { return l1_shifted(cfg.noise, z1, z2); };
        double best = 0.0, b1 = 0.0, b2 = 0.0;
        // L1 depends on the shift difference only through z1 - z2, and the grid is
        // symmetric, so sweeping z2 <= z1 halves the work without losing the max
        for (int i = -grid_n; i <= grid_n; ++i) {
            const double z1 = static_cast<double>(i) * step;
            const double budget = M - std::abs(z1);
            const int jmax = static_cast<int>(std::floor(budget / step + 1e-9));
            for (int j = -jmax; j <= jmax; ++j) {
                const double z2 = static_cast<double>(j) * step;
                if (z2 > z1) break;
                const double v = f(z1, z2);
                if (v > best) {
                    best = v;
                    b1 = z1;
                    b2 = z2;
                }
            }
        }
        nelder_mead_refine(f, M, b1, b2, best);
        r.beta0 = best;
        r.beta0_arg_z1 = b1;
        r.beta0_arg_z2 = b2;
        r.beta0_computed = true;
        r.a3_holds = r.beta0 < 2.0;
        r.a3_marginal = r.beta0 > 2.0 - 1e-6;
    }
    r.all_gates = r.a4_holds && r.T_ok && r.d_ok && r.theta_below_half &&
                  (!r.beta0_computed || r.a3_holds);
    return r;
}

double stable_abs_moment(double p, double alpha, double s) {
    if (!(p > 0.0 && p < alpha))
        throw std::invalid_argument("stable_abs_moment: requires 0 < p < alpha");
    const double c = std::pow(2.0, p) * std::tgamma((1.0 + p) / 2.0) *
                     std::tgamma(1.0 - p / alpha) / (std::tgamma(1.0 - p / 2.0) * kSqrtPi);
    return c * std::pow(s, p / alpha);
}

A1Report check_A1(const StableSpec& spec, const SmallJumpConfig& small_cfg, double lambda, double p,
                  const std::vector<double>& t_grid, const std::vector<double>& xi_grid,
                  std::size_t n_trials, double step_h, std::uint64_t seed, int threads) {
    spec.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("check_A1: lambda must be positive");
    if (!(p > 0.0 && p < spec.alpha)) throw std::invalid_argument("check_A1: p in (0, alpha)");
    if (t_grid.empty() || xi_grid.empty()) throw std::invalid_argument("check_A1: empty grid");

    A1Report rep;
    rep.lambda = lambda;
    rep.p = p;
    rep.n_trials = n_trials;
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());

    // the convolution is coordinate 1 of the zero-drift system with rate lambda
    ModelConfig probe;
    probe.lambda1 = lambda;
    probe.lambda2 = lambda;
    probe.drift = DriftSpec::zero();
    probe.noise = spec;
    probe.small_jump = small_cfg;
    probe.step_h = step_h;
    probe.moment_p = p;
    probe.waiting_T = 0.0;
    probe.horizon = t_max;

    // conv[trial][ti]
    std::vector<std::vector<double>> conv(n_trials, std::vector<double>(t_grid.size(), 0.0));
    parallel_for_indexed(n_trials, threads, [&](std::size_t i) {
        Rng rng(seed, i);
        JumpStream stream = sample_jump_stream(spec, 0.0, t_max * 1.0000001, rng);
        CadlagPath path = integrate(probe, Vec2{0.0, 0.0}, stream, rng, t_max, t_grid);
        for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
            const auto it = std::lower_bound(path.times.begin(), path.times.end(), t_grid[ti]);
            conv[i][ti] = path.conv[static_cast<std::size_t>(it - path.times.begin())];
        }
    });

    const double scale = spec.scale();
    rep.cf_ok = true;
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        const double t = t_grid[ti];
        const double s_t = scale * (1.0 - std::exp(-spec.alpha * lambda * t)) / (spec.alpha * lambda);
        for (double xi : xi_grid) {
            A1CfCell cell;
            cell.t = t;
            cell.xi = xi;
            std::vector<double> cosv(n_trials), sinv(n_trials);
            for (std::size_t i = 0; i < n_trials; ++i) {
                cosv[i] = std::cos(xi * conv[i][ti]);
                sinv[i] = std::sin(xi * conv[i][ti]);
            }
            cell.emp_re = mean(cosv);
            cell.emp_im = mean(sinv);
            cell.closed = std::exp(-s_t * std::pow(std::abs(xi), spec.alpha));
            // bias of the Gaussian layer through the convolution weights:
            // effective horizon (1 - e^{-4 lambda t})/(4 lambda)
            const double t_eff = (1.0 - std::exp(-4.0 * lambda * t)) / (4.0 * lambda);
            const double bias = small_jump_cf_bias_bound(spec, small_cfg, xi, t_eff);
            cell.tol = 4.0 * std::max(std_error(cosv), std_error(sinv)) + bias;
            cell.pass = std::abs(cell.emp_re - cell.closed) <= cell.tol &&
                        std::abs(cell.emp_im) <= cell.tol;
            rep.cf_ok = rep.cf_ok && cell.pass;
            rep.cf.push_back(cell);
        }
    }

    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        std::vector<double> mom(n_trials);
        for (std::size_t i = 0; i < n_trials; ++i) mom[i] = std::pow(std::abs(conv[i][ti]), p);
        rep.moments.push_back({t_grid[ti], mean(mom), std_error(mom)});
    }

    // growth trend on the top half of the grid ("for large t")
    std::vector<double> xs, ys, ws;
    for (std::size_t ti = t_grid.size() / 2; ti < t_grid.size(); ++ti) {
        xs.push_back(rep.moments[ti].t);
        ys.push_back(rep.moments[ti].value);
        const double se = std::max(rep.moments[ti].se, 1e-12);
        ws.push_back(1.0 / (se * se));
    }
    if (xs.size() >= 2) {
        const LinearFit fit = weighted_linear_fit(xs, ys, ws);
        rep.slope = fit.slope;
        rep.slope_ci_lo = fit.slope - 1.96 * fit.slope_se;
        rep.slope_ci_hi = fit.slope + 1.96 * fit.slope_se;
        rep.moment_flat = rep.slope_ci_lo <= 0.0 && 0.0 <= rep.slope_ci_hi;
    }
    rep.stationary_prediction = stable_abs_moment(p, spec.alpha, scale / (spec.alpha * lambda));
    const A1MomentCell& last = rep.moments.back();
    rep.stationary_ok =
        std::abs(last.value - rep.stationary_prediction) <=
        4.0 * last.se + 0.02 * rep.stationary_prediction;
    rep.pass = rep.cf_ok && rep.moment_flat && rep.stationary_ok;
    return rep;
}

namespace {

// distances |X^x - X^y| sampled at t_grid for one coupled (or synchronous) pair
std::vector<double> coupled_pair_distances(const ModelConfig& cfg, Vec2 x, Vec2 y,
                                           const std::vector<double>& t_grid, Rng& rng,
                                           bool synchronous_only) {
    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
    const double rate = cfg.noise.gamma_K();
    std::vector<double> out(t_grid.size(), 0.0);
    std::size_t ti = 0;
    while (ti < t_grid.size() && t_grid[ti] <= 0.0) {
        out[ti] = (x - y).norm();
        ++ti;
    }
    double cursor = 0.0;
    Vec2 sx = x, sy = y;
    while (cursor < t_max) {
        const double gap = cfg.waiting_T + rng.exponential(rate);
        JumpStream seg;
        seg.horizon = gap;
        seg.waiting_T = cfg.waiting_T;
        double t = rng.exponential(rate);
        while (t <= cfg.waiting_T) {
            seg.arrivals.push_back({t, sample_large_jump(cfg.noise, rng)});
            t += rng.exponential(rate);
        }
        std::vector<double> sample_times;
        for (std::size_t k = ti; k < t_grid.size() && t_grid[k] < cursor + gap; ++k) {
            const double st = t_grid[k] - cursor;
            if (st > 0.0 && st < gap) sample_times.push_back(st);
        }
        Rng replay = rng;
        const CadlagPath px = integrate(cfg, sx, seg, rng, gap, sample_times);
        const CadlagPath py = integrate(cfg, sy, seg, replay, gap, sample_times);
        for (double st : sample_times) {
            const auto it = std::lower_bound(px.times.begin(), px.times.end(), st);
            const std::size_t idx = static_cast<std::size_t>(it - px.times.begin());
            out[ti++] = (px.states[idx] - py.states[idx]).norm();
        }
        const Vec2 x_hat = px.states.back();
        const Vec2 y_hat = py.states.back();
        if (synchronous_only) {
            const double eta = sample_large_jump(cfg.noise, rng);
            sx = Vec2{x_hat.x1 + eta, x_hat.x2};
            sy = Vec2{y_hat.x1 + eta, y_hat.x2};
        } else {
            const CouplingOutcome c = maximal_couple(cfg.noise, x_hat.x1, y_hat.x1, rng);
            sx = Vec2{c.xi_x, x_hat.x2};
            sy = Vec2{c.xi_y, y_hat.x2};
        }
        cursor += gap;
        // a grid time landing exactly on the jump instant reads the post-jump state
        while (ti < t_grid.size() && t_grid[ti] <= cursor) {
            out[ti] = (sx - sy).norm();
            ++ti;
        }
    }
    return out;
}

}  // namespace

MixingCurve estimate_mixing(const ModelConfig& cfg, Vec2 x, Vec2 y,
                            const std::vector<double>& t_grid, std::size_t n_pairs,
                            std::uint64_t seed, int threads, bool synchronous_only) {
    cfg.validate();
    if (t_grid.empty()) throw std::invalid_argument("estimate_mixing: empty t_grid");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()))
        throw std::invalid_argument("estimate_mixing: t_grid must be sorted");

    MixingCurve mc;
    mc.t = t_grid;
    mc.synchronous_only = synchronous_only;
    mc.gates = compute_report(cfg, 0);

    std::vector<std::vector<double>> dist(n_pairs);
    parallel_for_indexed(n_pairs, threads, [&](std::size_t i) {
        Rng rng(seed, i);
        dist[i] = coupled_pair_distances(cfg, x, y, t_grid, rng, synchronous_only);
    });

    mc.D.resize(t_grid.size());
    mc.ci_lo.resize(t_grid.size());
    mc.ci_hi.resize(t_grid.size());
    std::vector<double> col(n_pairs);
    std::vector<double> se(t_grid.size());
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        for (std::size_t i = 0; i < n_pairs; ++i) col[i] = std::min(1.0, dist[i][ti]);
        mc.D[ti] = mean(col);
        se[ti] = n_pairs >= 2 ? std_error(col) : 0.0;
        mc.ci_lo[ti] = mc.D[ti] - 1.96 * se[ti];
        mc.ci_hi[ti] = mc.D[ti] + 1.96 * se[ti];
    }

    // fitted segment: burn-in until D < 0.9 D(0); cut at the noise floor where
    // the relative 95% half-width exceeds 50% (or D hits zero)
    const double d0 = mc.D.front();
    std::size_t begin = 0;
    while (begin < mc.D.size() && mc.D[begin] >= 0.9 * d0) ++begin;
    std::size_t end = begin;
    while (end < mc.D.size() && mc.D[end] > 0.0 && 1.96 * se[end] <= 0.5 * mc.D[end]) ++end;
    if (end > begin + 2) {
        std::vector<double> xs, ys, ws;
        for (std::size_t k = begin; k < end; ++k) {
            xs.push_back(mc.t[k]);
            ys.push_back(std::log(mc.D[k]));
            const double rel = std::max(se[k] / mc.D[k], 1e-9);
            ws.push_back(1.0 / (rel * rel));
        }
        const LinearFit fit = weighted_linear_fit(xs, ys, ws);
        mc.c_hat = -fit.slope;
        mc.c_ci_lo = -(fit.slope + 1.96 * fit.slope_se);
        mc.c_ci_hi = -(fit.slope - 1.96 * fit.slope_se);
        mc.fit_r2 = fit.r2;
        mc.fit_begin = begin;
        mc.fit_end = end - 1;
        mc.fit_available = true;
    }
    return mc;
}

PairwiseBoundsReport pathwise_bounds_suite(const ModelConfig& cfg, int n_seeds, double horizon_t,
                                   std::uint64_t seed, double start_box) {
    cfg.validate();
    PairwiseBoundsReport rep;
    rep.n_seeds = n_seeds;
    const double flip = cfg.drift.Flip_bound;
    const double f0 = cfg.drift.F0_bound;
    double wg = std::numeric_limits<double>::infinity();
    double wd = wg, w2 = wg;
    for (int s = 0; s < n_seeds; ++s) {
        Rng rng(seed, static_cast<std::uint64_t>(s));
        const Vec2 x{rng.uniform(-start_box, start_box), rng.uniform(-start_box, start_box)};
        const Vec2 y{rng.uniform(-start_box, start_box), rng.uniform(-start_box, start_box)};
        JumpStream stream = sample_jump_stream(cfg.noise, cfg.waiting_T, horizon_t * 1.0000001, rng);
        Rng replay = rng;
        const CadlagPath px = integrate(cfg, x, stream, rng, horizon_t);
        const CadlagPath py = integrate(cfg, y, stream, replay, horizon_t);
        const double d0 = (x - y).norm();
        for (std::size_t i = 0; i < px.times.size(); ++i) {
            const double t = px.times[i];
            const double slack = scheme_slack(cfg, t, d0) + 1e-9;
            const Vec2 diff = px.states[i] - py.states[i];
            const double g1 = std::exp(t * flip) * d0 + slack - diff.norm();
            const double e1 = std::exp(-cfg.lambda1 * t);
            const double g2 = e1 * d0 + 2.0 * std::sqrt(2.0) * f0 * (1.0 - e1) / cfg.lambda1 +
                              slack - diff.norm();
            const double g3 = (std::exp(-cfg.lambda2 * t) +
                               flip / (flip + cfg.lambda2) * std::exp(t * flip)) *
                                  d0 +
                              slack - std::abs(diff.x2);
            wg = std::min(wg, g1);
            wd = std::min(wd, g2);
            w2 = std::min(w2, g3);
            rep.points_checked += 1;
            if (g1 < 0.0 || g2 < 0.0 || g3 < 0.0) rep.violations += 1;
        }
    }
    rep.worst_margin_gronwall = wg;
    rep.worst_margin_dissipative = wd;
    rep.worst_margin_coord2 = w2;
    rep.pass = rep.violations == 0;
    return rep;
}

std::string AssumptionReport::to_json() const {
    char buf[512];
    std::string j = "{";
    std::snprintf(buf, sizeof buf, "\"gamma_K\":%.17g,\"beta1\":%.17g,\"beta2\":%.17g,", gamma_K,
                  beta1, beta2);
    j += buf;
    if (beta0_computed) {
        std::snprintf(buf, sizeof buf,
                      "\"beta0\":%.17g,\"beta0_arg\":[%.17g,%.17g],\"a3_holds\":%s,"
                      "\"a3_marginal\":%s,",
                      beta0, beta0_arg_z1, beta0_arg_z2, a3_holds ? "true" : "false",
                      a3_marginal ? "true" : "false");
        j += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "\"a4_holds\":%s,\"T0\":%.17g,\"T_ok\":%s,\"kappa\":%.17g,\"d_max\":%.17g,"
                  "\"d_ok\":%s,\"theta\":%.17g,\"theta_below_half\":%s,\"delta_moment\":%.17g,"
                  "\"delta_gap_bound\":%.17g,\"q_tail\":%.17g,\"all_gates\":%s}",
                  a4_holds ? "true" : "false", T0, T_ok ? "true" : "false", kappa, d_max,
                  d_ok ? "true" : "false", theta, theta_below_half ? "true" : "false",
                  delta_moment, delta_gap_bound, q_tail, all_gates ? "true" : "false");
    j += buf;
    return j;
}

std::string A1Report::to_json() const {
    std::string j = "{";
    char buf[320];
    std::snprintf(buf, sizeof buf, "\"lambda\":%.17g,\"p\":%.17g,\"n\":%zu,\"cf\":[", lambda, p,
                  n_trials);
    j += buf;
    for (std::size_t i = 0; i < cf.size(); ++i) {
        const A1CfCell& c = cf[i];
        std::snprintf(buf, sizeof buf,
                      "{\"t\":%.17g,\"xi\":%.17g,\"emp_re\":%.17g,\"emp_im\":%.17g,"
                      "\"closed\":%.17g,\"tol\":%.17g,\"pass\":%s}%s",
                      c.t, c.xi, c.emp_re, c.emp_im, c.closed, c.tol, c.pass ? "true" : "false",
                      i + 1 < cf.size() ? "," : "");
        j += buf;
    }
    j += "],\"moments\":[";
    for (std::size_t i = 0; i < moments.size(); ++i) {
        std::snprintf(buf, sizeof buf, "{\"t\":%.17g,\"value\":%.17g,\"se\":%.17g}%s",
                      moments[i].t, moments[i].value, moments[i].se,
                      i + 1 < moments.size() ? "," : "");
        j += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "],\"slope\":%.17g,\"slope_ci\":[%.17g,%.17g],\"moment_flat\":%s,"
                  "\"stationary_prediction\":%.17g,\"stationary_ok\":%s,\"cf_ok\":%s,"
                  "\"pass\":%s}",
                  slope, slope_ci_lo, slope_ci_hi, moment_flat ? "true" : "false",
                  stationary_prediction, stationary_ok ? "true" : "false",
                  cf_ok ? "true" : "false", pass ? "true" : "false");
    j += buf;
    return j;
}

std::string MixingCurve::to_csv() const {
    std::string out = "t,D,ci_lo,ci_hi\n";
    char buf[160];
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t[i], D[i], ci_lo[i], ci_hi[i]);
        out += buf;
    }
    return out;
}

std::string PairwiseBoundsReport::to_json() const {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "{\"n_seeds\":%d,\"points_checked\":%ld,\"violations\":%ld,"
                  "\"worst_margin_gronwall\":%.17g,\"worst_margin_dissipative\":%.17g,"
                  "\"worst_margin_coord2\":%.17g,\"pass\":%s}",
                  n_seeds, points_checked, violations, worst_margin_gronwall,
                  worst_margin_dissipative, worst_margin_coord2, pass ? "true" : "false");
    return buf;
}

}  // namespace lml
