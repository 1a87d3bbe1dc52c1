#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace lml {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;  // accumulated Richardson estimate
    bool converged = true;        // error_estimate within the requested tolerance
};

namespace detail {

template <class F>
void adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                          double whole, double tol, int depth, long& cell_budget,
                          QuadResult& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double h6 = (b - a) / 12.0;
    const double left = h6 * (fa + 4.0 * flm + fm);
    const double right = h6 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol || depth <= 0 || --cell_budget <= 0) {
        out.value += left + right + delta / 15.0;
        out.error_estimate += std::abs(delta) / 15.0;
        return;
    }
    adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, cell_budget, out);
    adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, cell_budget, out);
}

}  // namespace detail

// Adaptive Simpson on [a, b], absolute tolerance, bounded subdivision work.
// Integrands may jump at the interval endpoints (densities evaluated on their
// support edge); the local refinement bottoms out there with a negligible
// contribution, so convergence is judged by the accumulated estimate rather
// than per-cell acceptance.
template <class F>
QuadResult integrate_adaptive(const F& f, double a, double b, double abs_tol, int max_depth = 48,
                              long cell_budget = 200000) {
    QuadResult out;
    if (a == b) return out;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth, cell_budget, out);
    out.converged = out.error_estimate <= abs_tol;
    return out;
}

// Integrate over [a, b] forcing subdivision at the given interior breakpoints
// (points outside (a, b) are ignored). Tolerance is split evenly per segment.
template <class F>
QuadResult integrate_with_breakpoints(const F& f, double a, double b,
                                      std::span<const double> breakpoints, double abs_tol) {
    std::vector<double> pts{a};
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    QuadResult total;
    const double seg_tol = abs_tol / static_cast<double>(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        QuadResult r = integrate_adaptive(f, pts[i], pts[i + 1], seg_tol);
        total.value += r.value;
        total.error_estimate += r.error_estimate;
        total.converged = total.converged && r.converged;
    }
    return total;
}

// Integrate f over [a, +inf) through the rational map z = a + t/(1-t).
template <class F>
QuadResult integrate_upper_tail(const F& f, double a, double abs_tol) {
    auto g = [&](double t) {
        const double om = 1.0 - t;
        return f(a + t / om) / (om * om);
    };
    // stop a hair short of 1; the integrands used here vanish at the endpoint
    return integrate_adaptive(g, 0.0, 1.0 - 1e-14, abs_tol);
}

// Integrate f over (-inf, b] through z = b - t/(1-t).
template <class F>
QuadResult integrate_lower_tail(const F& f, double b, double abs_tol) {
    auto g = [&](double t) {
        const double om = 1.0 - t;
        return f(b - t / om) / (om * om);
    };
    return integrate_adaptive(g, 0.0, 1.0 - 1e-14, abs_tol);
}

}  // namespace lml
