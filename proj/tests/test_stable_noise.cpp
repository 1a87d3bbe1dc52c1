#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lml/quadrature.hpp"
#include "lml/rng.hpp"
#include "lml/stable_noise.hpp"
#include "lml/stats.hpp"

using namespace lml;

namespace {
// independent oracle: total nu-mass of the large-jump region by quadrature
double gamma_by_quadrature(const StableSpec& s) {
    auto nu = [&](double x) { return s.c_alpha * std::pow(std::abs(x), -s.alpha - 1.0); };
    return 2.0 * integrate_upper_tail(nu, s.K, 1e-10).value;
}
}  // namespace

TEST_CASE("gamma_K closed form against the quadrature oracle") {
    CHECK(StableSpec{1.0, 1.0, 1.0}.gamma_K() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(StableSpec{1.0, 1.0, 2.0}.gamma_K() == doctest::Approx(1.0).epsilon(1e-12));
    for (const StableSpec s : {StableSpec{1.0, 1.0, 1.0}, StableSpec{0.5, 2.0, 0.7},
                               StableSpec{1.5, 0.3, 2.5}}) {
        CHECK(s.gamma_K() == doctest::Approx(gamma_by_quadrature(s)).epsilon(1e-6));
    }
}

TEST_CASE("gamma_K strictly decreases in K") {
    double prev = StableSpec{1.2, 1.0, 0.25}.gamma_K();
    for (double K = 0.5; K <= 4.0; K += 0.25) {
        const double g = StableSpec{1.2, 1.0, K}.gamma_K();
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("p_K density values and support") {
    const StableSpec s{1.0, 1.0, 1.0};
    CHECK(s.p_K_density(2.0) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(s.p_K_density(0.999) == 0.0);
    CHECK(s.p_K_density(-0.5) == 0.0);
    CHECK(s.p_K_density(1.0) == 0.0);  // jumps of size exactly K: closed support edge
    CHECK(s.p_K_density(-3.0) == doctest::Approx(0.5 / 9.0).epsilon(1e-14));
}

TEST_CASE("p_K normalizes to one by quadrature") {
    for (const StableSpec s : {StableSpec{1.0, 1.0, 1.0}, StableSpec{1.5, 1.0, 0.5}}) {
        auto f = [&](double z) { return s.p_K_density(z); };
        const double total = integrate_upper_tail(f, s.K, 1e-9).value +
                             integrate_lower_tail(f, -s.K, 1e-9).value;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("large-jump sampler: support, symmetry, median") {
    const StableSpec s{0.8, 1.0, 1.3};
    Rng rng(100, 0);
    const int n = 100000;
    int positive = 0, above_median = 0;
    const double med = s.K * std::pow(2.0, 1.0 / s.alpha);
    for (int i = 0; i < n; ++i) {
        const double eta = sample_large_jump(s, rng);
        REQUIRE(std::abs(eta) >= s.K);
        if (eta > 0) ++positive;
        if (std::abs(eta) > med) ++above_median;
    }
    const double three_sigma = 3.0 * std::sqrt(n / 4.0);
    CHECK(std::abs(positive - n / 2) < three_sigma);
    CHECK(std::abs(above_median - n / 2) < three_sigma);
}

TEST_CASE("nu_K sampler matches the analytic two-sided pareto cdf") {
    const StableSpec s{1.0, 1.0, 1.0};
    Rng rng(101, 0);
    std::vector<double> v(100000);
    for (double& x : v) x = sample_large_jump(s, rng);
    const KsResult ks = ks_test(v, [&](double z) { return s.nu_K_cdf(z); }, 0.01);
    CHECK(ks.pass);
}

TEST_CASE("small-increment variance matches the truncated second moment") {
    const StableSpec s{1.0, 1.0, 1.0};
    // quadrature oracle for int_{|x|<K} x^2 nu(dx)
    auto second = [&](double x) { return x * x * s.c_alpha * std::pow(std::abs(x), -s.alpha - 1.0); };
    const double bp[] = {0.0};
    const double sigma2 = 2.0 * integrate_with_breakpoints(second, 1e-30, s.K, bp, 1e-10).value;
    CHECK(sigma2 == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(small_gaussian_variance(s, SmallJumpConfig{}) == doctest::Approx(sigma2).epsilon(1e-8));

    for (const SmallJumpConfig cfg :
         {SmallJumpConfig{SmallJumpScheme::gaussian, 0.05},
          SmallJumpConfig{SmallJumpScheme::gaussian_plus_poisson, 0.05}}) {
        Rng rng(102, cfg.scheme == SmallJumpScheme::gaussian ? 0u : 1u);
        const int n = 200000;
        const double dt = 0.01;
        std::vector<double> inc(n);
        for (double& x : inc) x = sample_small_increment(s, cfg, dt, rng);
        const double m = mean(inc);
        CHECK(std::abs(m) < 3.0 * std_error(inc));
        // both schemes share the full truncated second moment sigma2 * dt
        const double var = sample_variance(inc);
        CHECK(var == doctest::Approx(sigma2 * dt).epsilon(0.05));
    }
}

TEST_CASE("small-increment rejects nonpositive dt") {
    Rng rng(103, 0);
    CHECK_THROWS_AS(sample_small_increment(StableSpec{}, SmallJumpConfig{}, 0.0, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_small_increment(StableSpec{}, SmallJumpConfig{}, -1.0, rng),
                    std::invalid_argument);
}

TEST_CASE("layered increments match the gaussian-plus-truncated-jump law") {
    // empirical CF of the layered sampler against the analytic compound law:
    // log phi = -sigma_g^2 xi^2 dt / 2 + dt * int_{eps K <= |x| < K} (cos xi x - 1) nu(dx)
    const StableSpec s{0.6, 1.0, 1.0};
    const SmallJumpConfig cfg{SmallJumpScheme::gaussian_plus_poisson, 0.2};
    const double dt = 0.5;
    const int n = 100000;
    Rng rng(104, 0);
    std::vector<double> inc(n);
    for (double& x : inc) x = sample_small_increment(s, cfg, dt, rng);
    const double a = cfg.eps_inner * s.K;
    for (double xi : {1.0, 3.0}) {
        auto integrand = [&](double x) {
            return (std::cos(xi * x) - 1.0) * s.c_alpha * std::pow(x, -s.alpha - 1.0);
        };
        const double layer = 2.0 * integrate_adaptive(integrand, a, s.K, 1e-10).value;
        const double target =
            std::exp(dt * (layer - 0.5 * small_gaussian_variance(s, cfg) * xi * xi));
        std::vector<double> c(inc.size());
        for (std::size_t i = 0; i < inc.size(); ++i) c[i] = std::cos(xi * inc[i]);
        CHECK(std::abs(mean(c) - target) <= 4.0 * std_error(c));
    }
}

TEST_CASE("jump stream law: gap distribution and exponential moment") {
    const StableSpec s{1.0, 1.0, 1.0};
    const double T = 1.0, gamma = s.gamma_K();
    Rng rng(105, 0);
    const int n = 10000;
    std::vector<double> tau1(n), expmom(n);
    for (int i = 0; i < n; ++i) {
        Rng trial(105, static_cast<std::uint64_t>(i) + 1);
        JumpStream js = sample_jump_stream(s, T, 50.0, trial);
        REQUIRE_FALSE(js.sampled.empty());
        tau1[static_cast<std::size_t>(i)] = js.sampled_times().front();
        expmom[static_cast<std::size_t>(i)] = std::exp(gamma * tau1[static_cast<std::size_t>(i)] / 2.0);
    }
    // mean of tau_1 = T + 1/gamma
    CHECK(mean(tau1) == doctest::Approx(T + 1.0 / gamma).epsilon(0.02));
    // KS of tau_1 - T against Exp(gamma)
    std::vector<double> shifted(tau1);
    for (double& t : shifted) t -= T;
    CHECK(ks_test(shifted, [&](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-gamma * x); },
                  0.01)
              .pass);
    // E[e^{gamma tau_1 / 2}] = 2 e^{gamma T / 2}
    const MeanCi ci = bootstrap_mean_ci(expmom, 0.95, 1000, rng);
    const double target = 2.0 * std::exp(gamma * T / 2.0);
    CHECK(ci.lo < target);
    CHECK(ci.hi > target);
}

TEST_CASE("jump stream structure: sampling rule re-derived from the arrivals") {
    const StableSpec s{1.2, 0.8, 0.9};
    Rng rng(106, 0);
    const double T = 0.7;
    JumpStream js = sample_jump_stream(s, T, 200.0, rng);
    REQUIRE(js.arrivals.size() > 10);
    // arrivals increasing, magnitudes >= K
    for (std::size_t i = 0; i < js.arrivals.size(); ++i) {
        CHECK(std::abs(js.arrivals[i].size) >= s.K);
        if (i) CHECK(js.arrivals[i].time > js.arrivals[i - 1].time);
    }
    // brute-force re-derivation of the sampled subsequence
    std::vector<std::size_t> expected;
    double window_end = T;
    for (std::size_t i = 0; i < js.arrivals.size(); ++i) {
        if (js.arrivals[i].time > window_end) {
            expected.push_back(i);
            window_end = js.arrivals[i].time + T;
        }
    }
    CHECK(js.sampled == expected);
    // gaps exceed T
    const std::vector<double> st = js.sampled_times();
    for (std::size_t i = 1; i < st.size(); ++i) CHECK(st[i] - st[i - 1] > T);
}

TEST_CASE("jump stream: empty sampled subsequence is valid") {
    const StableSpec rare{1.0, 1.0, 1000.0};  // gamma_K = 2e-3
    Rng rng(107, 0);
    JumpStream js = sample_jump_stream(rare, 0.5, 1.0, rng);
    CHECK(js.sampled.empty());
}

TEST_CASE("jump stream determinism") {
    const StableSpec s{1.0, 1.0, 1.0};
    Rng a(108, 9), b(108, 9);
    CHECK(sample_jump_stream(s, 1.0, 100.0, a) == sample_jump_stream(s, 1.0, 100.0, b));
}

TEST_CASE("characteristic function and the scale map") {
    const StableSpec unit = StableSpec::unit_scale(1.0, 1.0);
    CHECK(unit.char_function(0.0, 5.0).real() == doctest::Approx(1.0));
    CHECK(unit.char_function(1.0, 1.0).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    // frozen canonical constants (mpmath, 25 digits)
    CHECK(StableSpec::canonical_c_alpha(0.5) == doctest::Approx(0.1994711402007163).epsilon(1e-12));
    CHECK(StableSpec::canonical_c_alpha(1.0) == doctest::Approx(0.3183098861837907).epsilon(1e-12));
    CHECK(StableSpec::canonical_c_alpha(1.5) == doctest::Approx(0.2992067103010745).epsilon(1e-9));
    for (double a : {0.3, 0.5, 0.9, 1.0, 1.1, 1.5, 1.9})
        CHECK(StableSpec::unit_scale(a, 1.0).scale() == doctest::Approx(1.0).epsilon(1e-9));
    // default preset scale at alpha = 1 is pi
    CHECK(StableSpec{1.0, 1.0, 1.0}.scale() == doctest::Approx(3.1415926535897932).epsilon(1e-12));
}

TEST_CASE("decomposition consistency: small + large parts reproduce the law") {
    // empirical CF of z(1) against char_function, tolerance 4 sigma + the
    // documented gaussian-substitution bias of the layered scheme
    for (double alpha : {0.5, 1.0, 1.5}) {
        const StableSpec s{alpha, 1.0, 1.0};
        const SmallJumpConfig cfg{SmallJumpScheme::gaussian_plus_poisson, 0.05};
        const double gamma = s.gamma_K(), t = 1.0;
        const int n = 100000;
        std::vector<double> z(n);
        Rng rng(109, static_cast<std::uint64_t>(alpha * 10.0));
        for (double& zi : z) {
            double v = sample_small_increment(s, cfg, t, rng);
            double arr = rng.exponential(gamma);
            while (arr <= t) {
                v += sample_large_jump(s, rng);
                arr += rng.exponential(gamma);
            }
            zi = v;
        }
        for (double xi : {0.5, 1.0, 2.0}) {
            std::vector<double> c(z.size()), si(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) {
                c[i] = std::cos(xi * z[i]);
                si[i] = std::sin(xi * z[i]);
            }
            const double target = s.char_function(xi, t).real();
            const double tol =
                4.0 * std::max(std_error(c), std_error(si)) + small_jump_cf_bias_bound(s, cfg, xi, t);
            CHECK(std::abs(mean(c) - target) <= tol);
            CHECK(std::abs(mean(si)) <= tol);
        }
    }
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS((StableSpec{2.0, 1.0, 1.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((StableSpec{1.0, -1.0, 1.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((StableSpec{1.0, 1.0, 0.0}.validate()), std::invalid_argument);
    Rng rng(110, 0);
    CHECK_THROWS_AS(sample_jump_stream(StableSpec{}, 2.0, 1.0, rng), std::invalid_argument);
}
