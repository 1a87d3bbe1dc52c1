#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lml/rng.hpp"
#include "lml/stable_noise.hpp"

namespace lml {

struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    double norm() const;
    bool operator==(const Vec2&) const = default;
};

Vec2 operator+(Vec2 a, Vec2 b);
Vec2 operator-(Vec2 a, Vec2 b);
Vec2 operator*(double s, Vec2 v);

// Bounded Lipschitz drift together with its reported bounds. The bounds are
// data (they feed the contraction constants), so construction spot-checks them
// on random points rather than trusting the caller.
struct DriftSpec {
    std::string name = "zero";
    std::function<Vec2(Vec2)> evaluate;
    double F0_bound = 0.0;    // sup |F|
    double Flip_bound = 0.0;  // Lipschitz constant

    static DriftSpec zero();
    static DriftSpec constant(Vec2 b);
    // F(x) = eps (sin x2, cos x1); F0 = eps sqrt(2), Flip = eps
    static DriftSpec trig(double eps);

    // samples random points/pairs in [-R,R]^2 and throws if a reported bound fails
    void spot_check(double R = 10.0, int n_points = 256, std::uint64_t seed = 2) const;
};

struct ModelConfig {
    double lambda1 = 1.0;
    double lambda2 = 50.0;
    DriftSpec drift = DriftSpec::trig(0.5);
    StableSpec noise{};
    SmallJumpConfig small_jump{};
    double waiting_T = 1.0;   // T
    double step_h = 0.01;
    double horizon = 100.0;   // default simulation length (time units)
    double ball_radius = 1.0; // M
    double close_dist = 0.01; // d
    double moment_p = 0.5;    // p in (0, alpha)

    // coupling constants of the jump law; the stable defaults are
    // beta1 = (4 alpha + 4)/K and beta2 = 1, overridable for other noise
    double beta1() const;
    double beta2() const;
    double beta1_override = 0.0;  // 0 = use stable default
    double beta2_override = 0.0;

    void validate() const;
    bool a4_holds() const;  // gamma_K >= 2 beta2 ||F||_Lip
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time);
    double time() const { return time_; }

private:
    double time_;
};

// One trajectory on a grid that contains every jump time. At a jump index i,
// states[i] is the post-jump state and left_limits stores the pre-jump state;
// conv[i] is the realized stochastic convolution int_0^t e^{-lambda1(t-s)} dz(s)
// accumulated with the same discretization as the path itself.
struct CadlagPath {
    std::vector<double> times;
    std::vector<Vec2> states;
    std::vector<double> conv;
    std::vector<std::size_t> jump_marks;
    std::vector<Vec2> left_limits;   // parallel to jump_marks
    std::vector<double> jump_sizes;  // parallel to jump_marks

    Vec2 left_limit_at(double tau) const;  // throws if tau is not a marked jump time
    std::string to_csv() const;            // time,x1,x2,jump_flag,jump_size
};

// Exponential-Euler integration of the mild form: the linear part is exact per
// coordinate, drift is evaluated at step starts, the small-jump increment enters
// coordinate 1 at step end, and every arrival in the stream is placed exactly on
// the grid and applied as +size to coordinate 1. extra_times (within [0, until])
// are inserted into the grid so callers can read states at exact instants.
CadlagPath integrate(const ModelConfig& cfg, Vec2 x0, const JumpStream& stream, Rng& rng_small,
                     double until, std::span<const double> extra_times = {});

struct AprioriCheck {
    bool pass = true;
    std::size_t first_violation = 0;
    double worst_margin = 0.0;  // most negative (bound - value) seen
};

// Pathwise dissipativity bound at every grid point:
//   |X(t)| <= e^{-l1 t}|x0| + sqrt(2) F0 (1-e^{-l1 t})/l1 + |conv(t)| + slack
// plus the per-coordinate versions.
AprioriCheck check_apriori_bound(const CadlagPath& path, const ModelConfig& cfg, Vec2 x0);

// additive slack used by the pathwise assertions; calibrated against h/32 references
double scheme_slack(const ModelConfig& cfg, double t, double pair_distance);

}  // namespace lml
