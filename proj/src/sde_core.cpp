#include "lml/sde_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace lml {

double Vec2::norm() const { return std::hypot(x1, x2); }

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
Vec2 operator*(double s, Vec2 v) { return {s * v.x1, s * v.x2}; }

DriftSpec DriftSpec::zero() {
    DriftSpec d;
    d.name = "zero";
    d.evaluate = [](Vec2) { return Vec2{0.0, 0.0}; };
    d.F0_bound = 0.0;
    d.Flip_bound = 0.0;
    return d;
}

DriftSpec DriftSpec::constant(Vec2 b) {
    DriftSpec d;
    d.name = "constant";
    d.evaluate = [b](Vec2) { return b; };
    d.F0_bound = b.norm();
    d.Flip_bound = 0.0;
    return d;
}

DriftSpec DriftSpec::trig(double eps) {
    DriftSpec d;
    d.name = "trig";
    d.evaluate = [eps](Vec2 x) { return Vec2{eps * std::sin(x.x2), eps * std::cos(x.x1)}; };
    d.F0_bound = eps * std::sqrt(2.0);
    d.Flip_bound = eps;
    return d;
}

void DriftSpec::spot_check(double R, int n_points, std::uint64_t seed) const {
    if (!evaluate) throw std::invalid_argument("DriftSpec: missing evaluate");
    Rng rng(seed, 0);
    for (int i = 0; i < n_points; ++i) {
        const Vec2 x{rng.uniform(-R, R), rng.uniform(-R, R)};
        const Vec2 y{rng.uniform(-R, R), rng.uniform(-R, R)};
        if (evaluate(x).norm() > F0_bound * (1.0 + 1e-12) + 1e-300)
            throw std::invalid_argument("DriftSpec '" + name + "': |F| exceeds F0_bound");
        const double lhs = (evaluate(x) - evaluate(y)).norm();
        if (lhs > Flip_bound * (x - y).norm() * (1.0 + 1e-9) + 1e-12)
            throw std::invalid_argument("DriftSpec '" + name + "': Lipschitz bound fails");
    }
}

double ModelConfig::beta1() const {
    return beta1_override > 0.0 ? beta1_override : (4.0 * noise.alpha + 4.0) / noise.K;
}

double ModelConfig::beta2() const { return beta2_override > 0.0 ? beta2_override : 1.0; }

void ModelConfig::validate() const {
    noise.validate();
    if (!(lambda1 > 0.0 && lambda2 > 0.0))
        throw std::invalid_argument("ModelConfig: dissipation rates must be positive");
    if (lambda1 > lambda2)
        throw std::invalid_argument("ModelConfig: requires lambda1 <= lambda2");
    if (!(step_h > 0.0)) throw std::invalid_argument("ModelConfig: step_h must be positive");
    if (!(moment_p > 0.0 && moment_p < noise.alpha))
        throw std::invalid_argument("ModelConfig: moment_p must lie in (0, alpha)");
    if (waiting_T < 0.0) throw std::invalid_argument("ModelConfig: waiting_T must be >= 0");
    if (!(ball_radius > 0.0)) throw std::invalid_argument("ModelConfig: M must be positive");
    if (!(close_dist > 0.0)) throw std::invalid_argument("ModelConfig: d must be positive");
    if (!drift.evaluate) throw std::invalid_argument("ModelConfig: drift.evaluate missing");
}

bool ModelConfig::a4_holds() const {
    return noise.gamma_K() >= 2.0 * beta2() * drift.Flip_bound;
}

IntegrationError::IntegrationError(const std::string& what, double time)
    : std::runtime_error(what), time_(time) {}

Vec2 CadlagPath::left_limit_at(double tau) const {
    for (std::size_t j = 0; j < jump_marks.size(); ++j) {
        if (times[jump_marks[j]] == tau) return left_limits[j];
    }
    throw std::invalid_argument("left_limit_at: not a jump time of this path");
}

std::string CadlagPath::to_csv() const {
    std::string out = "time,x1,x2,jump_flag,jump_size\n";
    std::vector<int> flag(times.size(), 0);
    std::vector<double> size(times.size(), 0.0);
    for (std::size_t j = 0; j < jump_marks.size(); ++j) {
        flag[jump_marks[j]] = 1;
        size[jump_marks[j]] = jump_sizes[j];
    }
    char buf[160];
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%.17g\n", times[i], states[i].x1,
                      states[i].x2, flag[i], size[i]);
        out += buf;
    }
    return out;
}

CadlagPath integrate(const ModelConfig& cfg, Vec2 x0, const JumpStream& stream, Rng& rng_small,
                     double until, std::span<const double> extra_times) {
    if (until > stream.horizon + 1e-12)
        throw std::invalid_argument("integrate: until exceeds stream horizon");
    if (!std::isfinite(x0.x1) || !std::isfinite(x0.x2))
        throw std::invalid_argument("integrate: x0 must be finite");

    // grid: multiples of h up to `until`, all jump times, and `until` itself
    std::vector<double> grid;
    const double h = cfg.step_h;
    grid.reserve(static_cast<std::size_t>(until / h) + stream.arrivals.size() + 2);
    for (double t = 0.0; t < until; t += h) grid.push_back(t);
    grid.push_back(until);
    for (const JumpEvent& e : stream.arrivals)
        if (e.time <= until) grid.push_back(e.time);
    for (double t : extra_times)
        if (t > 0.0 && t < until) grid.push_back(t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    CadlagPath path;
    path.times = grid;
    path.states.resize(grid.size());
    path.conv.resize(grid.size());
    path.states[0] = x0;
    path.conv[0] = 0.0;

    std::size_t next_jump = 0;
    const auto& jumps = stream.arrivals;
    // jumps at time 0 would precede the grid start; the stream generator cannot emit them
    Vec2 x = x0;
    double conv = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double dt = grid[i + 1] - grid[i];
        const double e1 = std::exp(-cfg.lambda1 * dt);
        const double e2 = std::exp(-cfg.lambda2 * dt);
        const Vec2 f = cfg.drift.evaluate(x);
        const double dz = sample_small_increment(cfg.noise, cfg.small_jump, dt, rng_small);
        x = Vec2{e1 * x.x1 + (1.0 - e1) / cfg.lambda1 * f.x1 + dz,
                 e2 * x.x2 + (1.0 - e2) / cfg.lambda2 * f.x2};
        conv = e1 * conv + dz;
        while (next_jump < jumps.size() && jumps[next_jump].time == grid[i + 1]) {
            path.jump_marks.push_back(i + 1);
            path.left_limits.push_back(x);
            path.jump_sizes.push_back(jumps[next_jump].size);
            x.x1 += jumps[next_jump].size;
            conv += jumps[next_jump].size;
            ++next_jump;
        }
        if (!std::isfinite(x.x1) || !std::isfinite(x.x2))
            throw IntegrationError("integrate: state diverged (non-finite)", grid[i + 1]);
        path.states[i + 1] = x;
        path.conv[i + 1] = conv;
    }
    return path;
}

double scheme_slack(const ModelConfig& cfg, double t, double pair_distance) {
    const double diam = std::exp(t * cfg.drift.Flip_bound) * pair_distance;
    return 10.0 * cfg.step_h * (cfg.drift.F0_bound + cfg.drift.Flip_bound * diam);
}

AprioriCheck check_apriori_bound(const CadlagPath& path, const ModelConfig& cfg, Vec2 x0) {
    AprioriCheck r;
    r.worst_margin = std::numeric_limits<double>::infinity();
    const double f0 = cfg.drift.F0_bound;
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        const double t = path.times[i];
        const double d1 = std::exp(-cfg.lambda1 * t);
        const double d2 = std::exp(-cfg.lambda2 * t);
        const double slack = scheme_slack(cfg, t, 0.0) + 1e-9;
        const double cv = std::abs(path.conv[i]);
        const double bound_full =
            d1 * x0.norm() + std::sqrt(2.0) * f0 * (1.0 - d1) / cfg.lambda1 + cv + slack;
        const double bound_c1 = d1 * std::abs(x0.x1) + f0 * (1.0 - d1) / cfg.lambda1 + cv + slack;
        const double bound_c2 = d2 * std::abs(x0.x2) + f0 * (1.0 - d2) / cfg.lambda2 + slack;
        const double m_full = bound_full - path.states[i].norm();
        const double m_c1 = bound_c1 - std::abs(path.states[i].x1);
        const double m_c2 = bound_c2 - std::abs(path.states[i].x2);
        const double m = std::min({m_full, m_c1, m_c2});
        if (m < r.worst_margin) r.worst_margin = m;
        if (m < 0.0 && r.pass) {
            r.pass = false;
            r.first_violation = i;
        }
    }
    return r;
}

}  // namespace lml
