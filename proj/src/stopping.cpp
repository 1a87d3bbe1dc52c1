#include "lml/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "lml/stats.hpp"

namespace lml {

namespace {

void require_start(std::span<const CoupledChainRecord> chain, std::size_t start) {
    if (chain.empty()) throw std::invalid_argument("stopping detector: empty chain");
    if (start >= chain.size())
        throw std::invalid_argument("stopping detector: start beyond chain end");
}

}  // namespace

StopResult detect_sigma_tilde(std::span<const CoupledChainRecord> chain, double M,
                              std::size_t start) {
    require_start(chain, start);
    if (!(M >= 0.0)) throw std::invalid_argument("detect_sigma_tilde: M must be >= 0");
    for (std::size_t i = start + 1; i < chain.size(); ++i) {
        if (chain[i].s_x.norm() + chain[i].s_y.norm() <= M)
            return {static_cast<long>(i - start), false};
    }
    return {static_cast<long>(chain.size() - 1 - start), true};
}

StopResult detect_sigma(std::span<const CoupledChainRecord> chain, double d, std::size_t start) {
    require_start(chain, start);
    for (std::size_t i = start + 1; i < chain.size(); ++i) {
        if ((chain[i].s_x - chain[i].s_y).norm() <= d) return {static_cast<long>(i - start), false};
    }
    return {static_cast<long>(chain.size() - 1 - start), true};
}

StopResult detect_sigma_hat(std::span<const CoupledChainRecord> chain, double lambda2, double flip,
                            std::size_t start) {
    require_start(chain, start);
    const double base = (chain[start].s_x - chain[start].s_y).norm();
    double product = 1.0;
    for (std::size_t i = start + 1; i < chain.size(); ++i) {
        product *= delta_of_gap(chain[i].gap, lambda2, flip);
        if ((chain[i].s_x - chain[i].s_y).norm() > product * base)
            return {static_cast<long>(i - start), false};
    }
    return {static_cast<long>(chain.size() - 1 - start), true};
}

StopResult detect_sigma_dagger(std::span<const CoupledChainRecord> chain, double d, double lambda2,
                               double flip, std::size_t start) {
    const StopResult s = detect_sigma(chain, d, start);
    if (s.censored) return s;
    const StopResult h = detect_sigma_hat(chain, lambda2, flip, start + s.k);
    return {s.k + h.k, h.censored};
}

StopResult detect_sigma_bar(std::span<const CoupledChainRecord> chain, double d, double M,
                            double lambda2, double flip, std::size_t start) {
    const StopResult dag = detect_sigma_dagger(chain, d, lambda2, flip, start);
    if (dag.censored) return dag;
    const StopResult t = detect_sigma_tilde(chain, M, start + dag.k);
    return {dag.k + t.k, t.censored};
}

StopResult detect_sigma_bar_k(std::span<const CoupledChainRecord> chain, double d, double M,
                              double lambda2, double flip, int kfold) {
    if (kfold < 1) throw std::invalid_argument("detect_sigma_bar_k: kfold >= 1");
    long acc = 0;
    for (int j = 0; j < kfold; ++j) {
        const StopResult b =
            detect_sigma_bar(chain, d, M, lambda2, flip, static_cast<std::size_t>(acc));
        acc += b.k;
        if (b.censored) return {acc, true};
    }
    return {acc, false};
}

StoppingSummary tail_and_moment(const std::string& name, const std::vector<StopResult>& samples,
                                long horizon, double vartheta, Rng& boot_rng,
                                std::size_t min_tail_count) {
    if (samples.empty()) throw std::invalid_argument("tail_and_moment: empty sample");
    StoppingSummary s;
    s.name = name;
    s.n = samples.size();
    s.samples = samples;
    s.vartheta = vartheta;

    std::size_t censored = 0;
    for (const StopResult& r : samples)
        if (r.censored) ++censored;
    s.censored_fraction = static_cast<double>(censored) / static_cast<double>(s.n);

    // tail[k] = fraction with sigma > k; censored samples exceed every k < horizon
    s.tail.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (const StopResult& r : samples) {
        const long v = r.censored ? horizon : r.k;
        for (long k = 0; k < v && k <= horizon; ++k) s.tail[static_cast<std::size_t>(k)] += 1.0;
        if (r.censored) s.tail[static_cast<std::size_t>(horizon)] += 1.0;
    }
    for (double& t : s.tail) t /= static_cast<double>(s.n);

    // fitted segment: k >= 1 while the exceedance count stays above min_tail_count
    // and the tail is still strictly informative
    std::vector<double> xs, ys, ws;
    for (std::size_t k = 1; k < s.tail.size(); ++k) {
        const double count = s.tail[k] * static_cast<double>(s.n);
        if (count < static_cast<double>(min_tail_count)) break;
        if (s.tail[k] >= 1.0) continue;  // log(1)=0 rows carry no rate information yet
        xs.push_back(static_cast<double>(k));
        ys.push_back(std::log(s.tail[k]));
        // Var(log p_hat) ~ (1-p)/(n p)
        ws.push_back(static_cast<double>(s.n) * s.tail[k] / (1.0 - s.tail[k]));
    }
    if (xs.size() >= 3) {
        const LinearFit fit = weighted_linear_fit(xs, ys, ws);
        s.geom_rate = fit.slope;
        s.rate_ci_lo = fit.slope - 1.96 * fit.slope_se;
        s.rate_ci_hi = fit.slope + 1.96 * fit.slope_se;
        s.fit_r2 = fit.r2;
        s.fit_begin = static_cast<std::size_t>(xs.front());
        s.fit_end = static_cast<std::size_t>(xs.back());
        s.fit_available = true;
    }

    if (censored < samples.size()) {
        std::vector<double> terms;
        terms.reserve(samples.size());
        for (const StopResult& r : samples)
            terms.push_back(r.censored ? 0.0 : std::exp(vartheta * static_cast<double>(r.k)));
        const MeanCi ci = bootstrap_mean_ci(terms, 0.95, 1000, boot_rng);
        s.exp_moment = ci.estimate;
        s.moment_ci_lo = ci.lo;
        s.moment_ci_hi = ci.hi;
        s.moment_available = true;
    }
    return s;
}

std::string StoppingSummary::to_json() const {
    char buf[256];
    std::string j = "{";
    j += "\"name\":\"" + name + "\",";
    std::snprintf(buf, sizeof buf, "\"n\":%zu,\"censored_fraction\":%.17g,", n, censored_fraction);
    j += buf;
    j += "\"tail\":[";
    for (std::size_t k = 0; k < tail.size(); ++k) {
        std::snprintf(buf, sizeof buf, k + 1 < tail.size() ? "%.17g," : "%.17g", tail[k]);
        j += buf;
    }
    j += "],";
    if (fit_available) {
        std::snprintf(buf, sizeof buf,
                      "\"geom_rate\":%.17g,\"rate_ci\":[%.17g,%.17g],\"fit_r2\":%.17g,"
                      "\"fit_segment\":[%zu,%zu],",
                      geom_rate, rate_ci_lo, rate_ci_hi, fit_r2, fit_begin, fit_end);
        j += buf;
    } else {
        j += "\"geom_rate\":null,";
    }
    if (moment_available) {
        std::snprintf(buf, sizeof buf,
                      "\"vartheta\":%.17g,\"exp_moment\":%.17g,\"moment_ci\":[%.17g,%.17g]",
                      vartheta, exp_moment, moment_ci_lo, moment_ci_hi);
        j += buf;
    } else {
        j += "\"exp_moment\":null";
    }
    j += "}";
    return j;
}

}  // namespace lml
