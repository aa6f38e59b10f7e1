#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "subexp/domain.hpp"
#include "subexp/engine.hpp"
#include "subexp/errors.hpp"
#include "subexp/golden.hpp"
#include "subexp/independence.hpp"
#include "subexp/rng.hpp"

namespace subexp {

/// The interval [mu_lower, mu_upper] characterizing the limit law of the
/// empirical mean under sublinear expectation.
struct MaximalDistribution {
    double mu_lower = 0.0;
    double mu_upper = 0.0;
};

inline MaximalDistribution mu_bounds(const RandomVariable& x, const CredalDomain& d,
                                     const EngineOptions& opts = {}) {
    Method m = auto_method(d);
    MaximalDistribution md;
    md.mu_lower = lower_expectation(x, d, m, opts).value;
    md.mu_upper = upper_expectation(x, d, m, opts).value;
    return md;
}

/**
 * Global maximum of phi on [mu_lower, mu_upper]: a uniform grid of
 * ceil(L * width / tol) + 1 points pins the maximum cell within tol by the
 * Lipschitz bound, then golden-section refinement polishes the best cell.
 */
inline double maximal_dist_eval(const TestFunction& phi, const MaximalDistribution& md,
                                double tolerance = 1e-9) {
    assert(md.mu_lower <= md.mu_upper);
    double width = md.mu_upper - md.mu_lower;
    if (width <= 0.0) return phi(md.mu_lower);
    double cells = std::ceil(phi.lipschitz_L * width / tolerance);
    int points = static_cast<int>(std::min(cells, 4.0e6)) + 1;
    if (points < 3) points = 3;
    auto at = [&](int k) {
        return (k == points - 1) ? md.mu_upper
                                 : md.mu_lower + width * static_cast<double>(k) /
                                       static_cast<double>(points - 1);
    };
    int best = 0;
    double best_v = phi(at(0));
    for (int k = 1; k < points; ++k) {
        double v = phi(at(k));
        if (v > best_v) {
            best_v = v;
            best = k;
        }
    }
    auto [x, v] = detail::golden_max([&](double t) { return phi(t); },
                                     at(std::max(0, best - 1)), at(std::min(points - 1, best + 1)),
                                     1e-12);
    (void)x;
    return std::max(v, best_v);
}

enum class LlnMethod { ExactDP, MonteCarlo };

struct IidResult {
    double value = 0.0;
    double std_error = 0.0; // Monte Carlo standard error at the maximizing theta
    ThetaVector argmax_theta;
};

namespace detail {

/// Exact distribution of S_n for i.i.d. draws from (values, probs): iterated
/// convolution over a sorted (sum, mass) support, merging sums that agree to
/// 1e-12 so floating-point near-duplicates cannot blow up the support.
inline std::vector<std::pair<double, double>>
convolve_sum(const std::vector<double>& values, const ThetaVector& theta, int n) {
    constexpr double merge_tol = 1e-12;
    std::vector<std::pair<double, double>> dist{{0.0, 1.0}};
    std::vector<std::pair<double, double>> next;
    for (int step = 0; step < n; ++step) {
        next.clear();
        next.reserve(dist.size() * values.size());
        for (const auto& [s, p] : dist)
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (theta[i] == 0.0) continue;
                next.emplace_back(s + values[i], p * theta[i]);
            }
        std::sort(next.begin(), next.end());
        dist.clear();
        for (const auto& [s, p] : next) {
            if (!dist.empty() && s - dist.back().first <= merge_tol)
                dist.back().second += p;
            else
                dist.emplace_back(s, p);
        }
    }
    return dist;
}

} // namespace detail

/**
 * sup over the theta grid of E_theta[phi(S_n / n)] where X_1..X_n are i.i.d.
 * with law theta under each fixed theta (the per-measure product extended to
 * n factors).
 *
 * ExactDP builds the exact distribution of S_n by iterated convolution;
 * its feasibility contract is n_states <= 3 and n <= 200 (MethodInfeasible
 * beyond that). MonteCarlo averages phi over `samples` simulated paths per
 * grid theta, using the deterministic counter-based stream keyed by
 * (seed, theta index, path index); the reported standard error belongs to the
 * maximizing theta. Grid ties keep the lowest grid index.
 */
inline IidResult iid_sum_functional(const TestFunction& phi, const RandomVariable& x,
                                    const CredalDomain& d, int n, LlnMethod method,
                                    int resolution = 101, int samples = 10000,
                                    std::uint64_t seed = 1) {
    if (n < 1) throw SpecError("n must be >= 1");
    if (phi.bivariate()) throw SpecError("iid_sum_functional uses univariate phi");
    if (x.size() != d.n_states()) throw SpecError("X must live on the domain's state space");
    if (method == LlnMethod::ExactDP && (d.n_states() > 3 || n > 200))
        throw MethodInfeasible("ExactDP contract: n_states <= 3 and n <= 200");

    IidResult best;
    best.value = -std::numeric_limits<double>::infinity();
    std::int64_t theta_index = -1;

    d.grid_enumerate(resolution, [&](const ThetaVector& theta) {
        ++theta_index;
        double v;
        double se = 0.0;
        if (method == LlnMethod::ExactDP) {
            auto dist = detail::convolve_sum(x.values, theta, n);
            v = 0.0;
            for (const auto& [s, p] : dist) v += p * phi(s / static_cast<double>(n));
        } else {
            // cumulative distribution for inverse-CDF sampling
            std::vector<double> cdf(theta.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < theta.size(); ++i) {
                acc += theta[i];
                cdf[i] = acc;
            }
            double sum_phi = 0.0;
            double sum_phi2 = 0.0;
            for (int path = 0; path < samples; ++path) {
                double s = 0.0;
                for (int step = 0; step < n; ++step) {
                    double u = rng::uniform(seed, static_cast<std::uint64_t>(theta_index),
                                            static_cast<std::uint64_t>(path),
                                            static_cast<std::uint64_t>(step));
                    std::size_t k = 0;
                    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
                    s += x.values[k];
                }
                double val = phi(s / static_cast<double>(n));
                sum_phi += val;
                sum_phi2 += val * val;
            }
            v = sum_phi / static_cast<double>(samples);
            if (samples > 1) {
                double var = (sum_phi2 - sum_phi * sum_phi / static_cast<double>(samples)) /
                             static_cast<double>(samples - 1);
                se = std::sqrt(std::max(0.0, var) / static_cast<double>(samples));
            }
        }
        if (v > best.value) {
            best.value = v;
            best.std_error = se;
            best.argmax_theta = theta;
        }
    });
    if (best.argmax_theta.empty()) throw InfeasibleDomain("grid found no admissible point");
    return best;
}

struct LlnRow {
    int n = 0;
    double value = 0.0;
    double target = 0.0;
    double gap = 0.0;
    double std_error = 0.0;
    LlnMethod method = LlnMethod::ExactDP;
};

struct LlnTable {
    std::vector<LlnRow> rows;
    double target = 0.0;
    MaximalDistribution md;
    /// gap at max(n_list) <= gap at min(n_list) + slack
    bool trend_ok = false;
};

/**
 * One row per n: E[phi(S_n/n)] against the maximal-distribution target
 * sup_{mu in [mu_lower, mu_upper]} phi(mu). The trend contract compares the
 * last gap against the first plus `trend_slack` (slack absorbs Monte Carlo
 * noise).
 */
inline LlnTable lln_table(const TestFunction& phi, const RandomVariable& x, const CredalDomain& d,
                          const std::vector<int>& n_list, LlnMethod method, int resolution = 101,
                          int samples = 10000, std::uint64_t seed = 1, double trend_slack = 1e-9,
                          const EngineOptions& opts = {}) {
    if (n_list.empty()) throw SpecError("n_list must be nonempty");
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw SpecError("n_list must be ascending");
    LlnTable table;
    table.md = mu_bounds(x, d, opts);
    table.target = maximal_dist_eval(phi, table.md);
    for (int n : n_list) {
        IidResult r = iid_sum_functional(phi, x, d, n, method, resolution, samples, seed);
        LlnRow row;
        row.n = n;
        row.value = r.value;
        row.target = table.target;
        row.gap = std::fabs(r.value - table.target);
        row.std_error = r.std_error;
        row.method = method;
        table.rows.push_back(row);
    }
    table.trend_ok = table.rows.back().gap <= table.rows.front().gap + trend_slack;
    return table;
}

/**
 * Moment estimators for the mean interval: per grid theta the Monte Carlo
 * sample mean of S_n/n (samples paths, counter-based stream), returning the
 * (min, max) over the grid. samples == 0 selects the exact variant, which
 * uses E_theta[X] directly and reproduces mu_bounds.
 */
inline std::pair<double, double> moment_estimators(const RandomVariable& x, const CredalDomain& d,
                                                   int n, int theta_resolution, int samples,
                                                   std::uint64_t seed) {
    if (n < 1) throw SpecError("n must be >= 1");
    if (x.size() != d.n_states()) throw SpecError("X must live on the domain's state space");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::int64_t theta_index = -1;
    d.grid_enumerate(theta_resolution, [&](const ThetaVector& theta) {
        ++theta_index;
        double mean;
        if (samples == 0) {
            mean = dot(x, theta);
        } else {
            std::vector<double> cdf(theta.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < theta.size(); ++i) {
                acc += theta[i];
                cdf[i] = acc;
            }
            double total = 0.0;
            for (int path = 0; path < samples; ++path) {
                double s = 0.0;
                for (int step = 0; step < n; ++step) {
                    double u = rng::uniform(seed, static_cast<std::uint64_t>(theta_index),
                                            static_cast<std::uint64_t>(path),
                                            static_cast<std::uint64_t>(step));
                    std::size_t k = 0;
                    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
                    s += x.values[k];
                }
                total += s / static_cast<double>(n);
            }
            mean = total / static_cast<double>(samples);
        }
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
    });
    if (!std::isfinite(lo)) throw InfeasibleDomain("grid found no admissible point");
    return {lo, hi};
}

} // namespace subexp
