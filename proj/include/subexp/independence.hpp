#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>
#include <vector>

#include "subexp/domain.hpp"
#include "subexp/engine.hpp"
#include "subexp/errors.hpp"
#include "subexp/expr.hpp"

namespace subexp {

/**
 * Bounded Lipschitz test function phi(x) or phi(x, y) with declared bound M
 * and Lipschitz constant L. The declarations are the user's; validate() spot
 * checks them numerically on a range.
 */
struct TestFunction {
    BoundExpr expr;
    double bound_M = 1.0;
    double lipschitz_L = 1.0;
    std::string source;

    bool bivariate() const { return expr.uses_y; }

    double operator()(double x, double y = 0.0) const { return eval_test_expr(expr, x, y); }

    /// Spot-checks |phi| <= M and the Lipschitz bound on a sample grid over
    /// [lo, hi] (each argument for bivariate phi). Throws SpecError on a
    /// violation beyond slack.
    void validate(double lo, double hi, int samples = 65, double slack = 1e-9) const {
        if (hi < lo) std::swap(lo, hi);
        auto at = [&](int k) {
            return samples <= 1 ? lo
                                : lo + (hi - lo) * static_cast<double>(k) /
                                      static_cast<double>(samples - 1);
        };
        double prev = 0.0;
        bool have_prev = false;
        double prev_x = 0.0;
        for (int i = 0; i < samples; ++i) {
            double xi = at(i);
            double v = bivariate() ? 0.0 : (*this)(xi);
            if (bivariate()) {
                for (int j = 0; j < samples; ++j) {
                    double w = (*this)(xi, at(j));
                    if (std::fabs(w) > bound_M + slack)
                        throw SpecError("test function exceeds declared bound M at (" +
                                        std::to_string(xi) + ", " + std::to_string(at(j)) + ")");
                }
                continue;
            }
            if (std::fabs(v) > bound_M + slack)
                throw SpecError("test function exceeds declared bound M at x=" + std::to_string(xi));
            if (have_prev && std::fabs(v - prev) > lipschitz_L * std::fabs(xi - prev_x) + slack)
                throw SpecError("test function exceeds declared Lipschitz constant near x=" +
                                std::to_string(xi));
            prev = v;
            prev_x = xi;
            have_prev = true;
        }
    }
};

inline TestFunction make_test_function(const std::string& text, double m, double l,
                                       bool bivariate = false) {
    TestFunction tf;
    tf.expr = parse_test_expr(text, bivariate);
    tf.bound_M = m;
    tf.lipschitz_L = l;
    tf.source = text;
    return tf;
}

/// Statewise composition phi(X): a random variable with values phi(a_i).
inline RandomVariable compose(const TestFunction& phi, const RandomVariable& x) {
    RandomVariable r;
    r.values.reserve(x.values.size());
    for (double v : x.values) r.values.push_back(phi(v));
    return r;
}

// ---------------------------------------------------------------------------
// Independence under each single measure
// ---------------------------------------------------------------------------

/**
 * sup over the domain of the product-measure expectation
 * sum_{i,j} phi(a_i, b_j) theta_i theta_j, the same theta in both factors.
 *
 * For two states the objective along theta_1 is an explicit quadratic and the
 * maximum is taken exactly over endpoints plus the interior critical point;
 * larger state counts use the grid with a certificate from the quadratic
 * objective's Lipschitz bound.
 */
inline SublinearResult per_theta_independent_expectation(const TestFunction& phi,
                                                         const RandomVariable& x,
                                                         const RandomVariable& y,
                                                         const CredalDomain& d, int resolution) {
    if (!phi.bivariate()) throw SpecError("per-measure independence needs a bivariate phi");
    if (x.size() != d.n_states() || y.size() != d.n_states())
        throw SpecError("X and Y must live on the domain's state space");

    const int n = d.n_states();
    std::vector<double> pv(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    double max_phi = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = phi(x.values[static_cast<std::size_t>(i)], y.values[static_cast<std::size_t>(j)]);
            pv[static_cast<std::size_t>(i * n + j)] = v;
            max_phi = std::max(max_phi, std::fabs(v));
        }

    auto objective = [&](const ThetaVector& theta) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double inner = 0.0;
            for (int j = 0; j < n; ++j)
                inner += pv[static_cast<std::size_t>(i * n + j)] * theta[static_cast<std::size_t>(j)];
            s += theta[static_cast<std::size_t>(i)] * inner;
        }
        return s;
    };

    SublinearResult r;
    if (n == 2) {
        // q(t) = A t^2 + B t + C on the projection interval
        double p11 = pv[0], p12 = pv[1], p21 = pv[2], p22 = pv[3];
        double a2 = p11 - p12 - p21 + p22;
        double b1 = p12 + p21 - 2.0 * p22;
        double c0 = p22;
        Interval iv = d.project_interval(1, {});
        if (iv.empty()) throw InfeasibleDomain("empty projection interval");
        std::vector<double> candidates{iv.lo, iv.hi};
        if (a2 != 0.0) {
            double crit = -b1 / (2.0 * a2);
            if (crit > iv.lo && crit < iv.hi) candidates.push_back(crit);
        }
        std::sort(candidates.begin(), candidates.end());
        double best_v = -std::numeric_limits<double>::infinity();
        double best_t = candidates.front();
        for (double t : candidates) {
            double v = (a2 * t + b1) * t + c0;
            if (v > best_v) {
                best_v = v;
                best_t = t;
            }
        }
        r.value = best_v;
        r.argmax_theta = {best_t, 1.0 - best_t};
        r.method = Method::NestedExact;
        r.certified_error = max_phi * d.tail_mass_bound();
        return r;
    }

    r.value = -std::numeric_limits<double>::infinity();
    double h = d.grid_enumerate(resolution, [&](const ThetaVector& theta) {
        double v = objective(theta);
        if (v > r.value) {
            r.value = v;
            r.argmax_theta = theta;
        }
    });
    if (r.argmax_theta.empty()) throw InfeasibleDomain("grid found no admissible point");
    r.method = Method::Grid;
    double lip = 2.0 * max_phi * static_cast<double>(n - 1);
    r.certified_error = lip * h + max_phi * d.tail_mass_bound();
    return r;
}

/**
 * Peng-style nested expectation: psi(a_i) = upper expectation of phi(a_i, Y),
 * then the upper expectation of psi(X); the inner supremum takes its own
 * maximizing measure before the outer one runs.
 */
inline SublinearResult peng_independent_expectation(const TestFunction& phi,
                                                    const RandomVariable& x,
                                                    const RandomVariable& y, const CredalDomain& d,
                                                    int resolution) {
    if (!phi.bivariate()) throw SpecError("Peng independence needs a bivariate phi");
    if (x.size() != d.n_states() || y.size() != d.n_states())
        throw SpecError("X and Y must live on the domain's state space");

    EngineOptions opts;
    opts.grid_resolution = resolution;
    Method m = auto_method(d);

    RandomVariable psi;
    psi.values.reserve(x.values.size());
    double inner_err = 0.0;
    for (double xi : x.values) {
        RandomVariable slice;
        slice.values.reserve(y.values.size());
        for (double yj : y.values) slice.values.push_back(phi(xi, yj));
        SublinearResult inner = upper_expectation(slice, d, m, opts);
        psi.values.push_back(inner.value);
        inner_err = std::max(inner_err, inner.certified_error);
    }
    SublinearResult outer = upper_expectation(psi, d, m, opts);
    outer.certified_error += inner_err;
    return outer;
}

/// peng - per_theta; nonnegative up to the two certificates.
inline double independence_gap(const TestFunction& phi, const RandomVariable& x,
                               const RandomVariable& y, const CredalDomain& d, int resolution) {
    double per = per_theta_independent_expectation(phi, x, y, d, resolution).value;
    double peng = peng_independent_expectation(phi, x, y, d, resolution).value;
    return peng - per;
}

// ---------------------------------------------------------------------------
// Identical-distribution check
// ---------------------------------------------------------------------------

struct DistributionCheckRow {
    std::string phi;
    double e1 = 0.0;
    double e2 = 0.0;
    double combined_tol = 0.0;
    bool pass = false;
};

struct DistributionCheckReport {
    std::vector<DistributionCheckRow> rows;
    /// Necessary-condition verdict over the supplied family only; equality on
    /// a finite family is evidence, not proof, of identical distribution.
    bool consistent = true;
};

inline DistributionCheckReport identically_distributed_check(
    const RandomVariable& x1, const CredalDomain& d1, const RandomVariable& x2,
    const CredalDomain& d2, const std::vector<TestFunction>& phis, double tolerance,
    int resolution = 201) {
    if (phis.empty()) throw SpecError("identically_distributed_check needs a nonempty phi family");
    DistributionCheckReport rep;
    EngineOptions opts;
    opts.grid_resolution = resolution;
    for (const TestFunction& phi : phis) {
        if (phi.bivariate()) throw SpecError("distribution checks use univariate phi");
        SublinearResult r1 = upper_expectation(compose(phi, x1), d1, auto_method(d1), opts);
        SublinearResult r2 = upper_expectation(compose(phi, x2), d2, auto_method(d2), opts);
        DistributionCheckRow row;
        row.phi = phi.source;
        row.e1 = r1.value;
        row.e2 = r2.value;
        row.combined_tol = tolerance + r1.certified_error + r2.certified_error;
        row.pass = std::fabs(r1.value - r2.value) <= row.combined_tol;
        rep.consistent = rep.consistent && row.pass;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

/// Default operational surrogate for the bounded-Lipschitz family:
/// {x, -x, x^2, -x^2, min(x, c), max(x, c)} with the caller's M and L.
inline std::vector<TestFunction> default_phi_family(double c, double m, double l) {
    std::string cs = detail::format_literal(c);
    std::vector<std::string> texts = {"x",       "-x",          "x*x",
                                      "-(x*x)",  "min(x, " + cs + ")", "max(x, " + cs + ")"};
    std::vector<TestFunction> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(make_test_function(t, m, l, false));
    return out;
}

} // namespace subexp
