#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "subexp/domain.hpp"
#include "subexp/engine.hpp"
#include "subexp/errors.hpp"

namespace subexp {

/// Which side of the duality a harness evaluates.
enum class ExpectationSide { Upper, Lower };

inline SublinearResult side_expectation(const RandomVariable& x, const CredalDomain& d,
                                        ExpectationSide side, const EngineOptions& opts) {
    Method m = auto_method(d);
    return side == ExpectationSide::Upper ? upper_expectation(x, d, m, opts)
                                          : lower_expectation(x, d, m, opts);
}

enum class Monotonicity { Increasing, Decreasing, None };

enum class SeqKind {
    ScaleOneMinusInvM, // X_m = limit * (1 - 1/m)
    Constant,          // X_m = limit
    TailIndicator,     // X_m = indicator of state index > m
    AlternatingShift,  // X_m = limit + (-1)^m / m
    AlternatingPair,   // X_m alternates limit (odd m) / alternate (even m)
    Interpolate,       // X_m = limit + (start - limit) / m
    PerStateExpr,      // X_m(omega_i) = expr_i evaluated at x = m
};

/**
 * Rule-generated sequence of random variables with its declared limit,
 * monotonicity, and optional dominating bound. at(m) materializes the m-th
 * member; the harnesses verify the declarations pointwise as they walk.
 */
struct RvSequence {
    SeqKind kind = SeqKind::Constant;
    RandomVariable limit;
    RandomVariable companion;          // start (Interpolate) or alternate (AlternatingPair)
    std::vector<BoundExpr> state_exprs; // PerStateExpr: one expression per state, variable x = m
    Monotonicity declared = Monotonicity::None;
    std::optional<RandomVariable> dominating_bound;

    RandomVariable at(int m, int n_states) const {
        assert(m >= 1);
        RandomVariable r;
        r.values.resize(static_cast<std::size_t>(n_states));
        switch (kind) {
        case SeqKind::ScaleOneMinusInvM: {
            double s = 1.0 - 1.0 / static_cast<double>(m);
            for (int i = 0; i < n_states; ++i)
                r.values[static_cast<std::size_t>(i)] = limit.values[static_cast<std::size_t>(i)] * s;
            return r;
        }
        case SeqKind::Constant:
            return limit;
        case SeqKind::TailIndicator:
            for (int i = 0; i < n_states; ++i)
                r.values[static_cast<std::size_t>(i)] = (i + 1 > m) ? 1.0 : 0.0;
            return r;
        case SeqKind::AlternatingShift: {
            double shift = ((m % 2 == 0) ? 1.0 : -1.0) / static_cast<double>(m);
            for (int i = 0; i < n_states; ++i)
                r.values[static_cast<std::size_t>(i)] =
                    limit.values[static_cast<std::size_t>(i)] + shift;
            return r;
        }
        case SeqKind::AlternatingPair:
            return (m % 2 == 1) ? limit : companion;
        case SeqKind::Interpolate: {
            double w = 1.0 / static_cast<double>(m);
            for (int i = 0; i < n_states; ++i) {
                double lim = limit.values[static_cast<std::size_t>(i)];
                double start = companion.values[static_cast<std::size_t>(i)];
                r.values[static_cast<std::size_t>(i)] = lim + (start - lim) * w;
            }
            return r;
        }
        case SeqKind::PerStateExpr: {
            if (static_cast<int>(state_exprs.size()) != n_states)
                throw SpecError("per-state sequence needs one expression per state");
            for (int i = 0; i < n_states; ++i)
                r.values[static_cast<std::size_t>(i)] =
                    eval_test_expr(state_exprs[static_cast<std::size_t>(i)],
                                   static_cast<double>(m));
            return r;
        }
        }
        throw SpecError("unknown sequence kind");
    }
};

struct TraceRow {
    int m = 0;
    double value = 0.0;
    double certified_error = 0.0;
};

struct HarnessReport {
    bool passed = false;
    std::string detail;              // failure code + witness, empty on pass
    std::vector<TraceRow> trace;     // E[X_m] per generated index
    double limit_value = 0.0;        // E[limit] where applicable
    double limit_error = 0.0;
    double final_gap = 0.0;
};

namespace detail {

inline void check_domination(const RvSequence& seq, const RandomVariable& xm, int m) {
    if (!seq.dominating_bound) return;
    const auto& b = seq.dominating_bound->values;
    for (std::size_t i = 0; i < xm.values.size(); ++i)
        if (std::fabs(xm.values[i]) > b[i] + tol::bound_order)
            throw DominationViolated("member " + std::to_string(m) + " escapes the dominating bound",
                                     m, static_cast<int>(i) + 1);
}

} // namespace detail

/**
 * Monotone convergence: walks E[X_m] for m = 1..m_max, requires the value
 * trace monotone in the declared direction within tol and the final value
 * within tol (plus certificates) of E[limit]. Pointwise monotonicity of the
 * generated members is verified and throws MonotonicityViolated with a
 * witness (m, state) when broken.
 */
inline HarnessReport monotone_harness(const RvSequence& seq, const CredalDomain& d, int m_max,
                                      double tolerance, ExpectationSide side = ExpectationSide::Upper,
                                      const EngineOptions& opts = {}) {
    if (seq.declared == Monotonicity::None)
        throw SpecError("monotone_harness needs a declared direction");
    HarnessReport rep;
    const int n = d.n_states();
    const bool increasing = seq.declared == Monotonicity::Increasing;

    RandomVariable prev;
    for (int m = 1; m <= m_max; ++m) {
        RandomVariable xm = seq.at(m, n);
        detail::check_domination(seq, xm, m);
        for (std::size_t i = 0; i < xm.values.size(); ++i) {
            double vi = xm.values[i];
            if (m > 1) {
                double pi = prev.values[i];
                bool ok = increasing ? vi >= pi - tol::bound_order : vi <= pi + tol::bound_order;
                if (!ok)
                    throw MonotonicityViolated("pointwise monotonicity broken at m=" +
                                                   std::to_string(m) + ", state " +
                                                   std::to_string(i + 1),
                                               m, static_cast<int>(i) + 1);
            }
            double li = seq.limit.values[i];
            bool toward = increasing ? vi <= li + tol::bound_order : vi >= li - tol::bound_order;
            if (!toward)
                throw MonotonicityViolated("member overshoots the limit at m=" + std::to_string(m) +
                                               ", state " + std::to_string(i + 1),
                                           m, static_cast<int>(i) + 1);
        }
        SublinearResult r = side_expectation(xm, d, side, opts);
        rep.trace.push_back({m, r.value, r.certified_error});
        prev = std::move(xm);
    }

    SublinearResult lim = side_expectation(seq.limit, d, side, opts);
    rep.limit_value = lim.value;
    rep.limit_error = lim.certified_error;

    rep.passed = true;
    for (std::size_t k = 1; k < rep.trace.size(); ++k) {
        double a = rep.trace[k - 1].value;
        double b = rep.trace[k].value;
        bool ok = increasing ? b >= a - tolerance : b <= a + tolerance;
        if (!ok) {
            rep.passed = false;
            rep.detail = "trace not monotone at m=" + std::to_string(rep.trace[k].m);
            return rep;
        }
    }
    rep.final_gap = std::fabs(rep.trace.back().value - rep.limit_value);
    double allowance = tolerance + rep.trace.back().certified_error + rep.limit_error;
    if (rep.final_gap > allowance) {
        rep.passed = false;
        rep.detail = "final gap " + std::to_string(rep.final_gap) + " exceeds " +
                     std::to_string(allowance);
    }
    return rep;
}

/**
 * Dominated convergence: requires a dominating bound, pointwise convergence
 * of the trace toward E[limit], and oscillation of the last quarter of the
 * trace within tol. Reports NonConvergence in the failure detail when the
 * tail keeps oscillating.
 */
inline HarnessReport dominated_harness(const RvSequence& seq, const CredalDomain& d, int m_max,
                                       double tolerance,
                                       ExpectationSide side = ExpectationSide::Upper,
                                       const EngineOptions& opts = {}) {
    if (!seq.dominating_bound) throw SpecError("dominated_harness needs a dominating bound");
    HarnessReport rep;
    const int n = d.n_states();

    for (int m = 1; m <= m_max; ++m) {
        RandomVariable xm = seq.at(m, n);
        detail::check_domination(seq, xm, m);
        SublinearResult r = side_expectation(xm, d, side, opts);
        rep.trace.push_back({m, r.value, r.certified_error});
    }

    SublinearResult lim = side_expectation(seq.limit, d, side, opts);
    rep.limit_value = lim.value;
    rep.limit_error = lim.certified_error;

    std::size_t tail_start = rep.trace.size() - rep.trace.size() / 4;
    double lo = rep.trace[tail_start].value;
    double hi = lo;
    for (std::size_t k = tail_start; k < rep.trace.size(); ++k) {
        lo = std::min(lo, rep.trace[k].value);
        hi = std::max(hi, rep.trace[k].value);
    }
    if (hi - lo > tolerance) {
        rep.passed = false;
        rep.detail = "NonConvergence: tail oscillation " + std::to_string(hi - lo);
        return rep;
    }
    rep.final_gap = std::fabs(rep.trace.back().value - rep.limit_value);
    double allowance = tolerance + rep.trace.back().certified_error + rep.limit_error;
    rep.passed = rep.final_gap <= allowance;
    if (!rep.passed)
        rep.detail = "final gap " + std::to_string(rep.final_gap) + " exceeds " +
                     std::to_string(allowance);
    return rep;
}

enum class FatouCase { LowerBounded, UpperBounded };

/**
 * Fatou inequality on the finite window [m_max/2, m_max]: the pointwise
 * running inf (resp. sup) over the window stands in for liminf (limsup), and
 * the harness checks E[liminf X_m] <= liminf E[X_m] (resp. the mirrored
 * inequality) within tol plus certificates. The bounding variable of the
 * relevant side must dominate every member pointwise.
 */
inline HarnessReport fatou_harness(const RvSequence& seq, const CredalDomain& d, int m_max,
                                   double tolerance, FatouCase fcase, const RandomVariable& bound,
                                   const EngineOptions& opts = {}) {
    HarnessReport rep;
    const int n = d.n_states();
    if (bound.size() != n) throw SpecError("bounding variable size mismatch");
    const int m0 = std::max(1, m_max / 2);

    RandomVariable extremal; // pointwise inf (or sup) over the window
    bool first = true;
    for (int m = 1; m <= m_max; ++m) {
        RandomVariable xm = seq.at(m, n);
        for (std::size_t i = 0; i < xm.values.size(); ++i) {
            bool ok = fcase == FatouCase::LowerBounded ? xm.values[i] >= bound.values[i] - tol::bound_order
                                                       : xm.values[i] <= bound.values[i] + tol::bound_order;
            if (!ok)
                throw DominationViolated("member " + std::to_string(m) +
                                             " escapes the one-sided bound",
                                         m, static_cast<int>(i) + 1);
        }
        SublinearResult r = side_expectation(xm, d, ExpectationSide::Upper, opts);
        rep.trace.push_back({m, r.value, r.certified_error});
        if (m >= m0) {
            if (first) {
                extremal = xm;
                first = false;
            } else {
                for (std::size_t i = 0; i < xm.values.size(); ++i)
                    extremal.values[i] = fcase == FatouCase::LowerBounded
                                             ? std::min(extremal.values[i], xm.values[i])
                                             : std::max(extremal.values[i], xm.values[i]);
            }
        }
    }

    SublinearResult lhs = side_expectation(extremal, d, ExpectationSide::Upper, opts);
    rep.limit_value = lhs.value;
    rep.limit_error = lhs.certified_error;

    double window_ext = 0.0;
    double window_err = 0.0;
    bool w_first = true;
    for (const TraceRow& row : rep.trace) {
        if (row.m < m0) continue;
        if (w_first) {
            window_ext = row.value;
            w_first = false;
        } else {
            window_ext = fcase == FatouCase::LowerBounded ? std::min(window_ext, row.value)
                                                          : std::max(window_ext, row.value);
        }
        window_err = std::max(window_err, row.certified_error);
    }

    double allowance = tolerance + lhs.certified_error + window_err;
    rep.final_gap = fcase == FatouCase::LowerBounded ? lhs.value - window_ext
                                                     : window_ext - lhs.value;
    rep.passed = rep.final_gap <= allowance;
    if (!rep.passed)
        rep.detail = "Fatou inequality violated by " + std::to_string(rep.final_gap - allowance);
    return rep;
}

struct RegularityRow {
    double epsilon = 0.0;
    int truncation_level = 0; // N
    double tail_sup = 0.0;    // oracle sup of E_theta[I_{states >= N}]
    bool pass = false;
};

struct RegularityReport {
    std::vector<RegularityRow> rows;
    bool passed = true;
};

/**
 * Regularity certificate: for each epsilon, derives N from the domain's
 * declared budgets (constant lower bounds plus gap budgets, with
 * tail_remainder covering everything past the truncation) and verifies by the
 * grid oracle that the worst-case mass of the complement of K_N =
 * {omega_1..omega_N} (the indicator I_{states > N}) stays below epsilon.
 */
inline RegularityReport regularity_harness(const CredalDomain& d,
                                           const std::vector<double>& epsilon_list,
                                           double tail_remainder = 0.0, int resolution = 2,
                                           const EngineOptions& opts = {}) {
    RegularityReport rep;
    std::vector<double> budgets = d.gap_budgets();
    std::vector<double> lowers = d.constant_lower_values();
    EngineOptions o = opts;
    o.grid_resolution = resolution;
    for (double eps : epsilon_list) {
        RegularityRow row;
        row.epsilon = eps;
        row.truncation_level = tail_truncation(budgets, lowers, eps, tail_remainder);
        RandomVariable indicator;
        indicator.values.assign(static_cast<std::size_t>(d.n_states()), 0.0);
        for (int i = row.truncation_level + 1; i <= d.n_states(); ++i)
            indicator.values[static_cast<std::size_t>(i - 1)] = 1.0;
        row.tail_sup = upper_expectation(indicator, d, Method::Grid, o).value;
        row.pass = row.tail_sup < eps;
        rep.passed = rep.passed && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace subexp
