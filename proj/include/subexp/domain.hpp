#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subexp/errors.hpp"
#include "subexp/expr.hpp"

namespace subexp {

/// Centralized numeric tolerances.
namespace tol {
inline constexpr double membership = 1e-9;  // default for contains()
inline constexpr double bound_order = 1e-12; // lower <= upper slack
inline constexpr double simplex_sum = 1e-10; // |sum(theta) - 1| slack
} // namespace tol

using ThetaVector = std::vector<double>;

enum class SimplexPolicy { Enforce, PaperFaithful };

struct Interval {
    double lo = 0.0;
    double hi = -1.0;
    bool empty() const { return lo > hi; }
    double width() const { return empty() ? 0.0 : hi - lo; }
    static Interval whole() { return {-std::numeric_limits<double>::infinity(),
                                      std::numeric_limits<double>::infinity()}; }
};

/// One nested constraint f_lower_i <= theta_i <= f_upper_i with its declared
/// gap budget c_i (upper - lower <= c_i everywhere on the feasible set).
struct BoundPair {
    BoundExpr lower;
    BoundExpr upper;
    double gap_budget = 1.0;
};

/// Textual description of a domain, as found in spec files.
struct BoundDesc {
    std::string lower;
    std::string upper;
    double c = 1.0;
};

struct DomainSpec {
    int n_states = 0;
    std::vector<BoundDesc> bounds; // one per index 1..n_states-1
    SimplexPolicy policy = SimplexPolicy::Enforce;
    double tail_mass_bound = 0.0;
};

namespace detail {

/// Grid coordinates of an interval: `resolution` equally spaced points with
/// both endpoints exact; degenerate intervals collapse to a single point.
inline void interval_grid(const Interval& iv, int resolution, std::vector<double>& out) {
    out.clear();
    if (iv.empty()) return;
    if (iv.width() < 1e-15 || resolution <= 1) {
        out.push_back(iv.lo);
        return;
    }
    out.reserve(static_cast<std::size_t>(resolution));
    for (int k = 0; k < resolution; ++k) {
        double v = (k == resolution - 1)
                       ? iv.hi
                       : iv.lo + (iv.hi - iv.lo) * static_cast<double>(k) /
                                     static_cast<double>(resolution - 1);
        out.push_back(v);
    }
}

} // namespace detail

/**
 * Truncated countable ambiguity set: nested bound constraints for coordinates
 * 1..n_states-1; the last coordinate is the residual 1 - sum of the others.
 *
 * Under SimplexPolicy::Enforce every projection interval is additionally
 * intersected with [0, 1 - sum(prefix)], so enumerated vectors are genuine
 * probability weights. Under PaperFaithful only the raw bound constraints
 * apply and the residual coordinate may go negative.
 *
 * Immutable after construction; all queries are const and thread-safe.
 */
class CredalDomain {
public:
    int n_states() const { return n_states_; }
    SimplexPolicy policy() const { return policy_; }
    double tail_mass_bound() const { return tail_mass_bound_; }
    const std::vector<BoundPair>& bounds() const { return bounds_; }

    /// True when every bound expression is affine (vertex enumeration is exact).
    bool all_bounds_affine() const { return affine_; }

    /// True when every bound is a constant (no prefix dependence at all).
    bool all_bounds_constant() const {
        for (const BoundPair& bp : bounds_)
            if (!is_constant(bp.lower) || !is_constant(bp.upper)) return false;
        return true;
    }

    /**
     * Projection constraint I_i for coordinate i (1-based) given the values of
     * coordinates 1..i-1. For i == n_states (no explicit bound) the interval
     * is the residual-mass interval under Enforce and unbounded under
     * PaperFaithful. Returns an empty interval when the intersection with the
     * remaining-mass constraint is empty.
     */
    Interval project_interval(int i, std::span<const double> prefix) const {
        assert(i >= 1 && i <= n_states_);
        assert(prefix.size() + 1 >= static_cast<std::size_t>(i));
        if (i == n_states_) {
            if (policy_ == SimplexPolicy::PaperFaithful) return Interval::whole();
            double remaining = 1.0;
            for (std::size_t k = 0; k + 1 < static_cast<std::size_t>(i); ++k) remaining -= prefix[k];
            return Interval{0.0, std::max(0.0, remaining)};
        }
        const BoundPair& bp = bounds_[static_cast<std::size_t>(i - 1)];
        auto head = prefix.first(static_cast<std::size_t>(i - 1));
        Interval iv{eval_expr(bp.lower, head), eval_expr(bp.upper, head)};
        if (policy_ == SimplexPolicy::Enforce) {
            double remaining = 1.0;
            for (double v : head) remaining -= v;
            iv.lo = std::max(iv.lo, 0.0);
            iv.hi = std::min(iv.hi, remaining);
        }
        return iv;
    }

    /// Membership test: every coordinate inside its projection interval within
    /// tol, and (under Enforce) the weights sum to 1 within tol.
    bool contains(const ThetaVector& theta, double tolerance = tol::membership) const {
        if (static_cast<int>(theta.size()) != n_states_) return false;
        std::span<const double> full(theta);
        for (int i = 1; i <= n_states_; ++i) {
            Interval iv;
            try {
                iv = project_interval(i, full.first(static_cast<std::size_t>(i - 1)));
            } catch (const DomainError&) {
                return false;
            }
            if (iv.lo == -std::numeric_limits<double>::infinity()) continue;
            double v = theta[static_cast<std::size_t>(i - 1)];
            if (v < iv.lo - tolerance || v > iv.hi + tolerance) return false;
        }
        if (policy_ == SimplexPolicy::Enforce) {
            double s = std::accumulate(theta.begin(), theta.end(), 0.0);
            if (std::fabs(s - 1.0) > tolerance) return false;
        }
        return true;
    }

    /**
     * Depth-first enumeration of the grid discretization: each projection
     * interval is split into `resolution` equally spaced points, infeasible
     * branches are pruned, and the visitor sees candidates in lexicographic
     * grid-index order. The visitor receives the complete theta (residual
     * last coordinate filled in).
     *
     * Returns the maximum grid spacing h encountered (for error certificates).
     */
    template <class Visitor>
    double grid_enumerate(int resolution, Visitor&& visit) const {
        assert(resolution >= 2);
        ThetaVector theta(static_cast<std::size_t>(n_states_), 0.0);
        double max_spacing = 0.0;
        std::vector<std::vector<double>> scratch(static_cast<std::size_t>(n_states_ - 1));
        enumerate_rec(0, theta, resolution, scratch, max_spacing, visit);
        return max_spacing;
    }

    /// Collecting variant for small grids.
    std::vector<ThetaVector> grid_points(int resolution) const {
        std::vector<ThetaVector> out;
        grid_enumerate(resolution, [&](const ThetaVector& t) { out.push_back(t); });
        return out;
    }

    /// Scalar lower-bound values (constant bounds only) with the declared gap
    /// budgets; used by the tail/regularity machinery.
    std::vector<double> constant_lower_values() const {
        std::vector<double> out;
        out.reserve(bounds_.size());
        for (const BoundPair& bp : bounds_) {
            if (!is_constant(bp.lower))
                throw MethodUnsupported("tail budgets need constant lower bounds");
            out.push_back(eval_expr(bp.lower, {}));
        }
        return out;
    }

    std::vector<double> gap_budgets() const {
        std::vector<double> out;
        out.reserve(bounds_.size());
        for (const BoundPair& bp : bounds_) out.push_back(bp.gap_budget);
        return out;
    }

    friend CredalDomain build_domain(const DomainSpec& spec);

private:
    template <class Visitor>
    void enumerate_rec(int level, ThetaVector& theta, int resolution,
                       std::vector<std::vector<double>>& scratch, double& max_spacing,
                       Visitor& visit) const {
        if (level == n_states_ - 1) {
            double residual = 1.0;
            for (int k = 0; k < n_states_ - 1; ++k) residual -= theta[static_cast<std::size_t>(k)];
            if (policy_ == SimplexPolicy::Enforce && residual < -tol::simplex_sum) return;
            theta.back() = residual;
            visit(const_cast<const ThetaVector&>(theta));
            return;
        }
        Interval iv;
        try {
            iv = project_interval(level + 1,
                                  std::span<const double>(theta).first(static_cast<std::size_t>(level)));
        } catch (const DomainError&) {
            return; // bound not evaluable here: treat the branch as infeasible
        }
        if (iv.lo > iv.hi + tol::bound_order) return;
        if (iv.lo > iv.hi) iv.hi = iv.lo; // collapse sub-tolerance inversions
        auto& pts = scratch[static_cast<std::size_t>(level)];
        detail::interval_grid(iv, resolution, pts);
        if (pts.size() > 1)
            max_spacing = std::max(max_spacing, iv.width() / static_cast<double>(pts.size() - 1));
        // scratch is reused by deeper levels, so walk by index over a copy
        std::vector<double> local = pts;
        for (double v : local) {
            theta[static_cast<std::size_t>(level)] = v;
            enumerate_rec(level + 1, theta, resolution, scratch, max_spacing, visit);
        }
    }

    int n_states_ = 0;
    std::vector<BoundPair> bounds_;
    SimplexPolicy policy_ = SimplexPolicy::Enforce;
    double tail_mass_bound_ = 0.0;
    bool affine_ = true;
};

namespace detail {

/// Validation walk shared by build_domain: depth-first over a coarse grid,
/// checking bound order and gap budgets at every visited prefix and looking
/// for one complete feasible assignment.
class FeasibilityProbe {
public:
    FeasibilityProbe(const std::vector<BoundPair>& bounds, SimplexPolicy policy, int n_states,
                     int resolution, std::int64_t node_budget)
        : bounds_(bounds), policy_(policy), n_states_(n_states), resolution_(resolution),
          budget_(node_budget) {}

    bool run() {
        std::vector<double> prefix;
        prefix.reserve(static_cast<std::size_t>(n_states_));
        return probe(0, prefix);
    }

private:
    bool probe(int level, std::vector<double>& prefix) {
        if (budget_-- <= 0) return false;
        if (level == n_states_ - 1) {
            if (policy_ == SimplexPolicy::Enforce) {
                double residual = 1.0;
                for (double v : prefix) residual -= v;
                return residual >= -tol::simplex_sum;
            }
            return true;
        }
        const BoundPair& bp = bounds_[static_cast<std::size_t>(level)];
        double lo, hi;
        try {
            lo = eval_expr(bp.lower, prefix);
            hi = eval_expr(bp.upper, prefix);
        } catch (const DomainError&) {
            return false;
        }
        if (lo > hi + tol::bound_order)
            throw BoundOrderViolation("lower bound " + std::to_string(lo) + " exceeds upper bound " +
                                      std::to_string(hi) + " at index " + std::to_string(level + 1));
        if (hi - lo > bp.gap_budget + tol::bound_order)
            throw BudgetViolation("bound gap " + std::to_string(hi - lo) +
                                  " exceeds declared budget c=" + std::to_string(bp.gap_budget) +
                                  " at index " + std::to_string(level + 1));
        Interval iv{lo, hi};
        if (policy_ == SimplexPolicy::Enforce) {
            double remaining = 1.0;
            for (double v : prefix) remaining -= v;
            iv.lo = std::max(iv.lo, 0.0);
            iv.hi = std::min(iv.hi, remaining);
        }
        if (iv.lo > iv.hi + tol::bound_order) return false;
        if (iv.lo > iv.hi) iv.hi = iv.lo;
        std::vector<double> pts;
        interval_grid(iv, resolution_, pts);
        for (double v : pts) {
            prefix.push_back(v);
            bool ok = probe(level + 1, prefix);
            prefix.pop_back();
            if (ok) return true;
        }
        return false;
    }

    const std::vector<BoundPair>& bounds_;
    SimplexPolicy policy_;
    int n_states_;
    int resolution_;
    std::int64_t budget_;
};

} // namespace detail

/**
 * Builds and validates a domain from its textual description: parses every
 * bound with prefix-only dependence, then runs a numerical feasibility probe
 * (grid at resolution 64 per axis, pruned depth-first) that must reach one
 * complete feasible point.
 *
 * Throws SpecError, SyntaxError, VariableOutOfScope, BoundOrderViolation,
 * BudgetViolation, or InfeasibleDomain.
 */
inline CredalDomain build_domain(const DomainSpec& spec) {
    if (spec.n_states < 2) throw SpecError("n_states must be >= 2");
    if (static_cast<int>(spec.bounds.size()) != spec.n_states - 1)
        throw SpecError("expected " + std::to_string(spec.n_states - 1) + " bound pairs, got " +
                        std::to_string(spec.bounds.size()));
    if (spec.tail_mass_bound < 0.0) throw SpecError("tail_mass_bound must be >= 0");

    CredalDomain d;
    d.n_states_ = spec.n_states;
    d.policy_ = spec.policy;
    d.tail_mass_bound_ = spec.tail_mass_bound;
    d.bounds_.reserve(spec.bounds.size());
    for (std::size_t i = 0; i < spec.bounds.size(); ++i) {
        const BoundDesc& bd = spec.bounds[i];
        if (bd.c < 0.0) throw SpecError("gap budget c must be >= 0 at index " + std::to_string(i + 1));
        BoundPair bp;
        bp.lower = parse_bound_expr(bd.lower, static_cast<int>(i) + 1);
        bp.upper = parse_bound_expr(bd.upper, static_cast<int>(i) + 1);
        bp.gap_budget = bd.c;
        d.affine_ = d.affine_ && is_affine(bp.lower) && is_affine(bp.upper);
        d.bounds_.push_back(std::move(bp));
    }

    detail::FeasibilityProbe probe(d.bounds_, d.policy_, d.n_states_, 64, 4'000'000);
    if (!probe.run()) throw InfeasibleDomain("feasibility probe found no admissible weight vector");
    return d;
}

/**
 * Smallest N with sum_{i>=N} (f_lower_i + c_i) < epsilon, taking the provided
 * finite prefixes plus `tail_remainder`, a caller-certified bound on the sum
 * of all terms beyond the prefix (0 for genuinely finite models). Mirrors the
 * compact-set construction K = {omega_1, ..., omega_{N-1}}.
 *
 * Throws NoSuchN when even the full prefix plus remainder cannot get under
 * epsilon (more terms are needed to certify the bound).
 */
inline int tail_truncation(std::span<const double> bound_budgets,
                           std::span<const double> lower_bound_values, double epsilon,
                           double tail_remainder = 0.0) {
    if (epsilon <= 0.0) throw SpecError("epsilon must be > 0");
    if (tail_remainder < 0.0) throw SpecError("tail_remainder must be >= 0");
    std::size_t len = std::max(bound_budgets.size(), lower_bound_values.size());
    auto term = [&](std::size_t i) {
        double c = i < bound_budgets.size() ? bound_budgets[i] : 0.0;
        double f = i < lower_bound_values.size() ? lower_bound_values[i] : 0.0;
        if (c < 0.0 || f < 0.0) throw SpecError("tail sequences must be nonnegative");
        return c + f;
    };
    // suffix sums, accumulated back to front for stable strict comparisons
    std::vector<double> suffix(len + 1, tail_remainder);
    for (std::size_t i = len; i-- > 0;) suffix[i] = suffix[i + 1] + term(i);
    for (std::size_t n = 0; n <= len; ++n) {
        if (suffix[n] < epsilon) return static_cast<int>(n) + 1; // N is 1-based
    }
    throw NoSuchN("prefix of length " + std::to_string(len) + " plus remainder " +
                  std::to_string(tail_remainder) + " cannot certify tail < " +
                  std::to_string(epsilon));
}

} // namespace subexp
