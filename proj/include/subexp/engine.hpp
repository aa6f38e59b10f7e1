#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "subexp/domain.hpp"
#include "subexp/errors.hpp"
#include "subexp/expr.hpp"
#include "subexp/golden.hpp"

namespace subexp {

/// Real value assignment omega_i -> values[i] on the truncated state space.
struct RandomVariable {
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::fabs(v));
        return m;
    }

    RandomVariable negated() const {
        RandomVariable r;
        r.values.reserve(values.size());
        for (double v : values) r.values.push_back(-v);
        return r;
    }

    static RandomVariable constant(double c, int n) {
        return RandomVariable{std::vector<double>(static_cast<std::size_t>(n), c)};
    }
};

inline RandomVariable operator+(const RandomVariable& a, const RandomVariable& b) {
    assert(a.values.size() == b.values.size());
    RandomVariable r = a;
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] += b.values[i];
    return r;
}

inline RandomVariable operator*(double s, const RandomVariable& a) {
    RandomVariable r = a;
    for (double& v : r.values) v *= s;
    return r;
}

inline double dot(const RandomVariable& x, const ThetaVector& theta) {
    assert(x.values.size() == theta.size());
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) s += x.values[i] * theta[i];
    return s;
}

enum class Method { NestedExact, NestedNumeric, Grid, Transform };

inline const char* method_name(Method m) {
    switch (m) {
    case Method::NestedExact: return "NestedExact";
    case Method::NestedNumeric: return "NestedNumeric";
    case Method::Grid: return "Grid";
    case Method::Transform: return "Transform";
    }
    return "?";
}

struct SublinearResult {
    double value = 0.0;
    ThetaVector argmax_theta;
    Method method = Method::Grid;
    double certified_error = 0.0;

    bool feasible() const { return !argmax_theta.empty(); }
};

struct EngineOptions {
    int grid_resolution = 2001;          // per-axis points for the grid oracle
    std::int64_t grid_budget = 4'000'000; // total-point cap for fallback grids
    double numeric_width_tol = 1e-8;     // golden-section bracket width
    double numeric_agree_tol = 1e-6;     // certification agreement tolerance
    int max_numeric_levels = 6;          // deeper recursions go straight to Grid
};

/// Per-axis resolution that keeps the full grid under `budget` points.
inline int budgeted_resolution(int axes, std::int64_t budget = 4'000'000, int cap = 2001) {
    assert(axes >= 1);
    double per = std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(axes));
    int r = static_cast<int>(std::floor(per));
    return std::clamp(r, 2, cap);
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

/**
 * Brute-force reference: maximum of dot(x, theta) over the grid discretization
 * of the domain. Ties keep the lexicographically first grid point. The
 * certificate is L_obj * h + M * tail_mass_bound with h the largest grid
 * spacing, L_obj = max|a_i| * (n-1), M = max|a_i|.
 *
 * An infeasible-at-this-resolution domain yields an empty argmax and
 * value = -infinity; no exception is thrown here.
 */
inline SublinearResult brute_force_oracle(const RandomVariable& x, const CredalDomain& d,
                                          int resolution) {
    assert(resolution >= 2);
    assert(x.size() == d.n_states());
    SublinearResult r;
    r.method = Method::Grid;
    r.value = -std::numeric_limits<double>::infinity();
    double h = d.grid_enumerate(resolution, [&](const ThetaVector& theta) {
        double v = dot(x, theta);
        if (v > r.value) {
            r.value = v;
            r.argmax_theta = theta;
        }
    });
    double m = x.max_abs();
    r.certified_error = m * static_cast<double>(d.n_states() - 1) * h + m * d.tail_mass_bound();
    return r;
}

// ---------------------------------------------------------------------------
// Nested exact route (affine bounds)
// ---------------------------------------------------------------------------

namespace detail {

struct BestPoint {
    double value = -std::numeric_limits<double>::infinity();
    ThetaVector theta;

    // lexicographically smallest theta among exact ties
    void offer(double v, const ThetaVector& t) {
        if (v > value) {
            value = v;
            theta = t;
        } else if (v == value && !theta.empty() &&
                   std::lexicographical_compare(t.begin(), t.end(), theta.begin(), theta.end())) {
            theta = t;
        }
    }
};

/**
 * Exact vertex enumeration for CONSTANT bounds.
 *
 * With constant per-coordinate bounds the only coupling constraint is
 * sum(theta) <= 1, so a vertex either puts every coordinate at one of its own
 * (zero-clamped) bounds, or pins exactly one "slack" coordinate by the simplex
 * equation sum(theta) = 1 while the rest sit at bounds. The slack value solves
 * a linear equation; two chain evaluations give the mass as an affine
 * function of the slack value.
 */
class VertexEnumerator {
public:
    VertexEnumerator(const RandomVariable& x, const CredalDomain& d) : x_(x), d_(d) {}

    BestPoint run() {
        const int levels = d_.n_states() - 1;
        const bool enforce = d_.policy() == SimplexPolicy::Enforce;
        ThetaVector theta(static_cast<std::size_t>(d_.n_states()), 0.0);
        // slack = -1: all coordinates at bounds; slack = k: coordinate k pinned
        // by sum(theta) = 1 (only meaningful under the simplex constraint)
        const int max_slack = enforce ? levels - 1 : -1;
        for (int slack = -1; slack <= max_slack; ++slack) {
            int free_levels = levels - (slack >= 0 ? 1 : 0);
            std::uint64_t combos = std::uint64_t{1} << free_levels;
            for (std::uint64_t mask = 0; mask < combos; ++mask) try_vertex(slack, mask, theta);
        }
        return best_;
    }

private:
    // Builds theta for the given active set; slack_value is used at the slack
    // level. Returns the head mass sum, or NaN if a bound failed to evaluate.
    double build_chain(int slack, std::uint64_t mask, double slack_value, ThetaVector& theta) const {
        const int levels = d_.n_states() - 1;
        const auto& bounds = d_.bounds();
        double mass = 0.0;
        int bit = 0;
        for (int i = 0; i < levels; ++i) {
            double v;
            if (i == slack) {
                v = slack_value;
            } else {
                const BoundPair& bp = bounds[static_cast<std::size_t>(i)];
                auto prefix = std::span<const double>(theta).first(static_cast<std::size_t>(i));
                try {
                    if ((mask >> bit++) & 1) {
                        v = eval_expr(bp.upper, prefix);
                    } else {
                        v = eval_expr(bp.lower, prefix);
                        // theta_i >= 0 can replace a negative declared lower bound
                        if (d_.policy() == SimplexPolicy::Enforce) v = std::max(v, 0.0);
                    }
                } catch (const DomainError&) {
                    return std::numeric_limits<double>::quiet_NaN();
                }
            }
            theta[static_cast<std::size_t>(i)] = v;
            mass += v;
        }
        return mass;
    }

    void try_vertex(int slack, std::uint64_t mask, ThetaVector& theta) {
        const int levels = d_.n_states() - 1;
        if (slack < 0) {
            double mass = build_chain(slack, mask, 0.0, theta);
            if (std::isnan(mass)) return;
        } else {
            // mass is affine in the slack value: solve mass(t) = 1
            double m0 = build_chain(slack, mask, 0.0, theta);
            if (std::isnan(m0)) return;
            double m1 = build_chain(slack, mask, 1.0, theta);
            if (std::isnan(m1)) return;
            double beta = m1 - m0;
            if (std::fabs(beta) < 1e-13) return; // slack value cannot move the mass
            double t = (1.0 - m0) / beta;
            if (!std::isfinite(t)) return;
            if (std::isnan(build_chain(slack, mask, t, theta))) return;
        }
        theta.back() = 1.0;
        for (int i = 0; i < levels; ++i) theta.back() -= theta[static_cast<std::size_t>(i)];
        if (feasible(theta)) best_.offer(dot(x_, theta), theta);
    }

    bool feasible(const ThetaVector& theta) const {
        constexpr double ftol = 1e-9;
        const int levels = d_.n_states() - 1;
        const bool enforce = d_.policy() == SimplexPolicy::Enforce;
        const auto& bounds = d_.bounds();
        for (int i = 0; i < levels; ++i) {
            double v = theta[static_cast<std::size_t>(i)];
            auto prefix = std::span<const double>(theta).first(static_cast<std::size_t>(i));
            double lo, hi;
            try {
                lo = eval_expr(bounds[static_cast<std::size_t>(i)].lower, prefix);
                hi = eval_expr(bounds[static_cast<std::size_t>(i)].upper, prefix);
            } catch (const DomainError&) {
                return false;
            }
            if (v < lo - ftol || v > hi + ftol) return false;
            if (enforce && v < -ftol) return false;
        }
        if (enforce && theta.back() < -ftol) return false;
        return true;
    }

    const RandomVariable& x_;
    const CredalDomain& d_;
    BestPoint best_;
};

/**
 * Exact vertex enumeration for general affine triangular bounds.
 *
 * Prefix-dependent bounds couple coordinates (an interval can collapse and
 * thereby pin an earlier coordinate), so vertices are found by brute-force
 * active-set enumeration: every (n-1)-subset of the affine constraint rows
 * {theta_i >= l_i(prefix), theta_i <= u_i(prefix), theta_i >= 0, sum <= 1}
 * is solved by Gaussian elimination and kept when the solution satisfies all
 * inequalities.
 */
class AffineVertexEnumerator {
public:
    AffineVertexEnumerator(const RandomVariable& x, const CredalDomain& d) : x_(x), d_(d) {}

    BestPoint run() {
        const int levels = d_.n_states() - 1;
        build_rows();
        std::vector<int> pick(static_cast<std::size_t>(levels));
        for (int i = 0; i < levels; ++i) pick[static_cast<std::size_t>(i)] = i;
        const int total = static_cast<int>(rows_.size());
        // walk all C(total, levels) combinations in lexicographic order
        while (true) {
            try_active_set(pick);
            int j = levels - 1;
            while (j >= 0 && pick[static_cast<std::size_t>(j)] == total - levels + j) --j;
            if (j < 0) break;
            ++pick[static_cast<std::size_t>(j)];
            for (int k = j + 1; k < levels; ++k)
                pick[static_cast<std::size_t>(k)] = pick[static_cast<std::size_t>(k - 1)] + 1;
        }
        return best_;
    }

private:
    struct Row {
        std::vector<double> coeff; // inequality coeff . theta >= rhs
        double rhs = 0.0;
    };

    // Affine coefficients of a bound expression by probing at unit vectors.
    void expr_coefficients(const BoundExpr& e, int levels, std::vector<double>& coeff,
                           double& constant) const {
        std::vector<double> point(static_cast<std::size_t>(levels), 0.0);
        constant = eval_expr(e, point);
        coeff.assign(static_cast<std::size_t>(levels), 0.0);
        for (int k = 0; k < e.max_prefix_index; ++k) {
            point[static_cast<std::size_t>(k)] = 1.0;
            coeff[static_cast<std::size_t>(k)] = eval_expr(e, point) - constant;
            point[static_cast<std::size_t>(k)] = 0.0;
        }
    }

    void build_rows() {
        const int levels = d_.n_states() - 1;
        const bool enforce = d_.policy() == SimplexPolicy::Enforce;
        rows_.clear();
        for (int i = 0; i < levels; ++i) {
            const BoundPair& bp = d_.bounds()[static_cast<std::size_t>(i)];
            std::vector<double> c;
            double c0;
            // theta_i - l(theta) >= 0
            expr_coefficients(bp.lower, levels, c, c0);
            Row lo;
            lo.coeff.assign(static_cast<std::size_t>(levels), 0.0);
            for (int k = 0; k < levels; ++k) lo.coeff[static_cast<std::size_t>(k)] = -c[static_cast<std::size_t>(k)];
            lo.coeff[static_cast<std::size_t>(i)] += 1.0;
            lo.rhs = c0;
            rows_.push_back(std::move(lo));
            // u(theta) - theta_i >= 0
            expr_coefficients(bp.upper, levels, c, c0);
            Row hi;
            hi.coeff = c;
            hi.coeff[static_cast<std::size_t>(i)] -= 1.0;
            hi.rhs = -c0;
            rows_.push_back(std::move(hi));
            if (enforce) {
                Row zero;
                zero.coeff.assign(static_cast<std::size_t>(levels), 0.0);
                zero.coeff[static_cast<std::size_t>(i)] = 1.0;
                zero.rhs = 0.0;
                rows_.push_back(std::move(zero));
            }
        }
        if (enforce) {
            Row sigma; // 1 - sum(theta) >= 0
            sigma.coeff.assign(static_cast<std::size_t>(levels), -1.0);
            sigma.rhs = -1.0;
            rows_.push_back(std::move(sigma));
        }
    }

    void try_active_set(const std::vector<int>& pick) {
        const int levels = d_.n_states() - 1;
        // solve coeff . theta = rhs for the chosen rows
        std::vector<std::vector<double>> m(static_cast<std::size_t>(levels),
                                           std::vector<double>(static_cast<std::size_t>(levels) + 1));
        for (int r = 0; r < levels; ++r) {
            const Row& row = rows_[static_cast<std::size_t>(pick[static_cast<std::size_t>(r)])];
            for (int k = 0; k < levels; ++k)
                m[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] =
                    row.coeff[static_cast<std::size_t>(k)];
            m[static_cast<std::size_t>(r)][static_cast<std::size_t>(levels)] = row.rhs;
        }
        for (int col = 0; col < levels; ++col) {
            int pivot = col;
            for (int r = col + 1; r < levels; ++r)
                if (std::fabs(m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                    std::fabs(m[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
                    pivot = r;
            if (std::fabs(m[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]) < 1e-12)
                return; // dependent active set
            std::swap(m[static_cast<std::size_t>(col)], m[static_cast<std::size_t>(pivot)]);
            for (int r = 0; r < levels; ++r) {
                if (r == col) continue;
                double f = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                           m[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
                if (f == 0.0) continue;
                for (int k = col; k <= levels; ++k)
                    m[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] -=
                        f * m[static_cast<std::size_t>(col)][static_cast<std::size_t>(k)];
            }
        }
        ThetaVector theta(static_cast<std::size_t>(levels) + 1, 0.0);
        for (int k = 0; k < levels; ++k)
            theta[static_cast<std::size_t>(k)] =
                m[static_cast<std::size_t>(k)][static_cast<std::size_t>(levels)] /
                m[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];

        constexpr double ftol = 1e-9;
        for (const Row& row : rows_) {
            double g = -row.rhs;
            for (int k = 0; k < levels; ++k)
                g += row.coeff[static_cast<std::size_t>(k)] * theta[static_cast<std::size_t>(k)];
            if (g < -ftol) return;
        }
        double residual = 1.0;
        for (int k = 0; k < levels; ++k) residual -= theta[static_cast<std::size_t>(k)];
        theta.back() = residual;
        best_.offer(dot(x_, theta), theta);
    }

    const RandomVariable& x_;
    const CredalDomain& d_;
    std::vector<Row> rows_;
    BestPoint best_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Nested numeric route
// ---------------------------------------------------------------------------

namespace detail {

struct NumericState {
    const RandomVariable* x;
    const CredalDomain* d;
    const EngineOptions* opts;
    bool certified = true;
};

inline double numeric_level(NumericState& st, int level, ThetaVector& theta);

inline double numeric_leaf(NumericState& st, ThetaVector& theta) {
    int n = st.d->n_states();
    double residual = 1.0;
    for (int k = 0; k < n - 1; ++k) residual -= theta[static_cast<std::size_t>(k)];
    if (st.d->policy() == SimplexPolicy::Enforce && residual < -tol::simplex_sum)
        return -std::numeric_limits<double>::infinity();
    theta.back() = residual;
    return dot(*st.x, theta);
}

inline double numeric_level(NumericState& st, int level, ThetaVector& theta) {
    if (level == st.d->n_states() - 1) return numeric_leaf(st, theta);
    Interval iv;
    try {
        iv = st.d->project_interval(
            level + 1, std::span<const double>(theta).first(static_cast<std::size_t>(level)));
    } catch (const DomainError&) {
        return -std::numeric_limits<double>::infinity();
    }
    if (iv.lo > iv.hi + tol::bound_order) return -std::numeric_limits<double>::infinity();
    if (iv.lo > iv.hi) iv.hi = iv.lo;
    auto value_at = [&](double v) {
        theta[static_cast<std::size_t>(level)] = v;
        return numeric_level(st, level + 1, theta);
    };
    MaximizeResult mr = certified_max(value_at, iv.lo, iv.hi, st.opts->numeric_width_tol,
                                      st.opts->numeric_agree_tol);
    if (!mr.certified) st.certified = false;
    return mr.value;
}

/// Re-descends greedily to assemble the maximizing theta after the value pass.
inline ThetaVector numeric_argmax(NumericState& st) {
    int n = st.d->n_states();
    ThetaVector theta(static_cast<std::size_t>(n), 0.0);
    for (int level = 0; level < n - 1; ++level) {
        Interval iv = st.d->project_interval(
            level + 1, std::span<const double>(theta).first(static_cast<std::size_t>(level)));
        if (iv.lo > iv.hi) iv.hi = iv.lo;
        auto value_at = [&](double v) {
            ThetaVector scratch = theta;
            scratch[static_cast<std::size_t>(level)] = v;
            return numeric_level(st, level + 1, scratch);
        };
        MaximizeResult mr = certified_max(value_at, iv.lo, iv.hi, st.opts->numeric_width_tol,
                                          st.opts->numeric_agree_tol);
        theta[static_cast<std::size_t>(level)] = mr.x;
    }
    double residual = 1.0;
    for (int k = 0; k < n - 1; ++k) residual -= theta[static_cast<std::size_t>(k)];
    theta.back() = residual;
    return theta;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Public expectation entry points
// ---------------------------------------------------------------------------

/**
 * Upper expectation sup over the domain of E_theta[X], computed by the
 * requested route:
 *
 *  - NestedExact: recursive endpoint selection over the projection intervals.
 *    Exact for affine bounds (the maximum sits at a vertex); rejected with
 *    MethodUnsupported otherwise.
 *  - NestedNumeric: per-level certified golden-section maximization of the
 *    value function. Falls back to Grid when any level fails certification or
 *    the recursion is too deep.
 *  - Grid: the brute-force oracle at opts.grid_resolution.
 *
 * Throws InfeasibleDomain when the chosen discretization finds no admissible
 * point.
 */
inline SublinearResult upper_expectation(const RandomVariable& x, const CredalDomain& d,
                                         Method method, const EngineOptions& opts = {}) {
    if (x.size() != d.n_states())
        throw SpecError("random variable has " + std::to_string(x.size()) + " values, domain has " +
                        std::to_string(d.n_states()) + " states");
    for (double v : x.values)
        if (!std::isfinite(v)) throw SpecError("random variable values must be finite");

    switch (method) {
    case Method::NestedExact: {
        if (!d.all_bounds_affine())
            throw MethodUnsupported("NestedExact requires affine bound functions");
        detail::BestPoint best;
        if (d.all_bounds_constant()) {
            best = detail::VertexEnumerator(x, d).run();
        } else {
            if (d.n_states() - 1 > 9)
                throw MethodUnsupported(
                    "NestedExact with prefix-dependent bounds is limited to 10 states");
            best = detail::AffineVertexEnumerator(x, d).run();
        }
        if (best.theta.empty()) throw InfeasibleDomain("no feasible vertex");
        SublinearResult r;
        r.value = best.value;
        r.argmax_theta = std::move(best.theta);
        r.method = Method::NestedExact;
        r.certified_error = x.max_abs() * d.tail_mass_bound();
        return r;
    }
    case Method::NestedNumeric: {
        int levels = d.n_states() - 1;
        if (levels <= opts.max_numeric_levels) {
            detail::NumericState st{&x, &d, &opts, true};
            ThetaVector scratch(static_cast<std::size_t>(d.n_states()), 0.0);
            double value = detail::numeric_level(st, 0, scratch);
            if (st.certified && std::isfinite(value)) {
                SublinearResult r;
                r.argmax_theta = detail::numeric_argmax(st);
                r.value = dot(x, r.argmax_theta);
                r.method = Method::NestedNumeric;
                r.certified_error = static_cast<double>(levels) * opts.numeric_agree_tol +
                                    x.max_abs() * d.tail_mass_bound();
                return r;
            }
        }
        // certification failed or recursion too deep: exhaustive fallback
        int res = budgeted_resolution(levels, opts.grid_budget, opts.grid_resolution);
        SublinearResult r = brute_force_oracle(x, d, res);
        if (!r.feasible()) throw InfeasibleDomain("fallback grid found no admissible point");
        return r;
    }
    case Method::Grid: {
        SublinearResult r = brute_force_oracle(x, d, opts.grid_resolution);
        if (!r.feasible()) throw InfeasibleDomain("grid found no admissible point");
        return r;
    }
    case Method::Transform:
        throw MethodUnsupported("Transform requires a TransformSpec; use transform_eval");
    }
    throw MethodUnsupported("unknown method");
}

/// Lower expectation via the duality inf E_theta[X] = -sup E_theta[-X];
/// identical code path on the negated variable.
inline SublinearResult lower_expectation(const RandomVariable& x, const CredalDomain& d,
                                         Method method, const EngineOptions& opts = {}) {
    SublinearResult r = upper_expectation(x.negated(), d, method, opts);
    r.value = -r.value;
    return r;
}

/// Exact when bounds are affine, otherwise certified numeric.
inline Method auto_method(const CredalDomain& d) {
    return d.all_bounds_affine() ? Method::NestedExact : Method::NestedNumeric;
}

// ---------------------------------------------------------------------------
// Transform route
// ---------------------------------------------------------------------------

/**
 * Change of variables mapping a rectangle M onto the intended domain: the
 * i-th map expression gives theta_i as a function of the rectangle
 * coordinates t1..tk; the last state carries the residual weight. The
 * iterated suprema run over the fixed rectangle intervals, which is the point
 * of the transform: no feasibility coupling between levels.
 */
struct TransformSpec {
    std::vector<Interval> rectangle;    // J_i
    std::vector<BoundExpr> forward_map; // theta_i(delta_1..delta_dim)
};

/// Parses map expressions against the rectangle dimension.
inline TransformSpec make_transform(const std::vector<Interval>& rectangle,
                                    const std::vector<std::string>& map_texts) {
    if (rectangle.empty()) throw SpecError("transform rectangle must have at least one coordinate");
    if (map_texts.size() != rectangle.size())
        throw SpecError("transform needs one map expression per rectangle coordinate");
    for (const Interval& j : rectangle)
        if (j.empty()) throw SpecError("transform rectangle has an empty interval");
    TransformSpec t;
    t.rectangle = rectangle;
    t.forward_map.reserve(map_texts.size());
    for (const std::string& s : map_texts)
        t.forward_map.push_back(parse_bound_expr(s, static_cast<int>(rectangle.size()) + 1));
    return t;
}

namespace detail {

struct TransformState {
    const RandomVariable* x;
    const TransformSpec* t;
    const EngineOptions* opts;
    int prescan;
    int verify;
    bool certified = true;
};

inline double transform_leaf(TransformState& st, const std::vector<double>& delta) {
    const auto& maps = st.t->forward_map;
    double total = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        double th = eval_expr(maps[i], delta);
        total += st.x->values[i] * th;
        mass += th;
    }
    total += st.x->values.back() * (1.0 - mass);
    return total;
}

inline double transform_level(TransformState& st, std::size_t level, std::vector<double>& delta) {
    if (level == st.t->rectangle.size()) return transform_leaf(st, delta);
    const Interval& j = st.t->rectangle[level];
    auto value_at = [&](double v) {
        delta[level] = v;
        return transform_level(st, level + 1, delta);
    };
    MaximizeResult mr = certified_max(value_at, j.lo, j.hi, st.opts->numeric_width_tol,
                                      st.opts->numeric_agree_tol, st.prescan, st.verify);
    if (!mr.certified) st.certified = false;
    return mr.value;
}

inline std::vector<double> transform_argmax(TransformState& st) {
    std::vector<double> delta(st.t->rectangle.size(), 0.0);
    for (std::size_t level = 0; level < st.t->rectangle.size(); ++level) {
        const Interval& j = st.t->rectangle[level];
        auto value_at = [&](double v) {
            std::vector<double> scratch = delta;
            scratch[level] = v;
            return transform_level(st, level + 1, scratch);
        };
        MaximizeResult mr = certified_max(value_at, j.lo, j.hi, st.opts->numeric_width_tol,
                                          st.opts->numeric_agree_tol, st.prescan, st.verify);
        delta[level] = mr.x;
    }
    return delta;
}

} // namespace detail

/**
 * Supremum of E[X] over the rectangle via nested certified 1-D maximization.
 * Retries with denser pre-scans if certification fails; throws
 * MethodUnsupported when even the densest attempt stays uncertified.
 */
inline SublinearResult transform_eval(const RandomVariable& x, const TransformSpec& t,
                                      const EngineOptions& opts = {}) {
    if (x.values.size() != t.forward_map.size() + 1)
        throw SpecError("transform expects " + std::to_string(t.forward_map.size() + 1) +
                        " state values, got " + std::to_string(x.values.size()));

    const int scans[][2] = {{9, 33}, {33, 129}, {129, 513}};
    for (auto [prescan, verify] : scans) {
        detail::TransformState st{&x, &t, &opts, prescan, verify, true};
        std::vector<double> delta(t.rectangle.size(), 0.0);
        double value = detail::transform_level(st, 0, delta);
        (void)value;
        if (!st.certified) continue;
        std::vector<double> best_delta = detail::transform_argmax(st);
        SublinearResult r;
        r.method = Method::Transform;
        r.argmax_theta.reserve(x.values.size());
        double mass = 0.0;
        for (const BoundExpr& m : t.forward_map) {
            double th = eval_expr(m, best_delta);
            r.argmax_theta.push_back(th);
            mass += th;
        }
        r.argmax_theta.push_back(1.0 - mass);
        r.value = dot(x, r.argmax_theta);
        r.certified_error = static_cast<double>(t.rectangle.size()) * opts.numeric_agree_tol;
        return r;
    }
    throw MethodUnsupported("transform objective failed certification at every scan density");
}

// ---------------------------------------------------------------------------
// Sublinearity axiom verification
// ---------------------------------------------------------------------------

struct AxiomWitness {
    std::string axiom;
    std::size_t i = 0;
    std::size_t j = 0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AxiomCheckReport {
    int monotonicity_checks = 0;
    int constant_checks = 0;
    int subadditivity_checks = 0;
    int homogeneity_checks = 0;
    std::vector<AxiomWitness> failures;

    bool passed() const { return failures.empty(); }
    int total_checks() const {
        return monotonicity_checks + constant_checks + subadditivity_checks + homogeneity_checks;
    }
};

/**
 * Verifies the sublinear-expectation axioms with the grid oracle on the
 * supplied variables and scale factors: monotonicity on every pointwise
 * ordered pair, constant preserving on every constant variable, sub-additivity
 * on every unordered pair, and positive homogeneity for every (X, lambda).
 */
inline AxiomCheckReport axiom_check(const CredalDomain& d, const std::vector<RandomVariable>& xs,
                                    const std::vector<double>& lambdas, double tolerance,
                                    int resolution = 101) {
    if (xs.empty()) throw SpecError("axiom_check needs at least one random variable");
    AxiomCheckReport rep;

    std::vector<double> e(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        e[i] = brute_force_oracle(xs[i], d, resolution).value;

    auto fail = [&](std::string axiom, std::size_t i, std::size_t j, double lhs, double rhs) {
        rep.failures.push_back({std::move(axiom), i, j, lhs, rhs});
    };

    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (i == j) continue;
            bool le = true;
            for (std::size_t k = 0; k < xs[i].values.size() && le; ++k)
                le = xs[i].values[k] <= xs[j].values[k];
            if (!le) continue;
            ++rep.monotonicity_checks;
            if (e[i] > e[j] + tolerance) fail("monotonicity", i, j, e[i], e[j]);
        }
    }

    for (std::size_t i = 0; i < xs.size(); ++i) {
        bool constant = std::all_of(xs[i].values.begin(), xs[i].values.end(),
                                    [&](double v) { return v == xs[i].values.front(); });
        if (!constant) continue;
        ++rep.constant_checks;
        if (std::fabs(e[i] - xs[i].values.front()) > tolerance)
            fail("constant_preserving", i, i, e[i], xs[i].values.front());
    }

    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i; j < xs.size(); ++j) {
            ++rep.subadditivity_checks;
            double both = brute_force_oracle(xs[i] + xs[j], d, resolution).value;
            if (both > e[i] + e[j] + tolerance) fail("subadditivity", i, j, both, e[i] + e[j]);
        }
    }

    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (double lam : lambdas) {
            if (lam < 0.0) throw SpecError("positive homogeneity needs lambda >= 0");
            ++rep.homogeneity_checks;
            double scaled = brute_force_oracle(lam * xs[i], d, resolution).value;
            if (std::fabs(scaled - lam * e[i]) > tolerance)
                fail("positive_homogeneity", i, i, scaled, lam * e[i]);
        }
    }
    return rep;
}

} // namespace subexp
