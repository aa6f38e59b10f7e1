#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

namespace subexp {

struct MaximizeResult {
    double x = 0.0;
    double value = 0.0;
    bool certified = false;
};

namespace detail {

/// Golden-section maximization on [a, b], refined to the given interval width.
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double width_tol) {
    constexpr double inv_phi = 0.6180339887498949; // 1/phi
    double c = b - (b - a) * inv_phi;
    double d = a + (b - a) * inv_phi;
    double fc = f(c);
    double fd = f(d);
    while (b - a > width_tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    double mid = 0.5 * (a + b);
    double fm = f(mid);
    if (fc > fm && fc >= fd) return {c, fc};
    if (fd > fm) return {d, fd};
    return {mid, fm};
}

} // namespace detail

/**
 * One-dimensional maximization with a certificate: a coarse pre-scan picks the
 * best bracket, golden-section refines it to `width_tol`, then a denser
 * verification scan must fail to beat the refined value by more than
 * `agree_tol`. A multimodal objective whose global basin escapes the pre-scan
 * makes the verification scan win, and the result comes back uncertified so
 * the caller can fall back to an exhaustive method.
 */
template <class F>
MaximizeResult certified_max(F&& f, double lo, double hi, double width_tol = 1e-8,
                             double agree_tol = 1e-6, int prescan_points = 9,
                             int verify_points = 33) {
    MaximizeResult r;
    if (hi - lo < width_tol) {
        r.x = 0.5 * (lo + hi);
        if (hi <= lo) r.x = lo;
        r.value = f(r.x);
        r.certified = true;
        return r;
    }

    auto at = [&](int k, int n) {
        return (k == n - 1) ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    };

    int best = 0;
    double best_v = f(lo);
    for (int k = 1; k < prescan_points; ++k) {
        double v = f(at(k, prescan_points));
        if (v > best_v) {
            best_v = v;
            best = k;
        }
    }
    double a = at(std::max(0, best - 1), prescan_points);
    double b = at(std::min(prescan_points - 1, best + 1), prescan_points);
    auto [x1, v1] = detail::golden_max(f, a, b, width_tol);
    if (best_v > v1) {
        x1 = at(best, prescan_points);
        v1 = best_v;
    }

    double check = v1;
    for (int k = 0; k < verify_points; ++k) check = std::max(check, f(at(k, verify_points)));

    r.x = x1;
    r.value = v1;
    r.certified = (check <= v1 + agree_tol);
    return r;
}

} // namespace subexp
