#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace kppspeeds::num {

struct RootResult {
    double x;
    double fx;
    int iterations;
};

/// Brent's bracketed root finder. Requires f(a) and f(b) of opposite sign
/// (or one of them zero). Tolerance is max(xtol_abs, xtol_rel*|x|).
template <class F>
RootResult brent(F&& f, double a, double b, double fa, double fb,
                 double xtol_rel = 1e-14, double xtol_abs = 1e-300, int max_iter = 300) {
    if (fa == 0.0) return {a, fa, 0};
    if (fb == 0.0) return {b, fb, 0};
    if ((fa > 0) == (fb > 0))
        throw InfeasibleError("brent: root not bracketed");
    double c = b, fc = fb, d = b - a, e = d;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int it = 1; it <= max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol = 2 * eps * std::fabs(b) + 0.5 * std::max(xtol_abs, xtol_rel * std::fabs(b));
        double m = 0.5 * (c - b);
        if (std::fabs(m) <= tol || fb == 0.0) return {b, fb, it};
        if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {
                p = 2 * m * s;
                q = 1 - s;
            } else {
                double r = fb / fc, t = fa / fc;
                p = s * (2 * m * t * (t - r) - (b - a) * (r - 1));
                q = (t - 1) * (r - 1) * (s - 1);
            }
            if (p > 0) q = -q;
            p = std::fabs(p);
            if (2 * p < std::min(3 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol ? d : (m > 0 ? tol : -tol);
        fb = f(b);
    }
    return {b, fb, max_iter};
}

/// Brent's method with the endpoint values evaluated here.
template <class F>
RootResult solve(F&& f, double a, double b, double xtol_rel = 1e-14, double xtol_abs = 1e-300) {
    double fa = f(a), fb = f(b);
    return brent(f, a, b, fa, fb, xtol_rel, xtol_abs);
}

/// Smallest x in [lo, hi] with pred(x) true, for a predicate that is false
/// below some threshold and true above it. pred(hi) must hold.
template <class P>
double threshold_bisect(P&& pred, double lo, double hi, double rel_tol, int* iterations = nullptr) {
    int it = 0;
    while (hi - lo > rel_tol * std::max(std::fabs(hi), 1e-300) && it < 200) {
        double mid = 0.5 * (lo + hi);
        if (pred(mid)) hi = mid;
        else lo = mid;
        ++it;
    }
    if (iterations) *iterations = it;
    return hi;
}

struct MinResult {
    double x;
    double fx;
};

/// Golden-section search for a minimum of f on [a, b].
template <class F>
MinResult golden_min(F&& f, double a, double b, double xtol, int max_iter = 200) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? MinResult{x1, f1} : MinResult{x2, f2};
}

/// Minimum of f over [a, b]: uniform scan with n points, then golden-section
/// refinement around the best sample. Endpoints are always sampled.
template <class F>
MinResult scan_min(F&& f, double a, double b, int n, double xtol) {
    if (!(b > a)) return {a, f(a)};
    int best = 0;
    double best_f = std::numeric_limits<double>::infinity();
    double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) {
        double x = i + 1 == n ? b : a + i * h;
        double fx = f(x);
        if (fx < best_f) {
            best_f = fx;
            best = i;
        }
    }
    double lo = std::max(a, a + (best - 1) * h), hi = std::min(b, a + (best + 1) * h);
    MinResult r = golden_min(f, lo, hi, xtol);
    double xb = best + 1 == n ? b : a + best * h;
    if (best_f < r.fx) return {xb, best_f};
    return r;
}

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    double diff = left + right - whole;
    // The relative floor stops refinement once the difference is round-off.
    if (depth <= 0 || std::fabs(diff) <= 15 * tol ||
        std::fabs(diff) <= 1e-14 * (std::fabs(left) + std::fabs(right)))
        return left + right + diff / 15;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature. The tolerance is max(abs_tol, rel_tol*|I|)
/// with I the coarse estimate, so tiny integrals keep relative accuracy.
template <class F>
double simpson(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-13,
               int max_depth = 30) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    double tol = std::max(abs_tol, rel_tol * std::fabs(whole));
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Adaptive Dormand-Prince 5(4) integration of a two-component system from
/// t0 to t1, returning the state at t1.
using State2 = std::array<double, 2>;

template <class Rhs>
State2 dopri45(Rhs&& rhs, double t0, State2 y, double t1, double tol, int* steps = nullptr) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    double span = t1 - t0;
    if (span == 0.0) return y;
    double h = span / 100;
    double t = t0;
    int n = 0;
    auto axpy = [](const State2& base, std::initializer_list<std::pair<double, const State2*>> terms,
                   double hh) {
        State2 out = base;
        for (auto& [coef, k] : terms)
            for (int i = 0; i < 2; ++i) out[i] += hh * coef * (*k)[i];
        return out;
    };
    State2 k1 = rhs(t, y);
    while ((span > 0 && t < t1) || (span < 0 && t > t1)) {
        if ((span > 0 && t + h > t1) || (span < 0 && t + h < t1)) h = t1 - t;
        State2 k2 = rhs(t + c2 * h, axpy(y, {{a21, &k1}}, h));
        State2 k3 = rhs(t + c3 * h, axpy(y, {{a31, &k1}, {a32, &k2}}, h));
        State2 k4 = rhs(t + c4 * h, axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
        State2 k5 = rhs(t + c5 * h, axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
        State2 k6 = rhs(t + h, axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
        State2 y5 = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
        State2 k7 = rhs(t + h, y5);
        double err = 0;
        for (int i = 0; i < 2; ++i) {
            double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            double sc = tol * (1.0 + std::max(std::fabs(y[i]), std::fabs(y5[i])));
            err = std::max(err, std::fabs(ei) / sc);
        }
        if (!std::isfinite(err)) err = 1e10;
        if (err <= 1.0) {
            t += h;
            y = y5;
            k1 = k7;
            ++n;
        }
        double fac = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= fac;
        if (std::fabs(h) < 1e-15 * std::fabs(span))
            throw InfeasibleError("dopri45: step size underflow");
    }
    if (steps) *steps += n;
    return y;
}

}  // namespace kppspeeds::num
