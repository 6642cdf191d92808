#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace kppspeeds {

/// Bessel order tau, stored as 2*tau so half-integers are exact.
class Order {
public:
    static constexpr int max_twice = 100;

    constexpr Order() = default;
    static Order from_twice(int twice) {
        if (twice < -1 || twice > max_twice)
            throw DomainError("unsupported Bessel order 2*tau=" + std::to_string(twice));
        Order o;
        o.twice_ = twice;
        return o;
    }
    /// tau = (N-3)/2 for the cross-section of a cylinder in R^N.
    static Order of_dimension(int N) { return from_twice(N - 3); }

    constexpr int twice() const { return twice_; }
    constexpr double value() const { return 0.5 * twice_; }
    constexpr bool half_integer() const { return twice_ % 2 != 0; }
    Order next() const { return from_twice(twice_ + 2); }

    friend constexpr bool operator==(Order a, Order b) { return a.twice_ == b.twice_; }

private:
    int twice_ = 0;
};

/// h_u near its pole is capped here; callers treat the cap as +infinity.
inline constexpr double h_u_cap = 1e15;

namespace detail {

inline constexpr double euler_gamma = 0.57721566490153286061;

// Power series; used where x^2/4 is small enough that cancellation is mild.
inline double j_series(double nu, double x) {
    double q = 0.25 * x * x;
    double term = std::exp(nu * std::log(0.5 * x) - std::lgamma(nu + 1.0));
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= -q / (k * (k + nu));
        sum += term;
        if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
    }
    return sum;
}

inline double i_series(double nu, double x) {
    double q = 0.25 * x * x;
    double term = std::exp(nu * std::log(0.5 * x) - std::lgamma(nu + 1.0));
    double sum = term;
    for (int k = 1; k < 1000; ++k) {
        term *= q / (k * (k + nu));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

// Miller backward recurrence from far above the target order, normalized by
// the Neumann sum (integer orders) or the closed forms of J_{+-1/2}.
inline double j_miller(int twice, double x) {
    const bool half = twice % 2 != 0;
    const double base = half ? -0.5 : 0.0;
    const int n = half ? (twice + 1) / 2 : twice / 2;
    int start = n + 30 + static_cast<int>(x) + static_cast<int>(std::sqrt(40.0 * (n + x + 1)));
    start += start % 2;
    double jp = 0.0, j = 1e-30, target = 0.0, sum = 0.0, j1 = 0.0;
    for (int k = start; k >= 1; --k) {
        double jm = 2.0 * (base + k) / x * j - jp;
        jp = j;
        j = jm;
        int idx = k - 1;
        if (idx == n) target = j;
        if (idx == 1) j1 = j;
        if (!half && idx > 0 && idx % 2 == 0) sum += 2.0 * j;
        if (std::fabs(j) > 1e250) {
            j *= 1e-250; jp *= 1e-250; target *= 1e-250; sum *= 1e-250; j1 *= 1e-250;
        }
    }
    if (n == 0) target = j;
    if (!half) return target / (sum + j);
    // j holds J_{-1/2}, j1 holds J_{1/2} (unnormalized).
    double pre = std::sqrt(2.0 / (std::numbers::pi * x));
    double c = pre * std::cos(x), s = pre * std::sin(x);
    double scale = std::fabs(c) >= std::fabs(s) ? c / j : s / j1;
    return target * scale;
}

inline double bessel_j(int twice, double x) {
    const double nu = 0.5 * twice;
    if (x == 0.0) {
        if (twice == 0) return 1.0;
        if (twice < 0) return std::numeric_limits<double>::infinity();
        return 0.0;
    }
    if (twice == -1) return std::sqrt(2.0 / (std::numbers::pi * x)) * std::cos(x);
    if (twice == 1) return std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x);
    if (x <= 4.0 || 0.25 * x * x < 0.5 * (nu + 1.0)) return j_series(nu, x);
    return j_miller(twice, x);
}

/// J_{nu+1}(x)/J_nu(x) by the modified Lentz continued fraction.
inline double j_ratio(double nu, double x) {
    constexpr double tiny = 1e-300;
    double f = tiny, C = f, Dn = 0.0;
    for (int k = 1; k < 100000; ++k) {
        double a = k == 1 ? 1.0 : -1.0;
        double b = 2.0 * (nu + k) / x;
        Dn = b + a * Dn;
        if (std::fabs(Dn) < tiny) Dn = tiny;
        C = b + a / C;
        if (std::fabs(C) < tiny) C = tiny;
        Dn = 1.0 / Dn;
        double delta = C * Dn;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return f;
}

// e^x K_nu(x) for nu in {0, 1/2, 1}, by the trapezoidal rule on
// int_0^inf exp(-x(cosh t - 1)) cosh(nu t) dt, which converges geometrically.
inline double k_scaled_integral(double nu, double x) {
    double h = std::min(0.05, 0.25 / std::sqrt(x));
    double sum = 0.5;
    for (int k = 1; k < 100000; ++k) {
        double t = k * h;
        double term = std::exp(-x * (std::cosh(t) - 1.0)) * std::cosh(nu * t);
        sum += term;
        if (term < 1e-18 * sum && x * (std::cosh(t) - 1.0) > 40.0) break;
    }
    return h * sum;
}

// K_0 and K_1; series with logarithmic terms for x < 2.
inline std::pair<double, double> k01(double x) {
    if (x >= 2.0) {
        double e = std::exp(-x);
        return {k_scaled_integral(0.0, x) * e, k_scaled_integral(1.0, x) * e};
    }
    double q = 0.25 * x * x;
    double lg = std::log(0.5 * x);
    double i0 = i_series(0.0, x), i1 = i_series(1.0, x);
    double k0 = -(lg + euler_gamma) * i0;
    double term = 1.0, harmonic = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (double(k) * k);
        harmonic += 1.0 / k;
        k0 += term * harmonic;
        if (term * harmonic < 1e-18 * std::fabs(k0)) break;
    }
    // psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
    double s = 0.0;
    term = 1.0;
    double hk = 0.0;
    for (int k = 0; k < 200; ++k) {
        if (k > 0) {
            term *= q / (double(k) * (k + 1));
            hk += 1.0 / k;
        }
        double psi_sum = -2.0 * euler_gamma + hk + hk + 1.0 / (k + 1);
        double t = term * psi_sum;
        s += t;
        if (k > 2 && std::fabs(t) < 1e-18 * std::fabs(s)) break;
    }
    double k1 = 1.0 / x + lg * i1 - 0.25 * x * s;
    return {k0, k1};
}

inline double bessel_k(int twice, double x) {
    double km, k;  // K_{nu-1}, K_nu walking upward
    double nu;
    if (twice % 2 != 0) {
        k = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x);
        km = k;
        nu = -0.5;
        if (twice == -1) return k;
        // K_{1/2} = K_{-1/2}
        nu = 0.5;
    } else {
        auto [k0, k1] = k01(x);
        if (twice == 0) return k0;
        km = k0;
        k = k1;
        nu = 1.0;
    }
    while (2.0 * nu < twice - 0.5) {
        double kp = km + 2.0 * nu / x * k;
        km = k;
        k = kp;
        nu += 1.0;
    }
    return k;
}

/// K_{tau+1}(x)/K_tau(x) by the upward ratio recurrence; never overflows.
inline double k_ratio(int twice, double x) {
    double rho, nu;
    if (twice % 2 != 0) {
        rho = 1.0;
        nu = -0.5;
    } else {
        if (x >= 2.0) rho = k_scaled_integral(1.0, x) / k_scaled_integral(0.0, x);
        else {
            auto [k0, k1] = k01(x);
            rho = k1 / k0;
        }
        nu = 0.0;
    }
    while (2.0 * nu < twice - 0.5) {
        nu += 1.0;
        rho = 1.0 / rho + 2.0 * nu / x;
    }
    return rho;
}

inline double first_zero_raw(int twice) {
    if (twice == -1) return 0.5 * std::numbers::pi;
    if (twice == 1) return std::numbers::pi;
    double tau = 0.5 * twice;
    double lo = std::max(tau, 0.1);
    auto f = [twice](double r) { return bessel_j(twice, r); };
    double flo = f(lo);
    double step = 0.25;
    double hi = lo + step, fhi = f(hi);
    while (fhi > 0.0) {
        lo = hi;
        flo = fhi;
        hi += step;
        fhi = f(hi);
    }
    return num::brent(f, lo, hi, flo, fhi, 0.0, 1e-15).x;
}

inline const std::vector<double>& zero_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t;
        for (int tw = -1; tw <= Order::max_twice + 2; ++tw) t.push_back(first_zero_raw(tw));
        return t;
    }();
    return table;
}

}  // namespace detail

inline double bessel_j(Order tau, double r) {
    if (!(r >= 0.0)) throw DomainError("bessel_j: r must be non-negative");
    return detail::bessel_j(tau.twice(), r);
}

inline double bessel_k(Order tau, double r) {
    if (!(r > 0.0)) throw DomainError("bessel_k: r must be positive");
    return detail::bessel_k(tau.twice(), r);
}

inline double bessel_i(Order tau, double r) {
    if (!(r > 0.0)) throw DomainError("bessel_i: r must be positive");
    return detail::i_series(tau.value(), r);
}

/// J_{tau+1}(r)/J_tau(r).
inline double bessel_j_ratio(Order tau, double r) {
    if (!(r > 0.0)) throw DomainError("bessel_j_ratio: r must be positive");
    return detail::j_ratio(tau.value(), r);
}

/// K_{tau+1}(r)/K_tau(r).
inline double bessel_k_ratio(Order tau, double r) {
    if (!(r > 0.0)) throw DomainError("bessel_k_ratio: r must be positive");
    return detail::k_ratio(tau.twice(), r);
}

inline double first_zero_j(Order tau) { return detail::zero_table()[tau.twice() + 1]; }

inline double h_u(Order tau, double r) {
    double j = first_zero_j(tau);
    if (!(r > 0.0) || !(r < j)) throw DomainError("h_u: r outside (0, j_tau)");
    double v = r * detail::j_ratio(tau.value(), r);
    if (!(v > 0.0) || v > h_u_cap) return h_u_cap;
    return v;
}

inline double h_v(Order tau, double r) {
    if (!(r > 0.0)) throw DomainError("h_v: r must be positive");
    return r * detail::k_ratio(tau.twice(), r);
}

inline double k_u(Order tau, double s) {
    if (!(s > 0.0) || s > h_u_cap) throw DomainError("k_u: s outside (0, cap]");
    double j = first_zero_j(tau);
    auto f = [&](double r) { return (r <= 0.0 ? 0.0 : r >= j ? h_u_cap : h_u(tau, r)) - s; };
    return num::brent(f, 0.0, j, -s, h_u_cap - s, 1e-14).x;
}

inline double k_v(Order tau, double s) {
    if (tau.twice() == -1) {
        if (!(s > 0.0)) throw DomainError("k_v: s must be positive");
        return s;
    }
    double floor_value = std::max(0.0, double(tau.twice()));
    if (!(s > floor_value)) throw DomainError("k_v: s below the range of h_v");
    auto f = [&](double r) { return h_v(tau, r) - s; };
    double hi = s, fhi = f(hi);
    if (fhi == 0.0) return hi;
    double lo = 0.5 * hi, flo = f(lo);
    while (flo >= 0.0) {
        hi = lo;
        fhi = flo;
        lo *= 0.125;
        // For tau = 0 the preimage of a small s is below the double range.
        if (lo < 1e-300) return 0.0;
        flo = f(lo);
    }
    return num::brent(f, lo, hi, flo, fhi, 1e-14).x;
}

}  // namespace kppspeeds
