#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "halfspace.hpp"
#include "numerics.hpp"
#include "params.hpp"
#include "specfun.hpp"

namespace kppspeeds {

/// Largest delta returned by DispersionCurves::delta near the pole of chi_u.
inline constexpr double delta_cap = 1e8;

/// Interior and exterior dispersion data of the cylinder problem: the
/// matching relation chi_v(delta) = chi_u(beta) and the curves built on it.
class DispersionCurves {
public:
    explicit DispersionCurves(const Params& p) : p_(p), tau_(p.order()) {
        p.validate();
        const double R = p.R;
        beta_bar_ = k_u(tau_, p.mu * R / p.D) / R;
        if (p.N >= 4) {
            double n3 = p.N - 3.0;
            beta_under_ = k_u(tau_, p.mu * R / p.D * p.d * n3 / (p.nu * R + p.d * n3)) / R;
        }
        auto [cf, cg] = fisher_speeds(p);
        c_f_ = cf;
        c_g_ = cg;
    }

    const Params& params() const { return p_; }
    Order tau() const { return tau_; }
    double beta_bar() const { return beta_bar_; }
    double beta_under() const { return beta_under_; }
    double c_f() const { return c_f_; }
    double c_g() const { return c_g_; }

    double chi_u(double beta) const {
        if (beta <= 0.0) return 0.0;
        double h = h_u(tau_, std::min(beta * p_.R, first_zero_j(tau_) * (1 - 1e-16)));
        double den = p_.mu * p_.R - p_.D * h;
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        return p_.nu * p_.D * h / den;
    }

    double chi_v(double delta) const {
        if (delta <= 0.0) return p_.d / p_.R * std::max(0, p_.N - 3);
        return p_.d / p_.R * h_v(tau_, delta * p_.R);
    }

    /// delta(beta) on (beta_under, beta_bar); 0 at or below beta_under and
    /// delta_cap at or above the pole.
    double delta(double beta) const {
        if (beta <= beta_under_) return 0.0;
        if (beta >= beta_bar_) return delta_cap;
        double chi = chi_u(beta);
        if (!std::isfinite(chi)) return delta_cap;
        double s = p_.R * chi / p_.d;
        if (p_.N >= 4 && s <= p_.N - 3.0) return 0.0;
        return std::min(k_v(tau_, s) / p_.R, delta_cap);
    }

    /// Inverse of delta(beta), for delta > 0.
    double beta_of_delta(double delta) const {
        if (delta <= 0.0) return beta_under_;
        double chi = chi_v(delta);
        double s = p_.mu * p_.R * chi / (p_.D * (p_.nu + chi));
        return k_u(tau_, s) / p_.R;
    }

    /// Exterior amplitude of the separable solution.
    double gamma(double beta) const {
        double r = beta * p_.R;
        double num = p_.mu * bessel_j(tau_, r) - p_.D * beta * bessel_j(Order::from_twice(tau_.twice() + 2), r);
        double dr = delta(beta) * p_.R;
        // For tau = 0, delta underflows near beta = 0 while K_0(delta R)
        // stays finite: K_0 ~ -log(delta R) ~ 1/h_v = d/(R chi_u).
        double k = dr > 0.0 ? bessel_k(tau_, dr) : p_.d / (p_.R * chi_u(beta));
        return num / (p_.nu * k);
    }

    double beta_hat(double c) const {
        return std::sqrt(std::max(0.0, c_g_ * c_g_ - c * c)) / (2.0 * p_.D);
    }

    /// Right end of the exterior arc, or nullopt for c < c_f.
    std::optional<double> beta_breve(double c) const {
        if (c < c_f_) return std::nullopt;
        if (c == c_f_) return beta_under_;
        return beta_of_delta(std::sqrt(c * c - c_f_ * c_f_) / (2.0 * p_.d));
    }

    detail::RootPair alpha_D(double c, double beta) const {
        return detail::quad_roots(c, p_.D, p_.gp - p_.D * beta * beta);
    }

    detail::RootPair alpha_d(double c, double beta) const {
        double del = delta(beta);
        return detail::quad_roots(c, p_.d, p_.fp + p_.d * del * del);
    }

private:
    Params p_;
    Order tau_;
    double beta_bar_ = 0.0;
    double beta_under_ = 0.0;
    double c_f_ = 0.0;
    double c_g_ = 0.0;
};

inline DispersionCurves build_curves(const Params& p) { return DispersionCurves(p); }

/// Which pair of curves bounds the contact: the lower exterior branch
/// against the upper interior one, or the reverse.
enum class Contact { None, ExteriorLower, ExteriorUpper };

inline const char* to_string(Contact b) {
    switch (b) {
        case Contact::None: return "none";
        case Contact::ExteriorLower: return "d-/D+";
        case Contact::ExteriorUpper: return "d+/D-";
    }
    return "?";
}

struct TangencyResult {
    double c_star = 0.0;
    double beta_star = 0.0;
    double alpha_star = 0.0;
    bool enhanced = false;
    Contact branch = Contact::None;
    Diagnostics diag;
};

namespace detail {

struct GapSample {
    double gap;
    Contact branch;
    double alpha;
};

// max(lower ends) - min(upper ends) of two alpha intervals, lower ends
// clamped at zero since only positive alpha are admissible.
inline GapSample interval_gap(RootPair ext, RootPair in) {
    if (!ext.ok || !in.ok) return {1e300, Contact::None, 0.0};
    double lower = std::max({ext.lo, in.lo, 0.0});
    double upper = std::min(ext.hi, in.hi);
    Contact b = ext.lo >= in.lo ? Contact::ExteriorLower : Contact::ExteriorUpper;
    return {lower - upper, b, 0.5 * (lower + upper)};
}

// Smallest c in [lo, hi) at which overlap(c) becomes true, widening hi
// until it holds. overlap(lo) is assumed false.
template <class Pred>
double first_overlap(Pred&& overlap, double lo, double hi, double rel_tol, int* iterations) {
    for (int k = 0; !overlap(hi); ++k) {
        if (k > 60) throw InfeasibleError("no overlap found while widening the speed bracket");
        lo = hi;
        hi *= 2.0;
    }
    return num::threshold_bisect(overlap, lo, hi, rel_tol, iterations);
}

inline constexpr int scan_points = 512;

}  // namespace detail

/// Enhancement condition D(fp - d*beta_under^2) > d(2fp - gp).
inline bool enhancement_test(const Params& p) {
    if (p.exterior != Exterior::Kpp) throw DomainError("enhancement_test requires a KPP exterior");
    double bu = p.N >= 4 ? DispersionCurves(p).beta_under() : 0.0;
    return p.D * (p.fp - p.d * bu * bu) > p.d * (2.0 * p.fp - p.gp);
}

enum class EnhancementKind { All, Above, ComplementInterval, NoneBelow };

inline const char* to_string(EnhancementKind k) {
    switch (k) {
        case EnhancementKind::All: return "ALL";
        case EnhancementKind::Above: return "ABOVE";
        case EnhancementKind::ComplementInterval: return "COMPLEMENT_INTERVAL";
        case EnhancementKind::NoneBelow: return "NONE_BELOW";
    }
    return "?";
}

/// Set of D in the scanned range for which c* > c_f. Above(D1): enhanced
/// for D > D1. ComplementInterval(D1, D2): enhanced outside [D1, D2].
/// NoneBelow(D1): no enhancement anywhere up to D1, the top of the range.
struct EnhancementProfile {
    EnhancementKind kind = EnhancementKind::All;
    double D1 = 0.0;
    double D2 = 0.0;
    double zeta_min = 0.0;
    double D_at_min = 0.0;
};

/// zeta(D) = D(fp - d*beta_under(D)^2).
inline double enhancement_zeta(const Params& p, double D) {
    Params q = p;
    q.D = D;
    double bu = q.N >= 4 ? DispersionCurves(q).beta_under() : 0.0;
    return D * (q.fp - q.d * bu * bu);
}

inline EnhancementProfile enhancement_profile(const Params& p, double D_min = 1e-4, double D_max = 1e4) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("enhancement_profile requires a KPP exterior");
    if (!(D_min > 0.0) || !(D_max > D_min)) throw DomainError("enhancement_profile: bad D range");
    const double target = p.d * (2.0 * p.fp - p.gp);
    auto excess = [&](double logD) { return enhancement_zeta(p, std::exp(logD)) - target; };
    const double a = std::log(D_min), b = std::log(D_max);

    EnhancementProfile out;
    auto m = num::scan_min(excess, a, b, 400, 1e-10);
    out.zeta_min = m.fx + target;
    out.D_at_min = std::exp(m.x);
    auto crossing = [&](double lo, double hi) {
        return std::exp(num::solve(excess, lo, hi, 1e-13).x);
    };
    double e_lo = excess(a), e_hi = excess(b);
    if (m.fx > 0.0) {
        out.kind = EnhancementKind::All;
    } else if (e_hi <= 0.0) {
        out.kind = EnhancementKind::NoneBelow;
        out.D1 = D_max;
    } else if (e_lo > 0.0) {
        out.kind = EnhancementKind::ComplementInterval;
        out.D1 = crossing(a, m.x);
        out.D2 = crossing(m.x, b);
    } else {
        out.kind = EnhancementKind::Above;
        out.D1 = crossing(m.x, b);
    }
    return out;
}

/// Asymptotic speed c* of the cylinder problem along its axis.
inline TangencyResult speed_cylinder(const Params& p) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("speed_cylinder requires a KPP exterior");
    DispersionCurves cv(p);
    const double cf = cv.c_f(), bu = cv.beta_under();
    TangencyResult out;

    if (p.N >= 6) {
        if (enhancement_test(p))
            throw UnsupportedCase("speed_cylinder: N >= 6 with the enhancement condition is not supported");
        out.c_star = cf;
        out.beta_star = bu;
        out.alpha_star = cf / (2.0 * p.d);
        out.diag.note = "c* = c_f certificate";
        return out;
    }

    auto rD = cv.alpha_D(cf, bu);
    double a_mid = cf / (2.0 * p.d);
    if (rD.ok && rD.lo <= a_mid && a_mid <= rD.hi) {
        out.c_star = cf;
        out.beta_star = bu;
        out.alpha_star = a_mid;
        return out;
    }

    auto min_gap = [&](double c) -> num::MinResult {
        auto br = cv.beta_breve(c);
        if (!br) return {0.0, 1e300};
        double lo = std::max(bu, cv.beta_hat(c)), hi = std::min(*br, cv.beta_bar());
        if (lo > hi) return {lo, 1e300};
        double eps = 1e-9 * (cv.beta_bar() - bu);
        if (hi - lo <= 2 * eps) {
            double mid = 0.5 * (lo + hi);
            return {mid, detail::interval_gap(cv.alpha_d(c, mid), cv.alpha_D(c, mid)).gap};
        }
        auto g = [&](double b) { return detail::interval_gap(cv.alpha_d(c, b), cv.alpha_D(c, b)).gap; };
        return num::scan_min(g, lo + eps, hi - eps, detail::scan_points, 1e-13 * std::max(hi, 1e-300));
    };
    auto overlap = [&](double c) { return min_gap(c).fx <= 0.0; };

    double c_hi = 2.0 * std::sqrt(std::max(p.D, p.d) * std::max(p.gp, p.fp)) + 1.0;
    out.c_star = detail::first_overlap(overlap, cf, c_hi, 1e-11, &out.diag.iterations);
    out.enhanced = out.c_star - cf > 1e-9 * cf;

    auto m = min_gap(out.c_star);
    auto s = detail::interval_gap(cv.alpha_d(out.c_star, m.x), cv.alpha_D(out.c_star, m.x));
    out.beta_star = m.x;
    out.alpha_star = s.alpha;
    out.branch = s.branch;
    double del = cv.delta(m.x), a = s.alpha, c = out.c_star;
    out.diag.residual = std::max(std::fabs(c * a - p.D * a * a + p.D * m.x * m.x - p.gp),
                                 std::fabs(c * a - p.d * a * a - p.d * del * del - p.fp));
    return out;
}

enum class LimitMode { ToZero, ToInfinity };

/// Limit of c*(D) as D -> 0 (the value itself) or D -> infinity (the limit
/// of c*(D)/sqrt(D), by Aitken extrapolation over D = 1e2, 1e3, 1e4).
inline double speed_limit_D(const Params& p, LimitMode mode) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("speed_limit_D requires a KPP exterior");
    if (mode == LimitMode::ToZero) {
        if (p.gp >= 2.0 * p.fp) return p.gp * std::sqrt(p.d / (p.gp - p.fp));
        return fisher_speeds(p).c_f;
    }
    double s[3];
    for (int k = 0; k < 3; ++k) {
        Params q = p;
        q.D = std::pow(10.0, 2 + k);
        s[k] = speed_cylinder(q).c_star / std::sqrt(q.D);
    }
    double den = s[2] - 2.0 * s[1] + s[0];
    if (std::fabs(den) <= 1e-14 * std::fabs(s[2])) return s[2];
    double lim = s[2] - (s[2] - s[1]) * (s[2] - s[1]) / den;
    // A non-monotone sequence makes the extrapolation meaningless.
    if ((s[2] - s[1]) * (s[1] - s[0]) <= 0.0) return s[2];
    return lim;
}

/// Limit of c*(R) as R -> 0 (c_f) or R -> infinity (the half-space speed).
inline double speed_limit_R(const Params& p, LimitMode mode) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("speed_limit_R requires a KPP exterior");
    if (mode == LimitMode::ToZero) return fisher_speeds(p).c_f;
    return speed_halfspace(p).c;
}

/// Speed of the planar road-field model: a line of diffusivity D exchanging
/// with a half-plane of diffusivity d.
inline SpeedResult road_field_speed(const Params& p) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("road_field_speed requires a KPP exterior");
    const double D = p.D, d = p.d, mu = p.mu, nu = p.nu;
    const double cf = fisher_speeds(p).c_f;
    auto sample = [&](double c, double del) {
        auto ext = detail::quad_roots(c, d, p.fp + d * del * del);
        auto in = detail::quad_roots(c, D, p.gp - mu * d * del / (nu + d * del));
        return detail::interval_gap(ext, in);
    };
    auto min_gap = [&](double c) -> num::MinResult {
        if (c < cf) return {0.0, 1e300};
        double top = std::sqrt(std::max(0.0, c * c - cf * cf)) / (2.0 * d);
        if (top <= 0.0) return {0.0, sample(c, 0.0).gap};
        return num::scan_min([&](double x) { return sample(c, x).gap; }, 0.0, top, detail::scan_points,
                             1e-13 * top);
    };
    auto overlap = [&](double c) { return min_gap(c).fx <= 0.0; };

    SpeedResult out;
    out.regime = classify_halfspace(p) == Regime::Fisher ? Regime::Fisher : Regime::Anomalous;
    if (overlap(cf)) {
        out.c = cf;
    } else {
        double c_hi = 2.0 * std::sqrt(std::max(D, d) * std::max(p.gp, p.fp)) + 1.0;
        out.c = detail::first_overlap(overlap, cf, c_hi, 1e-11, &out.diag.iterations);
    }
    auto m = min_gap(out.c);
    auto s = sample(out.c, m.x);
    out.witness = Witness{m.x, s.alpha};
    out.diag.residual = std::max(0.0, m.fx);
    return out;
}

/// c* of the N = 2 strip with the exchange rate mu replaced by mu_tilde(R).
inline TangencyResult rescaled_speed(const Params& p, const std::function<double(double)>& mu_tilde, double R) {
    if (p.N != 2) throw UnsupportedCase("rescaled_speed is defined for N = 2");
    Params q = p;
    q.R = R;
    q.mu = mu_tilde(R);
    return speed_cylinder(q);
}

/// Smallest N0 in [4, 103] such that the enhancement condition fails for
/// every scanned N >= N0; -1 if it still holds at N = 103.
inline int max_effect_dimension(const Params& p) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("max_effect_dimension requires a KPP exterior");
    constexpr int n_max = Order::max_twice + 3;
    int n0 = 4;
    for (int N = 4; N <= n_max; ++N) {
        Params q = p;
        q.N = N;
        if (enhancement_test(q)) n0 = N + 1;
    }
    return n0 > n_max ? -1 : n0;
}

}  // namespace kppspeeds
