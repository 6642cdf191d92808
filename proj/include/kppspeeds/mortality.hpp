#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cylinder.hpp"
#include "errors.hpp"
#include "halfspace.hpp"
#include "numerics.hpp"
#include "params.hpp"
#include "specfun.hpp"

namespace kppspeeds {

namespace detail {

inline void require_mortality(const Params& p, const char* who) {
    p.validate();
    if (p.exterior != Exterior::Mortality) throw DomainError(std::string(who) + " requires a mortality exterior");
}

// K_{tau+1}/K_tau at sqrt(rho/d) R.
inline double exterior_ratio(const Params& p) {
    return bessel_k_ratio(p.order(), std::sqrt(p.rho / p.d) * p.R);
}

}  // namespace detail

/// Robin coefficient of the interior problem once the exterior is solved:
/// D Phi' + kappa Phi = 0 on the boundary.
inline double robin_kappa(const Params& p) {
    detail::require_mortality(p, "robin_kappa");
    double s = std::sqrt(p.d * p.rho) * detail::exterior_ratio(p);
    return p.mu * s / (p.nu + s);
}

struct EigenResult {
    double beta0 = 0.0;
    double kappa = 0.0;
    bool survives = false;
    double residual = 0.0;
};

/// Principal Robin eigenvalue beta0^2 of the cross-section and the
/// survival verdict gp/D > beta0^2.
inline EigenResult robin_eigenvalue(const Params& p) {
    EigenResult out;
    out.kappa = robin_kappa(p);
    out.beta0 = k_u(p.order(), out.kappa * p.R / p.D) / p.R;
    out.survives = p.gp / p.D > out.beta0 * out.beta0;
    DispersionCurves cv(p);
    double target = cv.chi_v(std::sqrt(p.rho / p.d));
    out.residual = std::fabs(cv.chi_u(out.beta0) - target) / std::max(1.0, target);
    return out;
}

namespace detail {

// Root of a monotone function of log(x) by geometric bracket expansion
// from x0 followed by Brent.
template <class F>
double log_root(F&& f, double x0, double rel_tol = 1e-14) {
    auto g = [&](double t) { return f(std::exp(t)); };
    double a = std::log(x0) - 0.5, b = a + 1.0;
    double fa = g(a), fb = g(b);
    for (double step = 1.0; (fa > 0) == (fb > 0); step *= 2.0) {
        if (step > 1e3) throw InfeasibleError("no sign change while bracketing a threshold");
        a -= step;
        b += step;
        fa = g(a);
        fb = g(b);
    }
    return std::exp(num::brent(g, a, b, fa, fb, 0.0, rel_tol).x);
}

}  // namespace detail

/// Radius R0 with D beta0(R0)^2 = gp; the population survives iff R > R0.
inline double survival_threshold_R(const Params& p) {
    detail::require_mortality(p, "survival_threshold_R");
    return detail::log_root(
        [&](double R) {
            Params q = p;
            q.R = R;
            double b = robin_eigenvalue(q).beta0;
            return p.D * b * b - p.gp;
        },
        p.R);
}

/// Either survival for every D, or survival iff D < D0.
struct DThreshold {
    bool all_D = false;
    bool equality = false;
    double D0 = 0.0;
};

inline DThreshold survival_threshold_D(const Params& p) {
    detail::require_mortality(p, "survival_threshold_D");
    double lhs = p.mu * (p.N - 1) / (p.R * p.gp);
    double rhs = 1.0 + p.nu / (std::sqrt(p.d * p.rho) * detail::exterior_ratio(p));
    DThreshold out;
    double rel = (lhs - rhs) / rhs;
    out.equality = std::fabs(rel) <= 1e-12;
    if (rel <= 1e-12) {
        out.all_D = true;
        return out;
    }
    out.D0 = detail::log_root(
        [&](double D) {
            Params q = p;
            q.D = D;
            double b = robin_eigenvalue(q).beta0;
            return D * b * b - p.gp;
        },
        p.D);
    return out;
}

/// Speed c*_m of the cylinder with a mortality exterior.
inline TangencyResult speed_cylinder_mortality(const Params& p) {
    detail::require_mortality(p, "speed_cylinder_mortality");
    auto eig = robin_eigenvalue(p);
    if (!eig.survives) throw InfeasibleError("speed_cylinder_mortality: the population does not survive");
    TangencyResult out;
    if (p.D < p.d && p.N > 5)
        throw UnsupportedCase("speed_cylinder_mortality: N > 5 with D < d is not supported");
    if (p.N > 5) out.diag.note = "N > 5: contact assumed above beta_under";

    DispersionCurves cv(p);
    const double bu = cv.beta_under(), d = p.d, rho = p.rho;
    auto ext = [&](double c, double b) {
        double del = cv.delta(b);
        return detail::quad_roots(c, d, -rho + d * del * del);
    };
    auto min_gap = [&](double c) -> num::MinResult {
        double top = cv.beta_of_delta(std::sqrt(c * c + 4.0 * d * rho) / (2.0 * d));
        double lo = std::max(bu, cv.beta_hat(c)), hi = std::min(top, cv.beta_bar());
        if (lo > hi) return {lo, 1e300};
        auto g = [&](double b) { return detail::interval_gap(ext(c, b), cv.alpha_D(c, b)).gap; };
        double eps = 1e-9 * (cv.beta_bar() - bu);
        if (hi - lo <= 2 * eps) return {0.5 * (lo + hi), g(0.5 * (lo + hi))};
        return num::scan_min(g, lo + eps, hi - eps, detail::scan_points, 1e-13 * std::max(hi, 1e-300));
    };
    auto overlap = [&](double c) { return min_gap(c).fx <= 0.0; };

    double c_hi = 2.0 * std::sqrt(std::max(p.D, d) * std::max(p.gp, rho)) + 1.0;
    out.c_star = detail::first_overlap(overlap, 0.0, c_hi, 1e-11, &out.diag.iterations);
    out.enhanced = out.c_star > cv.c_g() * (1 + 1e-9);
    auto m = min_gap(out.c_star);
    auto s = detail::interval_gap(ext(out.c_star, m.x), cv.alpha_D(out.c_star, m.x));
    out.beta_star = m.x;
    out.alpha_star = s.alpha;
    out.branch = s.branch;
    double del = cv.delta(m.x), a = s.alpha, c = out.c_star;
    out.diag.residual = std::max(std::fabs(c * a - p.D * a * a + p.D * m.x * m.x - p.gp),
                                 std::fabs(c * a - d * a * a - d * del * del + rho));
    return out;
}

/// Sufficient condition for c*_m < c_g.
inline bool cg_upper_bound_check(const Params& p) {
    detail::require_mortality(p, "cg_upper_bound_check");
    DispersionCurves cv(p);
    double bu = cv.beta_under(), cg = cv.c_g();
    if ((p.d - p.D) * cg - 2.0 * p.d * bu <= 0.0) return true;
    double C = bu / std::sqrt(p.D * p.gp);
    return p.d / p.D * (1.0 - C) * (1.0 - C) <= 2.0 + p.rho / p.gp - 2.0 * C;
}

struct RadialSteady {
    double a0 = 0.0;
    double gamma_ext = 0.0;
    double kappa = 0.0;
    std::vector<ProfileSample> interior;
    std::vector<ProfileSample> exterior;
    double robin_residual = 0.0;
    double exchange_residual = 0.0;
};

namespace detail {

// Interior radial profile started at the regular center with Phi(0) = a.
// Returns the state at each requested radius; stops early with an empty
// tail once Phi leaves (0, 1].
template <class G>
std::vector<num::State2> radial_shot(const Params& p, G& g, double a, const std::vector<double>& radii) {
    const double D = p.D, n1 = p.N - 1.0, eps = p.R * 1e-6;
    auto rhs = [&](double r, const num::State2& y) -> num::State2 {
        return {y[1], -(p.N - 2.0) / r * y[1] - g(y[0]) / D};
    };
    num::State2 y{a - g(a) * eps * eps / (2.0 * D * n1), -g(a) * eps / (D * n1)};
    double r = eps;
    std::vector<num::State2> out;
    out.reserve(radii.size());
    for (double target : radii) {
        if (target > r) {
            y = num::dopri45(rhs, r, y, target, 1e-10);
            r = target;
        }
        out.push_back(target <= eps ? num::State2{a, 0.0} : y);
        if (!(y[0] > 0.0)) break;
    }
    return out;
}

}  // namespace detail

/// Radially symmetric positive steady state of the mortality problem, by
/// shooting on the center value. a_lo, a_hi bracket the shot.
template <class G>
RadialSteady radial_steady_mortality(const Params& p, G g, int n_grid = 200, double a_lo = 1e-8,
                                     double a_hi = 1.0) {
    auto eig = robin_eigenvalue(p);
    if (!eig.survives) throw InfeasibleError("radial_steady_mortality: the population does not survive");
    const double kappa = eig.kappa, R = p.R, D = p.D;
    const std::vector<double> edge{R};
    auto F = [&](double a) {
        auto s = detail::radial_shot(p, g, a, edge);
        if (s.empty() || !(s.back()[0] > 0.0)) return -1.0;
        return D * s.back()[1] + kappa * s.back()[0];
    };
    double flo = F(a_lo), fhi = F(a_hi);
    if (!(flo < 0.0 && fhi > 0.0))
        throw InfeasibleError("radial_steady_mortality: no sign change of the Robin residual in the bracket");
    RadialSteady out;
    out.kappa = kappa;
    out.a0 = num::brent(F, a_lo, a_hi, flo, fhi, 1e-15, 1e-300).x;

    std::vector<double> radii(std::max(n_grid, 2));
    for (std::size_t k = 0; k < radii.size(); ++k) radii[k] = R * double(k) / double(radii.size() - 1);
    auto states = detail::radial_shot(p, g, out.a0, radii);
    for (std::size_t k = 0; k < states.size(); ++k) out.interior.push_back({radii[k], states[k][0]});
    const double phiR = states.back()[0], dphiR = states.back()[1];
    out.robin_residual = std::fabs(D * dphiR + kappa * phiR);

    const Order tau = p.order();
    const double k = std::sqrt(p.rho / p.d), tv = tau.value();
    out.gamma_ext = -D * dphiR * std::pow(R, tv) / (std::sqrt(p.d * p.rho) * bessel_k(tau.next(), k * R));
    auto psi = [&](double r) { return out.gamma_ext * std::pow(r, -tv) * bessel_k(tau, k * r); };
    out.exchange_residual = std::fabs(D * dphiR - (p.nu * psi(R) - p.mu * phiR));
    const double span = 20.0 / k;
    for (std::size_t j = 0; j < radii.size(); ++j) {
        double r = R + span * double(j) / double(radii.size() - 1);
        out.exterior.push_back({r, psi(r)});
    }
    return out;
}

inline RadialSteady radial_steady_mortality(const Params& p, int n_grid = 200) {
    return radial_steady_mortality(p, Logistic{p.gp, 1.0}, n_grid);
}

}  // namespace kppspeeds
