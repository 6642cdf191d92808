#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "params.hpp"

namespace kppspeeds {

struct FisherSpeeds {
    double c_f;
    double c_g;
};

inline FisherSpeeds fisher_speeds(const Params& p) {
    double cf = p.exterior == Exterior::Kpp ? 2.0 * std::sqrt(p.d * p.fp) : 0.0;
    return {cf, 2.0 * std::sqrt(p.D * p.gp)};
}

/// Regime of the two-half-space problem. Ties on the Fisher boundary count
/// as FISHER.
inline Regime classify_halfspace(const Params& p) {
    if (p.exterior == Exterior::Mortality)
        return p.d / p.D <= 2.0 + p.rho / p.gp ? Regime::Interior : Regime::Anomalous;
    if (p.D / p.d <= 2.0 - p.gp / p.fp) return Regime::Fisher;
    if (p.d / p.D <= 2.0 - p.fp / p.gp) return Regime::Interior;
    return Regime::Anomalous;
}

namespace detail {

struct RootPair {
    double lo, hi;
    bool ok;
};

// Roots of k*a^2 - c*a + s = 0.
inline RootPair quad_roots(double c, double k, double s) {
    double disc = c * c - 4.0 * k * s;
    if (disc < 0.0) return {0.0, 0.0, false};
    double q = std::sqrt(disc);
    // Small root from the product of the roots, free of cancellation.
    double big = c + q;
    return {big > 0.0 ? 2.0 * s / big : 0.0, big / (2.0 * k), true};
}

inline bool halfspace_overlap(const Params& p, double c) {
    RootPair rD = quad_roots(c, p.D, p.gp);
    if (!rD.ok) return false;
    if (p.exterior == Exterior::Mortality) {
        double rd_plus = (c + std::sqrt(c * c + 4.0 * p.d * p.rho)) / (2.0 * p.d);
        return rD.lo <= rd_plus;
    }
    RootPair rd = quad_roots(c, p.d, p.fp);
    if (!rd.ok) return false;
    return std::max(rD.lo, rd.lo) <= std::min(rD.hi, rd.hi);
}

inline Witness halfspace_contact(const Params& p, double c) {
    RootPair rD = quad_roots(c, p.D, p.gp);
    double lo = rD.lo, hi = rD.hi;
    if (p.exterior == Exterior::Mortality) {
        hi = std::min(hi, (c + std::sqrt(c * c + 4.0 * p.d * p.rho)) / (2.0 * p.d));
    } else {
        RootPair rd = quad_roots(c, p.d, p.fp);
        lo = std::max(lo, rd.lo);
        hi = std::min(hi, rd.hi);
    }
    return {0.0, 0.5 * (lo + hi)};
}

}  // namespace detail

/// c*_inf from the first c at which the root intervals of the two
/// characteristic quadratics intersect. Independent of the closed forms.
inline double overlap_speed_halfspace(const Params& p, int* iterations = nullptr) {
    auto [cf, cg] = fisher_speeds(p);
    double lo = std::max(cf, cg);
    if (detail::halfspace_overlap(p, lo)) return lo;
    double hi = 2.0 * lo + 1.0;
    while (!detail::halfspace_overlap(p, hi)) hi *= 2.0;
    return num::threshold_bisect([&](double c) { return detail::halfspace_overlap(p, c); }, lo, hi,
                                 1e-15, iterations);
}

inline SpeedResult speed_halfspace(const Params& p) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("speed_halfspace: requires a KPP exterior");
    auto [cf, cg] = fisher_speeds(p);
    SpeedResult out;
    out.regime = classify_halfspace(p);
    switch (out.regime) {
        case Regime::Fisher: out.c = cf; break;
        case Regime::Interior: out.c = cg; break;
        case Regime::Anomalous:
            out.c = std::fabs(p.D * p.fp - p.d * p.gp) / std::sqrt((p.D - p.d) * (p.fp - p.gp));
            break;
    }
    double c_overlap = overlap_speed_halfspace(p, &out.diag.iterations);
    out.diag.residual = std::fabs(c_overlap - out.c);
    out.witness = detail::halfspace_contact(p, std::max(out.c, c_overlap));
    return out;
}

inline SpeedResult speed_halfspace_mortality(const Params& p) {
    p.validate();
    if (p.exterior != Exterior::Mortality)
        throw DomainError("speed_halfspace_mortality: requires a mortality exterior");
    SpeedResult out;
    out.regime = classify_halfspace(p);
    if (out.regime == Regime::Interior) out.c = 2.0 * std::sqrt(p.D * p.gp);
    else out.c = (p.D * p.rho + p.d * p.gp) / std::sqrt((p.d - p.D) * (p.rho + p.gp));
    double c_overlap = overlap_speed_halfspace(p, &out.diag.iterations);
    out.diag.residual = std::fabs(c_overlap - out.c);
    out.witness = detail::halfspace_contact(p, std::max(out.c, c_overlap));
    return out;
}

// ---------------------------------------------------------------------------
// Steady states

enum class SteadyBranch { Decreasing, Constant, Increasing };

inline const char* to_string(SteadyBranch b) {
    switch (b) {
        case SteadyBranch::Decreasing: return "decreasing";
        case SteadyBranch::Constant: return "constant";
        case SteadyBranch::Increasing: return "increasing";
    }
    return "?";
}

struct ProfileSample {
    double x;
    double value;
};

/// Stationary profiles: U on x <= 0, V on x >= 0, each sampled from the
/// interface outward.
struct SteadyProfile {
    double U0 = 1.0;
    double V0 = 1.0;
    double dU0 = 0.0;
    double dV0 = 0.0;
    SteadyBranch branch = SteadyBranch::Constant;
    std::vector<ProfileSample> u;
    std::vector<ProfileSample> v;
    double flux_residual = 0.0;
};

namespace detail {

// Samples of a monotone first-integral profile w(x) running from w0 at the
// interface to the limit `target`, with |w'| = sqrt(2/diff * P(w)).
template <class Prim>
std::vector<ProfileSample> first_integral_profile(double w0, double target, double diff, Prim&& P,
                                                  int n, double direction, double tail) {
    std::vector<ProfileSample> out;
    out.push_back({0.0, w0});
    double gap0 = w0 - target;
    if (std::fabs(gap0) <= tail || n < 2) return out;
    // In s = log|w - target| the integrand stays bounded as w approaches the
    // limit, so each geometric level is cheap to integrate.
    const double sign = gap0 > 0 ? 1.0 : -1.0;
    auto integrand = [&](double s) {
        double z = std::exp(s);
        double P_w = P(target + sign * z);
        return P_w > 0 ? z / std::sqrt(2.0 / diff * P_w) : 0.0;
    };
    const double s0 = std::log(std::fabs(gap0)), s1 = std::log(tail);
    double x = 0.0, prev = s0;
    for (int k = 1; k < n; ++k) {
        double sk = s0 + (s1 - s0) * k / (n - 1);
        x += direction * std::fabs(num::simpson(integrand, prev, sk, 1e-14, 1e-10, 14));
        out.push_back({x, target + sign * std::exp(sk)});
        prev = sk;
    }
    return out;
}

}  // namespace detail

/// Steady state of the two-half-space system from the first integrals.
/// g is the interior reaction, f the exterior one (a Mortality term when
/// p.exterior is Mortality).
template <class G, class F>
SteadyProfile steady_state_halfspace(const Params& p, G g, F f, int n_grid = 200) {
    p.validate();
    const bool mortality = p.exterior == Exterior::Mortality;
    const double S = mortality ? 0.0 : p.S;
    const double D = p.D, d = p.d, mu = p.mu, nu = p.nu;
    auto Gint = [&](double a) { return num::simpson(g, a, 1.0, 1e-15, 1e-14); };
    auto Fint = [&](double a) { return num::simpson(f, a, S, 1e-15, 1e-14); };

    SteadyProfile out;
    if (!mortality && std::fabs(mu - nu * S) <= 1e-14 * std::max(mu, nu * S)) {
        out.U0 = 1.0;
        out.V0 = S;
        out.branch = SteadyBranch::Constant;
        for (int k = 0; k < std::max(n_grid, 2); ++k) {
            out.u.push_back({-double(k), 1.0});
            out.v.push_back({double(k), S});
        }
        return out;
    }

    if (mortality || mu > nu * S) {
        out.branch = SteadyBranch::Decreasing;
        auto dU = [&](double U0) { return -std::sqrt(2.0 / D * std::max(Gint(U0), 0.0)); };
        auto V0of = [&](double U0) { return (mu * U0 + D * dU(U0)) / nu; };
        double lo = 0.0;
        std::function<double(double)> phi;
        if (mortality) {
            phi = [&](double U0) { return V0of(U0) + std::sqrt(d / p.rho) * (D / d) * dU(U0); };
        } else {
            auto vm = [&](double U0) { return V0of(U0) - S; };
            lo = num::solve(vm, 0.0, 1.0, 0.0, 1e-16).x;
            phi = [&](double U0) {
                double dv = D / d * dU(U0);
                return Fint(V0of(U0)) - 0.5 * d * dv * dv;
            };
        }
        double flo = phi(lo), fhi = phi(1.0);
        if (!((flo < 0) && (fhi > 0)))
            throw InfeasibleError("steady_state_halfspace: no sign change for U(0) in the bracket");
        out.U0 = num::brent(phi, lo, 1.0, flo, fhi, 0.0, 1e-16).x;
        out.dU0 = dU(out.U0);
        out.dV0 = D / d * out.dU0;
        out.V0 = V0of(out.U0);
    } else {
        out.branch = SteadyBranch::Increasing;
        auto dV = [&](double V0) { return std::sqrt(2.0 / d * std::max(Fint(V0), 0.0)); };
        auto U0of = [&](double V0) { return (nu * V0 - d * dV(V0)) / mu; };
        auto um = [&](double V0) { return U0of(V0) - 1.0; };
        double lo = num::solve(um, 0.0, S, 0.0, 1e-16).x;
        auto phi = [&](double V0) {
            double du = d / D * dV(V0);
            return Gint(U0of(V0)) - 0.5 * D * du * du;
        };
        double flo = phi(lo), fhi = phi(S);
        if (!((flo < 0) && (fhi > 0)))
            throw InfeasibleError("steady_state_halfspace: no sign change for V(0) in the bracket");
        out.V0 = num::brent(phi, lo, S, flo, fhi, 0.0, 1e-16).x;
        out.dV0 = dV(out.V0);
        out.dU0 = d / D * out.dV0;
        out.U0 = U0of(out.V0);
    }

    double r1 = std::fabs(D * out.dU0 - (nu * out.V0 - mu * out.U0));
    double r2 = std::fabs(d * out.dV0 - D * out.dU0);
    double r3 = std::fabs(Gint(out.U0) - 0.5 * D * out.dU0 * out.dU0);
    double r4 = mortality ? std::fabs(out.dV0 * out.dV0 - p.rho / d * out.V0 * out.V0)
                          : std::fabs(Fint(out.V0) - 0.5 * d * out.dV0 * out.dV0);
    out.flux_residual = std::max({r1, r2, r3, r4});

    out.u = detail::first_integral_profile(out.U0, 1.0, D, Gint, n_grid, -1.0, 1e-8);
    double v_tail = mortality ? 1e-8 * out.V0 : 1e-8;
    out.v = detail::first_integral_profile(out.V0, S, d, Fint, n_grid, 1.0, v_tail);
    return out;
}

/// Default logistic reactions g = gp s(1-s), f = fp s(1-s/S) (or -rho s).
inline SteadyProfile steady_state_halfspace(const Params& p, int n_grid = 200) {
    Logistic g{p.gp, 1.0};
    if (p.exterior == Exterior::Mortality)
        return steady_state_halfspace(p, g, Mortality{p.rho}, n_grid);
    return steady_state_halfspace(p, g, Logistic{p.fp, p.S}, n_grid);
}

// ---------------------------------------------------------------------------
// Truncated half-space speed

/// Dispersion curves of the problem restricted to a slab of half-width L
/// (N = 2) or a box of side 2L (N = 3), with the growth rates lowered by theta.
class TruncatedCurves {
public:
    TruncatedCurves(const Params& p, double L, double theta)
        : D_(p.D), d_(p.d), mu_(p.mu), nu_(p.nu), L_(L) {
        if (p.N != 2 && p.N != 3) throw UnsupportedCase("truncated speed is implemented for N = 2, 3");
        if (!(L > 0.0)) throw DomainError("truncated speed: L must be positive");
        double lam2 = p.N == 3 ? std::pow(std::numbers::pi / (2.0 * L), 2) : 0.0;
        Gd_ = p.gp - theta - p.D * lam2;
        Fd_ = p.fp - theta - p.d * lam2;
        chi0_ = -mu_ * d_ / (nu_ * L_ + d_);
        const double pi = std::numbers::pi;
        auto den = [&](double x) { return nu_ * std::sin(x * L_) + d_ * x * std::cos(x * L_); };
        delta_bar_ = num::solve(den, pi / (2 * L_), pi / L_, 0.0, 1e-16).x;
        auto tb = [&](double b) { return D_ * b / std::tan(b * L_) + mu_; };
        beta_bar_ = num::solve(tb, pi / (2 * L_), pi / L_ * (1 - 1e-15), 0.0, 1e-16).x;
    }

    double beta_bar() const { return beta_bar_; }
    double delta_bar() const { return delta_bar_; }

    /// Interior matching value: D b cot(bL) for b > 0, D|b| coth(|b|L) for b < 0.
    double chi_u(double b) const {
        if (b == 0.0) return D_ / L_;
        if (b < 0.0) return -D_ * b / std::tanh(-b * L_);
        return D_ * b / std::tan(b * L_);
    }
    double chi_v1(double x) const {
        if (x == 0.0) return chi0_;
        return -mu_ * d_ * x * std::cos(x * L_) / (nu_ * std::sin(x * L_) + d_ * x * std::cos(x * L_));
    }
    double chi_v2(double x) const {
        if (x == 0.0) return chi0_;
        double t = std::tanh(x * L_);
        return -mu_ * d_ * x / (nu_ * t + d_ * x);
    }

    /// The glued function: delta^2 on the trigonometric branches, -delta^2 on
    /// the hyperbolic one. Decreasing in beta.
    double frak_d(double b) const {
        double T = chi_u(b);
        if (T >= chi0_) {
            if (T == chi0_) return 0.0;
            auto f = [&](double x) { return x >= delta_bar_ ? 1e300 : chi_v1(x) - T; };
            double x = num::brent(f, 0.0, delta_bar_, chi0_ - T, 1e300, 1e-15).x;
            return x * x;
        }
        if (T <= -mu_) return -std::numeric_limits<double>::infinity();
        auto f = [&](double x) { return chi_v2(x) - T; };
        double hi = 1.0 / L_;
        while (f(hi) > 0.0) hi *= 2.0;
        double x = num::brent(f, 0.0, hi, chi0_ - T, f(hi), 1e-15).x;
        return -x * x;
    }

    /// beta with chi_u(beta) = T, for T in (-mu, inf).
    double beta_of_chi(double T) const {
        const double pi = std::numbers::pi;
        if (T > D_ / L_) {
            auto f = [&](double b) { return (b == 0.0 ? D_ / L_ : D_ * b / std::tanh(b * L_)) - T; };
            return -num::solve(f, 0.0, T / D_ + 1.0 / L_, 1e-15).x;
        }
        auto f = [&](double b) {
            if (b >= pi / L_) return -1e300;
            return chi_u(b) - T;
        };
        return num::brent(f, 0.0, pi / L_, D_ / L_ - T, -1e300, 1e-15).x;
    }

    /// Right end of the exterior region, or nullopt when it is empty.
    std::optional<double> beta_breve(double c) const {
        double target = (4.0 * d_ * Fd_ - c * c) / (4.0 * d_ * d_);
        if (target >= delta_bar_ * delta_bar_) return std::nullopt;
        double T = target > 0 ? chi_v1(std::sqrt(target)) : target == 0 ? chi0_ : chi_v2(std::sqrt(-target));
        return beta_of_chi(T);
    }

    double beta_hat(double c) const {
        double q = c * c - 4.0 * D_ * Gd_;
        return q >= 0 ? -std::sqrt(q) / (2.0 * D_) : std::sqrt(-q) / (2.0 * D_);
    }

    /// max(lower ends) - min(upper ends) of the two alpha intervals at beta.
    double gap(double c, double b) const {
        double sD = b < 0 ? Gd_ + D_ * b * b : Gd_ - D_ * b * b;
        auto rD = detail::quad_roots(c, D_, sD);
        double sd = Fd_ - d_ * frak_d(b);
        auto rd = detail::quad_roots(c, d_, sd);
        if (!rD.ok || !rd.ok) return 1e300;
        double lower = std::max({rD.lo, rd.lo, 0.0});
        return lower - std::min(rD.hi, rd.hi);
    }

    num::MinResult min_gap(double c) const {
        auto br = beta_breve(c);
        if (!br) return {0.0, 1e300};
        double lo = beta_hat(c), hi = std::min(*br, beta_bar_);
        if (lo > hi) return {lo, 1e300};
        double span = hi - lo;
        return num::scan_min([&](double b) { return gap(c, b); }, lo + 1e-12 * span, hi - 1e-12 * span,
                             512, 1e-13 * std::max(1.0, std::fabs(hi)));
    }

    bool overlap(double c) const { return min_gap(c).fx <= 0.0; }

    double contact_alpha(double c, double b) const {
        double sD = b < 0 ? Gd_ + D_ * b * b : Gd_ - D_ * b * b;
        auto rD = detail::quad_roots(c, D_, sD);
        auto rd = detail::quad_roots(c, d_, Fd_ - d_ * frak_d(b));
        return 0.5 * (std::max({rD.lo, rd.lo, 0.0}) + std::min(rD.hi, rd.hi));
    }

private:
    double D_, d_, mu_, nu_, L_;
    double Gd_ = 0, Fd_ = 0, chi0_ = 0;
    double delta_bar_ = 0, beta_bar_ = 0;
};

/// Speed c*_L of the truncated problem: the first c at which the two curve
/// families meet.
inline SpeedResult truncated_speed_halfspace(const Params& p, double L, double theta = 0.0) {
    p.validate();
    if (p.exterior != Exterior::Kpp) throw DomainError("truncated speed requires a KPP exterior");
    TruncatedCurves tc(p, L, theta);
    double c_lo = 1e-9;
    if (tc.overlap(c_lo))
        throw InfeasibleError("truncated speed: curves already meet at c ~ 0; L too small");
    double c_hi = 2.0 * std::sqrt(std::max(p.D, p.d) * std::max(p.gp, p.fp)) + 1.0;
    for (int k = 0; !tc.overlap(c_hi); ++k) {
        if (k > 60) throw InfeasibleError("truncated speed: no overlap found");
        c_lo = c_hi;
        c_hi *= 2.0;
    }
    SpeedResult out;
    out.c = num::threshold_bisect([&](double c) { return tc.overlap(c); }, c_lo, c_hi, 1e-11,
                                  &out.diag.iterations);
    out.regime = classify_halfspace(p);
    auto m = tc.min_gap(out.c);
    out.witness = Witness{m.x, tc.contact_alpha(out.c, m.x)};
    out.diag.residual = std::fabs(m.fx);
    return out;
}

// ---------------------------------------------------------------------------
// Regime diagram over x = D/d, y = gp/fp

struct RegimeCell {
    double x;
    double y;
    Regime regime;
};

struct RegimeDiagram {
    std::vector<RegimeCell> cells;
    std::vector<std::pair<double, double>> fisher_boundary;    // y = 2 - x
    std::vector<std::pair<double, double>> interior_boundary;  // y = x/(2x - 1)
};

inline Regime classify_ratio(double x, double y) {
    Params p;
    p.D = x;
    p.d = 1.0;
    p.gp = y;
    p.fp = 1.0;
    return classify_halfspace(p);
}

/// Cell-centre classification on an nx-by-ny grid, x-major.
inline RegimeDiagram regime_diagram(double x0, double x1, int nx, double y0, double y1, int ny) {
    if (!(x0 > 0 && y0 > 0 && x1 > x0 && y1 > y0 && nx > 0 && ny > 0))
        throw DomainError("regime_diagram: grid must be positive and non-empty");
    RegimeDiagram out;
    double hx = (x1 - x0) / nx, hy = (y1 - y0) / ny;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double x = x0 + (i + 0.5) * hx, y = y0 + (j + 0.5) * hy;
            out.cells.push_back({x, y, classify_ratio(x, y)});
        }
    const int nb = 200;
    for (int k = 0; k <= nb; ++k) {
        double x = x0 + (x1 - x0) * k / nb;
        double yf = 2.0 - x;
        if (yf >= y0 && yf <= y1) out.fisher_boundary.push_back({x, yf});
        if (x > 0.5) {
            double yi = x / (2.0 * x - 1.0);
            if (yi >= y0 && yi <= y1) out.interior_boundary.push_back({x, yi});
        }
    }
    return out;
}

}  // namespace kppspeeds
