#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "kppspeeds/cylinder.hpp"

using namespace kppspeeds;

namespace {

Params cyl(int N, double D, double d, double gp, double fp, double R = 1.0, double mu = 1.0, double nu = 1.0) {
    Params p;
    p.N = N;
    p.D = D;
    p.d = d;
    p.gp = gp;
    p.fp = fp;
    p.R = R;
    p.mu = mu;
    p.nu = nu;
    return p;
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int k = 0; k < 200; ++k) {
        double mid = 0.5 * (lo + hi), fm = f(mid);
        if ((fm > 0) == (flo > 0)) lo = mid, flo = fm;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

const double golden = 0.5 * (std::sqrt(5.0) - 1.0);

template <class F>
double golden_min(F&& f, double lo, double hi, int iters = 120) {
    for (int k = 0; k < iters; ++k) {
        double m1 = hi - golden * (hi - lo), m2 = lo + golden * (hi - lo);
        if (f(m1) < f(m2)) hi = m2;
        else lo = m1;
    }
    return f(0.5 * (lo + hi));
}

/// Smallest c admitting an exponent alpha > 0 with both characteristic
/// inequalities at the given (interior, exterior) constants:
/// c >= D a + in/a and c >= d a + ex/a.
double pair_speed(double D, double in, double d, double ex) {
    auto h = [&](double a) { return std::max(D * a + in / a, d * a + ex / a); };
    double best = 1e300, at = 1.0;
    for (double a = 1e-6; a < 1e6; a *= 1.05)
        if (h(a) < best) best = h(a), at = a;
    return golden_min([&](double l) { return h(std::exp(l)); }, std::log(at / 1.05), std::log(at * 1.05));
}

/// Brute-force c*: minimise over beta in [lo, hi] the pair speed with
/// delta = delta_of(beta).
double brute_speed(const Params& p, const std::function<double(double)>& delta_of, double lo, double hi) {
    auto F = [&](double b) {
        double del = delta_of(b);
        return pair_speed(p.D, p.gp - p.D * b * b, p.d, p.fp + p.d * del * del);
    };
    const int n = 1500;
    double best = 1e300;
    int at = 0;
    for (int k = 0; k <= n; ++k) {
        double v = F(lo + (hi - lo) * k / n);
        if (v < best) best = v, at = k;
    }
    double a = lo + (hi - lo) * std::max(0, at - 1) / n, b = lo + (hi - lo) * std::min(n, at + 1) / n;
    return std::min(best, golden_min(F, a, b));
}

/// N = 2 quantities from the trigonometric reduction h_u(r) = r tan r, h_v(r) = r.
struct PlanarCurves {
    Params p;
    double beta_bar() const {
        return bisect([&](double b) { return p.D * b * p.R * std::tan(b * p.R) - p.mu * p.R; }, 1e-12,
                      (M_PI / 2 - 1e-12) / p.R);
    }
    double delta(double b) const {
        double h = b * p.R * std::tan(b * p.R);
        return p.nu * p.D * h / (p.mu * p.R - p.D * h) / p.d;
    }
};

/// Log-uniform parameters; each draw is sequenced so the stream is portable.
Params random_cyl(std::mt19937_64& rng, int N, double spread, double D_scale = 1.0) {
    std::uniform_real_distribution<double> u(-spread, spread);
    double v[7];
    for (double& x : v) x = std::exp(u(rng));
    return cyl(N, D_scale * v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
}

std::string describe(const Params& p) {
    std::ostringstream o;
    o.precision(17);
    o << "N=" << p.N << " D=" << p.D << " d=" << p.d << " gp=" << p.gp << " fp=" << p.fp << " R=" << p.R
      << " mu=" << p.mu << " nu=" << p.nu;
    return o.str();
}

}  // namespace

TEST(Curves, PlanarClosedFormExample) {
    Params p = cyl(2, 1, 1, 1, 1);
    DispersionCurves cv(p);
    double closed = 0.5 * std::tan(0.5) / (1 - 0.5 * std::tan(0.5));
    EXPECT_NEAR(closed, 0.375802039989, 1e-12);
    EXPECT_NEAR(cv.delta(0.5), closed, 1e-8);
    EXPECT_NEAR(cv.chi_v(cv.delta(0.5)), cv.chi_u(0.5), 1e-12);
    EXPECT_EQ(cv.beta_under(), 0.0);
    EXPECT_EQ(DispersionCurves(cyl(3, 1, 1, 1, 1)).beta_under(), 0.0);
}

TEST(Curves, GenericPathMatchesPlanarReduction) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        Params p = random_cyl(rng, 2, 1.0);
        DispersionCurves cv(p);
        PlanarCurves pc{p};
        double bb = pc.beta_bar();
        EXPECT_NEAR(cv.beta_bar(), bb, 1e-10 * bb);
        for (double t : {0.1, 0.4, 0.8, 0.95}) {
            double del = pc.delta(t * bb);
            EXPECT_NEAR(cv.delta(t * bb), del, 1e-8 * std::max(1.0, del));
        }
    }
}

TEST(Curves, BetaUnderDefiningEquation) {
    for (int N : {4, 5}) {
        Params p = cyl(N, 1.3, 0.7, 1, 1, 0.8, 1.1, 0.9);
        DispersionCurves cv(p);
        double bu = cv.beta_under();
        EXPECT_GT(bu, 0.0);
        double rhs = p.mu * p.R / p.D * p.d * (N - 3) / (p.nu * p.R + p.d * (N - 3));
        EXPECT_NEAR(h_u(cv.tau(), bu * p.R), rhs, 1e-10);
        EXPECT_LT(bu, cv.beta_bar());
        EXPECT_LT(cv.beta_bar(), first_zero_j(cv.tau()) / p.R);
    }
}

TEST(Curves, DeltaIsIncreasingAndInvertsTheMatching) {
    for (int N : {2, 3, 4, 5}) {
        Params p = cyl(N, 1.7, 0.6, 1, 1, 1.4, 0.8, 1.3);
        DispersionCurves cv(p);
        double lo = cv.beta_under(), hi = cv.beta_bar(), prev = -1.0;
        for (int k = 1; k < 200; ++k) {
            double b = lo + (hi - lo) * k / 200.0;
            double del = cv.delta(b);
            EXPECT_GT(cv.gamma(b), 0.0);
            if (N == 3 && del == 0.0) {
                // delta ~ exp(-1/s) left the double range; check that it really did.
                EXPECT_LT(p.R * cv.chi_u(b) / p.d, h_v(cv.tau(), 1e-300));
                continue;
            }
            EXPECT_GT(del, prev) << "N=" << N;
            prev = del;
            EXPECT_NEAR(cv.chi_v(del), cv.chi_u(b), 1e-10 * std::max(1.0, cv.chi_u(b))) << "N=" << N;
            EXPECT_NEAR(cv.beta_of_delta(del), b, 1e-9 * hi);
            EXPECT_GT(cv.gamma(b), 0.0);
        }
        EXPECT_LT(cv.delta(lo + 1e-9 * (hi - lo)), 1e-3);
        EXPECT_GT(cv.delta(hi * (1 - 1e-12)), 1e3);
    }
}

TEST(Curves, DeltaIncreasesWithRadius) {
    for (int N : {2, 3, 4, 5}) {
        DispersionCurves a(cyl(N, 2, 1, 1, 1, 1.0)), b(cyl(N, 2, 1, 1, 1, 1.5));
        double top = std::min(a.beta_bar(), b.beta_bar()), bot = std::max(a.beta_under(), b.beta_under());
        for (int k = 1; k < 20; ++k) {
            double beta = bot + (top - bot) * k / 20.0;
            EXPECT_GE(b.delta(beta), a.delta(beta) * (1 - 1e-12)) << "N=" << N << " beta=" << beta;
        }
    }
}

TEST(Enhancement, TestExamples) {
    EXPECT_TRUE(enhancement_test(cyl(2, 1.5, 1, 1, 1)));
    EXPECT_FALSE(enhancement_test(cyl(2, 1, 1, 1, 1)));
    Params p = cyl(4, 1, 1, 1, 1, 0.5);
    EXPECT_FALSE(enhancement_test(p));
    p.D = 1e3;
    EXPECT_TRUE(enhancement_test(p));
}

TEST(Enhancement, ProfileKinds) {
    // Wide cylinder and 2fp <= gp: enhanced for every D.
    Params all = cyl(4, 1, 1, 2.5, 1, 4.0);
    ASSERT_GE(all.R * std::sqrt(all.fp / all.d), first_zero_j(all.order()));
    EXPECT_EQ(enhancement_profile(all).kind, EnhancementKind::All);

    Params gap = cyl(4, 1, 1, 2.2, 1, 0.3);
    auto pr = enhancement_profile(gap);
    EXPECT_EQ(pr.kind, EnhancementKind::ComplementInterval);
    EXPECT_LT(pr.D1, pr.D2);
    EXPECT_LT(pr.zeta_min, 0.0);
    EXPECT_LE(gap.gp, 2 * gap.fp - pr.zeta_min / gap.d);
    for (double D : {pr.D1 * 0.5, pr.D2 * 2.0}) EXPECT_TRUE(enhancement_test(cyl(4, D, 1, 2.2, 1, 0.3)));
    EXPECT_FALSE(enhancement_test(cyl(4, std::sqrt(pr.D1 * pr.D2), 1, 2.2, 1, 0.3)));

    auto above = enhancement_profile(cyl(4, 1, 1, 1, 1, 0.5));
    EXPECT_EQ(above.kind, EnhancementKind::Above);
    EXPECT_FALSE(enhancement_test(cyl(4, above.D1 * 0.99, 1, 1, 1, 0.5)));
    EXPECT_TRUE(enhancement_test(cyl(4, above.D1 * 1.01, 1, 1, 1, 0.5)));
}

TEST(Enhancement, ZetaIsConvexInD) {
    for (int N : {4, 5}) {
        Params p = cyl(N, 1, 1, 2.2, 1, 0.3);
        std::vector<double> z;
        const double h = 0.02;
        for (int k = 0; k < 400; ++k) z.push_back(enhancement_zeta(p, 0.01 + h * k));
        for (std::size_t k = 1; k + 1 < z.size(); ++k) EXPECT_GE(z[k + 1] - 2 * z[k] + z[k - 1], -1e-8) << k;
    }
}

TEST(SpeedCylinder, Examples) {
    for (double R : {0.3, 1.0, 5.0}) {
        auto a = speed_cylinder(cyl(2, 1, 1, 1, 1, R, 0.7, 2.0));
        EXPECT_DOUBLE_EQ(a.c_star, 2.0);
        EXPECT_FALSE(a.enhanced);
    }
    auto b = speed_cylinder(cyl(2, 2, 1, 1, 1));
    EXPECT_TRUE(b.enhanced);
    EXPECT_GT(b.c_star, 2.0);
    EXPECT_LT(b.c_star, 2.0 * std::sqrt(2.0));
    EXPECT_LE(b.diag.residual, 1e-8);
    EXPECT_GT(b.beta_star, 0.0);
    EXPECT_NE(b.branch, Contact::None);
    EXPECT_THROW(speed_cylinder(cyl(6, 100, 1, 3, 1, 5)), UnsupportedCase);
    auto cert = speed_cylinder(cyl(6, 1, 1, 1, 1, 1));
    EXPECT_DOUBLE_EQ(cert.c_star, 2.0);
    EXPECT_FALSE(cert.enhanced);
}

TEST(SpeedCylinder, PlanarAgreesWithIndependentBruteForce) {
    std::mt19937_64 rng(11);
    int enhanced = 0;
    for (int k = 0; k < 12; ++k) {
        Params p = random_cyl(rng, 2, 0.8, 2.5);
        PlanarCurves pc{p};
        double bb = pc.beta_bar();
        double brute = brute_speed(p, [&](double b) { return pc.delta(b); }, 0.0, bb * (1 - 1e-9));
        auto t = speed_cylinder(p);
        EXPECT_NEAR(t.c_star, brute, 1e-8 * brute) << describe(p);
        enhanced += t.enhanced;
    }
    EXPECT_GT(enhanced, 2);
}

TEST(SpeedCylinder, HigherDimensionsAgreeWithBruteForce) {
    for (int N : {3, 4, 5}) {
        for (double D : {2.0, 6.0}) {
            Params p = cyl(N, D, 1, 1, 1, 1.5);
            DispersionCurves cv(p);
            double brute = brute_speed(p, [&](double b) { return cv.delta(b); }, cv.beta_under(),
                                       cv.beta_bar() * (1 - 1e-9));
            auto t = speed_cylinder(p);
            EXPECT_NEAR(t.c_star, brute, 1e-7 * brute) << "N=" << N << " D=" << D;
            if (t.enhanced) {
                EXPECT_GT(t.beta_star, cv.beta_under());
                EXPECT_LE(t.diag.residual, 1e-8);
            }
        }
    }
}

TEST(SpeedCylinder, OverlapIsMonotoneInC) {
    Params p = cyl(3, 2, 1, 1, 1);
    DispersionCurves cv(p);
    auto overlap = [&](double c) {
        for (int k = 0; k <= 4000; ++k) {
            double b = cv.beta_bar() * k / 4000.0 * (1 - 1e-9);
            auto e = cv.alpha_d(c, b), i = cv.alpha_D(c, b);
            if (e.ok && i.ok && std::max({e.lo, i.lo, 0.0}) <= std::min(e.hi, i.hi)) return true;
        }
        return false;
    };
    bool seen = false;
    for (double c = 2.0; c < 3.0; c += 0.005) {
        bool o = overlap(c);
        if (seen) {
            EXPECT_TRUE(o) << "c=" << c;
        }
        seen = seen || o;
    }
    EXPECT_TRUE(seen);
}

TEST(SpeedCylinder, EnhancedFlagMatchesTheCondition) {
    std::mt19937_64 rng(5);
    int tiny = 0;
    for (int k = 0; k < 40; ++k) {
        Params p = random_cyl(rng, 2 + k % 4, 1.0, 2.0);
        Params lo = p, hi = p;
        lo.D *= 0.999;
        hi.D *= 1.001;
        if (enhancement_test(lo) != enhancement_test(hi)) continue;  // too close to the boundary
        auto t = speed_cylinder(p);
        const double cf = fisher_speeds(p).c_f;
        EXPECT_GE(t.c_star, cf);
        if (t.enhanced) {
            EXPECT_TRUE(enhancement_test(p)) << describe(p);
        }
        if (!enhancement_test(p)) {
            EXPECT_EQ(t.c_star, cf) << describe(p);
        }
        if (enhancement_test(p) && !t.enhanced) {
            // Only N = 3 may fall below the 1e-9 resolution of the flag: there
            // delta(beta) ~ exp(-1/s), and the excess at the first contact is
            // about 2 d^2 delta^2 / c_f with delta taken where the interior
            // interval first reaches the exterior double root c_f/(2d).
            ASSERT_EQ(p.N, 3) << describe(p);
            DispersionCurves cv(p);
            double a = cf / (2 * p.d);
            double b = std::sqrt(std::max(0.0, (p.D * a * a - cf * a + p.gp) / p.D));
            double del = cv.delta(b);
            EXPECT_LT(2 * p.d * p.d * del * del / cf, 1e-8 * cf) << describe(p);
            EXPECT_LT(t.c_star - cf, 1e-9 * cf);
            ++tiny;
        }
    }
    EXPECT_LE(tiny, 3);
}

TEST(SpeedCylinder, NonDecreasingInRadius) {
    Params p = cyl(2, 3, 1, 0.5, 1);
    double prev = 0.0;
    for (int k = 0; k < 25; ++k) {
        p.R = std::exp(std::log(0.05) + (std::log(50.0) - std::log(0.05)) * k / 24.0);
        double c = speed_cylinder(p).c_star;
        EXPECT_GE(c, prev - 1e-9);
        prev = c;
    }
    p.R = 0.5;
    double c1 = speed_cylinder(p).c_star;
    p.R = 5.0;
    EXPECT_GT(speed_cylinder(p).c_star, c1 + 1e-3);
}

TEST(Limits, RadiusLimits) {
    Params p = cyl(2, 3, 1, 0.5, 1);
    EXPECT_DOUBLE_EQ(speed_limit_R(p, LimitMode::ToZero), 2.0);
    EXPECT_NEAR(speed_limit_R(p, LimitMode::ToInfinity), 2.5, 1e-12);
    p.R = 100;
    EXPECT_LT(std::fabs(speed_cylinder(p).c_star - 2.5) / 2.5, 0.01);
    p.R = 1e-3;
    EXPECT_LT(std::fabs(speed_cylinder(p).c_star - 2.0) / 2.0, 0.01);
}

TEST(Limits, DiffusionLimits) {
    EXPECT_NEAR(speed_limit_D(cyl(2, 1, 1, 2, 1), LimitMode::ToZero), 2.0, 1e-12);
    Params p = cyl(2, 1, 1, 3, 1);
    EXPECT_NEAR(speed_limit_D(p, LimitMode::ToZero), 3 / std::sqrt(2.0), 1e-10);
    p.D = 1e-4;
    EXPECT_LT(std::fabs(speed_cylinder(p).c_star - 3 / std::sqrt(2.0)) / (3 / std::sqrt(2.0)), 0.01);
    Params q = cyl(2, 1, 1, 1, 1);
    q.D = 1e3;
    double a = speed_cylinder(q).c_star / std::sqrt(1e3);
    q.D = 1e4;
    double b = speed_cylinder(q).c_star / 100.0;
    EXPECT_LT(std::fabs(a - b) / b, 0.02);
    double lim = speed_limit_D(q, LimitMode::ToInfinity);
    EXPECT_LT(std::fabs(lim - b) / b, 0.02);
}

TEST(RoadField, ExamplesAndMonotonicity) {
    for (double mu : {0.5, 2.0}) EXPECT_DOUBLE_EQ(road_field_speed(cyl(2, 1, 1, 1, 1, 1, mu, 1)).c, 2.0);
    Params p = cyl(2, 4, 1, 1, 1);
    auto rf = road_field_speed(p);
    EXPECT_GT(rf.c, 2.0);
    // Independent minimax over (delta, alpha).
    auto F = [&](double del) {
        return pair_speed(p.D, p.gp - p.mu * p.d * del / (p.nu + p.d * del), p.d, p.fp + p.d * del * del);
    };
    double best = 1e300;
    for (int k = 0; k <= 4000; ++k) best = std::min(best, F(3.0 * k / 4000));
    EXPECT_NEAR(rf.c, best, 1e-5);
    double prev = 0.0;
    for (int k = 0; k < 30; ++k) {
        p.D = 0.2 * std::pow(1.2, k);
        double c = road_field_speed(p).c;
        EXPECT_GE(c, prev - 1e-10);
        EXPECT_EQ(c > 2.0 + 1e-9, p.D / p.d > 2 - p.gp / p.fp) << "D=" << p.D;
        prev = c;
    }
}

TEST(RoadField, RescaledExchangeLimits) {
    Params p = cyl(2, 4, 1, 1, 1);
    double crf = road_field_speed(p).c;
    double lin = rescaled_speed(p, [](double R) { return 1.0 * R; }, 1e-3).c_star;
    EXPECT_LT(std::fabs(lin - crf) / crf, 0.01);
    double cst = rescaled_speed(p, [](double) { return 1.0; }, 1e-3).c_star;
    EXPECT_LT(std::fabs(cst - 2.0) / 2.0, 0.01);
    Params q = cyl(2, 3, 1, 0.5, 1);
    double quad = rescaled_speed(q, [](double R) { return R * R; }, 1e-3).c_star;
    EXPECT_LT(std::fabs(quad - 2.5) / 2.5, 0.01);
    Params bad = p;
    bad.N = 3;
    EXPECT_THROW(rescaled_speed(bad, [](double R) { return R; }, 1e-3), UnsupportedCase);
}

TEST(MaxEffectDimension, ScanProperties) {
    Params p = cyl(4, 2, 1, 1.5, 1, 1.0);
    double prev = 0.0;
    for (int N = 4; N <= 103; ++N) {
        p.N = N;
        double bu = DispersionCurves(p).beta_under();
        EXPECT_GT(bu, prev) << "N=" << N;
        prev = bu;
    }
    int n_close = max_effect_dimension(cyl(4, 2, 1, 1.5, 1, 1.0));
    int n_far = max_effect_dimension(cyl(4, 2, 1, 5.0, 1, 1.0));
    EXPECT_GE(n_close, 4);
    EXPECT_GT(n_far, n_close);
    Params q = cyl(4, 2, 1, 5.0, 1, 1.0);
    for (int N = n_far; N <= 103; N += 7) {
        q.N = N;
        EXPECT_FALSE(enhancement_test(q));
    }
}
