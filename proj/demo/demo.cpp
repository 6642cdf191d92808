#include <cmath>
#include <cstdio>

#include "kppspeeds/kppspeeds.hpp"

using namespace kppspeeds;

int main() {
    Params p;
    p.D = 3;
    p.d = 1;
    p.gp = 0.5;
    p.fp = 1;

    auto hs = speed_halfspace(p);
    std::printf("half-space: regime %s, c* = %.10f\n", to_string(hs.regime), hs.c);

    std::printf("\ncylinder, N = 2, speed against the radius\n%10s %14s %10s\n", "R", "c*", "enhanced");
    for (double R : {1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
        p.R = R;
        auto t = speed_cylinder(p);
        std::printf("%10g %14.10f %10s\n", R, t.c_star, t.enhanced ? "yes" : "no");
    }

    Params m;
    m.exterior = Exterior::Mortality;
    m.D = 1;
    m.d = 4;
    m.gp = 1;
    m.rho = 1;
    double R0 = survival_threshold_R(m);
    std::printf("\nmortality outside the cylinder: survival needs R > %.10f\n", R0);
    std::printf("%10s %14s\n", "R", "c*");
    for (double f : {1.01, 1.5, 3.0, 10.0, 100.0}) {
        m.R = f * R0;
        std::printf("%10.4f %14.10f\n", m.R, speed_cylinder_mortality(m).c_star);
    }
    std::printf("large-radius limit %.10f\n", speed_halfspace_mortality(m).c);

    SimConfig s;
    s.p.D = 2;
    s.T = 20;
    auto r = run_strip(s);
    std::printf("\nstrip simulation (T = 20): front speed %.4f, solver c* %.4f\n", r.fitted_speed,
                speed_cylinder(s.p).c_star);
    return 0;
}
