#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "params.hpp"

namespace kppspeeds {

enum class Geometry { Strip, Radial };
enum class InitKind { Zero, CompactBump, SmallUniform, Exponential };
enum class OuterBC { Neumann, DirichletZero };

/// Initial data. CompactBump sets u = height (and v = height*S) where the
/// distance to `center` is at most `radius`; Exponential seeds
/// u = height*exp(-alpha x), v = (mu/nu) u.
struct InitialData {
    InitKind kind = InitKind::CompactBump;
    double center = 0.0;
    double radius = 5.0;
    double height = 1.0;
    double level = 0.01;
    double alpha = 1.0;
};

/// Strip: u on (-R, 0) x (0, Lx), v on (0, y_max) x (0, Lx), with ny_u and
/// ny_v cells across. Radial: u on r < R, v on R < r < R + y_max; nx and Lx
/// are ignored.
struct SimConfig {
    Geometry geometry = Geometry::Strip;
    Params p;
    int nx = 600;
    double Lx = 150.0;
    int ny_u = 5;
    int ny_v = 195;
    double y_max = 39.0;
    double dt = 0.0;  // 0 picks the stability bound
    double T = 40.0;
    InitialData init;
    OuterBC outer_bc = OuterBC::Neumann;
    int exchange_order = 1;
    double sample_interval = 0.1;
    double level_fraction = 0.5;
    double window_fraction = 0.5;
    std::string snapshot_dir;
    std::vector<double> snapshot_times;
};

struct TimePoint {
    double t;
    double value;
};

struct SimResult {
    std::vector<TimePoint> front_positions;
    double fitted_speed = 0.0;
    double speed_stderr = 0.0;
    std::vector<TimePoint> mass_history;
    double steady_residual = 0.0;
    bool extinct = false;
    double u_ref = 0.0;
    double dt = 0.0;
    int steps = 0;
    /// Final fields, row-major with nx columns; rows run from the inner
    /// boundary (u) or the interface (v) outward.
    int nx = 0;
    std::vector<double> y_u, y_v;
    std::vector<double> u, v;
    /// Largest per-step mismatch between the mass leaving u and entering v
    /// through the interface.
    double flux_imbalance = 0.0;
};

struct SpeedFit {
    double speed;
    double stderr_;
};

/// Least-squares slope of the trailing `window_fraction` of the samples.
inline SpeedFit measure_speed(const std::vector<TimePoint>& x, double window_fraction = 0.5) {
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw DomainError("measure_speed: window fraction must lie in (0, 1]");
    std::size_t n = static_cast<std::size_t>(std::floor(window_fraction * double(x.size())));
    if (n < 20) throw DomainError("measure_speed: fewer than 20 samples in the window");
    std::size_t first = x.size() - n;
    double mt = 0, mx = 0;
    for (std::size_t k = first; k < x.size(); ++k) {
        mt += x[k].t;
        mx += x[k].value;
    }
    mt /= double(n);
    mx /= double(n);
    double stt = 0, stx = 0;
    for (std::size_t k = first; k < x.size(); ++k) {
        stt += (x[k].t - mt) * (x[k].t - mt);
        stx += (x[k].t - mt) * (x[k].value - mx);
    }
    if (stt == 0.0) throw DomainError("measure_speed: all samples at one time");
    double slope = stx / stt, ssr = 0;
    for (std::size_t k = first; k < x.size(); ++k) {
        double r = x[k].value - mx - slope * (x[k].t - mt);
        ssr += r * r;
    }
    double se = n > 2 ? std::sqrt(ssr / double(n - 2) / stt) : 0.0;
    return {slope, se};
}

namespace detail {

struct Reaction {
    bool logistic;
    double slope;
    double capacity;
    double operator()(double s) const { return logistic ? slope * s * (1.0 - s / capacity) : slope * s; }
};

// One transverse side of the domain: cell volumes and the coefficients
// coupling each cell to its neighbours, in the transverse geometry.
struct Side {
    int n = 0;
    double h = 0.0;
    std::vector<double> center;
    std::vector<double> down;  // coefficient toward cell j-1
    std::vector<double> up;    // coefficient toward cell j+1
    std::vector<double> volume;
    double exchange = 0.0;  // interface weight / volume of the interface cell
    double outer = 0.0;     // Dirichlet coefficient on the outermost cell
};

class Engine {
public:
    Engine(const SimConfig& cfg, int nx) : cfg_(cfg), p_(cfg.p), nx_(nx) {
        const Params& p = p_;
        const bool radial = cfg.geometry == Geometry::Radial;
        if (cfg.ny_u < 1 || cfg.ny_v < 1 || nx < 1) throw DomainError("simulation: grid sizes must be positive");
        if (!(cfg.y_max > 0.0) || (!radial && !(cfg.Lx > 0.0)))
            throw DomainError("simulation: domain extents must be positive");
        const int wexp = radial ? p.N - 2 : 0;
        auto weight = [&](double r) { return wexp == 0 ? 1.0 : std::pow(r, wexp); };
        auto vol = [&](double a, double b) {
            return wexp == 0 ? b - a : (std::pow(b, wexp + 1) - std::pow(a, wexp + 1)) / (wexp + 1);
        };
        // Transverse coordinate: radial r, or y + R for the strip so both
        // geometries run from 0 at the inner boundary.
        const double R = p.R;
        build(u_, cfg.ny_u, 0.0, R, p.D, weight, vol);
        build(v_, cfg.ny_v, R, R + cfg.y_max, p.d, weight, vol);
        double wI = weight(R);
        u_.exchange = wI / u_.volume.back();
        v_.exchange = wI / v_.volume.front();
        if (cfg.outer_bc == OuterBC::DirichletZero)
            v_.outer = p.d * weight(R + cfg.y_max) / (0.5 * v_.h) / v_.volume.back();
        if (!radial)
            for (auto& y : u_.center) y -= R;
        if (!radial)
            for (auto& y : v_.center) y -= R;
        dx_ = nx > 1 ? cfg.Lx / nx : 1.0;
        g_ = {true, p.gp, 1.0};
        f_ = p.exterior == Exterior::Kpp ? Reaction{true, p.fp, p.S} : Reaction{false, -p.rho, 1.0};
        ex_u_ = p.D * 2.0 / u_.h;
        ex_v_ = p.d * 2.0 / v_.h;
        u.assign(std::size_t(u_.n) * nx_, 0.0);
        v.assign(std::size_t(v_.n) * nx_, 0.0);
    }

    // Largest step keeping every update a convex combination.
    double stable_dt() const {
        double cx_u = nx_ > 1 ? 2.0 * p_.D / (dx_ * dx_) : 0.0;
        double cx_v = nx_ > 1 ? 2.0 * p_.d / (dx_ * dx_) : 0.0;
        double worst = 0.0;
        for (int j = 0; j < u_.n; ++j) {
            double s = cx_u + u_.down[j] + u_.up[j] + (j == u_.n - 1 ? p_.mu * u_.exchange : 0.0);
            worst = std::max(worst, s);
        }
        for (int k = 0; k < v_.n; ++k) {
            double s = cx_v + v_.down[k] + v_.up[k] + (k == 0 ? p_.nu * v_.exchange : 0.0) +
                       (k == v_.n - 1 ? v_.outer : 0.0) + (f_.logistic ? 0.0 : -f_.slope);
            worst = std::max(worst, s);
        }
        return 1.0 / worst;
    }

    // Exchange flux nu v - mu u across the interface for column i.
    double exchange_flux(int i) const {
        double uu = u[std::size_t(u_.n - 1) * nx_ + i], vv = v[i];
        if (cfg_.exchange_order == 2) {
            // Face values eliminated from flux continuity on both half cells.
            double a = ex_u_, b = ex_v_;
            return a * b * (p_.nu * vv - p_.mu * uu) / (a * b + p_.mu * b + p_.nu * a);
        }
        return p_.nu * vv - p_.mu * uu;
    }

    // One explicit Euler step; returns the largest |change|/dt.
    double step(double dt) {
        un_.resize(u.size());
        vn_.resize(v.size());
        const double ax_u = nx_ > 1 ? p_.D / (dx_ * dx_) : 0.0;
        const double ax_v = nx_ > 1 ? p_.d / (dx_ * dx_) : 0.0;
        const bool dir_x = cfg_.outer_bc == OuterBC::DirichletZero;
        flux_.resize(nx_);
        for (int i = 0; i < nx_; ++i) flux_[i] = exchange_flux(i);
        double change = 0.0;
        auto sweep = [&](const Side& s, const std::vector<double>& a, std::vector<double>& out, double ax,
                         const Reaction& r, bool is_u) {
            for (int j = 0; j < s.n; ++j) {
                const double* row = &a[std::size_t(j) * nx_];
                const double* below = j > 0 ? &a[std::size_t(j - 1) * nx_] : row;
                const double* above = j + 1 < s.n ? &a[std::size_t(j + 1) * nx_] : row;
                double* dst = &out[std::size_t(j) * nx_];
                const double cd = s.down[j], cu = s.up[j];
                const double ex = is_u ? (j == s.n - 1 ? s.exchange : 0.0) : (j == 0 ? -s.exchange : 0.0);
                const double co = !is_u && j == s.n - 1 ? s.outer : 0.0;
                for (int i = 0; i < nx_; ++i) {
                    double c = row[i];
                    double left = i > 0 ? row[i - 1] : (dir_x ? -c : c);
                    double right = i + 1 < nx_ ? row[i + 1] : (dir_x ? -c : c);
                    double rate = ax * (left - 2.0 * c + right) + cd * (below[i] - c) + cu * (above[i] - c) +
                                  ex * flux_[i] - co * c + r(c);
                    dst[i] = c + dt * rate;
                    change = std::max(change, std::fabs(rate));
                }
            }
        };
        sweep(u_, u, un_, ax_u, g_, true);
        sweep(v_, v, vn_, ax_v, f_, false);
        u.swap(un_);
        v.swap(vn_);
        return change;
    }

    double mass() const {
        double m = 0.0;
        for (int j = 0; j < u_.n; ++j)
            for (int i = 0; i < nx_; ++i) m += u[std::size_t(j) * nx_ + i] * u_.volume[j] * dx_;
        for (int k = 0; k < v_.n; ++k)
            for (int i = 0; i < nx_; ++i) m += v[std::size_t(k) * nx_ + i] * v_.volume[k] * dx_;
        return m;
    }

    // Mass u gains minus mass v loses through the interface in one step.
    double flux_imbalance(double dt) const {
        double worst = 0.0;
        for (int i = 0; i < nx_; ++i) {
            double gain_u = dt * u_.exchange * flux_[i] * u_.volume.back();
            double loss_v = dt * v_.exchange * flux_[i] * v_.volume.front();
            worst = std::max(worst, std::fabs(gain_u - loss_v));
        }
        return worst;
    }

    double sup() const {
        double su = 0.0, sv = 0.0;
        for (double x : u) su = std::max(su, std::fabs(x));
        for (double x : v) sv = std::max(sv, std::fabs(x));
        return su + sv;
    }

    bool finite_and_bounded(double bound) const {
        for (double x : u)
            if (!(std::fabs(x) <= bound)) return false;
        for (double x : v)
            if (!(std::fabs(x) <= bound)) return false;
        return true;
    }

    double x_center(int i) const { return (i + 0.5) * dx_; }
    double dx() const { return dx_; }
    int nx() const { return nx_; }
    const Side& u_side() const { return u_; }
    const Side& v_side() const { return v_; }

    std::vector<double> u, v;

private:
    template <class W, class V>
    static void build(Side& s, int n, double a, double b, double diff, W& weight, V& vol) {
        s.n = n;
        s.h = (b - a) / n;
        s.center.resize(n);
        s.down.assign(n, 0.0);
        s.up.assign(n, 0.0);
        s.volume.resize(n);
        for (int j = 0; j < n; ++j) {
            double lo = a + j * s.h, hi = lo + s.h;
            s.center[j] = 0.5 * (lo + hi);
            s.volume[j] = vol(lo, hi);
        }
        for (int j = 0; j < n; ++j) {
            double lo = a + j * s.h, hi = lo + s.h;
            if (j > 0) s.down[j] = diff * weight(lo) / s.h / s.volume[j];
            if (j + 1 < n) s.up[j] = diff * weight(hi) / s.h / s.volume[j];
        }
    }

    const SimConfig& cfg_;
    Params p_;
    int nx_;
    double dx_ = 1.0;
    Side u_, v_;
    Reaction g_{}, f_{};
    double ex_u_ = 0.0, ex_v_ = 0.0;
    std::vector<double> un_, vn_, flux_;
};

inline void write_field(const std::string& path, double t, int nx, int ny, const std::vector<double>& a) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write snapshot " + path);
    char buf[32];
    out << "t=" << (std::snprintf(buf, sizeof buf, "%.17g", t), buf) << " nx=" << nx << " ny=" << ny << '\n';
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", a[std::size_t(j) * nx + i]);
            if (i) out << ' ';
            out << buf;
        }
        out << '\n';
    }
}

inline void initialize(Engine& e, const SimConfig& cfg) {
    const auto& in = cfg.init;
    const Params& p = cfg.p;
    const bool radial = cfg.geometry == Geometry::Radial;
    const double vs = p.exterior == Exterior::Kpp ? p.S : 1.0;
    const int nx = e.nx();
    auto fill = [&](std::vector<double>& a, const Side& s, bool is_u) {
        for (int j = 0; j < s.n; ++j)
            for (int i = 0; i < nx; ++i) {
                double val = 0.0;
                double x = radial ? s.center[j] : e.x_center(i);
                switch (in.kind) {
                    case InitKind::Zero: break;
                    case InitKind::SmallUniform: val = in.level; break;
                    case InitKind::CompactBump: {
                        bool inside = std::fabs(x - in.center) <= in.radius;
                        if (!radial && !is_u) inside = inside && s.center[j] <= in.radius;
                        val = inside ? in.height * (is_u ? 1.0 : vs) : 0.0;
                        break;
                    }
                    case InitKind::Exponential:
                        val = in.height * std::exp(-in.alpha * (radial ? 0.0 : x)) * (is_u ? 1.0 : p.mu / p.nu);
                        break;
                }
                a[std::size_t(j) * nx + i] = val;
            }
    };
    fill(e.u, e.u_side(), true);
    fill(e.v, e.v_side(), false);
}

// Marches to time T, calling `sample(t)` every sample interval.
template <class Sample>
void march(Engine& e, const SimConfig& cfg, double dt, SimResult& res, Sample&& sample) {
    if (!(cfg.T >= 0.0)) throw DomainError("simulation: T must be non-negative");
    const int steps = static_cast<int>(std::ceil(cfg.T / dt - 1e-9));
    const double h = steps > 0 ? cfg.T / steps : dt;
    const double bound = 1e6;
    double next_sample = 0.0;
    std::size_t next_snap = 0;
    std::vector<double> snaps = cfg.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    auto snapshot = [&](double t) {
        while (next_snap < snaps.size() && snaps[next_snap] <= t + 0.5 * h) {
            std::filesystem::create_directories(cfg.snapshot_dir);
            std::string stem = cfg.snapshot_dir + "/" + std::to_string(next_snap);
            write_field(stem + "_u.txt", t, e.nx(), e.u_side().n, e.u);
            write_field(stem + "_v.txt", t, e.nx(), e.v_side().n, e.v);
            ++next_snap;
        }
    };
    for (int k = 0; k <= steps; ++k) {
        double t = k * h;
        if (t >= next_sample - 0.5 * h) {
            sample(t);
            next_sample += cfg.sample_interval;
        }
        if (!cfg.snapshot_dir.empty()) snapshot(t);
        if (k == steps) break;
        res.steady_residual = e.step(h);
        res.flux_imbalance = std::max(res.flux_imbalance, e.flux_imbalance(h));
        if ((k & 63) == 0 || k + 1 == steps) {
            if (!e.finite_and_bounded(bound)) {
                char msg[200];
                std::snprintf(msg, sizeof msg,
                              "simulation blew up at t=%.6g: dt=%.6g exceeds the stability bound %.6g",
                              t, h, e.stable_dt());
                throw InstabilityError(msg);
            }
        }
    }
    res.steps = steps;
    res.dt = h;
}

inline double choose_dt(const Engine& e, const SimConfig& cfg) {
    if (cfg.dt < 0.0) throw DomainError("simulation: dt must be positive");
    if (cfg.dt > 0.0) return cfg.dt;
    return 0.9 * e.stable_dt();
}

inline void finish(Engine& e, SimResult& res) {
    res.extinct = e.sup() < 1e-6;
    res.nx = e.nx();
    res.y_u = e.u_side().center;
    res.y_v = e.v_side().center;
    res.u = e.u;
    res.v = e.v;
}

}  // namespace detail

/// Interface value U(0) of the x-independent steady state of the strip,
/// from a long transverse run.
inline double transverse_reference(const SimConfig& cfg, double t_max = 2000.0) {
    SimConfig c = cfg;
    c.init = InitialData{InitKind::SmallUniform, 0.0, 0.0, 1.0, 1.0, 1.0};
    c.snapshot_dir.clear();
    detail::Engine e(c, 1);
    detail::initialize(e, c);
    if (c.p.exterior == Exterior::Kpp)
        std::fill(e.v.begin(), e.v.end(), c.p.S);
    double dt = 0.9 * e.stable_dt();
    for (double t = 0.0; t < t_max; t += dt) {
        double change = e.step(dt);
        if (change < 1e-12) break;
    }
    return e.u.back();
}

/// Front propagation in the N = 2 strip.
inline SimResult run_strip(const SimConfig& cfg) {
    if (cfg.geometry != Geometry::Strip) throw DomainError("run_strip requires the strip geometry");
    cfg.p.validate();
    SimResult res;
    res.u_ref = transverse_reference(cfg);
    detail::Engine e(cfg, cfg.nx);
    detail::initialize(e, cfg);
    const double dt = detail::choose_dt(e, cfg);
    const double level = cfg.level_fraction * res.u_ref;
    const int nx = e.nx();
    const std::size_t top = std::size_t(e.u_side().n - 1) * nx;
    auto sample = [&](double t) {
        double xf = 0.0;
        if (level > 0.0) {
            for (int i = nx - 1; i >= 0; --i) {
                double a = e.u[top + i];
                if (a >= level) {
                    xf = e.x_center(i);
                    if (i + 1 < nx) xf += (a - level) / (a - e.u[top + i + 1]) * e.dx();
                    break;
                }
            }
        }
        res.front_positions.push_back({t, xf});
        res.mass_history.push_back({t, e.mass()});
    };
    detail::march(e, cfg, dt, res, sample);
    detail::finish(e, res);
    if (res.front_positions.size() >= 40) {
        auto fit = measure_speed(res.front_positions, cfg.window_fraction);
        res.fitted_speed = std::max(0.0, fit.speed);
        res.speed_stderr = fit.stderr_;
    }
    return res;
}

/// x-independent radial dynamics: u in the ball of radius R, v outside.
inline SimResult run_radial(const SimConfig& cfg) {
    if (cfg.geometry != Geometry::Radial) throw DomainError("run_radial requires the radial geometry");
    cfg.p.validate();
    SimResult res;
    detail::Engine e(cfg, 1);
    detail::initialize(e, cfg);
    const double dt = detail::choose_dt(e, cfg);
    detail::march(e, cfg, dt, res, [&](double t) { res.mass_history.push_back({t, e.mass()}); });
    detail::finish(e, res);
    return res;
}

inline SimResult simulate(const SimConfig& cfg) {
    return cfg.geometry == Geometry::Strip ? run_strip(cfg) : run_radial(cfg);
}

}  // namespace kppspeeds
