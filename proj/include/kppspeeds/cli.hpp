#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cylinder.hpp"
#include "errors.hpp"
#include "halfspace.hpp"
#include "mortality.hpp"
#include "params.hpp"
#include "simulate.hpp"

namespace kppspeeds::cli {

enum class Command { Speed, Steady, Eigen, Threshold, Diagram, Sweep, Simulate, Xcheck };
enum class Model { Halfspace, Cylinder, Roadfield };

struct SweepSpec {
    std::string var;
    double start = 0.0;
    double stop = 0.0;
    int count = 2;
    bool log_scale = false;
    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct DiagramSpec {
    double xmin = 0.1, xmax = 5.0;
    int nx = 50;
    double ymin = 0.1, ymax = 3.0;
    int ny = 50;
    friend bool operator==(const DiagramSpec&, const DiagramSpec&) = default;
};

struct SimSpec {
    Geometry geometry = Geometry::Strip;
    int nx = 600;
    double Lx = 150.0;
    int ny_u = 5;
    int ny_v = 195;
    double y_max = 39.0;
    double dt = 0.0;
    double T = 40.0;
    InitKind init = InitKind::CompactBump;
    double center = 0.0, radius = 5.0, height = 1.0, level = 0.01, alpha = 1.0;
    OuterBC outer_bc = OuterBC::Neumann;
    int exchange_order = 1;
    double sample_interval = 0.1;
    double level_fraction = 0.5;
    double window_fraction = 0.5;
    std::string snapshot_dir;
    std::vector<double> snapshot_times;
    friend bool operator==(const SimSpec&, const SimSpec&) = default;
};

struct RunConfig {
    Command command = Command::Speed;
    Model model = Model::Cylinder;
    Params params;
    std::optional<SweepSpec> sweep;
    std::optional<SimSpec> sim;
    DiagramSpec diagram;
    std::string out;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline SimConfig to_sim_config(const SimSpec& s, const Params& p) {
    SimConfig c;
    c.geometry = s.geometry;
    c.p = p;
    c.nx = s.nx;
    c.Lx = s.Lx;
    c.ny_u = s.ny_u;
    c.ny_v = s.ny_v;
    c.y_max = s.y_max;
    c.dt = s.dt;
    c.T = s.T;
    c.init = InitialData{s.init, s.center, s.radius, s.height, s.level, s.alpha};
    c.outer_bc = s.outer_bc;
    c.exchange_order = s.exchange_order;
    c.sample_interval = s.sample_interval;
    c.level_fraction = s.level_fraction;
    c.window_fraction = s.window_fraction;
    c.snapshot_dir = s.snapshot_dir;
    c.snapshot_times = s.snapshot_times;
    return c;
}

// ---------------------------------------------------------------------------
// Names

namespace detail {

template <class E>
struct Names {
    std::vector<std::pair<E, const char*>> items;
    const char* name(E e) const {
        for (auto& [k, v] : items)
            if (k == e) return v;
        return "?";
    }
    std::optional<E> find(std::string_view s) const {
        for (auto& [k, v] : items)
            if (s == v) return k;
        return std::nullopt;
    }
};

inline const Names<Command> command_names{{{Command::Speed, "speed"},
                                           {Command::Steady, "steady"},
                                           {Command::Eigen, "eigen"},
                                           {Command::Threshold, "threshold"},
                                           {Command::Diagram, "diagram"},
                                           {Command::Sweep, "sweep"},
                                           {Command::Simulate, "simulate"},
                                           {Command::Xcheck, "xcheck"}}};
inline const Names<Model> model_names{
    {{Model::Halfspace, "halfspace"}, {Model::Cylinder, "cylinder"}, {Model::Roadfield, "roadfield"}}};
inline const Names<Exterior> exterior_names{{{Exterior::Kpp, "kpp"}, {Exterior::Mortality, "mortality"}}};
inline const Names<Geometry> geometry_names{{{Geometry::Strip, "strip"}, {Geometry::Radial, "radial"}}};
inline const Names<InitKind> init_names{{{InitKind::Zero, "zero"},
                                         {InitKind::CompactBump, "bump"},
                                         {InitKind::SmallUniform, "uniform"},
                                         {InitKind::Exponential, "exponential"}}};
inline const Names<OuterBC> bc_names{{{OuterBC::Neumann, "neumann"}, {OuterBC::DirichletZero, "dirichlet"}}};

inline const std::set<std::string> sweep_vars{"D", "d", "R", "mu", "nu", "gp", "fp", "rho", "N"};

}  // namespace detail

inline const char* to_string(Command c) { return detail::command_names.name(c); }
inline std::optional<Command> parse_command(std::string_view s) { return detail::command_names.find(s); }

/// Shortest text that reads back as exactly the same double.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string value;
    int line;
};

inline double to_double(const std::string& key, const Entry& e) {
    double x = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last || !std::isfinite(x))
        throw ConfigError(key, e.line, "'" + e.value + "' is not a finite number");
    return x;
}

inline int to_int(const std::string& key, const Entry& e) {
    int x = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last) throw ConfigError(key, e.line, "'" + e.value + "' is not an integer");
    return x;
}

template <class E>
E to_enum(const Names<E>& names, const std::string& key, const Entry& e) {
    if (auto v = names.find(e.value)) return *v;
    std::string options;
    for (auto& [k, n] : names.items) options += (options.empty() ? "" : "|") + std::string(n);
    throw ConfigError(key, e.line, "'" + e.value + "' is not one of " + options);
}

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "command", "model", "exterior", "N", "D", "d", "gp", "fp", "rho", "mu", "nu", "R", "S",
        "sweep.var", "sweep.start", "sweep.stop", "sweep.count", "sweep.scale",
        "diagram.xmin", "diagram.xmax", "diagram.nx", "diagram.ymin", "diagram.ymax", "diagram.ny",
        "sim.geometry", "sim.nx", "sim.Lx", "sim.ny_u", "sim.ny_v", "sim.y_max", "sim.dt", "sim.T",
        "sim.init", "sim.center", "sim.radius", "sim.height", "sim.level", "sim.alpha", "sim.outer_bc",
        "sim.exchange_order", "sim.sample_interval", "sim.level_fraction", "sim.window_fraction",
        "sim.snapshot_dir", "sim.snapshot_times", "out"};
    return keys;
}

}  // namespace detail

/// Parses the flat key = value format. '#' starts a comment.
inline RunConfig parse_config(std::string_view text) {
    using detail::Entry;
    std::map<std::string, Entry> kv;
    const auto& keys = detail::known_keys();
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("", line_no, "expected key = value");
        std::string key(detail::trim(line.substr(0, eq)));
        std::string value(detail::trim(line.substr(eq + 1)));
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError(key, line_no, "unknown key");
        if (kv.count(key)) throw ConfigError(key, line_no, "duplicate key");
        kv[key] = Entry{value, line_no};
    }

    auto has = [&](const std::string& k) { return kv.count(k) > 0; };
    auto num = [&](const std::string& k) { return detail::to_double(k, kv.at(k)); };
    auto integer = [&](const std::string& k) { return detail::to_int(k, kv.at(k)); };
    auto positive = [&](const std::string& k) {
        double x = num(k);
        if (!(x > 0.0)) throw ConfigError(k, kv.at(k).line, "must be positive");
        return x;
    };
    auto require = [&](const std::string& k) {
        if (!has(k)) throw ConfigError(k, 0, "missing required key");
    };

    RunConfig cfg;
    require("command");
    cfg.command = detail::to_enum(detail::command_names, "command", kv.at("command"));
    const bool needs_model = cfg.command != Command::Diagram;
    if (needs_model) {
        require("model");
        require("exterior");
    }
    if (has("model")) cfg.model = detail::to_enum(detail::model_names, "model", kv.at("model"));
    Params& p = cfg.params;
    if (has("exterior")) p.exterior = detail::to_enum(detail::exterior_names, "exterior", kv.at("exterior"));
    if (has("N")) {
        p.N = integer("N");
        if (p.N < 2 || p.N > Order::max_twice + 3)
            throw ConfigError("N", kv.at("N").line, "must lie in [2, " + std::to_string(Order::max_twice + 3) + "]");
    }
    for (auto [k, dst] : {std::pair{"D", &p.D}, {"d", &p.d}, {"gp", &p.gp}, {"mu", &p.mu}, {"nu", &p.nu},
                          {"R", &p.R}, {"S", &p.S}, {"fp", &p.fp}, {"rho", &p.rho}})
        if (has(k)) *dst = positive(k);
    if (needs_model) {
        for (const char* k : {"D", "d", "gp"}) require(k);
        require(p.exterior == Exterior::Kpp ? "fp" : "rho");
        if (cfg.model == Model::Cylinder) require("R");
    }

    if (has("sweep.var") || has("sweep.start") || has("sweep.stop") || has("sweep.count") || has("sweep.scale") ||
        cfg.command == Command::Sweep) {
        for (const char* k : {"sweep.var", "sweep.start", "sweep.stop", "sweep.count"}) require(k);
        SweepSpec s;
        s.var = kv.at("sweep.var").value;
        if (!detail::sweep_vars.count(s.var))
            throw ConfigError("sweep.var", kv.at("sweep.var").line, "'" + s.var + "' cannot be swept");
        s.start = num("sweep.start");
        s.stop = num("sweep.stop");
        s.count = integer("sweep.count");
        if (s.count < 2) throw ConfigError("sweep.count", kv.at("sweep.count").line, "must be at least 2");
        if (has("sweep.scale")) {
            const auto& e = kv.at("sweep.scale");
            if (e.value != "linear" && e.value != "log")
                throw ConfigError("sweep.scale", e.line, "must be linear or log");
            s.log_scale = e.value == "log";
        }
        if (s.log_scale && !(s.start > 0.0 && s.stop > 0.0))
            throw ConfigError("sweep.start", kv.at("sweep.start").line, "log sweeps need positive bounds");
        cfg.sweep = s;
    }

    auto& dg = cfg.diagram;
    for (auto [k, dst] : {std::pair{"diagram.xmin", &dg.xmin}, {"diagram.xmax", &dg.xmax},
                          {"diagram.ymin", &dg.ymin}, {"diagram.ymax", &dg.ymax}})
        if (has(k)) *dst = positive(k);
    for (auto [k, dst] : {std::pair{"diagram.nx", &dg.nx}, {"diagram.ny", &dg.ny}})
        if (has(k)) {
            *dst = integer(k);
            if (*dst < 1) throw ConfigError(k, kv.at(k).line, "must be at least 1");
        }
    if (!(dg.xmax > dg.xmin)) throw ConfigError("diagram.xmax", has("diagram.xmax") ? kv.at("diagram.xmax").line : 0, "must exceed diagram.xmin");
    if (!(dg.ymax > dg.ymin)) throw ConfigError("diagram.ymax", has("diagram.ymax") ? kv.at("diagram.ymax").line : 0, "must exceed diagram.ymin");

    bool any_sim = cfg.command == Command::Simulate || cfg.command == Command::Xcheck;
    for (auto& [k, e] : kv)
        if (k.rfind("sim.", 0) == 0) any_sim = true;
    if (any_sim) {
        SimSpec s;
        if (has("sim.geometry")) s.geometry = detail::to_enum(detail::geometry_names, "sim.geometry", kv.at("sim.geometry"));
        if (has("sim.init")) s.init = detail::to_enum(detail::init_names, "sim.init", kv.at("sim.init"));
        if (has("sim.outer_bc")) s.outer_bc = detail::to_enum(detail::bc_names, "sim.outer_bc", kv.at("sim.outer_bc"));
        for (auto [k, dst] : {std::pair{"sim.nx", &s.nx}, {"sim.ny_u", &s.ny_u}, {"sim.ny_v", &s.ny_v}})
            if (has(k)) {
                *dst = integer(k);
                if (*dst < 1) throw ConfigError(k, kv.at(k).line, "must be at least 1");
            }
        if (has("sim.exchange_order")) {
            s.exchange_order = integer("sim.exchange_order");
            if (s.exchange_order != 1 && s.exchange_order != 2)
                throw ConfigError("sim.exchange_order", kv.at("sim.exchange_order").line, "must be 1 or 2");
        }
        for (auto [k, dst] : {std::pair{"sim.Lx", &s.Lx}, {"sim.y_max", &s.y_max}, {"sim.T", &s.T},
                              {"sim.radius", &s.radius}, {"sim.sample_interval", &s.sample_interval},
                              {"sim.level_fraction", &s.level_fraction}, {"sim.window_fraction", &s.window_fraction}})
            if (has(k)) *dst = positive(k);
        for (auto [k, dst] : {std::pair{"sim.center", &s.center}, {"sim.height", &s.height},
                              {"sim.level", &s.level}, {"sim.alpha", &s.alpha}})
            if (has(k)) *dst = num(k);
        if (has("sim.dt")) {
            s.dt = num("sim.dt");
            if (s.dt < 0.0) throw ConfigError("sim.dt", kv.at("sim.dt").line, "must be non-negative (0 picks the bound)");
        }
        if (has("sim.snapshot_dir")) s.snapshot_dir = kv.at("sim.snapshot_dir").value;
        if (has("sim.snapshot_times")) {
            const auto& e = kv.at("sim.snapshot_times");
            std::stringstream ss(e.value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                std::string t(detail::trim(item));
                if (t.empty()) continue;
                double x = detail::to_double("sim.snapshot_times", Entry{t, e.line});
                if (x < 0.0) throw ConfigError("sim.snapshot_times", e.line, "times must be non-negative");
                s.snapshot_times.push_back(x);
            }
        }
        cfg.sim = s;
    }
    if (has("out")) cfg.out = kv.at("out").value;
    return cfg;
}

/// Writes a config that parse_config reads back to an equal RunConfig.
inline std::string render_config(const RunConfig& cfg) {
    std::ostringstream o;
    auto put = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
    auto putd = [&](const char* k, double v) { put(k, format_double(v)); };
    const Params& p = cfg.params;
    put("command", to_string(cfg.command));
    put("model", detail::model_names.name(cfg.model));
    put("exterior", detail::exterior_names.name(p.exterior));
    put("N", std::to_string(p.N));
    putd("D", p.D);
    putd("d", p.d);
    putd("gp", p.gp);
    putd("fp", p.fp);
    if (p.rho > 0.0) putd("rho", p.rho);
    putd("mu", p.mu);
    putd("nu", p.nu);
    putd("R", p.R);
    putd("S", p.S);
    if (cfg.sweep) {
        put("sweep.var", cfg.sweep->var);
        putd("sweep.start", cfg.sweep->start);
        putd("sweep.stop", cfg.sweep->stop);
        put("sweep.count", std::to_string(cfg.sweep->count));
        put("sweep.scale", cfg.sweep->log_scale ? "log" : "linear");
    }
    const auto& dg = cfg.diagram;
    putd("diagram.xmin", dg.xmin);
    putd("diagram.xmax", dg.xmax);
    put("diagram.nx", std::to_string(dg.nx));
    putd("diagram.ymin", dg.ymin);
    putd("diagram.ymax", dg.ymax);
    put("diagram.ny", std::to_string(dg.ny));
    if (cfg.sim) {
        const auto& s = *cfg.sim;
        put("sim.geometry", detail::geometry_names.name(s.geometry));
        put("sim.nx", std::to_string(s.nx));
        putd("sim.Lx", s.Lx);
        put("sim.ny_u", std::to_string(s.ny_u));
        put("sim.ny_v", std::to_string(s.ny_v));
        putd("sim.y_max", s.y_max);
        putd("sim.dt", s.dt);
        putd("sim.T", s.T);
        put("sim.init", detail::init_names.name(s.init));
        putd("sim.center", s.center);
        putd("sim.radius", s.radius);
        putd("sim.height", s.height);
        putd("sim.level", s.level);
        putd("sim.alpha", s.alpha);
        put("sim.outer_bc", detail::bc_names.name(s.outer_bc));
        put("sim.exchange_order", std::to_string(s.exchange_order));
        putd("sim.sample_interval", s.sample_interval);
        putd("sim.level_fraction", s.level_fraction);
        putd("sim.window_fraction", s.window_fraction);
        if (!s.snapshot_dir.empty()) put("sim.snapshot_dir", s.snapshot_dir);
        if (!s.snapshot_times.empty()) {
            std::string list;
            for (double t : s.snapshot_times) list += (list.empty() ? "" : ",") + format_double(t);
            put("sim.snapshot_times", list);
        }
    }
    if (!cfg.out.empty()) put("out", cfg.out);
    return o.str();
}

// ---------------------------------------------------------------------------
// Running

enum ExitCode { Ok = 0, ConfigFailure = 2, SolverFailure = 3, SimulationFailure = 4 };

struct Output {
    int exit_code = Ok;
    std::string csv;
};

namespace detail {

inline std::string csv_row(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) s += ',';
        s += cells[k];
    }
    return s + '\n';
}

inline std::vector<std::string> param_header() {
    return {"N", "D", "d", "gp", "fp", "rho", "mu", "nu", "R", "S"};
}

inline std::vector<std::string> param_cells(const Params& p) {
    return {std::to_string(p.N), format_double(p.D), format_double(p.d), format_double(p.gp),
            format_double(p.fp), format_double(p.rho), format_double(p.mu), format_double(p.nu),
            format_double(p.R), format_double(p.S)};
}

struct SpeedRow {
    std::string regime = "";
    double c = NAN, beta = NAN, alpha = NAN;
    bool enhanced = false;
    std::string status = "ok";
};

inline std::string cell(double x) { return std::isnan(x) ? "" : format_double(x); }

inline SpeedRow speed_row(Model model, const Params& p) {
    SpeedRow r;
    try {
        if (model == Model::Halfspace) {
            auto s = p.exterior == Exterior::Kpp ? speed_halfspace(p) : speed_halfspace_mortality(p);
            r.regime = kppspeeds::to_string(s.regime);
            r.c = s.c;
            if (s.witness) {
                r.beta = s.witness->beta;
                r.alpha = s.witness->alpha;
            }
            r.enhanced = s.regime == Regime::Anomalous;
        } else if (model == Model::Roadfield) {
            if (p.exterior != Exterior::Kpp) throw UnsupportedCase("the road-field model needs a KPP exterior");
            auto s = road_field_speed(p);
            r.regime = kppspeeds::to_string(s.regime);
            r.c = s.c;
            r.beta = s.witness->beta;
            r.alpha = s.witness->alpha;
            r.enhanced = s.regime != Regime::Fisher;
        } else if (p.exterior == Exterior::Kpp) {
            auto t = speed_cylinder(p);
            r.regime = t.enhanced ? "ANOMALOUS" : "FISHER";
            r.c = t.c_star;
            r.beta = t.beta_star;
            r.alpha = t.alpha_star;
            r.enhanced = t.enhanced;
        } else {
            if (!robin_eigenvalue(p).survives) {
                r.status = "extinct";
                return r;
            }
            auto t = speed_cylinder_mortality(p);
            r.regime = t.enhanced ? "ANOMALOUS" : "INTERIOR";
            r.c = t.c_star;
            r.beta = t.beta_star;
            r.alpha = t.alpha_star;
            r.enhanced = t.enhanced;
        }
    } catch (const UnsupportedCase&) {
        r.status = "unsupported";
    } catch (const InfeasibleError&) {
        r.status = "infeasible";
    } catch (const DomainError&) {
        r.status = "domain_error";
    }
    return r;
}

inline std::vector<std::string> speed_cells(const SpeedRow& r) {
    return {r.regime, cell(r.c), cell(r.beta), cell(r.alpha), r.status == "ok" ? (r.enhanced ? "1" : "0") : "",
            r.status};
}

inline bool failed(const SpeedRow& r) { return r.status != "ok" && r.status != "extinct"; }

inline void set_param(Params& p, const std::string& var, double x) {
    if (var == "N") p.N = static_cast<int>(std::lround(x));
    else if (var == "D") p.D = x;
    else if (var == "d") p.d = x;
    else if (var == "R") p.R = x;
    else if (var == "mu") p.mu = x;
    else if (var == "nu") p.nu = x;
    else if (var == "gp") p.gp = x;
    else if (var == "fp") p.fp = x;
    else if (var == "rho") p.rho = x;
    else throw DomainError("cannot sweep " + var);
}

inline std::vector<double> sweep_points(const SweepSpec& s) {
    std::vector<double> x(s.count);
    for (int k = 0; k < s.count; ++k) {
        double t = double(k) / double(s.count - 1);
        x[k] = s.log_scale ? std::exp(std::log(s.start) + t * (std::log(s.stop) - std::log(s.start)))
                           : s.start + t * (s.stop - s.start);
    }
    x.back() = s.stop;
    return x;
}

}  // namespace detail

/// Worker count from KPPSPEEDS_THREADS, else the hardware concurrency.
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KPPSPEEDS_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    return hw;
}

/// Runs job(k) for k in [0, n) on up to `workers` threads.
template <class Job>
void parallel_for(std::size_t n, unsigned workers, Job&& job) {
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) job(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t k; (k = next.fetch_add(1)) < n;) job(k);
        });
    for (auto& t : pool) t.join();
}

inline Output run(const RunConfig& cfg) {
    using namespace detail;
    Output out;
    const Params& p = cfg.params;
    auto header = [&](std::vector<std::string> cols) { out.csv += csv_row(cols); };
    auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    try {
        switch (cfg.command) {
            case Command::Speed: {
                p.validate();
                header(with(param_header(), {"regime", "c_star", "beta_star", "alpha_star", "enhanced", "status"}));
                auto r = speed_row(cfg.model, p);
                out.csv += csv_row(with(param_cells(p), speed_cells(r)));
                if (failed(r)) out.exit_code = SolverFailure;
                break;
            }
            case Command::Sweep: {
                const auto& s = *cfg.sweep;
                auto xs = sweep_points(s);
                std::vector<SpeedRow> rows(xs.size());
                std::vector<Params> ps(xs.size(), p);
                for (std::size_t k = 0; k < xs.size(); ++k) set_param(ps[k], s.var, xs[k]);
                for (auto& q : ps) q.validate();
                parallel_for(xs.size(), worker_count(), [&](std::size_t k) { rows[k] = speed_row(cfg.model, ps[k]); });
                header(with(with({"point"}, param_header()),
                            {"regime", "c_star", "beta_star", "alpha_star", "enhanced", "status"}));
                for (std::size_t k = 0; k < xs.size(); ++k) {
                    out.csv += csv_row(with(with({std::to_string(k)}, param_cells(ps[k])), speed_cells(rows[k])));
                    if (failed(rows[k])) out.exit_code = SolverFailure;
                }
                break;
            }
            case Command::Diagram: {
                const auto& g = cfg.diagram;
                auto dia = regime_diagram(g.xmin, g.xmax, g.nx, g.ymin, g.ymax, g.ny);
                header({"x", "y", "regime"});
                for (auto& c : dia.cells)
                    out.csv += csv_row({format_double(c.x), format_double(c.y), kppspeeds::to_string(c.regime)});
                break;
            }
            case Command::Steady: {
                header({"side", "x", "value"});
                if (cfg.model == Model::Cylinder) {
                    if (p.exterior != Exterior::Mortality)
                        throw UnsupportedCase("steady: the cylinder solver needs a mortality exterior");
                    auto s = radial_steady_mortality(p);
                    for (auto& a : s.interior) out.csv += csv_row({"u", format_double(a.x), format_double(a.value)});
                    for (auto& a : s.exterior) out.csv += csv_row({"v", format_double(a.x), format_double(a.value)});
                } else {
                    auto s = steady_state_halfspace(p);
                    for (auto& a : s.u) out.csv += csv_row({"u", format_double(a.x), format_double(a.value)});
                    for (auto& a : s.v) out.csv += csv_row({"v", format_double(a.x), format_double(a.value)});
                }
                break;
            }
            case Command::Eigen: {
                header(with(param_header(), {"kappa", "beta0", "survives", "residual"}));
                auto e = robin_eigenvalue(p);
                out.csv += csv_row(with(param_cells(p), {format_double(e.kappa), format_double(e.beta0),
                                                         e.survives ? "1" : "0", format_double(e.residual)}));
                break;
            }
            case Command::Threshold: {
                header(with(param_header(), {"R0", "all_D", "D0"}));
                double R0 = survival_threshold_R(p);
                auto dt = survival_threshold_D(p);
                out.csv += csv_row(with(param_cells(p), {format_double(R0), dt.all_D ? "1" : "0",
                                                         dt.all_D ? "" : format_double(dt.D0)}));
                break;
            }
            case Command::Simulate: {
                auto res = simulate(to_sim_config(*cfg.sim, p));
                header({"t", "front", "mass"});
                for (std::size_t k = 0; k < res.mass_history.size(); ++k) {
                    double xf = k < res.front_positions.size() ? res.front_positions[k].value : 0.0;
                    out.csv += csv_row({format_double(res.mass_history[k].t), format_double(xf),
                                        format_double(res.mass_history[k].value)});
                }
                break;
            }
            case Command::Xcheck: {
                if (cfg.model != Model::Cylinder || p.exterior != Exterior::Kpp || p.N != 2)
                    throw UnsupportedCase("xcheck compares the N = 2 cylinder speed with the strip simulation");
                SimConfig sc = to_sim_config(*cfg.sim, p);
                sc.geometry = Geometry::Strip;
                double c = speed_cylinder(p).c_star;
                auto res = run_strip(sc);
                header({"c_star_solver", "speed_sim", "rel_err"});
                out.csv += csv_row({format_double(c), format_double(res.fitted_speed),
                                    format_double(std::fabs(res.fitted_speed - c) / c)});
                break;
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const InstabilityError& e) {
        out.exit_code = SimulationFailure;
        out.csv += csv_row({"status", "instability", e.what()});
    } catch (const Error& e) {
        out.exit_code = SolverFailure;
        out.csv += csv_row({"status", "error", e.what()});
    }
    return out;
}

}  // namespace kppspeeds::cli
