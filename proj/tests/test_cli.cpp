#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "kppspeeds/cli.hpp"

using namespace kppspeeds;
using namespace kppspeeds::cli;

namespace {

const char* minimal =
    "command=speed\nmodel=cylinder\nexterior=kpp\nN=2\nD=2\nd=1\ngp=1\nfp=1\nmu=1\nnu=1\nR=1\n";

const char* halfspace_anomalous =
    "# closed-form anomalous case\n"
    "command = speed\nmodel = halfspace\nexterior = kpp\nD = 3\nd = 1\ngp = 0.5\nfp = 1\n";

const char* small_diagram = "command = diagram\ndiagram.nx = 10\ndiagram.ny = 8\n";

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& csv) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> row;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        if (!line.empty() && line.back() == ',') row.push_back("");
        rows.push_back(row);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return k;
    ADD_FAILURE() << "missing column " << name;
    return 0;
}

/// Parses `text` and returns the ConfigError it raises.
ConfigError config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return ConfigError("", 0, "");
}

/// Runs the command-line binary and returns its exit status.
int invoke(const std::string& args, std::string* out = nullptr) {
    auto tmp = std::filesystem::temp_directory_path() / "kppspeeds_cli_stdout.txt";
    std::string cmd = std::string(KPPSPEEDS_CLI_PATH) + " " + args + " > " + tmp.string() + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    if (out) *out = read_file(tmp);
    std::filesystem::remove(tmp);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

class ThreadEnv {
public:
    explicit ThreadEnv(const char* n) {
        if (const char* v = std::getenv("KPPSPEEDS_THREADS")) old_ = v;
        setenv("KPPSPEEDS_THREADS", n, 1);
    }
    ~ThreadEnv() {
        if (old_.empty()) unsetenv("KPPSPEEDS_THREADS");
        else setenv("KPPSPEEDS_THREADS", old_.c_str(), 1);
    }

private:
    std::string old_;
};

}  // namespace

TEST(Parse, MinimalFile) {
    auto cfg = parse_config(minimal);
    EXPECT_EQ(cfg.command, Command::Speed);
    EXPECT_EQ(cfg.model, Model::Cylinder);
    EXPECT_EQ(cfg.params.exterior, Exterior::Kpp);
    EXPECT_EQ(cfg.params.N, 2);
    EXPECT_EQ(cfg.params.D, 2.0);
    EXPECT_EQ(cfg.params.S, 1.0);
    EXPECT_FALSE(cfg.sweep.has_value());
    EXPECT_FALSE(cfg.sim.has_value());
}

TEST(Parse, ErrorsNameKeyAndLine) {
    auto e = config_error(std::string(minimal) + "gamma=3\n");
    EXPECT_EQ(e.key(), "gamma");
    EXPECT_EQ(e.line(), 12);
    EXPECT_NE(std::string(e.what()).find("line 12"), std::string::npos);

    e = config_error(std::string(minimal) + "D=3\n");
    EXPECT_EQ(e.key(), "D");
    EXPECT_EQ(e.line(), 12);

    std::string neg = minimal;
    neg.replace(neg.find("D=2"), 3, "D=-1");
    e = config_error(neg);
    EXPECT_EQ(e.key(), "D");
    EXPECT_EQ(e.line(), 5);
    EXPECT_NE(std::string(e.what()).find("'D'"), std::string::npos);

    std::string sweep = std::string(minimal);
    sweep.replace(0, 13, "command=sweep");
    e = config_error(sweep + "sweep.var=Q\nsweep.start=1\nsweep.stop=2\nsweep.count=3\n");
    EXPECT_EQ(e.key(), "sweep.var");
    EXPECT_EQ(e.line(), 12);

    e = config_error(sweep + "sweep.var=R\nsweep.start=1\nsweep.stop=2\nsweep.count=1\n");
    EXPECT_EQ(e.key(), "sweep.count");

    std::string missing = minimal;
    missing.erase(missing.find("gp=1\n"), 5);
    EXPECT_EQ(config_error(missing).key(), "gp");

    EXPECT_EQ(config_error(std::string(minimal) + "not a pair\n").line(), 12);
    EXPECT_EQ(config_error("model=cylinder\n").key(), "command");
    EXPECT_EQ(config_error(std::string(minimal) + "sim.exchange_order=3\n").key(), "sim.exchange_order");
    EXPECT_EQ(config_error(std::string(minimal) + "N=1\n").key(), "N");
}

TEST(Parse, CommentsAndWhitespace) {
    auto a = parse_config(minimal);
    std::string noisy = "# header\n\n";
    std::istringstream in(minimal);
    for (std::string line; std::getline(in, line);) noisy += "  " + line + "   # note\n";
    EXPECT_EQ(parse_config(noisy), a);
}

TEST(Parse, RenderRoundTrip) {
    std::mt19937_64 rng(20261016);
    std::uniform_real_distribution<double> U(0.01, 10.0);
    for (int k = 0; k < 300; ++k) {
        RunConfig cfg;
        cfg.command = static_cast<Command>(rng() % 8);
        cfg.model = static_cast<Model>(rng() % 3);
        auto& p = cfg.params;
        p.exterior = rng() % 2 ? Exterior::Kpp : Exterior::Mortality;
        p.N = 2 + int(rng() % 20);
        p.D = U(rng);
        p.d = U(rng);
        p.gp = U(rng);
        p.fp = U(rng);
        p.rho = U(rng);
        p.mu = U(rng);
        p.nu = U(rng);
        p.R = U(rng);
        p.S = U(rng);
        if (cfg.command == Command::Sweep || rng() % 3 == 0)
            cfg.sweep = SweepSpec{"mu", U(rng), U(rng), 2 + int(rng() % 40), rng() % 2 == 0};
        if (cfg.command == Command::Simulate || cfg.command == Command::Xcheck || rng() % 3 == 0) {
            SimSpec s;
            s.geometry = rng() % 2 ? Geometry::Strip : Geometry::Radial;
            s.nx = 10 + int(rng() % 500);
            s.Lx = U(rng);
            s.dt = U(rng) * 1e-3;
            s.T = U(rng);
            s.init = static_cast<InitKind>(rng() % 4);
            s.center = U(rng);
            s.level = U(rng) / 20;
            s.alpha = U(rng);
            s.outer_bc = rng() % 2 ? OuterBC::Neumann : OuterBC::DirichletZero;
            s.exchange_order = 1 + int(rng() % 2);
            s.window_fraction = 0.3 + 0.1 * double(rng() % 5);
            if (rng() % 2) {
                s.snapshot_dir = "snaps";
                s.snapshot_times = {U(rng), U(rng)};
            }
            cfg.sim = s;
        }
        cfg.diagram.nx = 3 + int(rng() % 60);
        cfg.diagram.ymax = 3 + U(rng);
        if (rng() % 2) cfg.out = "result.csv";
        auto text = render_config(cfg);
        EXPECT_EQ(parse_config(text), cfg) << text;
        EXPECT_EQ(render_config(parse_config(text)), text);
    }
}

TEST(Run, ClosedFormSpeedGolden) {
    auto out = run(parse_config(halfspace_anomalous));
    EXPECT_EQ(out.exit_code, Ok);
    auto rows = parse_csv(out.csv);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][column(rows[0], "c_star")], "2.5");
    EXPECT_EQ(rows[1][column(rows[0], "regime")], "ANOMALOUS");
    EXPECT_EQ(out.csv, read_file(std::filesystem::path(KPPSPEEDS_GOLDEN_DIR) / "speed_halfspace.csv"));
}

TEST(Run, DiagramGoldenMatchesAnalyticRegions) {
    auto out = run(parse_config(small_diagram));
    EXPECT_EQ(out.exit_code, Ok);
    auto rows = parse_csv(out.csv);
    ASSERT_EQ(rows.size(), 81u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "y", "regime"}));
    for (std::size_t k = 1; k < rows.size(); ++k) {
        double x = std::stod(rows[k][0]), y = std::stod(rows[k][1]);
        std::string expect = y <= 2 - x ? "FISHER" : (x > 0.5 && y >= x / (2 * x - 1)) ? "INTERIOR" : "ANOMALOUS";
        EXPECT_EQ(rows[k][2], expect) << x << "," << y;
    }
    EXPECT_EQ(out.csv, read_file(std::filesystem::path(KPPSPEEDS_GOLDEN_DIR) / "diagram_10x8.csv"));
}

TEST(Run, DeterministicOutput) {
    std::string sweep = std::string(minimal);
    sweep.replace(0, 13, "command=sweep");
    sweep += "sweep.var=D\nsweep.start=0.5\nsweep.stop=20\nsweep.count=9\nsweep.scale=log\n";
    auto cfg = parse_config(sweep);
    auto a = run(cfg), b = run(cfg);
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_EQ(a.exit_code, Ok);
}

TEST(Run, SweepIsThreadCountInvariant) {
    std::string sweep = std::string(minimal);
    sweep.replace(0, 13, "command=sweep");
    sweep += "sweep.var=R\nsweep.start=0.05\nsweep.stop=50\nsweep.count=16\nsweep.scale=log\n";
    auto cfg = parse_config(sweep);
    std::string one, many;
    {
        ThreadEnv env("1");
        EXPECT_EQ(worker_count(), 1u);
        one = run(cfg).csv;
    }
    {
        ThreadEnv env("4");
        EXPECT_EQ(worker_count(), 4u);
        many = run(cfg).csv;
    }
    EXPECT_EQ(one, many);
    auto rows = parse_csv(one);
    ASSERT_EQ(rows.size(), 17u);
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_EQ(rows[k][0], std::to_string(k - 1));
}

TEST(Run, MortalitySweepCrossesThreshold) {
    const char* text =
        "command=sweep\nmodel=cylinder\nexterior=mortality\nN=2\nD=1\nd=1\ngp=1\nrho=1\nmu=1\nnu=1\nR=1\n"
        "sweep.var=R\nsweep.start=0.2\nsweep.stop=1.2\nsweep.count=21\n";
    auto cfg = parse_config(text);
    auto out = run(cfg);
    EXPECT_EQ(out.exit_code, Ok);
    auto rows = parse_csv(out.csv);
    ASSERT_EQ(rows.size(), 22u);
    auto iR = column(rows[0], "R"), is = column(rows[0], "status"), ic = column(rows[0], "c_star");
    Params p = cfg.params;
    double R0 = survival_threshold_R(p);
    int flips = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        double R = std::stod(rows[k][iR]);
        EXPECT_EQ(rows[k][is], R < R0 ? "extinct" : "ok") << R;
        if (rows[k][is] == "ok") {
            EXPECT_GT(std::stod(rows[k][ic]), 0.0);
        }
        if (k > 1 && rows[k][is] != rows[k - 1][is]) {
            ++flips;
            EXPECT_LT(std::stod(rows[k - 1][iR]), R0);
            EXPECT_GE(R, R0);
            EXPECT_LE(R - std::stod(rows[k - 1][iR]), 0.05 + 1e-12);
        }
    }
    EXPECT_EQ(flips, 1);
}

TEST(Run, OtherCommands) {
    std::string base = "model=cylinder\nexterior=mortality\nN=2\nD=1\nd=1\ngp=1\nrho=1\nmu=1\nnu=1\nR=1\n";
    auto eig = parse_csv(run(parse_config("command=eigen\n" + base)).csv);
    ASSERT_EQ(eig.size(), 2u);
    EXPECT_NEAR(std::stod(eig[1][column(eig[0], "beta0")]), 0.6533, 1e-4);
    EXPECT_EQ(eig[1][column(eig[0], "survives")], "1");

    auto th = parse_csv(run(parse_config("command=threshold\n" + base)).csv);
    ASSERT_EQ(th.size(), 2u);
    EXPECT_EQ(th[1][column(th[0], "all_D")], "1");
    EXPECT_GT(std::stod(th[1][column(th[0], "R0")]), 0.0);

    auto st = run(parse_config("command=steady\n" + base));
    EXPECT_EQ(st.exit_code, Ok);
    auto rows = parse_csv(st.csv);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"side", "x", "value"}));
    EXPECT_GT(rows.size(), 100u);

    auto inf = run(parse_config("command=steady\n" + std::string(base).replace(base.find("gp=1"), 4, "gp=0.3")));
    EXPECT_EQ(inf.exit_code, SolverFailure);
    EXPECT_NE(inf.csv.find("status"), std::string::npos);

    auto hs = run(parse_config(std::string("command=steady\n") +
                               "model=halfspace\nexterior=kpp\nD=3\nd=1\ngp=0.5\nfp=1\nmu=1\nnu=2\nS=0.5\n"));
    EXPECT_EQ(hs.exit_code, Ok);
}

TEST(Run, UnsupportedMapsToSolverFailure) {
    auto out = run(parse_config("command=speed\nmodel=roadfield\nexterior=mortality\nD=1\nd=1\ngp=1\nrho=1\nR=1\n"));
    EXPECT_EQ(out.exit_code, SolverFailure);
    auto rows = parse_csv(out.csv);
    EXPECT_EQ(rows[1][column(rows[0], "status")], "unsupported");
}

TEST(Run, SimulateAndInstability) {
    std::string sim = std::string(minimal);
    sim.replace(0, 13, "command=simulate");
    sim += "sim.nx=80\nsim.Lx=20\nsim.ny_u=4\nsim.ny_v=30\nsim.y_max=6\nsim.T=2\n";
    auto out = run(parse_config(sim));
    EXPECT_EQ(out.exit_code, Ok);
    auto rows = parse_csv(out.csv);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "front", "mass"}));
    EXPECT_EQ(rows.size(), 22u);
    auto bad = run(parse_config(sim + "sim.dt=0.5\n"));
    EXPECT_EQ(bad.exit_code, SimulationFailure);
    EXPECT_NE(bad.csv.find("instability"), std::string::npos);
}

TEST(Run, CrossCheckDefaultCase) {
    std::string x = std::string(minimal);
    x.replace(0, 13, "command=xcheck");
    auto out = run(parse_config(x));
    EXPECT_EQ(out.exit_code, Ok);
    auto rows = parse_csv(out.csv);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"c_star_solver", "speed_sim", "rel_err"}));
    EXPECT_LT(std::stod(rows[1][2]), 0.10);
}

TEST(Binary, ExitCodesAndOutput) {
    auto good = write_temp("kppspeeds_good.cfg", halfspace_anomalous);
    std::string text;
    EXPECT_EQ(invoke("speed --config " + good.string(), &text), 0);
    EXPECT_EQ(text, run(parse_config(halfspace_anomalous)).csv);

    auto dest = std::filesystem::temp_directory_path() / "kppspeeds_out.csv";
    std::filesystem::remove(dest);
    EXPECT_EQ(invoke("speed --config " + good.string() + " --out " + dest.string()), 0);
    EXPECT_EQ(read_file(dest), text);
    std::filesystem::remove(dest);

    EXPECT_EQ(invoke("diagram --config " + good.string()), 2);
    EXPECT_EQ(invoke("launch --config " + good.string()), 2);
    EXPECT_EQ(invoke("speed --config /nonexistent/kppspeeds.cfg"), 2);
    EXPECT_EQ(invoke("speed"), 2);

    auto bad = write_temp("kppspeeds_bad.cfg", std::string(halfspace_anomalous) + "D=-1\n");
    EXPECT_EQ(invoke("speed --config " + bad.string()), 2);

    auto unsup = write_temp("kppspeeds_unsup.cfg",
                            "command=speed\nmodel=roadfield\nexterior=mortality\nD=1\nd=1\ngp=1\nrho=1\nR=1\n");
    EXPECT_EQ(invoke("speed --config " + unsup.string()), 3);

    auto unstable = write_temp("kppspeeds_unstable.cfg",
                               std::string("command=simulate\n") + (minimal + 14) +
                                   "sim.nx=80\nsim.Lx=20\nsim.ny_u=4\nsim.ny_v=30\nsim.y_max=6\nsim.T=2\nsim.dt=0.5\n");
    EXPECT_EQ(invoke("simulate --config " + unstable.string()), 4);

    for (auto& p : {good, bad, unsup, unstable}) std::filesystem::remove(p);
}
