#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kppspeeds/cli.hpp"

namespace cli = kppspeeds::cli;

int main(int argc, char** argv) {
    CLI::App app{"Spreading speeds of reaction-diffusion systems with a line or cylinder of fast diffusion"};
    std::string command, config_path, out_path;
    app.add_option("command", command, "speed|steady|eigen|threshold|diagram|sweep|simulate|xcheck")->required();
    app.add_option("--config", config_path, "key = value configuration file")->required();
    app.add_option("--out", out_path, "CSV destination (defaults to the config's out key, then stdout)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : cli::ConfigFailure;
    }

    auto requested = cli::parse_command(command);
    if (!requested) {
        std::cerr << "unknown command '" << command << "'\n";
        return cli::ConfigFailure;
    }
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot read " << config_path << '\n';
        return cli::ConfigFailure;
    }
    std::stringstream text;
    text << in.rdbuf();

    cli::RunConfig cfg;
    try {
        cfg = cli::parse_config(text.str());
    } catch (const kppspeeds::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return cli::ConfigFailure;
    }
    if (cfg.command != *requested) {
        std::cerr << "command '" << command << "' does not match the config's command '" << cli::to_string(cfg.command)
                  << "'\n";
        return cli::ConfigFailure;
    }
    if (out_path.empty()) out_path = cfg.out;

    auto result = cli::run(cfg);
    if (out_path.empty()) {
        std::cout << result.csv;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write " << out_path << '\n';
            return cli::ConfigFailure;
        }
        out << result.csv;
    }
    if (result.exit_code != cli::Ok) std::cerr << "finished with exit code " << result.exit_code << '\n';
    return result.exit_code;
}
