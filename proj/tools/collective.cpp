#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <collective/cli.hpp>

namespace cli = collective::cli;

int main(int argc, char** argv) {
    CLI::App app{"Resonance poles, lattice dynamics and separation sweeps for two emitters on a 1D field"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir = ".";
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--override", overrides, "dot-path assignment key=value (repeatable)")->allow_extra_args(false);
    app.fallthrough();  // options may follow the subcommand
    for (const char* name : {"poles", "contour", "evolve", "sweep", "bounces", "waveguide"}) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::config_error;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        nlohmann::json user;
        if (!config_path.empty()) user = collective::io::read_json(config_path);
        const auto config = cli::resolve_config(user, overrides);
        for (const auto& path : cli::run(command, config, out_dir)) std::printf("%s\n", path.string().c_str());
        return cli::ok;
    } catch (const collective::InvalidArgument& e) {
        std::fprintf(stderr, "collective %s: config error: %s\n", command.c_str(), e.what());
        return cli::config_error;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "collective %s: config error: %s\n", command.c_str(), e.what());
        return cli::config_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "collective %s: solver failure: %s\n", command.c_str(), e.what());
        return cli::solver_failure;
    }
}
