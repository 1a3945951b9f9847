#include "eiglab/config.hpp"
#include "eiglab/errors.hpp"
#include "eiglab/report.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

namespace {

const char* command_help(const std::string& name) {
    if (name == "pressure") return "per-component and global pressures with selection sets";
    if (name == "profile") return "longitudinal densities, blow-up profiles, limit measure";
    if (name == "eigen") return "principal eigenpair, weighted measure, blow-up extraction";
    if (name == "study") return "epsilon sweep of lambda, argmax displacement, tube masses";
    if (name == "rate") return "action values by shooting and by direct minimization";
    if (name == "mc") return "Monte Carlo check of the evolved-eigenfunction identity";
    if (name == "ou") return "kernel operator asymptotics for one transverse block";
    if (name == "discriminate") return "which pressure convention the eigenvalue limit matches";
    return "fast cross-module property suite";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for small-diffusion eigenvalue concentration"};
    app.set_version_flag("--version", std::string(eiglab::tool_name) + " "
                                          + eiglab::tool_version);
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    for (const auto& name : eiglab::command_names()) {
        CLI::App* sub = app.add_subcommand(name, command_help(name));
        sub->add_option("--config", config_path, "run configuration file (JSON)");
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--seed", seed, "seed override");
        sub->add_option("--threads", threads, "thread budget override");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        eiglab::RunConfig config;
        if (!config_path.empty()) config = eiglab::load_config(config_path);
        if (!out_dir.empty()) config.output.directory = out_dir;
        if (sub->count("--seed") > 0) config.task.seed = seed;
        if (threads > 0)
            setenv("EIGLAB_THREADS", std::to_string(threads).c_str(), 1);
        return eiglab::run_task(sub->get_name(), config,
                                config_path.empty() ? "(defaults)" : config_path);
    } catch (const eiglab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const eiglab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
