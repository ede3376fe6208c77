#include "kucb/config.hpp"
#include "kucb/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out;
    std::optional<int> seeds;
    std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, CommonOptions &opts) {
    cmd->add_option("--config", opts.config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "Output directory (default: output.directory from the config)");
    cmd->add_option("--seeds", opts.seeds, "Number of seeds (overrides run.n_seeds)")->check(CLI::PositiveNumber);
    cmd->add_option("--override", opts.overrides, "Dotted-path override key=value, repeatable")->take_all();
}

kucb::ExperimentConfig load(const CommonOptions &opts) {
    std::vector<kucb::Override> overrides;
    overrides.reserve(opts.overrides.size() + 1);
    for (const auto &o : opts.overrides) { overrides.push_back(kucb::Override::parse(o)); }
    if (opts.seeds) { overrides.push_back({"run.n_seeds", std::to_string(*opts.seeds)}); }
    return kucb::load_config(opts.config_path, overrides);
}

std::filesystem::path output_dir(const CommonOptions &opts, const kucb::ExperimentConfig &config) {
    return opts.out.empty() ? std::filesystem::path(config.output.directory) : std::filesystem::path(opts.out);
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Kernel-based optimistic RL for average-reward MDPs"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::vector<int> windows;
    std::vector<double> rhos;

    auto *run = app.add_subcommand("run", "Run the agent and baselines over all seeds");
    auto *sweep = app.add_subcommand("sweep", "Cross-product of window sizes and regularization values");
    auto *verify = app.add_subcommand("verify", "Run every check across seeds; nonzero exit on failure");
    auto *solve = app.add_subcommand("solve", "Solve the generated models exactly");
    auto *gen = app.add_subcommand("gen-mdp", "Write the generated models as JSON");
    for (auto *cmd : {run, sweep, verify, solve, gen}) { add_common(cmd, opts); }
    sweep->add_option("--windows", windows, "Window sizes (default: sweep.windows)")->delimiter(',');
    sweep->add_option("--rhos", rhos, "Regularization values (default: sweep.rhos)")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = load(opts);
        const auto out = output_dir(opts, config);
        if (run->parsed()) { return kucb::run_experiment(config, out, std::cout); }
        if (sweep->parsed()) { return kucb::run_sweep(config, windows, rhos, out, std::cout); }
        if (verify->parsed()) { return kucb::run_verify(config, out, std::cout); }
        if (solve->parsed()) { return kucb::solve_models(config, out, std::cout); }
        return kucb::generate_models(config, out, std::cout);
    } catch (const kucb::ConfigError &e) {
        std::cerr << fmt::format("{}: config error: {}\n", opts.config_path, e.what());
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
