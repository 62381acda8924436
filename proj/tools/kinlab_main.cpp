#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "kinlab/config.hpp"
#include "kinlab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kinlab - kinetic transport / diffusion limit laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", csv_path;
    int threads = 1;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "run the experiments configured in a file");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory for CSV reports");
    run->add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    run->add_flag("--quiet", quiet, "suppress per-check output");

    auto* list = app.add_subcommand("list", "list available experiments");

    auto* verify = app.add_subcommand("verify", "re-check pass/fail from a stored summary.csv");
    verify->add_option("csv", csv_path, "summary.csv produced by 'run'")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& info : kinlab::experiment_registry())
                std::printf("%-4s %s\n", info.id.c_str(), info.description.c_str());
            return 0;
        }
        if (run->parsed()) {
            kinlab::Config cfg = kinlab::Config::parse_file(config_path);
            int failures = kinlab::run_experiments(cfg, out_dir, threads, quiet);
            return failures == 0 ? 0 : 1;
        }
        if (verify->parsed()) {
            return kinlab::verify_summary(csv_path) == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
