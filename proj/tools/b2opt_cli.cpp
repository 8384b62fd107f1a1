#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "b2opt/bench/commands.hpp"

namespace {

using Command = b2opt::bench::CommandResult (*)(const b2opt::bench::ExperimentConfig&, const b2opt::bench::Options&);

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
};

void add_globals(CLI::App* sub, Globals& g)
{
    sub->add_option("--config", g.config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", g.seed, "master seed (overrides run.seed)");
    sub->add_option("--out", g.out, "output directory (overrides run.out)");
    sub->add_option("--threads", g.threads, "worker threads (overrides run.threads)")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"b2opt: learned population optimizer, baselines and benchmark runner"};
    app.require_subcommand(1);
    Globals g;
    const std::pair<const char*, Command> commands[] = {
        {"train", b2opt::bench::cmd_train},       {"optimize", b2opt::bench::cmd_optimize},
        {"bench", b2opt::bench::cmd_bench},       {"arm", b2opt::bench::cmd_arm},
        {"ablate", b2opt::bench::cmd_ablate},     {"export-viz", b2opt::bench::cmd_export_viz},
    };
    const char* help[] = {
        "train a model; writes checkpoint, loss.csv",
        "run algorithms on the configured task over the seed list",
        "algorithms x test functions x dimensions grid",
        "planar arm: modes x radii over sampled targets",
        "train and evaluate ablation variants",
        "dump attention and per-block populations of one run",
    };
    for (std::size_t i = 0; i < std::size(commands); ++i)
        add_globals(app.add_subcommand(commands[i].first, help[i]), g);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = b2opt::bench::load_config(g.config);
        const auto opts = b2opt::bench::resolve_options(cfg, g.out, g.seed, g.threads);
        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) {
                const auto res = fn(cfg, opts);
                for (const auto& line : res.lines)
                    std::cout << line << '\n';
                std::cout << fmt::format("wrote {} files + manifest.json to {}\n", res.files.size(), opts.out.string());
            }
    } catch (const b2opt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const b2opt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
