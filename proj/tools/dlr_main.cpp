#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "dualdo/config.hpp"
#include "dualdo/runner.hpp"
#include "dualdo/types.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> rank;
    std::optional<double> dt;
    std::optional<double> t_end;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run configuration file")->required();
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "sampling seed (overrides config)");
    cmd->add_option("--rank", flags.rank, "rank S (overrides config)");
    cmd->add_option("--dt", flags.dt, "time step (overrides config)");
    cmd->add_option("--t-end", flags.t_end, "horizon (overrides config)");
    cmd->add_option("--threads", flags.threads, "internal thread count (overrides config)");
}

dualdo::RunConfig load(const CommonFlags& flags, const std::string& mode) {
    dualdo::RunConfig cfg = dualdo::parse_config_file(flags.config_path);
    cfg.run.mode = mode;
    if (flags.out_dir) cfg.run.out_dir = *flags.out_dir;
    if (flags.seed) cfg.problem.seed = *flags.seed;
    if (flags.rank) cfg.run.rank = *flags.rank;
    if (flags.dt) cfg.run.dt = *flags.dt;
    if (flags.t_end) cfg.run.t_end = *flags.t_end;
    if (flags.threads) cfg.run.threads = *flags.threads;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual dynamically orthogonal low-rank integrator"};
    app.require_subcommand(1);

    CommonFlags flags;
    CLI::App* simulate = app.add_subcommand("simulate", "low-rank run with diagnostics CSV");
    CLI::App* verify = app.add_subcommand("verify", "randomized inequality audits");
    CLI::App* convergence = app.add_subcommand("convergence", "rank / dt sweep");
    CLI::App* rank_adapt =
        app.add_subcommand("rank-adapt", "simulate with rank-drop continuation");
    for (CLI::App* cmd : {simulate, verify, convergence, rank_adapt}) add_common(cmd, flags);

    CLI11_PARSE(app, argc, argv);

    std::string mode = "simulate";
    if (verify->parsed()) mode = "verify";
    if (convergence->parsed()) mode = "convergence";
    if (rank_adapt->parsed()) mode = "rank-adapt";

    try {
        const dualdo::RunConfig cfg = load(flags, mode);
        const dualdo::RunResult result = dualdo::run(cfg);
        if (!result.message.empty())
            (result.exit_code == 0 ? std::cout : std::cerr) << result.message << "\n";
        return result.exit_code;
    } catch (const dualdo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return dualdo::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
