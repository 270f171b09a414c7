// silic: command-line entry point for the IRL + prediction pipeline.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "silic/errors.hpp"
#include "silic/pipeline.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> provider;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    std::optional<std::string> out;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "TOML run configuration");
    cmd->add_option("--provider", f.provider, "guidance provider: scripted, replay or remote");
    cmd->add_option("--mode", f.mode, "prediction mode: ccr, cot or direct");
    cmd->add_option("--seed", f.seed, "base seed for all random streams");
    cmd->add_flag("--strict", f.strict, "abort on the first malformed input row");
    cmd->add_option("--out", f.out, "output directory");
}

silic::RunConfig resolve(const Flags& f) {
    silic::RunConfig c = f.config.empty() ? silic::RunConfig{} : silic::load_run_config(f.config);
    if (f.provider) c.provider = silic::provider_kind_from_string(*f.provider);
    if (f.mode) c.mode = silic::prediction_mode_from_string(*f.mode);
    if (f.seed) c.seed = *f.seed;
    if (f.strict) c.strict = true;
    if (f.out) c.out_dir = *f.out;
    c.validate();
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reward learning from travel diaries and staged sociodemographic prediction", "silic"};
    app.require_subcommand(1);

    Flags flags;
    const std::pair<const char*, const char*> commands[] = {
        {"ingest", "parse and filter the diary; write trajectories, dynamics and features"},
        {"train", "learn per-person reward weights"},
        {"predict", "predict sociodemographic labels from learned weights"},
        {"evaluate", "score predictions against labels"},
        {"synth", "synthetic-agent recovery suite"},
        {"ablate", "2x2 guidance ablation grid"},
    };
    for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const silic::RunConfig config = resolve(flags);
        const std::string command = app.get_subcommands().front()->get_name();
        const silic::CommandResult result = silic::run_command(command, config);
        std::cout << result.summary << '\n';
        return result.exit_code;
    } catch (const silic::Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 3;
    }
}
