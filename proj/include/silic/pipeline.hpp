#pragma once

// Run configuration and the six pipeline commands behind the CLI.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "silic/ccr.hpp"
#include "silic/guidance.hpp"
#include "silic/remote_provider.hpp"
#include "silic/solver.hpp"

namespace silic {

enum class ProviderKind { Scripted, Replay, Remote };
std::string_view to_string(ProviderKind k);
ProviderKind provider_kind_from_string(std::string_view s);

struct RunConfig {
    std::filesystem::path diary_path;
    std::filesystem::path context_path;
    std::filesystem::path labels_path;
    std::filesystem::path out_dir = "out";

    TrainingConfig training;
    int n_max = kDefaultNMax;

    ProviderKind provider = ProviderKind::Scripted;
    RemoteSettings remote;
    std::filesystem::path replay_log; // empty: the command's own exchange log in out_dir

    std::uint64_t seed = 0;
    int concurrency = 1;
    bool strict = false;

    PredictionMode mode = PredictionMode::Ccr;
    std::vector<Attribute> attributes = all_attributes();
    double feature_percentile = 60.0;

    int synth_agents = 20;
    int synth_days = 5;
    std::string ablate_source = "synthetic"; // or "diary"

    /// Every setting that shapes results. Provider choice and the output
    /// directory are left out so scripted and replay runs share a hash.
    nlohmann::json canonical() const;
    std::string hash() const;
    void validate() const;
};

/// Parses TOML; relative paths resolve against `base_dir`. Unknown keys are
/// rejected. Throws InvalidConfig.
RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

struct CommandResult {
    int exit_code = 0;
    std::string summary;
};

std::vector<std::string_view> command_names();

/// Runs one command, writing its artifacts under config.out_dir.
/// silic::Error escapes for configuration and schema problems; per-person
/// failures are counted in the summary instead.
CommandResult run_command(std::string_view command, const RunConfig& config);

CommandResult run_ingest(const RunConfig& config);
CommandResult run_train(const RunConfig& config);
CommandResult run_predict(const RunConfig& config);
CommandResult run_evaluate(const RunConfig& config);
CommandResult run_synth(const RunConfig& config);
CommandResult run_ablate(const RunConfig& config);

/// Provider for `config`, logging to `log`. Replay reads `default_replay`
/// unless config.replay_log is set.
std::unique_ptr<GuidanceProvider> make_provider(const RunConfig& config, ExchangeLog* log,
                                                const std::filesystem::path& default_replay);

} // namespace silic
