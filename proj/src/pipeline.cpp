#include "silic/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "silic/concurrency.hpp"
#include "silic/diary.hpp"
#include "silic/errors.hpp"
#include "silic/features.hpp"
#include "silic/format.hpp"
#include "silic/metrics.hpp"
#include "silic/synth.hpp"
#include "silic/trainer.hpp"

namespace fs = std::filesystem;

namespace silic {

std::string_view to_string(ProviderKind k) {
    switch (k) {
    case ProviderKind::Scripted: return "scripted";
    case ProviderKind::Replay: return "replay";
    case ProviderKind::Remote: return "remote";
    }
    return "scripted";
}

ProviderKind provider_kind_from_string(std::string_view s) {
    const std::string v = to_lower(trim(s));
    if (v == "scripted") return ProviderKind::Scripted;
    if (v == "replay") return ProviderKind::Replay;
    if (v == "remote") return ProviderKind::Remote;
    throw InvalidConfig("unknown provider '" + std::string(s) + "' (expected scripted, replay or remote)");
}

// ---- configuration ---------------------------------------------------------

nlohmann::json RunConfig::canonical() const {
    nlohmann::json attrs = nlohmann::json::array();
    for (Attribute a : attributes) attrs.push_back(attribute_key(a));
    // nlohmann::json keeps object keys sorted, so dump() is canonical
    return {{"paths",
             {{"diary", diary_path.generic_string()},
              {"context", context_path.generic_string()},
              {"labels", labels_path.generic_string()}}},
            {"training",
             {{"gamma", training.gamma},
              {"eps_value", training.eps_value},
              {"eps_converge", training.eps_converge},
              {"alpha", training.alpha},
              {"lambda_llm", training.lambda_llm},
              {"top_k", training.top_k},
              {"horizon", training.horizon},
              {"max_iters", training.max_iters},
              {"n_max", n_max}}},
            {"seed", seed},
            {"strict", strict},
            {"predict", {{"mode", to_string(mode)}, {"attributes", attrs}}},
            {"features", {{"percentile", feature_percentile}}},
            {"synth", {{"agents", synth_agents}, {"days", synth_days}}},
            {"ablate", {{"source", ablate_source}}}};
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical().dump()); }

void RunConfig::validate() const {
    training.validate();
    if (training.horizon != kHoursPerDay) throw InvalidConfig("training.horizon must be 24 for diary data");
    if (n_max < 1) throw InvalidConfig("training.n_max must be >= 1");
    if (concurrency < 1) throw InvalidConfig("concurrency must be >= 1");
    if (synth_agents < 1 || synth_days < 1) throw InvalidConfig("synth.agents and synth.days must be >= 1");
    if (!(feature_percentile >= 0.0 && feature_percentile <= 100.0)) {
        throw InvalidConfig("features.percentile must lie in [0, 100]");
    }
    if (ablate_source != "synthetic" && ablate_source != "diary") {
        throw InvalidConfig("ablate.source must be 'synthetic' or 'diary'");
    }
    if (attributes.empty()) throw InvalidConfig("predict.attributes must not be empty");
}

namespace {

void reject_unknown(const toml::table& table, std::string_view where, std::initializer_list<std::string_view> keys) {
    for (const auto& [k, _] : table) {
        if (std::find(keys.begin(), keys.end(), k.str()) == keys.end()) {
            throw InvalidConfig("unknown key '" + std::string(where) + std::string(k.str()) + "' in config");
        }
    }
}

template <class T>
void read_value(const toml::table& table, std::string_view key, T& out, std::string_view where) {
    const toml::node* node = table.get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node->value<double>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_same_v<T, bool>) {
        if (auto v = node->value_exact<bool>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_integral_v<T>) {
        if (auto v = node->value_exact<std::int64_t>()) {
            if (*v < 0 && std::is_unsigned_v<T>) throw InvalidConfig(std::string(where) + std::string(key) + " must be >= 0");
            out = static_cast<T>(*v);
            return;
        }
    } else {
        if (auto v = node->value_exact<std::string>()) {
            out = *v;
            return;
        }
    }
    throw InvalidConfig("config key '" + std::string(where) + std::string(key) + "' has the wrong type");
}

void read_path(const toml::table& table, std::string_view key, fs::path& out, const fs::path& base,
               std::string_view where) {
    std::string s;
    read_value(table, key, s, where);
    if (s.empty()) return;
    fs::path p(s);
    out = p.is_absolute() ? p : (base / p).lexically_normal();
}

const toml::table* sub_table(const toml::table& root, std::string_view key) {
    const toml::node* node = root.get(key);
    if (!node) return nullptr;
    if (!node->is_table()) throw InvalidConfig("config key '" + std::string(key) + "' must be a table");
    return node->as_table();
}

} // namespace

RunConfig parse_run_config(std::string_view toml_text, const fs::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config line " << e.source().begin.line << ": " << e.description();
        throw InvalidConfig(msg.str());
    }
    reject_unknown(root, "", {"seed", "concurrency", "strict", "paths", "training", "provider", "predict", "features",
                              "synth", "ablate"});
    RunConfig c;
    read_value(root, "seed", c.seed, "");
    read_value(root, "concurrency", c.concurrency, "");
    read_value(root, "strict", c.strict, "");

    if (const auto* t = sub_table(root, "paths")) {
        reject_unknown(*t, "paths.", {"diary", "context", "labels", "out"});
        read_path(*t, "diary", c.diary_path, base_dir, "paths.");
        read_path(*t, "context", c.context_path, base_dir, "paths.");
        read_path(*t, "labels", c.labels_path, base_dir, "paths.");
        read_path(*t, "out", c.out_dir, base_dir, "paths.");
    }
    if (const auto* t = sub_table(root, "training")) {
        reject_unknown(*t, "training.", {"gamma", "eps_value", "eps_converge", "alpha", "lambda_llm", "top_k",
                                         "horizon", "max_iters", "n_max"});
        read_value(*t, "gamma", c.training.gamma, "training.");
        read_value(*t, "eps_value", c.training.eps_value, "training.");
        read_value(*t, "eps_converge", c.training.eps_converge, "training.");
        read_value(*t, "alpha", c.training.alpha, "training.");
        read_value(*t, "lambda_llm", c.training.lambda_llm, "training.");
        read_value(*t, "top_k", c.training.top_k, "training.");
        read_value(*t, "horizon", c.training.horizon, "training.");
        read_value(*t, "max_iters", c.training.max_iters, "training.");
        read_value(*t, "n_max", c.n_max, "training.");
    }
    if (const auto* t = sub_table(root, "provider")) {
        reject_unknown(*t, "provider.", {"kind", "base_url", "model", "timeout_seconds", "backoff_initial_ms",
                                         "max_concurrency", "replay_log"});
        std::string kind(to_string(c.provider));
        read_value(*t, "kind", kind, "provider.");
        c.provider = provider_kind_from_string(kind);
        read_value(*t, "base_url", c.remote.base_url, "provider.");
        read_value(*t, "model", c.remote.model, "provider.");
        read_value(*t, "timeout_seconds", c.remote.timeout_seconds, "provider.");
        read_value(*t, "backoff_initial_ms", c.remote.backoff_initial_ms, "provider.");
        read_value(*t, "max_concurrency", c.remote.max_concurrency, "provider.");
        read_path(*t, "replay_log", c.replay_log, base_dir, "provider.");
    }
    if (const auto* t = sub_table(root, "predict")) {
        reject_unknown(*t, "predict.", {"mode", "attributes"});
        std::string mode(to_string(c.mode));
        read_value(*t, "mode", mode, "predict.");
        c.mode = prediction_mode_from_string(mode);
        if (const toml::node* n = t->get("attributes")) {
            const toml::array* arr = n->as_array();
            if (!arr) throw InvalidConfig("predict.attributes must be an array of strings");
            c.attributes.clear();
            for (const auto& item : *arr) {
                auto s = item.value_exact<std::string>();
                if (!s) throw InvalidConfig("predict.attributes must be an array of strings");
                c.attributes.push_back(attribute_from_key(*s));
            }
        }
    }
    if (const auto* t = sub_table(root, "features")) {
        reject_unknown(*t, "features.", {"percentile"});
        read_value(*t, "percentile", c.feature_percentile, "features.");
    }
    if (const auto* t = sub_table(root, "synth")) {
        reject_unknown(*t, "synth.", {"agents", "days"});
        read_value(*t, "agents", c.synth_agents, "synth.");
        read_value(*t, "days", c.synth_days, "synth.");
    }
    if (const auto* t = sub_table(root, "ablate")) {
        reject_unknown(*t, "ablate.", {"source"});
        read_value(*t, "source", c.ablate_source, "ablate.");
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config file '" + path.string() + "'");
    std::stringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::unique_ptr<GuidanceProvider> make_provider(const RunConfig& config, ExchangeLog* log,
                                                const fs::path& default_replay) {
    switch (config.provider) {
    case ProviderKind::Scripted: return std::make_unique<ScriptedProvider>(log);
    case ProviderKind::Remote: return std::make_unique<RemoteProvider>(config.remote, log);
    case ProviderKind::Replay: {
        const fs::path path = config.replay_log.empty() ? default_replay : config.replay_log;
        std::ifstream in(path);
        if (!in) throw InvalidConfig("cannot open replay log '" + path.string() + "'");
        return std::make_unique<ReplayProvider>(read_exchange_log(in), log);
    }
    }
    throw InvalidConfig("unknown provider");
}

// ---- shared helpers --------------------------------------------------------

namespace {

nlohmann::json stamp(const RunConfig& config) { return {{"config_hash", config.hash()}, {"seed", config.seed}}; }

void require_path(const fs::path& p, std::string_view key) {
    if (p.empty()) throw InvalidConfig("paths." + std::string(key) + " is not set");
    if (!fs::exists(p)) throw InvalidConfig("paths." + std::string(key) + " does not exist: " + p.string());
}

std::ofstream open_out(const RunConfig& config, std::string_view name) {
    fs::create_directories(config.out_dir);
    const fs::path p = config.out_dir / std::string(name);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InvalidConfig("cannot write '" + p.string() + "'");
    return out;
}

void write_json(const RunConfig& config, std::string_view name, nlohmann::json j) {
    const auto s = stamp(config);
    for (const auto& [k, v] : s.items()) j[k] = v;
    auto out = open_out(config, name);
    out << j.dump(2) << '\n';
}

/// Side-car metadata for CSV artifacts, whose columns are fixed.
void write_meta(const RunConfig& config, std::string_view csv_name, nlohmann::json extra = nlohmann::json::object()) {
    extra["artifact"] = csv_name;
    write_json(config, std::string(csv_name.substr(0, csv_name.rfind('.'))) + ".meta.json", std::move(extra));
}

void write_exchanges(const RunConfig& config, std::string_view name, const ExchangeLog& log) {
    auto records = log.records();
    std::stable_sort(records.begin(), records.end(),
                     [](const GuidanceExchange& a, const GuidanceExchange& b) { return a.person_id < b.person_id; });
    auto out = open_out(config, name);
    const auto s = stamp(config);
    for (const auto& r : records) {
        nlohmann::json j = exchange_to_json(r);
        for (const auto& [k, v] : s.items()) j[k] = v;
        out << j.dump() << '\n';
    }
}

struct PersonData {
    std::string person_id;
    std::vector<TripRecord> records;
    std::vector<Trajectory> trajectories;
    std::vector<std::string> warnings;
    std::string error; // unmapped activity and the like
};

struct Ingested {
    std::vector<PersonData> persons;
    std::vector<std::string> row_errors;
    std::size_t rows = 0;
    std::size_t kept_rows = 0;
};

Ingested ingest_diary(const RunConfig& config, const StateSpace& space) {
    require_path(config.diary_path, "diary");
    DiaryParseResult parsed = parse_diary_file(config.diary_path.string(), config.strict);
    Ingested out;
    out.rows = parsed.records.size();
    out.row_errors = std::move(parsed.row_errors);
    const auto kept = filter_participants(parsed.records);
    out.kept_rows = kept.size();
    for (auto& [pid, records] : group_by_person(kept)) {
        PersonData p;
        p.person_id = pid;
        p.records = records;
        try {
            TrajectoryBuild build = diary_to_trajectories(records, space);
            p.trajectories = std::move(build.trajectories);
            p.warnings = std::move(build.warnings);
            if (p.trajectories.empty()) p.error = "insufficient-data: no day with trips";
        } catch (const Error& e) {
            if (config.strict) throw;
            p.error = e.code() + ": " + e.what();
        }
        out.persons.push_back(std::move(p));
    }
    return out;
}

std::map<std::string, std::map<Attribute, int>> read_labels(const fs::path& path) {
    const std::array<std::string_view, 1> required = {"person_id"};
    const CsvTable table = read_csv(path.string(), required);
    std::map<std::string, std::map<Attribute, int>> out;
    for (const auto& [line, row] : table.rows) {
        if (row.size() != table.header.size()) throw RowError(line, "wrong number of fields");
        const std::string pid(trim(row[table.column("person_id")]));
        auto& labels = out[pid];
        for (Attribute a : all_attributes()) {
            const int col = table.column(attribute_key(a));
            if (col < 0) continue;
            const std::string v(trim(row[col]));
            if (v.empty()) continue;
            const AttributeTask task = task_for(a);
            int k = task.class_index(v);
            long long idx = 0;
            if (k < 0 && parse_int(v, idx) && idx >= 0 && static_cast<std::size_t>(idx) < task.classes.size()) {
                k = static_cast<int>(idx);
            }
            if (k < 0) {
                throw RowError(line, "label '" + v + "' is not a " + std::string(attribute_key(a)) + " class");
            }
            labels[a] = k;
        }
    }
    return out;
}

struct TrainOutcome {
    std::optional<TrainedModel> model;
    std::string error;
};

std::vector<TrainOutcome> train_persons(const std::vector<PersonData>& persons, const RunConfig& config,
                                        const StateSpace& space, GuidanceProvider* provider, GuidanceMode mode) {
    std::vector<TrainOutcome> out(persons.size());
    parallel_for(persons.size(), config.concurrency, [&](std::size_t i) {
        const PersonData& p = persons[i];
        if (!p.error.empty()) {
            out[i].error = p.error;
            return;
        }
        TrainingInput input;
        input.person_id = p.person_id;
        input.trajectories = p.trajectories;
        input.dynamics = estimate_empirical_dynamics(p.trajectories, space);
        input.diary_text = render_diary(p.records);
        try {
            out[i].model = train_individual(input, space, provider, config.training, mode);
        } catch (const Error& e) {
            out[i].error = e.code() + ": " + e.what();
        }
    });
    return out;
}

std::string plural(std::size_t n, std::string_view word) {
    std::string w(word);
    if (n != 1) w = w.ends_with('y') ? w.substr(0, w.size() - 1) + "ies" : w + "s";
    return std::to_string(n) + " " + w;
}

} // namespace

// ---- commands ----------------------------------------------------------------

std::vector<std::string_view> command_names() { return {"ingest", "train", "predict", "evaluate", "synth", "ablate"}; }

CommandResult run_command(std::string_view command, const RunConfig& config) {
    config.validate();
    if (command == "ingest") return run_ingest(config);
    if (command == "train") return run_train(config);
    if (command == "predict") return run_predict(config);
    if (command == "evaluate") return run_evaluate(config);
    if (command == "synth") return run_synth(config);
    if (command == "ablate") return run_ablate(config);
    throw InvalidConfig("unknown command '" + std::string(command) + "'");
}

CommandResult run_ingest(const RunConfig& config) {
    const StateSpace space(config.n_max);
    const Ingested data = ingest_diary(config, space);
    const auto s = stamp(config);

    std::size_t n_traj = 0, failed = 0, warnings = 0;
    nlohmann::json dynamics = nlohmann::json::object();
    std::vector<MobilityFeatures> features;
    {
        auto out = open_out(config, "trajectories.jsonl");
        for (const auto& p : data.persons) {
            warnings += p.warnings.size();
            if (!p.error.empty()) {
                ++failed;
                continue;
            }
            for (const auto& t : p.trajectories) {
                nlohmann::json j = trajectory_to_json(t);
                for (const auto& [k, v] : s.items()) j[k] = v;
                out << j.dump() << '\n';
                ++n_traj;
            }
            dynamics[p.person_id] = dynamics_to_json(estimate_empirical_dynamics(p.trajectories, space));
            features.push_back(extract_features(p.records, config.n_max));
        }
    }
    write_json(config, "dynamics.json", {{"persons", dynamics}, {"n_max", config.n_max}});

    std::map<std::string, ContextProfile> contexts;
    if (!config.context_path.empty()) {
        require_path(config.context_path, "context");
        contexts = read_contexts(config.context_path.string());
    }
    {
        auto out = open_out(config, "features.csv");
        write_feature_matrix(out, features, contexts);
    }
    write_meta(config, "features.csv", {{"units", {{"home_time", "hours"}, {"work_time", "hours"}}}});

    if (!config.labels_path.empty()) {
        require_path(config.labels_path, "labels");
        const auto labels = read_labels(config.labels_path);
        const std::vector<std::string> names(kMobilityFeatureNames.begin(), kMobilityFeatureNames.end());
        nlohmann::json selections = nlohmann::json::array();
        for (Attribute a : config.attributes) {
            std::vector<std::vector<double>> x;
            std::vector<int> y;
            for (const auto& f : features) {
                const auto it = labels.find(f.person_id);
                if (it == labels.end() || !it->second.count(a)) continue;
                x.emplace_back(f.values.begin(), f.values.end());
                y.push_back(it->second.at(a));
            }
            if (std::set<int>(y.begin(), y.end()).size() < 2) {
                selections.push_back({{"attribute", attribute_key(a)}, {"skipped", "fewer than two labelled classes"}});
                continue;
            }
            const auto scores = anova_f_scores(x, y);
            const auto sel = select_top_features(names, scores, config.feature_percentile);
            selections.push_back(
                selection_manifest(std::string(attribute_key(a)), sel, names, scores, config.feature_percentile));
        }
        write_json(config, "feature_selection.json", {{"selections", selections}});
    }

    std::ostringstream msg;
    msg << "ingest: " << plural(data.rows, "row") << " read, " << data.kept_rows << " kept after filters, "
        << plural(data.persons.size() - failed, "person") << ", " << plural(n_traj, "trajectory") << ", "
        << failed << " failed, " << plural(data.row_errors.size(), "row error") << ", " << plural(warnings, "warning");
    return {0, msg.str()};
}

CommandResult run_train(const RunConfig& config) {
    const StateSpace space(config.n_max);
    const Ingested data = ingest_diary(config, space);
    ExchangeLog log;
    auto provider = make_provider(config, &log, config.out_dir / "exchanges.jsonl");
    const auto results = train_persons(data.persons, config, space, provider.get(), GuidanceMode{});
    write_exchanges(config, "exchanges.jsonl", log);

    const auto s = stamp(config);
    std::size_t trained = 0;
    nlohmann::json failures = nlohmann::json::array();
    {
        auto models = open_out(config, "models.jsonl");
        auto iterations = open_out(config, "iterations.jsonl");
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (!results[i].model) {
                failures.push_back({{"person_id", data.persons[i].person_id}, {"error", results[i].error}});
                continue;
            }
            const TrainedModel& m = *results[i].model;
            ++trained;
            nlohmann::json extra = s;
            extra["initial_kl"] = m.initial_kl;
            extra["final_l1"] = m.final_l1;
            extra["incidents"] = m.incidents;
            models << silic::to_json(m, extra).dump() << '\n';
            for (const auto& rec : m.log) {
                nlohmann::json j = silic::to_json(rec);
                for (const auto& [k, v] : s.items()) j[k] = v;
                iterations << j.dump() << '\n';
            }
        }
    }
    write_json(config, "train_summary.json",
               {{"trained", trained}, {"failed", failures.size()}, {"failures", failures},
                {"provider", to_string(config.provider)}, {"row_errors", data.row_errors}});
    return {0, "train: " + plural(trained, "model") + " written, " + std::to_string(failures.size()) + " failed"};
}

CommandResult run_predict(const RunConfig& config) {
    const fs::path models_path = config.out_dir / "models.jsonl";
    std::ifstream in(models_path);
    if (!in) throw InvalidConfig("cannot open '" + models_path.string() + "'; run `silic train` first");
    std::vector<PersonWeights> models;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            models.push_back({j.at("person_id").get<std::string>(), RewardWeights{j.at("theta").get<std::vector<double>>()}});
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("theta", "bad model line in " + models_path.string() + ": " + e.what());
        }
    }
    require_path(config.context_path, "context");
    const auto contexts = read_contexts(config.context_path.string());

    ExchangeLog log;
    auto provider = make_provider(config, &log, config.out_dir / "predict_exchanges.jsonl");
    std::vector<Prediction> all;
    int unresolved = 0, missing = 0;
    for (Attribute a : config.attributes) {
        PredictionBatch batch = predict_batch(models, contexts, *provider, task_for(a), config.mode, config.concurrency);
        unresolved += batch.unresolved;
        missing += batch.missing_context;
        for (auto& p : batch.predictions) all.push_back(std::move(p));
    }
    write_exchanges(config, "predict_exchanges.jsonl", log);
    {
        auto out = open_out(config, "predictions.csv");
        write_predictions_csv(out, all);
    }
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& p : all) {
        if (!p.error.empty()) {
            errors.push_back({{"person_id", p.person_id}, {"attribute", attribute_key(p.attribute)}, {"error", p.error}});
        }
    }
    write_meta(config, "predictions.csv",
               {{"mode", to_string(config.mode)},
                {"unresolved", unresolved},
                {"missing_context", missing},
                {"errors", errors},
                {"notes", {{"income", "household income is used as a proxy for the individual's income"}}}});
    return {0, "predict: " + plural(all.size() - static_cast<std::size_t>(unresolved), "prediction") + ", " +
                   std::to_string(unresolved) + " unresolved (" + std::to_string(missing) + " missing context)"};
}

CommandResult run_evaluate(const RunConfig& config) {
    const fs::path pred_path = config.out_dir / "predictions.csv";
    std::ifstream in(pred_path);
    if (!in) throw InvalidConfig("cannot open '" + pred_path.string() + "'; run `silic predict` first");
    const auto predictions = read_predictions_csv(in);
    require_path(config.labels_path, "labels");
    const auto labels = read_labels(config.labels_path);

    nlohmann::json per_attribute = nlohmann::json::object();
    for (Attribute a : all_attributes()) {
        const AttributeTask task = task_for(a);
        std::vector<int> truth, pred;
        int unresolved = 0, unlabelled = 0;
        bool seen = false;
        for (const auto& p : predictions) {
            if (p.attribute != a) continue;
            seen = true;
            if (p.unresolved()) {
                ++unresolved;
                continue;
            }
            const auto it = labels.find(p.person_id);
            if (it == labels.end() || !it->second.count(a)) {
                ++unlabelled;
                continue;
            }
            truth.push_back(it->second.at(a));
            pred.push_back(*p.label_index);
        }
        if (!seen) continue;
        nlohmann::json entry = {{"unresolved", unresolved}, {"unlabelled", unlabelled}, {"scored", truth.size()}};
        if (!truth.empty()) entry["report"] = report_to_json(classification_report(truth, pred, task.classes.size()), task.classes);
        if (a == Attribute::Income) entry["note"] = "household income is used as a proxy for the individual's income";
        per_attribute[std::string(attribute_key(a))] = entry;
    }
    write_json(config, "metrics.json", {{"attributes", per_attribute}});
    return {0, "evaluate: " + plural(per_attribute.size(), "attribute") + " scored"};
}

namespace {

nlohmann::json training_json(const TrainingConfig& t) {
    return {{"gamma", t.gamma},         {"eps_value", t.eps_value}, {"eps_converge", t.eps_converge},
            {"alpha", t.alpha},         {"lambda_llm", t.lambda_llm}, {"top_k", t.top_k},
            {"horizon", t.horizon},     {"max_iters", t.max_iters}};
}

RecoverySuiteConfig suite_for(const RunConfig& config) {
    RecoverySuiteConfig suite;
    suite.seed = config.seed;
    suite.agents = config.synth_agents;
    suite.days = config.synth_days;
    suite.n_max = config.n_max;
    suite.workers = config.concurrency;
    return suite;
}

double mean_of(const std::vector<RecoveryResult>& rs, double RecoveryResult::*field) {
    if (rs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rs) s += r.*field;
    return s / static_cast<double>(rs.size());
}

} // namespace

CommandResult run_synth(const RunConfig& config) {
    const RecoverySuiteConfig suite = suite_for(config);
    const auto cells = ablation_grid();
    const auto results = run_recovery_suite(suite, config.training, {cells.front()});

    int recovered = 0;
    nlohmann::json agents = nlohmann::json::array();
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& r : results) {
        const bool ok = r.final_true_kl <= 0.5 * r.initial_true_kl;
        recovered += ok ? 1 : 0;
        nlohmann::json j = silic::to_json(r);
        j["recovered"] = ok;
        agents.push_back(j);
        seeds.push_back(r.seed);
    }
    const double mean_initial = mean_of(results, &RecoveryResult::initial_true_kl);
    const double mean_final = mean_of(results, &RecoveryResult::final_true_kl);
    const int required = (suite.agents * 9 + 9) / 10;

    write_json(config, "synth_manifest.json",
               {{"suite_seed", suite.seed},
                {"agent_seeds", seeds},
                {"agents", suite.agents},
                {"days", suite.days},
                {"n_max", suite.n_max},
                {"cell", cells.front().name},
                {"training", training_json(config.training)},
                {"expected_bounds",
                 {{{"metric", "final_true_kl / initial_true_kl per agent"}, {"bound", 0.5}, {"min_agents", required}},
                  {{"metric", "mean final_true_kl / mean initial_true_kl"}, {"bound", 0.5}}}}});
    write_json(config, "recovery_report.json",
               {{"results", agents},
                {"recovered_agents", recovered},
                {"required_agents", required},
                {"mean_initial_true_kl", mean_initial},
                {"mean_final_true_kl", mean_final},
                {"mean_initial_kl", mean_of(results, &RecoveryResult::initial_kl)},
                {"mean_final_kl", mean_of(results, &RecoveryResult::final_kl)}});

    std::ostringstream msg;
    msg << "synth: " << recovered << "/" << results.size() << " agents halved KL(pi*||pi); mean "
        << format_fixed(mean_initial, 4) << " -> " << format_fixed(mean_final, 4);
    return {0, msg.str()};
}

CommandResult run_ablate(const RunConfig& config) {
    const auto cells = ablation_grid();
    nlohmann::json grid = nlohmann::json::array();
    std::size_t failed = 0;

    if (config.ablate_source == "synthetic") {
        const auto results = run_recovery_suite(suite_for(config), config.training, cells);
        for (const auto& cell : cells) {
            std::vector<RecoveryResult> rs;
            for (const auto& r : results) {
                if (r.cell == cell.name) rs.push_back(r);
            }
            grid.push_back({{"cell", cell.name},
                            {"guided_init", cell.mode.guided_init},
                            {"guided_updates", cell.mode.guided_updates},
                            {"agents", rs.size()},
                            {"mean_initial_kl", mean_of(rs, &RecoveryResult::initial_kl)},
                            {"mean_final_kl", mean_of(rs, &RecoveryResult::final_kl)},
                            {"mean_final_l1", mean_of(rs, &RecoveryResult::final_l1)},
                            {"mean_initial_true_kl", mean_of(rs, &RecoveryResult::initial_true_kl)},
                            {"mean_final_true_kl", mean_of(rs, &RecoveryResult::final_true_kl)}});
        }
    } else {
        const StateSpace space(config.n_max);
        const Ingested data = ingest_diary(config, space);
        ExchangeLog log;
        for (const auto& cell : cells) {
            auto provider = make_provider(config, &log, config.out_dir / "exchanges.jsonl");
            const auto results = train_persons(data.persons, config, space, provider.get(), cell.mode);
            double kl = 0.0, l1 = 0.0;
            std::size_t n = 0;
            for (const auto& r : results) {
                if (!r.model) {
                    ++failed;
                    continue;
                }
                kl += r.model->final_kl;
                l1 += r.model->final_l1;
                ++n;
            }
            grid.push_back({{"cell", cell.name},
                            {"guided_init", cell.mode.guided_init},
                            {"guided_updates", cell.mode.guided_updates},
                            {"persons", n},
                            {"mean_final_kl", n ? kl / static_cast<double>(n) : 0.0},
                            {"mean_final_l1", n ? l1 / static_cast<double>(n) : 0.0}});
        }
        write_exchanges(config, "ablate_exchanges.jsonl", log);
    }
    write_json(config, "ablation.json", {{"source", config.ablate_source}, {"cells", grid}});

    std::ostringstream msg;
    msg << "ablate: " << grid.size() << " cells";
    for (const auto& c : grid) {
        msg << "; " << c["cell"].get<std::string>() << " KL " << format_fixed(c["mean_final_kl"].get<double>(), 4);
    }
    if (failed) msg << "; " << failed << " person trainings failed";
    return {0, msg.str()};
}

} // namespace silic
