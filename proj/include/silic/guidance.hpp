#pragma once

// Heuristic guidance: prompt construction, response parsing and the
// provider contract (initial weights, per-iteration update directions,
// label prediction) with scripted, replay and remote implementations.

#include <chrono>
#include <cstddef>
#include <deque>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "silic/mdp.hpp"
#include "silic/solver.hpp"

namespace silic {

inline constexpr double kInitWeightBound = 2.0;
inline constexpr int kMaxAttempts = 3;
inline constexpr std::size_t kMaxReportedMismatches = 30;

// ---- prompts --------------------------------------------------------------

/// Activity names as the update prompt lists them.
std::string_view prompt_activity_label(ActivityCategory a);

/// Numbered listing of every feature slot, used for the init prompt's
/// state-feature input.
std::string feature_schema_text(const StateSpace& space);

/// Throws PreconditionError on empty diary text.
std::string build_init_prompt(std::string_view diary_text, std::string_view feature_schema_text);

/// Throws PreconditionError when the report has more than 30 entries.
std::string build_update_prompt(const RewardWeights& theta, const MismatchReport& report);

// ---- parsing --------------------------------------------------------------

/// Contents between the first '[' and its matching ']'. Throws ParseError.
std::string_view first_bracketed_list(std::string_view text);

struct InitParse {
    RewardWeights theta;
    std::vector<std::string> warnings; // one per clamped entry
};

/// Exactly `dim` finite reals; entries outside [-2, 2] are clamped.
InitParse parse_init_response(std::string_view text, std::size_t dim = 31);

/// Exactly `dim` integers, each in {-1, 0, 1}.
Directions parse_update_response(std::string_view text, std::size_t dim = 31);

/// First standalone integer token, validated against [0, classes).
int parse_label_index(std::string_view text, std::size_t classes);

// ---- exchange log ---------------------------------------------------------

enum class ExchangeKind { Init, Update, Ccr };

std::string_view to_string(ExchangeKind k);
ExchangeKind exchange_kind_from_string(std::string_view s);

struct GuidanceExchange {
    ExchangeKind kind = ExchangeKind::Init;
    std::string person_id;
    std::string prompt_text;
    std::optional<std::string> raw_response; // absent on transport failure
    nlohmann::json parsed;                   // null unless parsing succeeded
    std::string error;
    std::string timestamp;
    std::string model_name;
    int attempt = 1;
};

nlohmann::json exchange_to_json(const GuidanceExchange& e);
GuidanceExchange exchange_from_json(const nlohmann::json& j);

/// Append-only, serialized through a single mutex; optionally mirrored to a
/// JSONL stream as records arrive.
class ExchangeLog {
public:
    ExchangeLog() = default;
    explicit ExchangeLog(std::ostream* sink) : sink_(sink) {}

    void append(const GuidanceExchange& e);
    std::vector<GuidanceExchange> records() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<GuidanceExchange> records_;
    std::ostream* sink_ = nullptr;
};

std::vector<GuidanceExchange> read_exchange_log(std::istream& in);

// ---- provider contract ----------------------------------------------------

/// Everything a response source may look at for one attempt.
struct ExchangeRequest {
    ExchangeKind kind = ExchangeKind::Init;
    std::string person_id;
    std::string prompt;
    int attempt = 1;
    const StateSpace* space = nullptr;
    std::string_view diary_text;
    const RewardWeights* theta = nullptr;
    const MismatchReport* report = nullptr;
    std::size_t label_classes = 0;
};

struct InitOutcome {
    RewardWeights theta;
    bool fallback = false; // zeros after exhausting attempts
    std::vector<std::string> warnings;
};

struct DirectionOutcome {
    Directions directions;
    bool fallback = false;
    std::string incident;
    double latency_ms = 0.0;
};

struct LabelOutcome {
    std::optional<int> label; // empty when unresolved
    int attempts = 0;
    std::string error;
};

/// Base for all guidance providers. The public calls build the prompt, ask
/// `respond` for raw text up to three times, parse, and log every attempt.
/// Parse failures on all attempts yield the fallback (zeros / unresolved);
/// if the last attempt failed in transport, ProviderUnavailable is thrown.
///
/// Implementations must be safe to call from several threads at once.
class GuidanceProvider {
public:
    explicit GuidanceProvider(ExchangeLog* log = nullptr) : log_(log) {}
    virtual ~GuidanceProvider() = default;
    GuidanceProvider(const GuidanceProvider&) = delete;
    GuidanceProvider& operator=(const GuidanceProvider&) = delete;

    InitOutcome initialize(const std::string& person_id, std::string_view diary_text, const StateSpace& space);
    DirectionOutcome suggest_directions(const std::string& person_id, const RewardWeights& theta,
                                        const MismatchReport& report, const StateSpace& space);
    LabelOutcome predict_label(const std::string& person_id, const std::string& prompt, const RewardWeights& theta,
                               std::size_t classes);

    virtual std::string model_name() const = 0;

protected:
    /// Raw model text for one attempt. Throw ProviderUnavailable on transport failure.
    virtual std::string respond(const ExchangeRequest& request) = 0;
    /// Called before attempt n >= 2.
    virtual void backoff(int /*attempt*/) {}

private:
    template <class Parse>
    auto exchange(ExchangeRequest request, Parse&& parse, double* latency_ms, int* attempts_used)
        -> std::optional<typename decltype(parse(std::string_view{}))::second_type>;

    ExchangeLog* log_;
};

/// Deterministic stand-in for the language model.
///
/// initialize: each activity and hour weight is 2 * (frequency of that slot
/// among the diary's hourly states - 1 / slots in its group), clamped to
/// [-2, 2]; is_first and count weights are 0.
/// suggest_directions: sign of sum over reported states of
/// sign(expert - learner) * phi(s), zero when |score| < 1e-9.
/// predict_label: buckets sigmoid(theta[work] - theta[home]) into the classes.
class ScriptedProvider : public GuidanceProvider {
public:
    using GuidanceProvider::GuidanceProvider;
    std::string model_name() const override { return "scripted-heuristic"; }

    static RewardWeights initial_weights(std::string_view diary_text, const StateSpace& space);
    static Directions directions(const MismatchReport& report, const StateSpace& space);
    static int label(const RewardWeights& theta, std::size_t classes);

protected:
    std::string respond(const ExchangeRequest& request) override;
};

/// Serves logged raw responses back in order, keyed by (person_id, kind);
/// each record's attempt number and prompt must match the live request.
class ReplayProvider : public GuidanceProvider {
public:
    ReplayProvider(const std::vector<GuidanceExchange>& records, ExchangeLog* log = nullptr);
    std::string model_name() const override { return model_name_; }

protected:
    std::string respond(const ExchangeRequest& request) override;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, ExchangeKind>, std::deque<GuidanceExchange>> queues_;
    std::string model_name_ = "replay";
};

std::string utc_timestamp();

} // namespace silic
