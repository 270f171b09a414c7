#include "silic/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <istream>
#include <ostream>
#include <sstream>

#include "silic/diary.hpp"
#include "silic/errors.hpp"
#include "silic/format.hpp"

namespace silic {

namespace {

constexpr std::string_view kInitTemplate =
    R"(Task Description
You are an expert in travel behavior modeling and inverse reinforcement learning (IRL). You are provided with an individual’s multi-day weekday travel diaries, presented as a chronological sequence of activities and their corresponding departure times.

Input:
- Travel Diaries:
{diaries}
- State Features: φ(s), a feature vector encoding relevant state attributes.
{features}

Objective
Estimate an initial reward weight vector θ for an IRL model, where the reward function is defined as:
R(s) = θᵀ · φ(s)

Instructions:
- Analyze the provided travel diaries to identify patterns in the individual’s observed activity behavior.
- Apply general travel behavior knowledge (e.g., typical preferences for activity types and times of day).
- Assign meaningful weights to the corresponding features in φ(s).
- For features with insufficient or ambiguous evidence, assign values near zero.

Output Format
Return the 31-dimensional vector θ as a valid Python list of 31 float values. Each value must be between -2 and 2. No additional explanation or formatting should be included.
)";

constexpr std::string_view kUpdateTemplate =
    R"(Task Description
You are assisting in tuning the reward weight vector θ for a maximum entropy inverse reinforcement learning (IRL) model. The objective is to adjust θ to better align the learner’s state visitation distribution with that of the expert.

Input:
- Current Reward Weights: θ = {theta}
- State Mismatches: A list of the top 30 state mismatches, where each state is represented as a 4-tuple (hour, activity_type, is_first_trip, activity_segment_count), along with the expert and learner visitation frequencies for each state.
{mismatches}

Reward Function
The reward function is defined as:
R(s) = θᵀ · φ(s)
where φ(s) is a 31-dimensional feature vector:
- 5 one-hot indicators for activity type: [Home, Work, School, Errand and Escort, Leisure]
- 24 hour-of-day indicators: [hour_0 to hour_23]
- 1 binary indicator: is_first_trip
- 1 normalized numeric feature: activity_segment_count

Objective
Based on the provided state mismatches and your prior domain knowledge, suggest an update direction for each of the 31 reward weights to reduce the discrepancies between the expert and learner state visitation distributions.

Instructions:
- Analyze the provided state mismatches and determine whether each feature weight in θ should be increased, decreased, or left unchanged.
- For each of the 31 reward weights, output an update direction constrained to {-1, 0, 1}, where -1 indicates decrease, 0 indicates no change, and 1 indicates increase.

Output Format
Return a Python list of 31 integers, each being -1, 0, or 1. No additional text or explanation should be included.
)";

std::string replace_slot(std::string text, std::string_view slot, std::string_view value) {
    const auto pos = text.find(slot);
    if (pos == std::string::npos) throw PreconditionError("template slot missing: " + std::string(slot));
    text.replace(pos, slot.size(), value);
    return text;
}

std::string indent_lines(std::string_view text, std::string_view prefix) {
    std::string out;
    std::istringstream in{std::string(text)};
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!first) out.push_back('\n');
        first = false;
        out += prefix;
        out += line;
    }
    return out;
}

std::vector<std::string_view> split_list(std::string_view body) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (true) {
        const auto comma = body.find(',', start);
        tokens.push_back(trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    // Python tolerates one trailing comma.
    if (tokens.size() > 1 && tokens.back().empty()) tokens.pop_back();
    if (tokens.size() == 1 && tokens.front().empty()) tokens.clear();
    return tokens;
}

int sign(double x, double tol) {
    if (std::abs(x) < tol) return 0;
    return x > 0.0 ? 1 : -1;
}

} // namespace

std::string_view prompt_activity_label(ActivityCategory a) {
    switch (a) {
    case ActivityCategory::Home: return "Home";
    case ActivityCategory::Work: return "Work";
    case ActivityCategory::Education: return "School";
    case ActivityCategory::EscortErrand: return "Errand and Escort";
    case ActivityCategory::Leisure: return "Leisure";
    }
    return "Unknown";
}

std::string feature_schema_text(const StateSpace& space) {
    std::ostringstream out;
    const auto names = space.feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << "  " << i << ". " << names[i];
        if (i < static_cast<std::size_t>(space.activities())) {
            out << " (one-hot activity type: " << prompt_activity_label(static_cast<ActivityCategory>(i)) << ")";
        } else if (i == space.first_slot()) {
            out << " (binary: first activity of the day)";
        } else if (i == space.count_slot()) {
            out << " (normalized cumulative activity count, count / " << space.n_max() << ")";
        } else {
            out << " (one-hot hour of day)";
        }
        if (i + 1 < names.size()) out << '\n';
    }
    return out.str();
}

std::string build_init_prompt(std::string_view diary_text, std::string_view schema_text) {
    if (trim(diary_text).empty()) throw PreconditionError("diary text must be nonempty");
    std::string prompt = replace_slot(std::string(kInitTemplate), "{features}", schema_text);
    return replace_slot(std::move(prompt), "{diaries}", indent_lines(diary_text, "  "));
}

std::string build_update_prompt(const RewardWeights& theta, const MismatchReport& report) {
    if (report.size() > kMaxReportedMismatches) {
        throw PreconditionError("at most 30 mismatches may be reported, got " + std::to_string(report.size()));
    }
    std::string theta_text = "[";
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (i) theta_text += ", ";
        theta_text += format_fixed(theta[i], 6);
    }
    theta_text += "]";

    std::string lines;
    for (std::size_t i = 0; i < report.size(); ++i) {
        const auto& m = report[i];
        if (i) lines += '\n';
        lines += "  " + std::to_string(i + 1) + ". (" + std::to_string(m.state.hour) + ", " +
                 std::string(prompt_activity_label(m.state.activity)) + ", " + (m.state.is_first ? "1" : "0") + ", " +
                 std::to_string(m.state.count) + "): expert=" + format_fixed(m.expert_mass, 6) +
                 ", learner=" + format_fixed(m.learner_mass, 6);
    }
    if (report.empty()) lines = "  (none)";
    std::string prompt = replace_slot(std::string(kUpdateTemplate), "{theta}", theta_text);
    return replace_slot(std::move(prompt), "{mismatches}", lines);
}

std::string_view first_bracketed_list(std::string_view text) {
    const auto open = text.find('[');
    if (open == std::string_view::npos) throw ParseError("no bracketed list in response");
    const auto close = text.find(']', open + 1);
    if (close == std::string_view::npos) throw ParseError("unterminated bracketed list in response");
    const auto inner = text.substr(open + 1, close - open - 1);
    if (inner.find('[') != std::string_view::npos) throw ParseError("nested lists are not accepted");
    return inner;
}

InitParse parse_init_response(std::string_view text, std::size_t dim) {
    const auto tokens = split_list(first_bracketed_list(text));
    if (tokens.size() != dim) {
        throw ParseError("expected " + std::to_string(dim) + " values, got " + std::to_string(tokens.size()));
    }
    InitParse out{RewardWeights::zeros(dim), {}};
    for (std::size_t i = 0; i < dim; ++i) {
        double v = 0.0;
        if (!parse_double(tokens[i], v) || !std::isfinite(v)) {
            throw ParseError("entry " + std::to_string(i) + " is not a finite number: '" + std::string(tokens[i]) + "'");
        }
        if (v > kInitWeightBound || v < -kInitWeightBound) {
            const double c = std::clamp(v, -kInitWeightBound, kInitWeightBound);
            out.warnings.push_back("entry " + std::to_string(i) + " = " + format_roundtrip(v) + " clamped to " +
                                   format_roundtrip(c));
            v = c;
        }
        out.theta[i] = v;
    }
    return out;
}

Directions parse_update_response(std::string_view text, std::size_t dim) {
    const auto tokens = split_list(first_bracketed_list(text));
    if (tokens.size() != dim) {
        throw ParseError("expected " + std::to_string(dim) + " directions, got " + std::to_string(tokens.size()));
    }
    Directions out(dim, 0);
    for (std::size_t i = 0; i < dim; ++i) {
        long long v = 0;
        if (!parse_int(tokens[i], v)) {
            throw ParseError("entry " + std::to_string(i) + " is not an integer: '" + std::string(tokens[i]) + "'");
        }
        if (v < -1 || v > 1) {
            throw ParseError("entry " + std::to_string(i) + " = " + std::to_string(v) + " is outside {-1, 0, 1}");
        }
        out[i] = static_cast<int>(v);
    }
    return out;
}

std::string_view to_string(ExchangeKind k) {
    switch (k) {
    case ExchangeKind::Init: return "init";
    case ExchangeKind::Update: return "update";
    case ExchangeKind::Ccr: return "ccr";
    }
    return "init";
}

ExchangeKind exchange_kind_from_string(std::string_view s) {
    if (s == "init") return ExchangeKind::Init;
    if (s == "update") return ExchangeKind::Update;
    if (s == "ccr") return ExchangeKind::Ccr;
    throw ParseError("unknown exchange kind '" + std::string(s) + "'");
}

nlohmann::json exchange_to_json(const GuidanceExchange& e) {
    nlohmann::json j = {{"kind", to_string(e.kind)},
                        {"person_id", e.person_id},
                        {"prompt_text", e.prompt_text},
                        {"raw_response", e.raw_response ? nlohmann::json(*e.raw_response) : nlohmann::json(nullptr)},
                        {"parsed", e.parsed},
                        {"timestamp", e.timestamp},
                        {"model_name", e.model_name},
                        {"attempt", e.attempt}};
    if (!e.error.empty()) j["error"] = e.error;
    return j;
}

GuidanceExchange exchange_from_json(const nlohmann::json& j) {
    GuidanceExchange e;
    try {
        e.kind = exchange_kind_from_string(j.at("kind").get<std::string>());
        e.person_id = j.at("person_id").get<std::string>();
        e.prompt_text = j.value("prompt_text", "");
        if (j.contains("raw_response") && !j["raw_response"].is_null()) e.raw_response = j["raw_response"].get<std::string>();
        e.parsed = j.value("parsed", nlohmann::json(nullptr));
        e.error = j.value("error", "");
        e.timestamp = j.value("timestamp", "");
        e.model_name = j.value("model_name", "");
        e.attempt = j.value("attempt", 1);
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed exchange record: ") + ex.what());
    }
    return e;
}

void ExchangeLog::append(const GuidanceExchange& e) {
    std::lock_guard lock(mutex_);
    records_.push_back(e);
    if (sink_) {
        *sink_ << exchange_to_json(e).dump() << '\n';
        sink_->flush();
    }
}

std::vector<GuidanceExchange> ExchangeLog::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t ExchangeLog::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::vector<GuidanceExchange> read_exchange_log(std::istream& in) {
    std::vector<GuidanceExchange> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            out.push_back(exchange_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid exchange log line: ") + e.what());
        }
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---- GuidanceProvider -----------------------------------------------------

template <class Parse>
auto GuidanceProvider::exchange(ExchangeRequest request, Parse&& parse, double* latency_ms, int* attempts_used)
    -> std::optional<typename decltype(parse(std::string_view{}))::second_type> {
    bool last_was_transport = false;
    std::string last_error;
    for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
        if (attempt > 1) backoff(attempt);
        request.attempt = attempt;
        if (attempts_used) *attempts_used = attempt;

        GuidanceExchange record;
        record.kind = request.kind;
        record.person_id = request.person_id;
        record.prompt_text = request.prompt;
        record.model_name = model_name();
        record.attempt = attempt;
        record.timestamp = utc_timestamp();

        const auto start = std::chrono::steady_clock::now();
        try {
            record.raw_response = respond(request);
        } catch (const ProviderUnavailable& e) {
            record.error = e.what();
        }
        if (latency_ms) {
            *latency_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        if (!record.raw_response) {
            last_was_transport = true;
            last_error = record.error;
            if (log_) log_->append(record);
            continue;
        }
        try {
            auto value = parse(std::string_view(*record.raw_response));
            record.parsed = nlohmann::json(value.first);
            if (log_) log_->append(record);
            return std::move(value.second);
        } catch (const ParseError& e) {
            record.error = e.what();
            last_was_transport = false;
            last_error = record.error;
            if (log_) log_->append(record);
        }
    }
    if (last_was_transport) {
        throw ProviderUnavailable(std::string(to_string(request.kind)) + " exchange for '" + request.person_id +
                                  "' failed after " + std::to_string(kMaxAttempts) + " attempts: " + last_error);
    }
    return std::nullopt;
}

InitOutcome GuidanceProvider::initialize(const std::string& person_id, std::string_view diary_text,
                                         const StateSpace& space) {
    ExchangeRequest req;
    req.kind = ExchangeKind::Init;
    req.person_id = person_id;
    req.prompt = build_init_prompt(diary_text, feature_schema_text(space));
    req.space = &space;
    req.diary_text = diary_text;

    const std::size_t dim = space.feature_dim();
    auto parsed = exchange(
        req,
        [dim](std::string_view raw) {
            InitParse p = parse_init_response(raw, dim);
            return std::pair{p.theta.values, p};
        },
        nullptr, nullptr);
    if (!parsed) return InitOutcome{RewardWeights::zeros(dim), true, {"init parse failed; using zeros"}};
    return InitOutcome{parsed->theta, false, parsed->warnings};
}

DirectionOutcome GuidanceProvider::suggest_directions(const std::string& person_id, const RewardWeights& theta,
                                                      const MismatchReport& report, const StateSpace& space) {
    ExchangeRequest req;
    req.kind = ExchangeKind::Update;
    req.person_id = person_id;
    req.prompt = build_update_prompt(theta, report);
    req.space = &space;
    req.theta = &theta;
    req.report = &report;

    const std::size_t dim = space.feature_dim();
    DirectionOutcome out;
    auto parsed = exchange(
        req,
        [dim](std::string_view raw) {
            Directions d = parse_update_response(raw, dim);
            return std::pair{d, d};
        },
        &out.latency_ms, nullptr);
    if (!parsed) {
        out.directions.assign(dim, 0);
        out.fallback = true;
        out.incident = "update parse failed after " + std::to_string(kMaxAttempts) + " attempts; zero directions";
        return out;
    }
    out.directions = std::move(*parsed);
    return out;
}

LabelOutcome GuidanceProvider::predict_label(const std::string& person_id, const std::string& prompt,
                                             const RewardWeights& theta, std::size_t classes) {
    ExchangeRequest req;
    req.kind = ExchangeKind::Ccr;
    req.person_id = person_id;
    req.prompt = prompt;
    req.theta = &theta;
    req.label_classes = classes;

    LabelOutcome out;
    auto parsed = exchange(
        req,
        [classes](std::string_view raw) {
            int k = parse_label_index(raw, classes);
            return std::pair{k, k};
        },
        nullptr, &out.attempts);
    if (parsed) {
        out.label = *parsed;
    } else {
        out.error = "label unresolved after " + std::to_string(kMaxAttempts) + " attempts";
    }
    return out;
}

int parse_label_index(std::string_view text, std::size_t classes) {
    // First standalone integer: a digit run not glued to letters, digits,
    // '.' decimals or '_' on either side.
    auto is_word = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] < '0' || text[i] > '9') continue;
        std::size_t j = i;
        while (j < text.size() && text[j] >= '0' && text[j] <= '9') ++j;
        const bool left_ok = i == 0 || (!is_word(text[i - 1]) && text[i - 1] != '.');
        const bool decimal = j + 1 < text.size() && text[j] == '.' && text[j + 1] >= '0' && text[j + 1] <= '9';
        const bool right_ok = j == text.size() || (!is_word(text[j]) && !decimal);
        if (left_ok && right_ok) {
            if (i > 0 && text[i - 1] == '-' && (i < 2 || !is_word(text[i - 2]))) {
                throw ParseError("negative label -" + std::string(text.substr(i, j - i)));
            }
            long long v = 0;
            if (!parse_int(text.substr(i, j - i), v) || v < 0 || v >= static_cast<long long>(classes)) {
                throw ParseError("label " + std::string(text.substr(i, j - i)) + " outside [0, " +
                                 std::to_string(classes) + ")");
            }
            return static_cast<int>(v);
        }
        i = j;
    }
    throw ParseError("no integer label in response");
}

// ---- ScriptedProvider -----------------------------------------------------

RewardWeights ScriptedProvider::initial_weights(std::string_view diary_text, const StateSpace& space) {
    const auto days = parse_rendered_diary(diary_text);
    RewardWeights theta = RewardWeights::zeros(space.feature_dim());
    if (days.empty()) return theta;

    std::vector<double> activity(static_cast<std::size_t>(space.activities()), 0.0);
    std::vector<double> hour(static_cast<std::size_t>(space.hours()), 0.0);
    double total = 0.0;
    for (const auto& deps : days) {
        const Trajectory t = build_day_trajectory(deps, ActivityCategory::Home, space);
        for (const auto& s : t.states) {
            activity[static_cast<std::size_t>(to_index(s.activity))] += 1.0;
            hour[static_cast<std::size_t>(s.hour)] += 1.0;
            total += 1.0;
        }
    }
    auto clamp = [](double v) { return std::clamp(v, -kInitWeightBound, kInitWeightBound); };
    for (int a = 0; a < space.activities(); ++a) {
        theta[space.activity_slot(static_cast<ActivityCategory>(a))] =
            clamp(2.0 * (activity[static_cast<std::size_t>(a)] / total - 1.0 / space.activities()));
    }
    for (int h = 0; h < space.hours(); ++h) {
        theta[space.hour_slot(h)] = clamp(2.0 * (hour[static_cast<std::size_t>(h)] / total - 1.0 / space.hours()));
    }
    return theta;
}

Directions ScriptedProvider::directions(const MismatchReport& report, const StateSpace& space) {
    std::vector<double> score(space.feature_dim(), 0.0);
    for (const auto& m : report) {
        const int s = sign(m.expert_mass - m.learner_mass, 0.0);
        if (s == 0) continue;
        const auto phi = featurize(m.state, space);
        for (std::size_t d = 0; d < score.size(); ++d) score[d] += s * phi[d];
    }
    Directions out(score.size(), 0);
    for (std::size_t d = 0; d < score.size(); ++d) out[d] = sign(score[d], 1e-9);
    return out;
}

int ScriptedProvider::label(const RewardWeights& theta, std::size_t classes) {
    if (classes == 0) return 0;
    const double work = theta.size() > 1 ? theta[to_index(ActivityCategory::Work)] : 0.0;
    const double home = theta.size() > 0 ? theta[to_index(ActivityCategory::Home)] : 0.0;
    const double p = 1.0 / (1.0 + std::exp(-(work - home)));
    const auto k = static_cast<std::size_t>(p * static_cast<double>(classes));
    return static_cast<int>(std::min(k, classes - 1));
}

std::string ScriptedProvider::respond(const ExchangeRequest& request) {
    switch (request.kind) {
    case ExchangeKind::Init:
        return format_list(initial_weights(request.diary_text, *request.space).values);
    case ExchangeKind::Update:
        return format_int_list(directions(*request.report, *request.space));
    case ExchangeKind::Ccr:
        return std::to_string(label(*request.theta, request.label_classes));
    }
    throw ProviderUnavailable("unknown exchange kind");
}

// ---- ReplayProvider -------------------------------------------------------

ReplayProvider::ReplayProvider(const std::vector<GuidanceExchange>& records, ExchangeLog* log)
    : GuidanceProvider(log) {
    for (const auto& r : records) {
        queues_[{r.person_id, r.kind}].push_back(r);
        if (!r.model_name.empty()) model_name_ = r.model_name;
    }
}

std::string ReplayProvider::respond(const ExchangeRequest& request) {
    std::lock_guard lock(mutex_);
    auto it = queues_.find({request.person_id, request.kind});
    if (it == queues_.end() || it->second.empty()) {
        throw ProviderUnavailable("replay log has no further " + std::string(to_string(request.kind)) +
                                  " exchange for '" + request.person_id + "'");
    }
    GuidanceExchange rec = std::move(it->second.front());
    it->second.pop_front();
    if (rec.attempt != request.attempt) {
        throw ProviderUnavailable("replay attempt mismatch for '" + request.person_id + "': logged " +
                                  std::to_string(rec.attempt) + ", requested " + std::to_string(request.attempt));
    }
    if (rec.prompt_text != request.prompt) {
        throw ProviderUnavailable("replay prompt mismatch for '" + request.person_id + "'");
    }
    if (!rec.raw_response) throw ProviderUnavailable("replayed transport failure: " + rec.error);
    return *rec.raw_response;
}

} // namespace silic
