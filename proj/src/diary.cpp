#include "silic/diary.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "silic/errors.hpp"
#include "silic/format.hpp"

namespace silic {

namespace {

std::optional<std::chrono::year_month_day> parse_ymd(std::string_view s) {
    s = trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    long long y = 0, m = 0, d = 0;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) || !parse_int(s.substr(8, 2), d)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

bool parse_bool(std::string_view s, bool& out) {
    const std::string v = to_lower(trim(s));
    if (v == "1" || v == "true" || v == "yes") {
        out = true;
        return true;
    }
    if (v == "0" || v == "false" || v == "no") {
        out = false;
        return true;
    }
    return false;
}

bool parse_optional_nonneg(std::string_view s, std::optional<double>& out) {
    s = trim(s);
    if (s.empty()) {
        out.reset();
        return true;
    }
    double v = 0.0;
    if (!parse_double(s, v) || !(v >= 0.0) || !std::isfinite(v)) return false;
    out = v;
    return true;
}

std::string two_digits(int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

ActivityCategory parse_rendered_activity(std::string_view label) {
    try {
        return map_activity(label);
    } catch (const UnmappedActivity&) {
        if (auto a = activity_from_name(trim(label))) return *a;
        throw;
    }
}

} // namespace

bool is_valid_date(std::string_view iso_day) { return parse_ymd(iso_day).has_value(); }

bool is_weekday(std::string_view iso_day) {
    auto ymd = parse_ymd(iso_day);
    if (!ymd) throw InvalidConfig("unparseable date '" + std::string(iso_day) + "'");
    const std::chrono::weekday wd{std::chrono::sys_days{*ymd}};
    const unsigned c = wd.c_encoding(); // 0 = Sunday
    return c >= 1 && c <= 5;
}

DiaryParseResult parse_diary_file(std::istream& in, bool strict) {
    DiaryParseResult result;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("person_id", "diary file is empty; header row required");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3); // UTF-8 BOM

    const auto header = split_csv_line(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
    for (auto name : kDiaryColumns) {
        if (!col.count(std::string(name))) {
            throw SchemaError(std::string(name), "missing required column '" + std::string(name) + "'");
        }
    }
    const auto first_col = col.find("first_activity");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        auto fail = [&](const std::string& why) {
            if (strict) throw RowError(line_no, why);
            result.row_errors.push_back("line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() < header.size()) {
            fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
            continue;
        }
        auto field = [&](std::string_view name) { return trim(fields[col.at(std::string(name))]); };

        TripRecord r;
        r.person_id = std::string(field("person_id"));
        if (r.person_id.empty()) {
            fail("empty person_id");
            continue;
        }
        r.day = std::string(field("day"));
        if (!is_valid_date(r.day)) {
            fail("unparseable day '" + r.day + "'");
            continue;
        }
        long long minute = 0;
        if (!parse_int(field("depart_minute"), minute)) {
            fail("depart_minute is not an integer");
            continue;
        }
        if (minute < 0 || minute > 1439) {
            fail("depart_minute " + std::to_string(minute) + " out of range [0, 1439]");
            continue;
        }
        r.depart_minute = static_cast<int>(minute);
        r.raw_activity = std::string(field("activity"));
        if (r.raw_activity.empty()) {
            fail("empty activity");
            continue;
        }
        if (!parse_optional_nonneg(field("distance_miles"), r.distance_miles)) {
            fail("distance_miles must be empty or a nonnegative number");
            continue;
        }
        if (!parse_optional_nonneg(field("travel_minutes"), r.travel_minutes)) {
            fail("travel_minutes must be empty or a nonnegative number");
            continue;
        }
        if (!parse_bool(field("is_representative"), r.is_representative)) {
            fail("is_representative must be 0/1/true/false");
            continue;
        }
        if (!parse_bool(field("survey_complete"), r.survey_complete)) {
            fail("survey_complete must be 0/1/true/false");
            continue;
        }
        if (first_col != col.end()) {
            auto v = trim(fields[first_col->second]);
            if (!v.empty()) r.first_activity = std::string(v);
        }
        result.records.push_back(std::move(r));
    }
    return result;
}

DiaryParseResult parse_diary_file(const std::string& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open diary file '" + path + "'");
    return parse_diary_file(in, strict);
}

ActivityCategory map_activity(std::string_view raw_activity) {
    static const std::vector<std::pair<std::string, ActivityCategory>> table = {
        {"home", ActivityCategory::Home},
        {"work", ActivityCategory::Work},
        {"work-related", ActivityCategory::Work},
        {"school", ActivityCategory::Education},
        {"personal business / errand / appointment", ActivityCategory::EscortErrand},
        {"escort", ActivityCategory::EscortErrand},
        {"change mode", ActivityCategory::EscortErrand},
        {"change model", ActivityCategory::EscortErrand},
        {"social / recreational", ActivityCategory::Leisure},
        {"shopping", ActivityCategory::Leisure},
        {"meal", ActivityCategory::Leisure},
        {"other", ActivityCategory::Leisure},
    };
    const std::string key = to_lower(trim(raw_activity));
    for (const auto& [label, cat] : table) {
        if (label == key) return cat;
    }
    throw UnmappedActivity(std::string(raw_activity));
}

std::vector<TripRecord> filter_participants(const std::vector<TripRecord>& records) {
    std::vector<TripRecord> kept;
    std::unordered_map<std::string, std::set<std::string>> days;
    for (const auto& r : records) {
        if (!r.is_representative || !r.survey_complete) continue;
        if (!is_valid_date(r.day) || !is_weekday(r.day)) continue;
        kept.push_back(r);
        days[r.person_id].insert(r.day);
    }
    std::erase_if(kept, [&](const TripRecord& r) { return days[r.person_id].size() < 2; });
    return kept;
}

std::map<std::string, std::vector<TripRecord>> group_by_person(const std::vector<TripRecord>& records) {
    std::map<std::string, std::vector<TripRecord>> out;
    for (const auto& r : records) out[r.person_id].push_back(r);
    for (auto& [_, rs] : out) {
        std::stable_sort(rs.begin(), rs.end(), [](const TripRecord& a, const TripRecord& b) {
            return std::tie(a.day, a.depart_minute) < std::tie(b.day, b.depart_minute);
        });
    }
    return out;
}

Trajectory build_day_trajectory(const std::vector<Departure>& departures, ActivityCategory start,
                                const StateSpace& space) {
    const int hours = space.hours();
    std::vector<std::optional<ActivityCategory>> destination(static_cast<std::size_t>(hours));
    for (const auto& d : departures) {
        const int hour = d.minute / 60;
        if (hour < 0 || hour >= hours) throw InvalidConfig("departure minute outside the day: " + std::to_string(d.minute));
        // last departure in the hour wins; callers pass departures in time order
        destination[static_cast<std::size_t>(hour)] = d.destination;
    }

    Trajectory traj;
    traj.states.reserve(static_cast<std::size_t>(hours));
    traj.actions.reserve(static_cast<std::size_t>(hours));
    State cur{0, start, true, 1};
    for (int t = 0; t < hours; ++t) {
        cur.hour = t;
        traj.states.push_back(cur);
        if (const auto& dest = destination[static_cast<std::size_t>(t)]) {
            traj.actions.push_back(Action::Travel);
            cur.activity = *dest;
            cur.is_first = false;
            cur.count = std::min(cur.count + 1, space.n_max());
        } else {
            traj.actions.push_back(Action::Stay);
        }
    }
    return traj;
}

TrajectoryBuild diary_to_trajectories(const std::vector<TripRecord>& records, const StateSpace& space) {
    TrajectoryBuild out;
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() && records[j].day == records[i].day) ++j;

        std::vector<Departure> deps;
        ActivityCategory start = ActivityCategory::Home;
        if (records[i].first_activity) start = map_activity(*records[i].first_activity);
        for (std::size_t k = i; k < j; ++k) {
            deps.push_back({records[k].depart_minute, map_activity(records[k].raw_activity)});
        }
        if (deps.empty()) {
            out.warnings.push_back("day " + records[i].day + " has no trips; skipped");
        } else {
            Trajectory t = build_day_trajectory(deps, start, space);
            t.person_id = records[i].person_id;
            t.day = records[i].day;
            out.trajectories.push_back(std::move(t));
        }
        i = j;
    }
    return out;
}

std::optional<std::string> check_trajectory(const Trajectory& traj, const StateSpace& space) {
    const auto hours = static_cast<std::size_t>(space.hours());
    if (traj.states.size() != hours || traj.actions.size() != hours) {
        return "trajectory must have " + std::to_string(hours) + " states and actions";
    }
    for (std::size_t t = 0; t < hours; ++t) {
        const State& s = traj.states[t];
        if (!space.contains(s)) return "state " + std::to_string(t) + " outside the state space";
        if (s.hour != static_cast<int>(t)) return "state " + std::to_string(t) + " has hour " + std::to_string(s.hour);
        if (t == 0) {
            if (!s.is_first || s.count != 1) return "hour 0 must be the first activity with count 1";
            continue;
        }
        const State& prev = traj.states[t - 1];
        if (traj.actions[t - 1] == Action::Stay) {
            if (s.activity != prev.activity || s.is_first != prev.is_first || s.count != prev.count) {
                return "Stay at hour " + std::to_string(t - 1) + " changed the state";
            }
        } else {
            if (s.is_first || s.count != std::min(prev.count + 1, space.n_max())) {
                return "Travel at hour " + std::to_string(t - 1) + " did not advance is_first/count";
            }
        }
    }
    return std::nullopt;
}

EmpiricalDynamics estimate_empirical_dynamics(const std::vector<Trajectory>& trajectories, const StateSpace& space) {
    if (trajectories.empty()) throw InsufficientData("no trajectories to estimate dynamics from");
    const auto n = static_cast<std::size_t>(space.activities());
    std::vector<std::vector<double>> counts(n, std::vector<double>(n, 0.0));
    std::map<std::size_t, double> starts;

    for (const auto& traj : trajectories) {
        if (traj.states.empty()) continue;
        starts[space.index(traj.states.front())] += 1.0;
        for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
            if (traj.actions[t] != Action::Travel) continue;
            counts[static_cast<std::size_t>(to_index(traj.states[t].activity))]
                  [static_cast<std::size_t>(to_index(traj.states[t + 1].activity))] += 1.0;
        }
    }

    std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a) {
        double total = 0.0;
        for (double c : counts[a]) total += c;
        for (std::size_t b = 0; b < n; ++b) {
            matrix[a][b] = total == 0.0 ? 1.0 / static_cast<double>(n)
                                        : (counts[a][b] + kTransitionSmoothing) /
                                              (total + static_cast<double>(n) * kTransitionSmoothing);
        }
    }

    EmpiricalDynamics dyn{TransitionModel(std::move(matrix)), {}};
    double total = 0.0;
    for (const auto& [_, c] : starts) total += c;
    for (const auto& [idx, c] : starts) dyn.initial_distribution.push_back({space.state(idx), c / total});
    return dyn;
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
    nlohmann::json states = nlohmann::json::array();
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& s : traj.states) {
        states.push_back({s.hour, to_index(s.activity), s.is_first ? 1 : 0, s.count});
    }
    for (auto a : traj.actions) actions.push_back(to_index(a));
    return {{"person_id", traj.person_id}, {"day", traj.day}, {"states", states}, {"actions", actions}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    try {
        t.person_id = j.at("person_id").get<std::string>();
        t.day = j.at("day").get<std::string>();
        for (const auto& s : j.at("states")) {
            if (!s.is_array() || s.size() != 4) throw ParseError("state must be [h, a, f, n]");
            t.states.push_back(State{s[0].get<int>(), activity_from_index(s[1].get<int>()), s[2].get<int>() != 0,
                                     s[3].get<int>()});
        }
        for (const auto& a : j.at("actions")) {
            const int v = a.get<int>();
            if (v != 0 && v != 1) throw ParseError("action must be 0 or 1");
            t.actions.push_back(static_cast<Action>(v));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed trajectory document: ") + e.what());
    }
    return t;
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories) {
    for (const auto& t : trajectories) out << trajectory_to_json(t).dump() << '\n';
}

std::vector<Trajectory> read_trajectories(std::istream& in) {
    std::vector<Trajectory> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid trajectory JSON: ") + e.what());
        }
    }
    return out;
}

nlohmann::json dynamics_to_json(const EmpiricalDynamics& dyn) {
    nlohmann::json init = nlohmann::json::array();
    for (const auto& m : dyn.initial_distribution) {
        init.push_back({{"state", {m.state.hour, to_index(m.state.activity), m.state.is_first ? 1 : 0, m.state.count}},
                        {"probability", m.probability}});
    }
    return {{"activity_matrix", dyn.transition.matrix()}, {"initial_distribution", init}};
}

std::string render_diary(const std::vector<TripRecord>& records) {
    std::ostringstream out;
    int day_no = 0;
    std::string last_day;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (i == 0 || r.day != last_day) {
            ++day_no;
            last_day = r.day;
        }
        out << "Day " << day_no << ", " << two_digits(r.depart_minute / 60) << ':' << two_digits(r.depart_minute % 60)
            << ": depart to " << r.raw_activity << '\n';
    }
    return out.str();
}

std::string render_diary(const std::vector<Trajectory>& trajectories) {
    std::ostringstream out;
    for (std::size_t d = 0; d < trajectories.size(); ++d) {
        const auto& t = trajectories[d];
        for (std::size_t h = 0; h + 1 < t.states.size(); ++h) {
            if (t.actions[h] != Action::Travel) continue;
            out << "Day " << d + 1 << ", " << two_digits(static_cast<int>(h)) << ":00: depart to "
                << activity_name(t.states[h + 1].activity) << '\n';
        }
    }
    return out.str();
}

std::vector<std::vector<Departure>> parse_rendered_diary(std::string_view text) {
    std::map<long long, std::vector<Departure>> days;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::string_view l = trim(line);
        if (l.empty()) continue;
        // Day {d}, {HH:MM}: depart to {activity}
        const auto comma = l.find(',');
        const auto marker = l.find(": depart to ");
        if (l.rfind("Day ", 0) != 0 || comma == std::string_view::npos || marker == std::string_view::npos) {
            throw ParseError("malformed diary line: " + std::string(l));
        }
        long long day = 0, hh = 0, mm = 0;
        const auto time = trim(l.substr(comma + 1, marker - comma - 1));
        if (!parse_int(l.substr(4, comma - 4), day) || time.size() != 5 || time[2] != ':' ||
            !parse_int(time.substr(0, 2), hh) || !parse_int(time.substr(3, 2), mm)) {
            throw ParseError("malformed diary line: " + std::string(l));
        }
        days[day].push_back({static_cast<int>(hh * 60 + mm), parse_rendered_activity(l.substr(marker + 12))});
    }
    std::vector<std::vector<Departure>> out;
    for (auto& [_, deps] : days) out.push_back(std::move(deps));
    return out;
}

} // namespace silic
