#pragma once

// Travel-diary ingestion: CSV parsing, participant filters, activity
// mapping, and conversion of person-days into hourly expert trajectories.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "silic/mdp.hpp"

namespace silic {

struct TripRecord {
    std::string person_id;
    std::string day; // YYYY-MM-DD
    int depart_minute = 0;
    std::string raw_activity;
    std::optional<double> distance_miles;
    std::optional<double> travel_minutes;
    bool is_representative = true;
    bool survey_complete = true;
    /// Optional explicit occupied activity at hour 0 of this day.
    std::optional<std::string> first_activity;
};

inline constexpr std::array<std::string_view, 8> kDiaryColumns = {
    "person_id", "day", "depart_minute", "activity", "distance_miles", "travel_minutes",
    "is_representative", "survey_complete"};

struct DiaryParseResult {
    std::vector<TripRecord> records;
    std::vector<std::string> row_errors; // "line N: reason"
};

/// Throws SchemaError for a missing column. Bad rows are collected in
/// `row_errors`, or thrown as RowError when `strict`.
DiaryParseResult parse_diary_file(std::istream& in, bool strict = false);
DiaryParseResult parse_diary_file(const std::string& path, bool strict = false);

/// Maps a survey destination purpose onto the five activity categories.
/// Throws UnmappedActivity for unknown labels.
ActivityCategory map_activity(std::string_view raw_activity);

/// True for Monday..Friday. Throws InvalidConfig for an unparseable date.
bool is_weekday(std::string_view iso_day);
bool is_valid_date(std::string_view iso_day);

/// Keeps representative, complete, weekday records, then drops persons with
/// fewer than two distinct remaining days.
std::vector<TripRecord> filter_participants(const std::vector<TripRecord>& records);

/// Records grouped by person (ordered by person_id), each sorted by
/// (day, depart_minute) with file order kept for ties.
std::map<std::string, std::vector<TripRecord>> group_by_person(const std::vector<TripRecord>& records);

struct Trajectory {
    std::string person_id;
    std::string day;
    std::vector<State> states;   // states[t].hour == t
    std::vector<Action> actions; // one per hour

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// One departure within a day, already mapped to its destination category.
struct Departure {
    int minute = 0;
    ActivityCategory destination = ActivityCategory::Home;
};

/// Hourly trajectory for one day. Several departures within an hour collapse
/// into a single Travel whose destination is the last of them.
Trajectory build_day_trajectory(const std::vector<Departure>& departures, ActivityCategory start,
                                const StateSpace& space);

struct TrajectoryBuild {
    std::vector<Trajectory> trajectories;
    std::vector<std::string> warnings;
};

/// Records of a single person sorted by (day, depart_minute).
TrajectoryBuild diary_to_trajectories(const std::vector<TripRecord>& records, const StateSpace& space);

/// Empty when the trajectory is structurally valid for `space`.
std::optional<std::string> check_trajectory(const Trajectory& traj, const StateSpace& space);

struct InitialMass {
    State state;
    double probability = 0.0;
};

struct EmpiricalDynamics {
    TransitionModel transition;
    std::vector<InitialMass> initial_distribution; // hour-0 states only, sorted by state index
};

inline constexpr double kTransitionSmoothing = 1e-3;

/// Smoothed travel frequencies and the starting-state distribution.
/// Throws InsufficientData on an empty list.
EmpiricalDynamics estimate_empirical_dynamics(const std::vector<Trajectory>& trajectories, const StateSpace& space);

nlohmann::json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);
void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories(std::istream& in);

nlohmann::json dynamics_to_json(const EmpiricalDynamics& dyn);

/// Canonical diary text: one line per trip, "Day {d}, {HH:MM}: depart to {activity}".
std::string render_diary(const std::vector<TripRecord>& records);
/// Same format from trajectories alone (Travel hours at HH:00, category names).
std::string render_diary(const std::vector<Trajectory>& trajectories);

/// Parses canonical diary text back into per-day departures.
std::vector<std::vector<Departure>> parse_rendered_diary(std::string_view text);

} // namespace silic
