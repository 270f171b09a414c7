#include "silic/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "silic/errors.hpp"
#include "silic/format.hpp"

namespace silic {

namespace {

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

enum class Purpose { Work, School, Shopping, SocialRecreation, Errand, Escort, Other };

// Finer than the five MDP categories: shopping and social trips are counted
// apart, so this reads the raw label.
Purpose purpose_of(std::string_view raw) {
    const std::string v = to_lower(trim(raw));
    if (v == "work" || v == "work-related") return Purpose::Work;
    if (v == "school") return Purpose::School;
    if (v == "shopping") return Purpose::Shopping;
    if (v == "social / recreational") return Purpose::SocialRecreation;
    if (v == "personal business / errand / appointment") return Purpose::Errand;
    if (v == "escort") return Purpose::Escort;
    return Purpose::Other;
}

std::size_t feature_index(std::string_view name) {
    for (std::size_t i = 0; i < kMobilityFeatureNames.size(); ++i) {
        if (kMobilityFeatureNames[i] == name) return i;
    }
    throw InvalidConfig("unknown mobility feature '" + std::string(name) + "'");
}

} // namespace

double MobilityFeatures::operator[](std::string_view name) const { return values[feature_index(name)]; }

MobilityFeatures extract_features(const std::vector<TripRecord>& records, int n_max) {
    if (records.empty()) throw InsufficientData("no trips to extract features from");
    MobilityFeatures out;
    out.person_id = records.front().person_id;

    std::vector<double> distances, durations;
    std::map<std::string, std::vector<int>> days; // day -> departure minutes
    std::map<std::string, int> destinations;
    std::array<int, 7> purposes{};
    for (const auto& r : records) {
        if (r.distance_miles) distances.push_back(*r.distance_miles);
        if (r.travel_minutes) durations.push_back(*r.travel_minutes);
        days[r.day].push_back(r.depart_minute);
        ++destinations[to_lower(trim(r.raw_activity))];
        ++purposes[static_cast<std::size_t>(purpose_of(r.raw_activity))];
    }

    std::vector<double> trips_per_day, first_dep, last_dep;
    for (const auto& [_, minutes] : days) {
        trips_per_day.push_back(static_cast<double>(minutes.size()));
        first_dep.push_back(*std::min_element(minutes.begin(), minutes.end()) / 60.0);
        last_dep.push_back(*std::max_element(minutes.begin(), minutes.end()) / 60.0);
    }

    const double n = static_cast<double>(records.size());
    double entropy = 0.0;
    for (const auto& [_, count] : destinations) {
        const double p = count / n;
        entropy -= p * std::log(p);
    }

    // Occupancy hours come from the same hourly reconstruction the IRL uses.
    const StateSpace space(n_max);
    std::vector<TripRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(), [](const TripRecord& a, const TripRecord& b) {
        return a.day != b.day ? a.day < b.day : a.depart_minute < b.depart_minute;
    });
    const TrajectoryBuild build = diary_to_trajectories(sorted, space);
    double home_hours = 0.0, work_hours = 0.0;
    for (const auto& t : build.trajectories) {
        for (const auto& s : t.states) {
            if (s.activity == ActivityCategory::Home) home_hours += 1.0;
            if (s.activity == ActivityCategory::Work) work_hours += 1.0;
        }
    }
    const double n_days = std::max<double>(1.0, static_cast<double>(build.trajectories.size()));

    const Moments dist = moments(distances), dur = moments(durations), per_day = moments(trips_per_day);
    auto pct = [&](Purpose p) { return 100.0 * purposes[static_cast<std::size_t>(p)] / n; };
    out.values = {dist.mean,
                  dist.stddev,
                  per_day.mean,
                  per_day.stddev,
                  entropy,
                  pct(Purpose::Work),
                  pct(Purpose::School),
                  pct(Purpose::Shopping),
                  pct(Purpose::SocialRecreation),
                  pct(Purpose::Errand),
                  pct(Purpose::Escort),
                  dur.mean,
                  dur.stddev,
                  moments(first_dep).mean,
                  moments(last_dep).mean,
                  home_hours / n_days,
                  work_hours / n_days};
    return out;
}

std::vector<double> anova_f_scores(const std::vector<std::vector<double>>& samples, const std::vector<int>& labels) {
    if (samples.size() != labels.size()) throw InvalidLabel("samples and labels differ in length");
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    if (groups.size() < 2) throw InvalidLabel("ANOVA needs at least two classes");

    const std::size_t n = samples.size();
    const std::size_t dims = samples.front().size();
    const double df_between = static_cast<double>(groups.size() - 1);
    const double df_within = static_cast<double>(n - groups.size());

    std::vector<double> scores(dims, 0.0);
    for (std::size_t d = 0; d < dims; ++d) {
        double grand = 0.0;
        for (const auto& row : samples) {
            if (row.size() != dims) throw InvalidConfig("ragged feature matrix");
            grand += row[d];
        }
        grand /= static_cast<double>(n);

        double ssb = 0.0, ssw = 0.0;
        for (const auto& [_, idx] : groups) {
            double mean = 0.0;
            for (std::size_t i : idx) mean += samples[i][d];
            mean /= static_cast<double>(idx.size());
            ssb += static_cast<double>(idx.size()) * (mean - grand) * (mean - grand);
            for (std::size_t i : idx) ssw += (samples[i][d] - mean) * (samples[i][d] - mean);
        }
        if (ssw == 0.0) {
            scores[d] = ssb == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        } else if (df_within == 0.0) {
            scores[d] = 0.0; // unreachable: one sample per class forces ssw = 0
        } else {
            scores[d] = (ssb / df_between) / (ssw / df_within);
        }
    }
    return scores;
}

double score_percentile(std::vector<double> scores, double percentile) {
    if (scores.empty()) throw InvalidConfig("percentile of an empty score list");
    if (!(percentile >= 0.0 && percentile <= 100.0)) throw InvalidConfig("percentile must lie in [0, 100]");
    std::sort(scores.begin(), scores.end());
    const double rank = percentile / 100.0 * static_cast<double>(scores.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, scores.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    if (frac == 0.0 || std::isinf(scores[hi])) return scores[lo];
    return scores[lo] + frac * (scores[hi] - scores[lo]);
}

FeatureSelection select_top_features(const std::vector<std::string>& names, const std::vector<double>& scores,
                                     double percentile) {
    if (names.size() != scores.size()) throw InvalidConfig("names and scores differ in length");
    FeatureSelection out;
    out.threshold = score_percentile(scores, percentile);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (scores[i] > out.threshold) out.names.push_back(names[i]);
    }
    return out;
}

void write_feature_matrix(std::ostream& out, const std::vector<MobilityFeatures>& features,
                          const std::map<std::string, ContextProfile>& contexts) {
    out << "person_id";
    for (auto name : kMobilityFeatureNames) out << ',' << name;
    for (std::size_t i = 1; i < kContextColumns.size(); ++i) out << ',' << kContextColumns[i];
    out << '\n';
    for (const auto& f : features) {
        out << csv_escape(f.person_id);
        for (double v : f.values) out << ',' << format_roundtrip(v);
        const auto it = contexts.find(f.person_id);
        if (it == contexts.end()) {
            out << std::string(kContextColumns.size() - 1, ',') << '\n';
            continue;
        }
        const ContextProfile& c = it->second;
        out << ',' << c.urban_indicator << ',' << format_roundtrip(c.population_density) << ','
            << format_roundtrip(c.distance_to_transit) << ',' << format_roundtrip(c.network_density) << ','
            << format_roundtrip(c.housing_density) << ',' << format_roundtrip(c.residential_proportion) << ','
            << format_roundtrip(c.commercial_proportion) << ',' << format_roundtrip(c.educational_proportion) << ','
            << format_roundtrip(c.recreational_proportion) << ',' << csv_escape(housing_type_name(c.housing_type))
            << '\n';
    }
}

nlohmann::json selection_manifest(const std::string& attribute, const FeatureSelection& selection,
                                  const std::vector<std::string>& names, const std::vector<double>& scores,
                                  double percentile) {
    nlohmann::json all = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        // JSON has no infinity; keep the sentinel readable
        all[names[i]] = std::isinf(scores[i]) ? nlohmann::json("inf") : nlohmann::json(scores[i]);
    }
    return {{"attribute", attribute},
            {"percentile", percentile},
            {"threshold", std::isinf(selection.threshold) ? nlohmann::json("inf") : nlohmann::json(selection.threshold)},
            {"selected", selection.names},
            {"scores", all},
            {"units", {{"home_time", "hours"}, {"work_time", "hours"}, {"first_departure_time", "hour of day"},
                       {"last_departure_time", "hour of day"}, {"trip_distance", "miles"}, {"travel_time", "minutes"}}}};
}

} // namespace silic
