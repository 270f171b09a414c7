#pragma once

// Hand-crafted mobility features per person and one-way ANOVA feature
// selection over them.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "silic/ccr.hpp"
#include "silic/diary.hpp"

namespace silic {

inline constexpr std::array<std::string_view, 17> kMobilityFeatureNames = {
    "trip_distance",      "std_trip_distance",   "num_trips_per_day",   "std_num_trips_per_day",
    "destination_entropy", "pct_work_trips",     "pct_school_trips",    "pct_shopping_trips",
    "pct_social_recreation_trips", "pct_errand_trips", "pct_escort_trips", "travel_time",
    "std_travel_time",    "first_departure_time", "last_departure_time", "home_time",
    "work_time"};

struct MobilityFeatures {
    std::string person_id;
    std::array<double, kMobilityFeatureNames.size()> values{};

    double operator[](std::string_view name) const;
};

/// Features for one person's (already filtered) trips. Distances and travel
/// times average over the trips that report them and are 0 when none do;
/// standard deviations are population (divide by n). Departure times are in
/// fractional hours, home/work time in hours per day. Throws
/// InsufficientData when there are no trips.
MobilityFeatures extract_features(const std::vector<TripRecord>& records, int n_max = kDefaultNMax);

/// One-way ANOVA F per column of `samples` (rows are people). Degenerate
/// columns: F = 0 when both sums of squares vanish, +inf when only the
/// within-class one does. Throws InvalidLabel with fewer than two classes.
std::vector<double> anova_f_scores(const std::vector<std::vector<double>>& samples, const std::vector<int>& labels);

/// Linear-interpolation percentile (0-100). When the upper neighbour is
/// +inf the lower order statistic is used.
double score_percentile(std::vector<double> scores, double percentile);

struct FeatureSelection {
    std::vector<std::string> names; // input order
    double threshold = 0.0;
};

/// Names whose score is strictly above the `percentile`-th percentile.
FeatureSelection select_top_features(const std::vector<std::string>& names, const std::vector<double>& scores,
                                     double percentile = 60.0);

/// person_id, the 17 features, then the context columns (blank when a
/// person has no context row).
void write_feature_matrix(std::ostream& out, const std::vector<MobilityFeatures>& features,
                          const std::map<std::string, ContextProfile>& contexts);

nlohmann::json selection_manifest(const std::string& attribute, const FeatureSelection& selection,
                                  const std::vector<std::string>& names, const std::vector<double>& scores,
                                  double percentile);

} // namespace silic
