#pragma once

// Second stage: prompts that turn learned reward weights plus the home
// neighbourhood context into a sociodemographic label.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "silic/guidance.hpp"
#include "silic/mdp.hpp"

namespace silic {

enum class HousingType { ResidentialCondominium, SingleFamilyUnit, MultiUnitSmall, MultiUnitLarge };

/// Display name, e.g. "Multi-Unit (2-4)".
std::string_view housing_type_name(HousingType t);
/// Accepts the display name or its snake_case key ("multi_unit_2_4"),
/// case-insensitively. Throws InvalidConfig.
HousingType housing_type_from_string(std::string_view s);

struct ContextProfile {
    std::string person_id;
    int urban_indicator = 1;
    double population_density = 0.0; // people per square mile
    double distance_to_transit = 0.0; // metres
    double network_density = 0.0;    // road km per km^2
    double housing_density = 0.0;    // housing units per square mile
    double residential_proportion = 0.0;
    double commercial_proportion = 0.0;
    double educational_proportion = 0.0;
    double recreational_proportion = 0.0;
    HousingType housing_type = HousingType::SingleFamilyUnit;

    /// Throws InvalidConfig when a density is negative or a proportion leaves [0, 1].
    void validate() const;
};

inline constexpr std::array<std::string_view, 11> kContextColumns = {
    "person_id",          "urban_indicator",        "population_density",    "distance_to_transit",
    "network_density",    "housing_density",        "residential_proportion", "commercial_proportion",
    "educational_proportion", "recreational_proportion", "housing_type"};

/// One profile per row, keyed by person_id. Throws SchemaError / RowError.
std::map<std::string, ContextProfile> read_contexts(std::istream& in);
std::map<std::string, ContextProfile> read_contexts(const std::string& path);

enum class Attribute { Gender, Age, Income, Employment };

std::string_view attribute_key(Attribute a); // "gender", "age", "income", "employment"
Attribute attribute_from_key(std::string_view key);
std::vector<Attribute> all_attributes();

struct AttributeTask {
    Attribute attribute = Attribute::Gender;
    std::vector<std::string> classes;

    /// Wording used inside prompts ("income level", "employment status").
    std::string_view prompt_name() const;
    int class_index(std::string_view label) const; // -1 if absent
};

/// The fixed class scheme for an attribute.
AttributeTask task_for(Attribute a);

enum class PredictionMode { Ccr, Cot, Direct };
std::string_view to_string(PredictionMode m);
PredictionMode prediction_mode_from_string(std::string_view s);

/// Named rendering of the 31 weights, one "  name: value" line each.
std::string render_theta_block(const RewardWeights& theta);
std::string render_context_block(const ContextProfile& context);

/// Throws PreconditionError unless theta has 31 entries.
std::string build_ccr_prompt(const RewardWeights& theta, const ContextProfile& context, const AttributeTask& task);
/// mode must be Cot or Direct (PreconditionError otherwise).
std::string build_ablation_prompt(const RewardWeights& theta, const ContextProfile& context, const AttributeTask& task,
                                  PredictionMode mode);
std::string build_prediction_prompt(const RewardWeights& theta, const ContextProfile& context,
                                    const AttributeTask& task, PredictionMode mode);

/// First standalone integer in `text`, checked against the task's classes.
int parse_label(std::string_view text, const AttributeTask& task);

struct PersonWeights {
    std::string person_id;
    RewardWeights theta;
};

struct Prediction {
    std::string person_id;
    Attribute attribute = Attribute::Gender;
    PredictionMode mode = PredictionMode::Ccr;
    std::optional<int> label_index; // empty when unresolved
    int attempts = 0;
    std::string error; // "context-missing: ...", parse or provider failure

    bool unresolved() const { return !label_index.has_value(); }
};

struct PredictionBatch {
    std::vector<Prediction> predictions; // sorted by person_id
    int unresolved = 0;
    int missing_context = 0;
};

/// One record per person whatever happens to the others; persons without a
/// context row are reported and skipped.
PredictionBatch predict_batch(std::vector<PersonWeights> models, const std::map<std::string, ContextProfile>& contexts,
                              GuidanceProvider& provider, const AttributeTask& task, PredictionMode mode,
                              int workers = 1);

/// Header `person_id,attribute,mode,label_index,label_name,unresolved`.
void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions_csv(std::istream& in);

} // namespace silic
