#include "silic/ccr.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "silic/concurrency.hpp"
#include "silic/errors.hpp"
#include "silic/format.hpp"

namespace silic {

namespace {

constexpr std::size_t kThetaDim = 31;

constexpr std::string_view kCcrTemplate =
    R"(Task Description
You are an expert in travel behavior modeling. In this task, you will apply the Theory of Planned Behavior (TPB) in reverse to infer {attribute} from the individual’s intention, as captured by the learned reward weights, and environmental context.

Input:
- Reward Weights: θ, a 31-dimensional vector representing the individual’s inferred preferences over activities, time-of-day, and trip structure.
{theta}
- Environmental Context: External attributes such as urban/rural, population density, distance to transit, and housing characteristics.
{context}

Objective
Predict the individual's {attribute} by interpreting the beliefs encoded in θ, supported by the environmental context.

Instructions:
1. Step 1: Belief Inference
   Analyze the reward weights to identify the individual's underlying attitude, subjective norm, and perceived behavioral control.
2. Step 2: Sociodemographic Prediction
   Combine the inferred beliefs with the provided environmental context to predict the individual's {attribute}.

Follow the above two steps in order when generating your prediction.

Label Options:
{labels}

Output Format
Return only the predicted label (e.g., 0, 1, or 2) corresponding to the target category. No explanation or additional formatting should be included.
)";

// The ablations keep the input blocks and the output contract and only
// change what the model is told to do in between.
constexpr std::string_view kDirectTemplate =
    R"(Task Description
You are an expert in travel behavior modeling. In this task, you will infer {attribute} from the individual’s learned reward weights and environmental context.

Input:
- Reward Weights: θ, a 31-dimensional vector representing the individual’s inferred preferences over activities, time-of-day, and trip structure.
{theta}
- Environmental Context: External attributes such as urban/rural, population density, distance to transit, and housing characteristics.
{context}

Objective
Predict the individual's {attribute} directly from the reward weights and the environmental context.

Label Options:
{labels}

Output Format
Return only the predicted label (e.g., 0, 1, or 2) corresponding to the target category. No explanation or additional formatting should be included.
)";

constexpr std::string_view kCotTemplate =
    R"(Task Description
You are an expert in travel behavior modeling. In this task, you will infer {attribute} from the individual’s learned reward weights and environmental context.

Input:
- Reward Weights: θ, a 31-dimensional vector representing the individual’s inferred preferences over activities, time-of-day, and trip structure.
{theta}
- Environmental Context: External attributes such as urban/rural, population density, distance to transit, and housing characteristics.
{context}

Objective
Predict the individual's {attribute} from the reward weights and the environmental context.

Instructions:
Let's think step by step. Reason through the reward weights and the environmental context one step at a time before settling on the individual's {attribute}.

Label Options:
{labels}

Output Format
Return only the predicted label (e.g., 0, 1, or 2) corresponding to the target category. No explanation or additional formatting should be included.
)";

std::string replace_all(std::string text, std::string_view slot, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
    return text;
}

std::string fill(std::string_view tmpl, const RewardWeights& theta, const ContextProfile& context,
                 const AttributeTask& task) {
    if (theta.size() != kThetaDim) {
        throw PreconditionError("prediction prompts need 31 weights, got " + std::to_string(theta.size()));
    }
    std::string labels;
    for (std::size_t k = 0; k < task.classes.size(); ++k) {
        if (k) labels += '\n';
        labels += "  " + std::to_string(k) + ": " + task.classes[k];
    }
    // theta and context first: their values never contain braces, so later
    // slots cannot be confused with rendered text
    std::string out = replace_all(std::string(tmpl), "{theta}", render_theta_block(theta));
    out = replace_all(std::move(out), "{context}", render_context_block(context));
    out = replace_all(std::move(out), "{labels}", labels);
    return replace_all(std::move(out), "{attribute}", task.prompt_name());
}

double field_number(const std::vector<std::string>& row, int col, std::size_t line, std::string_view name) {
    double v = 0.0;
    if (col < 0 || static_cast<std::size_t>(col) >= row.size() || !parse_double(trim(row[col]), v)) {
        throw RowError(line, std::string(name) + " must be a number");
    }
    return v;
}

} // namespace

std::string_view housing_type_name(HousingType t) {
    switch (t) {
    case HousingType::ResidentialCondominium: return "Residential Condominium";
    case HousingType::SingleFamilyUnit: return "Single Family Unit";
    case HousingType::MultiUnitSmall: return "Multi-Unit (2-4)";
    case HousingType::MultiUnitLarge: return "Multi-Unit (>5)";
    }
    return "Single Family Unit";
}

HousingType housing_type_from_string(std::string_view s) {
    const std::string v = to_lower(trim(s));
    static const std::vector<std::pair<std::string, HousingType>> names = {
        {"residential condominium", HousingType::ResidentialCondominium},
        {"residential_condominium", HousingType::ResidentialCondominium},
        {"single family unit", HousingType::SingleFamilyUnit},
        {"single_family_unit", HousingType::SingleFamilyUnit},
        {"multi-unit (2-4)", HousingType::MultiUnitSmall},
        {"multi_unit_2_4", HousingType::MultiUnitSmall},
        {"multi-unit (>5)", HousingType::MultiUnitLarge},
        {"multi_unit_5_plus", HousingType::MultiUnitLarge},
    };
    for (const auto& [name, t] : names) {
        if (v == name) return t;
    }
    throw InvalidConfig("unknown housing_type '" + std::string(s) + "'");
}

void ContextProfile::validate() const {
    if (urban_indicator != 0 && urban_indicator != 1) throw InvalidConfig("urban_indicator must be 0 or 1");
    const std::pair<std::string_view, double> densities[] = {{"population_density", population_density},
                                                             {"distance_to_transit", distance_to_transit},
                                                             {"network_density", network_density},
                                                             {"housing_density", housing_density}};
    for (const auto& [name, v] : densities) {
        if (!(v >= 0.0)) throw InvalidConfig(std::string(name) + " must be nonnegative");
    }
    const std::pair<std::string_view, double> shares[] = {{"residential_proportion", residential_proportion},
                                                          {"commercial_proportion", commercial_proportion},
                                                          {"educational_proportion", educational_proportion},
                                                          {"recreational_proportion", recreational_proportion}};
    for (const auto& [name, v] : shares) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidConfig(std::string(name) + " must lie in [0, 1]");
    }
}

std::map<std::string, ContextProfile> read_contexts(std::istream& in) {
    const CsvTable table = read_csv(in, kContextColumns);
    auto col = [&](std::string_view name) { return table.column(name); };
    std::map<std::string, ContextProfile> out;
    for (const auto& [line, row] : table.rows) {
        if (row.size() != table.header.size()) {
            throw RowError(line, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                     std::to_string(row.size()));
        }
        ContextProfile c;
        c.person_id = std::string(trim(row[col("person_id")]));
        if (c.person_id.empty()) throw RowError(line, "person_id is empty");
        const double urban = field_number(row, col("urban_indicator"), line, "urban_indicator");
        c.urban_indicator = static_cast<int>(urban);
        if (urban != 0.0 && urban != 1.0) throw RowError(line, "urban_indicator must be 0 or 1");
        c.population_density = field_number(row, col("population_density"), line, "population_density");
        c.distance_to_transit = field_number(row, col("distance_to_transit"), line, "distance_to_transit");
        c.network_density = field_number(row, col("network_density"), line, "network_density");
        c.housing_density = field_number(row, col("housing_density"), line, "housing_density");
        c.residential_proportion = field_number(row, col("residential_proportion"), line, "residential_proportion");
        c.commercial_proportion = field_number(row, col("commercial_proportion"), line, "commercial_proportion");
        c.educational_proportion = field_number(row, col("educational_proportion"), line, "educational_proportion");
        c.recreational_proportion =
            field_number(row, col("recreational_proportion"), line, "recreational_proportion");
        try {
            c.housing_type = housing_type_from_string(row[col("housing_type")]);
            c.validate();
        } catch (const InvalidConfig& e) {
            throw RowError(line, e.what());
        }
        if (!out.emplace(c.person_id, c).second) throw RowError(line, "duplicate person_id '" + c.person_id + "'");
    }
    return out;
}

std::map<std::string, ContextProfile> read_contexts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open context file '" + path + "'");
    return read_contexts(in);
}

std::string_view attribute_key(Attribute a) {
    switch (a) {
    case Attribute::Gender: return "gender";
    case Attribute::Age: return "age";
    case Attribute::Income: return "income";
    case Attribute::Employment: return "employment";
    }
    return "gender";
}

Attribute attribute_from_key(std::string_view key) {
    for (Attribute a : all_attributes()) {
        if (to_lower(trim(key)) == attribute_key(a)) return a;
    }
    throw InvalidConfig("unknown attribute '" + std::string(key) + "' (expected gender, age, income or employment)");
}

std::vector<Attribute> all_attributes() {
    return {Attribute::Gender, Attribute::Age, Attribute::Income, Attribute::Employment};
}

std::string_view AttributeTask::prompt_name() const {
    switch (attribute) {
    case Attribute::Gender: return "gender";
    case Attribute::Age: return "age";
    case Attribute::Income: return "income level";
    case Attribute::Employment: return "employment status";
    }
    return "gender";
}

int AttributeTask::class_index(std::string_view label) const {
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] == label) return static_cast<int>(k);
    }
    return -1;
}

AttributeTask task_for(Attribute a) {
    switch (a) {
    case Attribute::Gender: return {a, {"Male", "Female"}};
    case Attribute::Age: return {a, {"18-44", "45-64", "65+"}};
    // household income, standing in for the individual's
    case Attribute::Income: return {a, {"<50k", "50-100k", "100k+"}};
    case Attribute::Employment: return {a, {"unemployed", "employed", "retired"}};
    }
    return {a, {}};
}

std::string_view to_string(PredictionMode m) {
    switch (m) {
    case PredictionMode::Ccr: return "ccr";
    case PredictionMode::Cot: return "cot";
    case PredictionMode::Direct: return "direct";
    }
    return "ccr";
}

PredictionMode prediction_mode_from_string(std::string_view s) {
    const std::string v = to_lower(trim(s));
    if (v == "ccr") return PredictionMode::Ccr;
    if (v == "cot") return PredictionMode::Cot;
    if (v == "direct") return PredictionMode::Direct;
    throw InvalidConfig("unknown mode '" + std::string(s) + "' (expected ccr, cot or direct)");
}

std::string render_theta_block(const RewardWeights& theta) {
    static const std::vector<std::string> names = StateSpace(kDefaultNMax).feature_names();
    if (theta.size() != names.size()) {
        throw PreconditionError("expected " + std::to_string(names.size()) + " weights, got " +
                                std::to_string(theta.size()));
    }
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += '\n';
        out += "  " + names[i] + ": " + format_fixed(theta[i], 6);
    }
    return out;
}

std::string render_context_block(const ContextProfile& c) {
    std::string out;
    out += "  urban_rural: " + std::string(c.urban_indicator ? "urban" : "rural") + '\n';
    out += "  population_density: " + format_roundtrip(c.population_density) + " people per square mile\n";
    out += "  distance_to_transit: " + format_roundtrip(c.distance_to_transit) + " m to the nearest public transit stop\n";
    out += "  network_density: " + format_roundtrip(c.network_density) + " km of road per km² of area\n";
    out += "  housing_density: " + format_roundtrip(c.housing_density) + " housing units per square mile\n";
    out += "  residential_proportion: " + format_roundtrip(c.residential_proportion) + '\n';
    out += "  commercial_proportion: " + format_roundtrip(c.commercial_proportion) + '\n';
    out += "  educational_proportion: " + format_roundtrip(c.educational_proportion) + '\n';
    out += "  recreational_proportion: " + format_roundtrip(c.recreational_proportion) + '\n';
    out += "  housing_type: " + std::string(housing_type_name(c.housing_type));
    return out;
}

std::string build_ccr_prompt(const RewardWeights& theta, const ContextProfile& context, const AttributeTask& task) {
    return fill(kCcrTemplate, theta, context, task);
}

std::string build_ablation_prompt(const RewardWeights& theta, const ContextProfile& context, const AttributeTask& task,
                                  PredictionMode mode) {
    switch (mode) {
    case PredictionMode::Direct: return fill(kDirectTemplate, theta, context, task);
    case PredictionMode::Cot: return fill(kCotTemplate, theta, context, task);
    case PredictionMode::Ccr: break;
    }
    throw PreconditionError("ablation prompts are for the cot and direct modes");
}

std::string build_prediction_prompt(const RewardWeights& theta, const ContextProfile& context,
                                    const AttributeTask& task, PredictionMode mode) {
    return mode == PredictionMode::Ccr ? build_ccr_prompt(theta, context, task)
                                       : build_ablation_prompt(theta, context, task, mode);
}

int parse_label(std::string_view text, const AttributeTask& task) {
    return parse_label_index(text, task.classes.size());
}

PredictionBatch predict_batch(std::vector<PersonWeights> models, const std::map<std::string, ContextProfile>& contexts,
                              GuidanceProvider& provider, const AttributeTask& task, PredictionMode mode,
                              int workers) {
    std::stable_sort(models.begin(), models.end(),
                     [](const PersonWeights& a, const PersonWeights& b) { return a.person_id < b.person_id; });
    PredictionBatch batch;
    batch.predictions.resize(models.size());

    parallel_for(models.size(), workers, [&](std::size_t i) {
        const PersonWeights& m = models[i];
        Prediction& p = batch.predictions[i];
        p.person_id = m.person_id;
        p.attribute = task.attribute;
        p.mode = mode;
        const auto ctx = contexts.find(m.person_id);
        if (ctx == contexts.end()) {
            p.error = "context-missing: no context row for person '" + m.person_id + "'";
            return;
        }
        try {
            const std::string prompt = build_prediction_prompt(m.theta, ctx->second, task, mode);
            LabelOutcome outcome = provider.predict_label(m.person_id, prompt, m.theta, task.classes.size());
            p.label_index = outcome.label;
            p.attempts = outcome.attempts;
            p.error = outcome.error;
        } catch (const Error& e) {
            p.error = e.code() + ": " + e.what();
        }
    });

    for (const auto& p : batch.predictions) {
        if (p.unresolved()) ++batch.unresolved;
        if (p.error.rfind("context-missing", 0) == 0) ++batch.missing_context;
    }
    return batch;
}

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions) {
    out << "person_id,attribute,mode,label_index,label_name,unresolved\n";
    for (const auto& p : predictions) {
        const AttributeTask task = task_for(p.attribute);
        out << csv_escape(p.person_id) << ',' << attribute_key(p.attribute) << ',' << to_string(p.mode) << ',';
        if (p.label_index) {
            out << *p.label_index << ',' << csv_escape(task.classes.at(static_cast<std::size_t>(*p.label_index)))
                << ",0\n";
        } else {
            out << ",,1\n";
        }
    }
}

std::vector<Prediction> read_predictions_csv(std::istream& in) {
    static constexpr std::array<std::string_view, 6> cols = {"person_id",  "attribute",  "mode",
                                                             "label_index", "label_name", "unresolved"};
    const CsvTable table = read_csv(in, cols);
    std::vector<Prediction> out;
    for (const auto& [line, row] : table.rows) {
        if (row.size() != table.header.size()) throw RowError(line, "wrong number of fields");
        auto at = [&](std::string_view name) { return std::string(trim(row[table.column(name)])); };
        Prediction p;
        p.person_id = at("person_id");
        try {
            p.attribute = attribute_from_key(at("attribute"));
            p.mode = prediction_mode_from_string(at("mode"));
        } catch (const InvalidConfig& e) {
            throw RowError(line, e.what());
        }
        const std::string unresolved = at("unresolved");
        if (unresolved == "0") {
            long long k = 0;
            if (!parse_int(at("label_index"), k) || k < 0 ||
                static_cast<std::size_t>(k) >= task_for(p.attribute).classes.size()) {
                throw RowError(line, "label_index out of range");
            }
            p.label_index = static_cast<int>(k);
        } else if (unresolved != "1") {
            throw RowError(line, "unresolved must be 0 or 1");
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace silic
