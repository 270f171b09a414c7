#include <gtest/gtest.h>

#include <sstream>

#include "silic/ccr.hpp"
#include "silic/errors.hpp"
#include "support.hpp"

using namespace silic;
namespace st = silic::testing;

namespace {

const char* kContextHeader =
    "person_id,urban_indicator,population_density,distance_to_transit,network_density,housing_density,"
    "residential_proportion,commercial_proportion,educational_proportion,recreational_proportion,housing_type\n";

/// Counts calls and answers every label request with a fixed string.
class FixedLabelProvider : public GuidanceProvider {
public:
    explicit FixedLabelProvider(std::string answer) : answer_(std::move(answer)) {}
    std::string model_name() const override { return "fixed"; }
    std::atomic<int> calls{0};

protected:
    std::string respond(const ExchangeRequest&) override {
        ++calls;
        return answer_;
    }

private:
    std::string answer_;
};

} // namespace

TEST(Context, ReadsRowsAndHousingSpellings) {
    std::istringstream in(std::string(kContextHeader) +
                          "a,1,12000,250,30.5,5000,0.5,0.2,0.05,0.1,Multi-Unit (2-4)\n"
                          "b,0,80,4000,2,40,0.9,0,0,0.05,single_family_unit\n");
    const auto ctx = read_contexts(in);
    ASSERT_EQ(ctx.size(), 2u);
    EXPECT_EQ(ctx.at("a").housing_type, HousingType::MultiUnitSmall);
    EXPECT_EQ(ctx.at("b").housing_type, HousingType::SingleFamilyUnit);
    EXPECT_EQ(ctx.at("b").urban_indicator, 0);
    EXPECT_DOUBLE_EQ(ctx.at("a").network_density, 30.5);
}

TEST(Context, RejectsBadRows) {
    auto read = [](const std::string& row) {
        std::istringstream in(std::string(kContextHeader) + row);
        return read_contexts(in);
    };
    EXPECT_THROW(read("a,2,1,1,1,1,0.5,0,0,0,Single Family Unit\n"), RowError);
    EXPECT_THROW(read("a,1,-1,1,1,1,0.5,0,0,0,Single Family Unit\n"), RowError);
    EXPECT_THROW(read("a,1,1,1,1,1,1.5,0,0,0,Single Family Unit\n"), RowError);
    EXPECT_THROW(read("a,1,1,1,1,1,0.5,0,0,0,Castle\n"), RowError);
    EXPECT_THROW(read("a,1,1,1,1,1,0.5,0,0,0,Single Family Unit\na,1,1,1,1,1,0.5,0,0,0,Single Family Unit\n"), RowError);
    std::istringstream missing("person_id,urban_indicator\na,1\n");
    EXPECT_THROW(read_contexts(missing), SchemaError);
}

TEST(Tasks, ClassSchemes) {
    EXPECT_EQ(task_for(Attribute::Gender).classes, (std::vector<std::string>{"Male", "Female"}));
    EXPECT_EQ(task_for(Attribute::Age).classes.size(), 3u);
    EXPECT_EQ(task_for(Attribute::Income).prompt_name(), "income level");
    EXPECT_EQ(task_for(Attribute::Employment).class_index("retired"), 2);
    EXPECT_EQ(task_for(Attribute::Employment).class_index("student"), -1);
    EXPECT_EQ(attribute_from_key(" Income "), Attribute::Income);
    EXPECT_THROW(attribute_from_key("height"), InvalidConfig);
    EXPECT_THROW(prediction_mode_from_string("zero-shot"), InvalidConfig);
}

TEST(Prompts, CcrCarriesBeliefStepsThetaContextAndLabels) {
    const std::string p = build_ccr_prompt(st::golden_theta(), st::golden_context(), task_for(Attribute::Age));
    EXPECT_NE(p.find("Step 1: Belief Inference"), std::string::npos);
    EXPECT_NE(p.find("Step 2: Sociodemographic Prediction"), std::string::npos);
    EXPECT_NE(p.find("  activity_home: -2.000000"), std::string::npos);
    EXPECT_NE(p.find("  housing_type: Multi-Unit (>5)"), std::string::npos);
    EXPECT_NE(p.find("  2: 65+"), std::string::npos);
    EXPECT_EQ(p.find('{'), std::string::npos);
}

TEST(Prompts, AblationsDropBeliefsButKeepOutputContract) {
    const auto theta = st::golden_theta();
    const auto ctx = st::golden_context();
    const auto task = task_for(Attribute::Gender);
    const std::string ccr = build_prediction_prompt(theta, ctx, task, PredictionMode::Ccr);
    const std::string contract = ccr.substr(ccr.find("Output Format"));
    for (PredictionMode m : {PredictionMode::Cot, PredictionMode::Direct}) {
        const std::string p = build_prediction_prompt(theta, ctx, task, m);
        EXPECT_EQ(p.find("Belief"), std::string::npos);
        EXPECT_EQ(p.find("belief"), std::string::npos);
        EXPECT_EQ(p.substr(p.find("Output Format")), contract);
        EXPECT_NE(p.find(render_theta_block(theta)), std::string::npos);
    }
    EXPECT_NE(build_prediction_prompt(theta, ctx, task, PredictionMode::Cot).find("step by step"), std::string::npos);
    EXPECT_THROW(build_ablation_prompt(theta, ctx, task, PredictionMode::Ccr), PreconditionError);
    EXPECT_THROW(build_ccr_prompt(RewardWeights::zeros(30), ctx, task), PreconditionError);
}

TEST(Labels, ParseAgainstTask) {
    const auto task = task_for(Attribute::Age);
    EXPECT_EQ(parse_label("2", task), 2);
    EXPECT_EQ(parse_label("Label: 1\n", task), 1);
    EXPECT_THROW(parse_label("5", task), ParseError);
    EXPECT_THROW(parse_label("older adult", task), ParseError);
}

TEST(Batch, SortedOneRecordPerPersonMissingContextReported) {
    std::map<std::string, ContextProfile> contexts = {{"a", st::golden_context()}, {"c", st::golden_context()}};
    std::vector<PersonWeights> models = {{"c", st::golden_theta()}, {"b", st::golden_theta()}, {"a", st::golden_theta()}};
    FixedLabelProvider provider("1");
    const auto batch = predict_batch(models, contexts, provider, task_for(Attribute::Gender), PredictionMode::Ccr, 2);
    ASSERT_EQ(batch.predictions.size(), 3u);
    EXPECT_EQ(batch.predictions[0].person_id, "a");
    EXPECT_EQ(batch.predictions[1].person_id, "b");
    EXPECT_TRUE(batch.predictions[1].unresolved());
    EXPECT_EQ(batch.predictions[1].error.rfind("context-missing", 0), 0u);
    EXPECT_EQ(batch.predictions[2].label_index, 1);
    EXPECT_EQ(batch.missing_context, 1);
    EXPECT_EQ(batch.unresolved, 1);
    EXPECT_EQ(provider.calls.load(), 2);
}

TEST(Batch, UnparseableAnswersStayUnresolved) {
    std::map<std::string, ContextProfile> contexts = {{"a", st::golden_context()}};
    FixedLabelProvider provider("cannot tell");
    const auto batch = predict_batch({{"a", st::golden_theta()}}, contexts, provider, task_for(Attribute::Income),
                                     PredictionMode::Direct);
    EXPECT_TRUE(batch.predictions[0].unresolved());
    EXPECT_EQ(batch.predictions[0].attempts, 3);
    EXPECT_EQ(batch.missing_context, 0);
}

TEST(Batch, CsvRoundTrip) {
    std::vector<Prediction> preds(2);
    preds[0].person_id = "a,1";
    preds[0].attribute = Attribute::Income;
    preds[0].mode = PredictionMode::Cot;
    preds[0].label_index = 2;
    preds[1].person_id = "b";
    std::stringstream ss;
    write_predictions_csv(ss, preds);
    EXPECT_NE(ss.str().find("\"a,1\",income,cot,2,100k+,0"), std::string::npos);
    const auto back = read_predictions_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].person_id, "a,1");
    EXPECT_EQ(back[0].label_index, 2);
    EXPECT_TRUE(back[1].unresolved());
}
