#include "silic/trainer.hpp"

#include <cmath>

#include "silic/errors.hpp"
#include "silic/format.hpp"
#include "silic/metrics.hpp"

namespace silic {

std::string_view to_string(ConvergenceReason r) {
    switch (r) {
    case ConvergenceReason::ThetaDelta: return "theta-delta";
    case ConvergenceReason::Kl: return "kl";
    case ConvergenceReason::MaxIters: return "max-iters";
    }
    return "max-iters";
}

nlohmann::json to_json(const IterationRecord& r) {
    nlohmann::json states = nlohmann::json::array();
    for (const auto& s : r.top_k_states) states.push_back({s.hour, to_index(s.activity), s.is_first ? 1 : 0, s.count});
    nlohmann::json j = {{"person_id", r.person_id},
                        {"iter", r.iter},
                        {"theta", r.theta},
                        {"grad_norm", r.grad_norm},
                        {"kl", r.kl},
                        {"l1", r.l1},
                        {"top_k_states", states},
                        {"directions", r.directions},
                        {"provider_latency_ms", r.provider_latency_ms}};
    if (!r.incident.empty()) j["incident"] = r.incident;
    return j;
}

nlohmann::json to_json(const TrainedModel& m, const nlohmann::json& extra) {
    nlohmann::json j = {{"person_id", m.person_id},
                        {"theta", m.theta.values},
                        {"iterations", m.iterations},
                        {"final_kl", m.final_kl},
                        {"convergence_reason", to_string(m.convergence_reason)}};
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

namespace {

struct Evaluation {
    Policy policy;
    Visitation visitation;
    double kl = 0.0;
    double l1 = 0.0;
};

} // namespace

TrainedModel train_individual(const TrainingInput& input, const StateSpace& space, GuidanceProvider* provider,
                              const TrainingConfig& config, GuidanceMode mode) {
    config.validate();
    if (config.horizon != space.hours()) {
        throw InvalidConfig("horizon " + std::to_string(config.horizon) + " does not match the state space's " +
                            std::to_string(space.hours()) + " hours");
    }
    if (input.trajectories.empty()) throw InsufficientData("person '" + input.person_id + "' has no trajectories");
    for (const auto& t : input.trajectories) {
        if (auto problem = check_trajectory(t, space)) {
            throw InvalidConfig("person '" + input.person_id + "' day " + t.day + ": " + *problem);
        }
    }

    const CompiledDynamics dynamics(space, input.dynamics);
    const std::vector<double> expert_vis = expert_visitation(input.trajectories, space);
    const ExpertPolicy expert = estimate_expert_policy(input.trajectories, space);

    auto evaluate = [&](const RewardWeights& theta) {
        Evaluation e;
        const ValueFunction v = soft_value_iteration(theta, dynamics, config);
        e.policy = extract_policy(theta, v, dynamics, config);
        e.visitation = propagate_learner_visitation(e.policy, dynamics);
        e.kl = kl_policy_divergence(expert.policy, e.policy, expert_vis);
        e.l1 = l1_policy_distance(expert.policy, e.policy);
        return e;
    };

    TrainedModel model;
    model.person_id = input.person_id;
    model.theta = RewardWeights::zeros(space.feature_dim());

    if (provider && mode.guided_init) {
        const std::string diary = input.diary_text.empty() ? render_diary(input.trajectories) : input.diary_text;
        if (trim(diary).empty()) {
            // nothing to show the provider: every observed day stays put
            model.incidents.push_back("init: diary has no trips; using zeros");
        } else try {
            InitOutcome init = provider->initialize(input.person_id, diary, space);
            model.theta = std::move(init.theta);
            for (auto& w : init.warnings) model.incidents.push_back("init: " + w);
        } catch (const ProviderUnavailable& e) {
            model.incidents.push_back(std::string("init: ") + e.what() + "; using zeros");
        }
    }

    Evaluation eval = evaluate(model.theta);
    model.initial_kl = eval.kl;

    for (int iter = 0; iter < config.max_iters; ++iter) {
        if (eval.kl < config.eps_converge) {
            model.convergence_reason = ConvergenceReason::Kl;
            break;
        }
        const MismatchReport report =
            mismatch_top_k(expert_vis, eval.visitation, static_cast<std::size_t>(config.top_k), space);
        const std::vector<double> grad = maxent_gradient(input.trajectories, eval.visitation, space);

        IterationRecord rec;
        rec.person_id = input.person_id;
        rec.iter = iter;
        rec.theta = model.theta.values;
        rec.kl = eval.kl;
        rec.l1 = eval.l1;
        for (double g : grad) rec.grad_norm += g * g;
        rec.grad_norm = std::sqrt(rec.grad_norm);
        for (const auto& m : report) rec.top_k_states.push_back(m.state);
        rec.directions.assign(space.feature_dim(), 0);

        if (provider && mode.guided_updates) {
            MismatchReport shown = report;
            if (shown.size() > kMaxReportedMismatches) shown.resize(kMaxReportedMismatches);
            try {
                DirectionOutcome d = provider->suggest_directions(input.person_id, model.theta, shown, space);
                rec.directions = std::move(d.directions);
                rec.provider_latency_ms = d.latency_ms;
                rec.incident = d.incident;
            } catch (const ProviderUnavailable& e) {
                rec.incident = std::string(e.what()) + "; zero directions";
            }
            if (!rec.incident.empty()) {
                model.incidents.push_back("iter " + std::to_string(iter) + ": " + rec.incident);
            }
        }

        const RewardWeights next = apply_update(model.theta, grad, rec.directions, config);
        double delta = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) delta = std::max(delta, std::abs(next[i] - model.theta[i]));
        model.log.push_back(std::move(rec));
        model.theta = next;
        model.iterations = iter + 1;
        eval = evaluate(model.theta);
        if (delta < config.eps_converge) {
            model.convergence_reason = ConvergenceReason::ThetaDelta;
            break;
        }
    }

    model.final_kl = eval.kl;
    model.final_l1 = eval.l1;
    model.policy = std::move(eval.policy);
    return model;
}

} // namespace silic
