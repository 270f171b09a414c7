#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "silic/diary.hpp"
#include "silic/guidance.hpp"
#include "silic/solver.hpp"

namespace silic {

enum class ConvergenceReason { ThetaDelta, Kl, MaxIters };
std::string_view to_string(ConvergenceReason r);

/// Which steps consult the guidance provider. Both off gives plain
/// maximum-entropy IRL from a zero start.
struct GuidanceMode {
    bool guided_init = true;
    bool guided_updates = true;
};

struct IterationRecord {
    std::string person_id;
    int iter = 0;
    std::vector<double> theta; // weights the iteration was evaluated at
    double grad_norm = 0.0;    // Euclidean
    double kl = 0.0;
    double l1 = 0.0;
    std::vector<State> top_k_states;
    Directions directions;
    double provider_latency_ms = 0.0;
    std::string incident;
};

nlohmann::json to_json(const IterationRecord& r);

struct TrainedModel {
    std::string person_id;
    RewardWeights theta;
    Policy policy;
    int iterations = 0;
    double initial_kl = 0.0;
    double final_kl = 0.0;
    double final_l1 = 0.0;
    ConvergenceReason convergence_reason = ConvergenceReason::MaxIters;
    std::vector<IterationRecord> log;
    std::vector<std::string> incidents;
};

/// One line of the trained-model JSONL; `extra` fields (config hash, seed)
/// are merged in.
nlohmann::json to_json(const TrainedModel& m, const nlohmann::json& extra = nlohmann::json::object());

struct TrainingInput {
    std::string person_id;
    std::vector<Trajectory> trajectories;
    EmpiricalDynamics dynamics;
    /// Canonical diary text for the init prompt; rendered from the
    /// trajectories when empty.
    std::string diary_text;
};

/// Initialize, then loop soft VI -> policy -> learner visitation -> top-K
/// mismatch -> directions -> blended update, until the weight change
/// (infinity norm) or the expert/learner policy KL drops below
/// eps_converge, or max_iters updates have been made.
///
/// `provider` may be null (zeros and gradient-only). Provider failures
/// degrade to zero init / zero directions and are recorded as incidents.
TrainedModel train_individual(const TrainingInput& input, const StateSpace& space, GuidanceProvider* provider,
                              const TrainingConfig& config, GuidanceMode mode = {});

} // namespace silic
