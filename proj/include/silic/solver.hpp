#pragma once

// Maximum-entropy IRL numerics: soft value iteration, softmax policy,
// forward visitation propagation, mismatch ranking, the feature-matching
// gradient and the blended weight update.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "silic/diary.hpp"
#include "silic/mdp.hpp"

namespace silic {

struct TrainingConfig {
    double gamma = 0.95;
    double eps_value = 1e-4;
    double eps_converge = 1e-4;
    double alpha = 2.0;
    double lambda_llm = 0.002;
    int top_k = 30;
    int horizon = kHoursPerDay;
    int max_iters = 200;

    /// Throws InvalidConfig on out-of-range values.
    void validate() const;
};

/// Transition table and starting distribution bound to one state space.
class CompiledDynamics {
public:
    struct Edge {
        std::size_t target;
        double probability;
    };

    CompiledDynamics(const StateSpace& space, const EmpiricalDynamics& dynamics);

    const StateSpace& space() const noexcept { return space_; }
    const TransitionModel& transition() const noexcept { return transition_; }
    /// Empty for terminal states.
    std::span<const Edge> successors(std::size_t state, Action a) const;
    const std::vector<double>& initial_distribution() const noexcept { return initial_; }

private:
    StateSpace space_;
    TransitionModel transition_;
    std::vector<std::vector<Edge>> stay_;
    std::vector<std::vector<Edge>> travel_;
    std::vector<double> initial_;
};

struct ValueFunction {
    std::vector<double> values;
    int sweeps = 0;
};

struct Policy {
    /// probabilities[s][to_index(a)]
    std::vector<std::array<double, kActionCount>> probabilities;

    double operator()(std::size_t s, Action a) const { return probabilities[s][static_cast<std::size_t>(to_index(a))]; }
    std::size_t size() const noexcept { return probabilities.size(); }
};

struct Visitation {
    std::vector<std::vector<double>> per_step; // horizon x |S|
    std::vector<double> aggregate;             // per-step mean
};

struct MismatchEntry {
    std::size_t index = 0;
    State state;
    double expert_mass = 0.0;
    double learner_mass = 0.0;
    double gap = 0.0; // |expert - learner|
};

using MismatchReport = std::vector<MismatchEntry>;

/// Update directions, each in {-1, 0, 1}.
using Directions = std::vector<int>;

/// V(s) = R(s) + log sum_a exp(gamma * E[V(s') | s, a]); terminal hours keep
/// only R(s) + log 2. Throws DivergenceError when max |dV| stays above
/// eps_value for 10 * max_iters sweeps.
ValueFunction soft_value_iteration(const RewardWeights& theta, const CompiledDynamics& dynamics,
                                   const TrainingConfig& config);

/// pi(a|s) = softmax_a(R(s) + gamma * E[V(s') | s, a]).
Policy extract_policy(const RewardWeights& theta, const ValueFunction& value, const CompiledDynamics& dynamics,
                      const TrainingConfig& config);

/// Empirical state frequencies, normalized by horizon * number of days.
/// Throws InsufficientData on empty input.
std::vector<double> expert_visitation(const std::vector<Trajectory>& trajectories, const StateSpace& space);

Visitation propagate_learner_visitation(const Policy& policy, const CompiledDynamics& dynamics);

/// States ranked by |expert - learner| descending, ties by ascending index, truncated to k.
MismatchReport mismatch_top_k(std::span<const double> expert, const Visitation& learner, std::size_t k,
                              const StateSpace& space);

/// Expert minus learner feature expectation, both on the per-step scale.
std::vector<double> maxent_gradient(const std::vector<Trajectory>& trajectories, const Visitation& learner,
                                    const StateSpace& space);

/// theta + alpha * grad + lambda_llm * directions. Throws InvalidGuidance for
/// a direction outside {-1, 0, 1} and InvalidConfig on a shape mismatch.
RewardWeights apply_update(const RewardWeights& theta, std::span<const double> grad, std::span<const int> directions,
                           const TrainingConfig& config);

} // namespace silic
