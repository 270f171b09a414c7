#pragma once

// Synthetic agents with known reward weights, trajectory sampling, and
// brute-force enumeration oracles used to check the dynamic programs.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "silic/diary.hpp"
#include "silic/solver.hpp"
#include "silic/trainer.hpp"

namespace silic {

struct SyntheticAgent {
    RewardWeights theta_star;
    EmpiricalDynamics dynamics;
    Policy policy_star;
    std::uint64_t seed = 0;
};

/// theta* ~ U[-2, 2]^dim, Dirichlet(1) travel rows, start at (0, Home, first, 1),
/// policy* from soft value iteration under `config`.
SyntheticAgent generate_agent(std::uint64_t seed, const TrainingConfig& config, const StateSpace& space);

/// Rollouts of `policy` under `dynamics` from its initial distribution.
std::vector<Trajectory> sample_trajectories(const Policy& policy, const CompiledDynamics& dynamics, int n_days,
                                            std::uint64_t seed, const std::string& person_id = "synthetic");
std::vector<Trajectory> sample_trajectories(const SyntheticAgent& agent, const StateSpace& space, int n_days,
                                            std::uint64_t seed);

inline constexpr std::size_t kOracleBudget = 1'000'000;

struct EnumeratedExpectation {
    std::vector<double> features;   // E[(1/T) sum_t phi(s_t)]
    std::vector<double> visitation; // E[(1/T) sum_t 1{s_t = s}]
    double total_probability = 0.0;
    std::size_t trajectories = 0;
};

/// Enumerates every (state, action) path with its probability. Throws
/// OracleTooLarge when more than `budget` complete paths would be visited.
EnumeratedExpectation brute_force_feature_expectation(const Policy& policy, const CompiledDynamics& dynamics,
                                                      std::size_t budget = kOracleBudget);

/// Maximum-entropy trajectory log-likelihood, averaged over trajectories and
/// scaled by 1/T: (1/(nT)) sum_j [theta . f(tau_j) - log Z(s0_j)], with Z
/// summed over every action sequence. Requires deterministic travel rows.
double maxent_log_likelihood(const RewardWeights& theta, const std::vector<Trajectory>& trajectories,
                             const CompiledDynamics& dynamics, std::size_t budget = kOracleBudget);

/// Dirichlet(1) row-stochastic matrix.
std::vector<std::vector<double>> random_stochastic_matrix(int n, std::uint64_t seed);

/// One cell of the guidance ablation grid.
struct AblationCell {
    std::string name;
    GuidanceMode mode;
};

/// {scripted init + guided updates, scripted init + gradient-only,
///  zero init + guided updates, zero init + gradient-only}.
std::vector<AblationCell> ablation_grid();

struct RecoveryResult {
    std::uint64_t seed = 0;
    std::string cell;
    double initial_kl = 0.0;      // empirical expert policy vs learner, at theta_0
    double final_kl = 0.0;
    double initial_true_kl = 0.0; // KL(pi* || learner) weighted by expert visitation
    double final_true_kl = 0.0;
    double final_l1 = 0.0;
    int iterations = 0;
    std::string convergence_reason;
};

struct RecoverySuiteConfig {
    std::uint64_t seed = 0;
    int agents = 20;
    int days = 5;
    int n_max = kDefaultNMax;
    int workers = 1;
};

/// Trains every ablation cell on every seeded agent with the scripted provider.
std::vector<RecoveryResult> run_recovery_suite(const RecoverySuiteConfig& suite, const TrainingConfig& config,
                                               const std::vector<AblationCell>& cells);

nlohmann::json to_json(const RecoveryResult& r);

} // namespace silic
