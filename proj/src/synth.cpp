#include "silic/synth.hpp"

#include <cmath>
#include <map>

#include "silic/concurrency.hpp"
#include "silic/errors.hpp"
#include "silic/format.hpp"
#include "silic/metrics.hpp"
#include "silic/rng.hpp"

namespace silic {

std::vector<std::vector<double>> random_stochastic_matrix(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> m(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& row : m) {
        double total = 0.0;
        for (double& x : row) total += (x = rng.exponential());
        for (double& x : row) x /= total;
        // keep the row sum within the 1e-9 tolerance after division
        double s = 0.0;
        for (std::size_t j = 0; j + 1 < row.size(); ++j) s += row[j];
        row.back() = std::max(0.0, 1.0 - s);
    }
    return m;
}

SyntheticAgent generate_agent(std::uint64_t seed, const TrainingConfig& config, const StateSpace& space) {
    SyntheticAgent agent;
    agent.seed = seed;
    Rng rng(derive_seed(seed, "theta"));
    agent.theta_star = RewardWeights::zeros(space.feature_dim());
    for (double& w : agent.theta_star.values) w = rng.uniform(-2.0, 2.0);

    agent.dynamics.transition =
        TransitionModel(random_stochastic_matrix(space.activities(), derive_seed(seed, "dynamics")));
    agent.dynamics.initial_distribution = {{State{0, ActivityCategory::Home, true, 1}, 1.0}};

    const CompiledDynamics compiled(space, agent.dynamics);
    const ValueFunction v = soft_value_iteration(agent.theta_star, compiled, config);
    agent.policy_star = extract_policy(agent.theta_star, v, compiled, config);
    return agent;
}

std::vector<Trajectory> sample_trajectories(const Policy& policy, const CompiledDynamics& dynamics, int n_days,
                                            std::uint64_t seed, const std::string& person_id) {
    if (n_days < 1) throw InvalidConfig("n_days must be >= 1");
    const StateSpace& space = dynamics.space();
    Rng rng(seed);
    auto draw = [&](auto&& weights, std::size_t n) {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += weights(i);
            if (u < acc) return i;
        }
        // rounding: fall back to the last index with positive weight
        for (std::size_t i = n; i-- > 0;) {
            if (weights(i) > 0.0) return i;
        }
        return n - 1;
    };

    const auto& init = dynamics.initial_distribution();
    std::vector<Trajectory> out;
    for (int d = 0; d < n_days; ++d) {
        Trajectory t;
        t.person_id = person_id;
        t.day = "synthetic-d" + std::to_string(d + 1);
        std::size_t s = draw([&](std::size_t i) { return init[i]; }, init.size());
        for (int h = 0; h < space.hours(); ++h) {
            t.states.push_back(space.state(s));
            const std::size_t a = draw([&](std::size_t i) { return policy.probabilities[s][i]; }, kActionCount);
            const auto action = static_cast<Action>(a);
            t.actions.push_back(action);
            if (h + 1 < space.hours()) {
                const auto edges = dynamics.successors(s, action);
                s = edges[draw([&](std::size_t i) { return edges[i].probability; }, edges.size())].target;
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Trajectory> sample_trajectories(const SyntheticAgent& agent, const StateSpace& space, int n_days,
                                            std::uint64_t seed) {
    const CompiledDynamics compiled(space, agent.dynamics);
    return sample_trajectories(agent.policy_star, compiled, n_days, seed, "agent-" + std::to_string(agent.seed));
}

EnumeratedExpectation brute_force_feature_expectation(const Policy& policy, const CompiledDynamics& dynamics,
                                                      std::size_t budget) {
    const StateSpace& space = dynamics.space();
    const std::size_t horizon = static_cast<std::size_t>(space.hours());
    EnumeratedExpectation out;
    out.features.assign(space.feature_dim(), 0.0);
    out.visitation.assign(space.size(), 0.0);

    std::vector<std::size_t> path;
    path.reserve(horizon);

    // Depth-first over (action, successor) choices; each leaf is one
    // complete trajectory with its probability.
    auto visit = [&](auto&& self, std::size_t s, double prob) -> void {
        path.push_back(s);
        const bool last = path.size() == horizon;
        for (Action a : {Action::Stay, Action::Travel}) {
            const double pa = prob * policy(s, a);
            if (pa == 0.0) continue;
            if (last) {
                if (++out.trajectories > budget) {
                    throw OracleTooLarge("more than " + std::to_string(budget) + " trajectories to enumerate");
                }
                out.total_probability += pa;
                const double w = pa / static_cast<double>(horizon);
                for (std::size_t v : path) {
                    out.visitation[v] += w;
                    const auto phi = featurize(space.state(v), space);
                    for (std::size_t d = 0; d < phi.size(); ++d) out.features[d] += w * phi[d];
                }
                continue;
            }
            for (const auto& e : dynamics.successors(s, a)) self(self, e.target, pa * e.probability);
        }
        path.pop_back();
    };

    const auto& init = dynamics.initial_distribution();
    for (std::size_t s = 0; s < init.size(); ++s) {
        if (init[s] > 0.0) visit(visit, s, init[s]);
    }
    return out;
}

double maxent_log_likelihood(const RewardWeights& theta, const std::vector<Trajectory>& trajectories,
                             const CompiledDynamics& dynamics, std::size_t budget) {
    const StateSpace& space = dynamics.space();
    if (trajectories.empty()) throw InsufficientData("log-likelihood needs at least one trajectory");
    const auto horizon = static_cast<std::size_t>(space.hours());
    if (horizon >= 63 || (std::size_t{1} << horizon) > budget) {
        throw OracleTooLarge("2^" + std::to_string(horizon) + " action sequences exceed the enumeration budget");
    }

    auto log_partition = [&](std::size_t start) {
        std::vector<double> returns;
        for (std::size_t bits = 0; bits < (std::size_t{1} << horizon); ++bits) {
            std::size_t s = start;
            double total = 0.0;
            for (std::size_t t = 0; t < horizon; ++t) {
                total += reward(theta, space.state(s), space);
                if (t + 1 == horizon) break;
                const Action a = ((bits >> t) & 1u) ? Action::Travel : Action::Stay;
                const auto edges = dynamics.successors(s, a);
                if (edges.size() != 1 || edges[0].probability != 1.0) {
                    throw InvalidConfig("log-likelihood oracle needs deterministic transitions");
                }
                s = edges[0].target;
            }
            returns.push_back(total);
        }
        double m = returns.front();
        for (double r : returns) m = std::max(m, r);
        double z = 0.0;
        for (double r : returns) z += std::exp(r - m);
        return m + std::log(z);
    };

    std::map<std::size_t, double> log_z;
    double total = 0.0;
    for (const auto& t : trajectories) {
        const std::size_t s0 = space.index(t.states.front());
        auto it = log_z.find(s0);
        if (it == log_z.end()) it = log_z.emplace(s0, log_partition(s0)).first;
        double ret = 0.0;
        for (const auto& s : t.states) ret += reward(theta, s, space);
        total += ret - it->second;
    }
    return total / (static_cast<double>(trajectories.size()) * static_cast<double>(horizon));
}

std::vector<AblationCell> ablation_grid() {
    return {
        {"scripted-init+guided-updates", {true, true}},
        {"scripted-init+gradient-only", {true, false}},
        {"zero-init+guided-updates", {false, true}},
        {"zero-init+gradient-only", {false, false}},
    };
}

std::vector<RecoveryResult> run_recovery_suite(const RecoverySuiteConfig& suite, const TrainingConfig& config,
                                               const std::vector<AblationCell>& cells) {
    const StateSpace space(suite.n_max, config.horizon);
    const auto n_agents = static_cast<std::size_t>(suite.agents);
    std::vector<RecoveryResult> results(n_agents * cells.size());

    parallel_for(n_agents, suite.workers, [&](std::size_t i) {
        const std::uint64_t agent_seed = derive_seed(suite.seed, "agent", i);
        const SyntheticAgent agent = generate_agent(agent_seed, config, space);
        TrainingInput input;
        input.person_id = "agent-" + std::to_string(i);
        input.trajectories = sample_trajectories(agent, space, suite.days, derive_seed(suite.seed, "rollout", i));
        for (auto& t : input.trajectories) t.person_id = input.person_id;
        input.dynamics = estimate_empirical_dynamics(input.trajectories, space);
        input.diary_text = render_diary(input.trajectories);

        const auto expert_vis = expert_visitation(input.trajectories, space);
        const CompiledDynamics learner_dynamics(space, input.dynamics);
        auto true_kl = [&](const RewardWeights& theta) {
            const ValueFunction v = soft_value_iteration(theta, learner_dynamics, config);
            return kl_policy_divergence(agent.policy_star, extract_policy(theta, v, learner_dynamics, config), expert_vis);
        };

        for (std::size_t c = 0; c < cells.size(); ++c) {
            ScriptedProvider provider;
            const TrainedModel m = train_individual(input, space, &provider, config, cells[c].mode);
            RecoveryResult& r = results[i * cells.size() + c];
            r.seed = agent_seed;
            r.cell = cells[c].name;
            r.initial_kl = m.initial_kl;
            r.final_kl = m.final_kl;
            r.initial_true_kl = true_kl(m.log.empty() ? m.theta : RewardWeights{m.log.front().theta});
            r.final_true_kl = true_kl(m.theta);
            r.final_l1 = m.final_l1;
            r.iterations = m.iterations;
            r.convergence_reason = std::string(to_string(m.convergence_reason));
        }
    });
    return results;
}

nlohmann::json to_json(const RecoveryResult& r) {
    return {{"seed", r.seed},
            {"cell", r.cell},
            {"initial_kl", r.initial_kl},
            {"final_kl", r.final_kl},
            {"initial_true_kl", r.initial_true_kl},
            {"final_true_kl", r.final_true_kl},
            {"final_l1", r.final_l1},
            {"iterations", r.iterations},
            {"convergence_reason", r.convergence_reason}};
}

} // namespace silic
