#include "silic/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "silic/errors.hpp"

namespace silic {

void TrainingConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidConfig("gamma must be in [0, 1]");
    if (!(eps_value > 0.0)) throw InvalidConfig("eps_value must be > 0");
    if (!(eps_converge > 0.0)) throw InvalidConfig("eps_converge must be > 0");
    if (!std::isfinite(alpha) || !std::isfinite(lambda_llm)) throw InvalidConfig("alpha and lambda_llm must be finite");
    if (top_k < 1) throw InvalidConfig("top_k must be >= 1");
    if (horizon < 1) throw InvalidConfig("horizon must be >= 1");
    if (max_iters < 0) throw InvalidConfig("max_iters must be >= 0");
}

CompiledDynamics::CompiledDynamics(const StateSpace& space, const EmpiricalDynamics& dynamics)
    : space_(space), transition_(dynamics.transition), stay_(space.size()), travel_(space.size()),
      initial_(space.size(), 0.0) {
    for (std::size_t s = 0; s < space.size(); ++s) {
        const State st = space.state(s);
        if (space.is_terminal(st)) continue;
        for (const auto& succ : transition_distribution(st, Action::Stay, transition_, space)) {
            stay_[s].push_back({space.index(succ.state), succ.probability});
        }
        for (const auto& succ : transition_distribution(st, Action::Travel, transition_, space)) {
            travel_[s].push_back({space.index(succ.state), succ.probability});
        }
    }
    double total = 0.0;
    for (const auto& m : dynamics.initial_distribution) {
        if (m.state.hour != 0) throw InvalidConfig("initial distribution must live on hour 0");
        initial_[space.index(m.state)] += m.probability;
        total += m.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidConfig("initial distribution sums to " + std::to_string(total));
    }
}

std::span<const CompiledDynamics::Edge> CompiledDynamics::successors(std::size_t state, Action a) const {
    return a == Action::Stay ? std::span<const Edge>(stay_[state]) : std::span<const Edge>(travel_[state]);
}

namespace {

double expected_value(std::span<const CompiledDynamics::Edge> edges, const std::vector<double>& v) {
    double e = 0.0;
    for (const auto& edge : edges) e += edge.probability * v[edge.target];
    return e;
}

void check_theta(const RewardWeights& theta, const StateSpace& space) {
    if (theta.size() != space.feature_dim()) {
        throw InvalidConfig("theta has " + std::to_string(theta.size()) + " entries, expected " +
                            std::to_string(space.feature_dim()));
    }
    for (double w : theta.values) {
        if (!std::isfinite(w)) throw InvalidConfig("theta has a non-finite entry");
    }
}

} // namespace

ValueFunction soft_value_iteration(const RewardWeights& theta, const CompiledDynamics& dynamics,
                                   const TrainingConfig& config) {
    const StateSpace& space = dynamics.space();
    check_theta(theta, space);
    if (config.gamma < 0.0 || config.gamma > 1.0) throw InvalidConfig("gamma must be in [0, 1]");

    const std::vector<double> r = reward_table(theta, space);
    const int max_sweeps = 10 * std::max(config.max_iters, 1);
    const double log2 = std::log(2.0);

    ValueFunction vf;
    vf.values.assign(space.size(), 0.0);
    double delta = 0.0;
    // In-place sweeps in descending index order visit later hours first, so
    // successors are already refreshed when a state is backed up.
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        delta = 0.0;
        for (std::size_t s = space.size(); s-- > 0;) {
            const auto stay = dynamics.successors(s, Action::Stay);
            double v;
            if (stay.empty()) {
                v = r[s] + log2;
            } else {
                const double q_stay = config.gamma * expected_value(stay, vf.values);
                const double q_travel = config.gamma * expected_value(dynamics.successors(s, Action::Travel), vf.values);
                const double m = std::max(q_stay, q_travel);
                v = r[s] + m + std::log(std::exp(q_stay - m) + std::exp(q_travel - m));
            }
            if (!std::isfinite(v)) throw DivergenceError(delta, "soft value iteration produced a non-finite value");
            delta = std::max(delta, std::abs(v - vf.values[s]));
            vf.values[s] = v;
        }
        vf.sweeps = sweep;
        if (delta < config.eps_value) return vf;
    }
    throw DivergenceError(delta, "soft value iteration did not converge in " + std::to_string(max_sweeps) +
                                     " sweeps; last max |dV| = " + std::to_string(delta));
}

Policy extract_policy(const RewardWeights& theta, const ValueFunction& value, const CompiledDynamics& dynamics,
                      const TrainingConfig& config) {
    const StateSpace& space = dynamics.space();
    check_theta(theta, space);
    Policy pi;
    pi.probabilities.resize(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) {
        const auto stay = dynamics.successors(s, Action::Stay);
        if (stay.empty()) {
            pi.probabilities[s] = {0.5, 0.5};
            continue;
        }
        // R(s) is common to both actions and cancels in the softmax.
        const double q_stay = config.gamma * expected_value(stay, value.values);
        const double q_travel = config.gamma * expected_value(dynamics.successors(s, Action::Travel), value.values);
        const double m = std::max(q_stay, q_travel);
        const double e_stay = std::exp(q_stay - m);
        const double e_travel = std::exp(q_travel - m);
        const double z = e_stay + e_travel;
        pi.probabilities[s] = {e_stay / z, e_travel / z};
    }
    return pi;
}

std::vector<double> expert_visitation(const std::vector<Trajectory>& trajectories, const StateSpace& space) {
    if (trajectories.empty()) throw InsufficientData("expert visitation needs at least one trajectory");
    std::vector<double> d(space.size(), 0.0);
    double total = 0.0;
    for (const auto& t : trajectories) {
        for (const auto& s : t.states) {
            d[space.index(s)] += 1.0;
            total += 1.0;
        }
    }
    for (double& x : d) x /= total;
    return d;
}

Visitation propagate_learner_visitation(const Policy& policy, const CompiledDynamics& dynamics) {
    const StateSpace& space = dynamics.space();
    const auto horizon = static_cast<std::size_t>(space.hours());
    if (policy.size() != space.size()) throw InvalidConfig("policy does not cover the state space");

    Visitation vis;
    vis.per_step.assign(horizon, std::vector<double>(space.size(), 0.0));
    vis.per_step[0] = dynamics.initial_distribution();
    for (std::size_t t = 0; t + 1 < horizon; ++t) {
        const auto& cur = vis.per_step[t];
        auto& next = vis.per_step[t + 1];
        for (std::size_t s = 0; s < space.size(); ++s) {
            const double mass = cur[s];
            if (mass == 0.0) continue;
            for (Action a : {Action::Stay, Action::Travel}) {
                const double pa = mass * policy(s, a);
                for (const auto& e : dynamics.successors(s, a)) next[e.target] += pa * e.probability;
            }
        }
    }
    vis.aggregate.assign(space.size(), 0.0);
    for (const auto& step : vis.per_step) {
        for (std::size_t s = 0; s < space.size(); ++s) vis.aggregate[s] += step[s];
    }
    for (double& x : vis.aggregate) x /= static_cast<double>(horizon);
    return vis;
}

MismatchReport mismatch_top_k(std::span<const double> expert, const Visitation& learner, std::size_t k,
                              const StateSpace& space) {
    if (expert.size() != space.size() || learner.aggregate.size() != space.size()) {
        throw InvalidConfig("visitations must cover the same state space");
    }
    std::vector<std::size_t> order(space.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> gap(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) gap[s] = std::abs(expert[s] - learner.aggregate[s]);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gap[a] > gap[b]; });

    MismatchReport report;
    const std::size_t n = std::min(k, order.size());
    report.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = order[i];
        report.push_back({s, space.state(s), expert[s], learner.aggregate[s], gap[s]});
    }
    return report;
}

std::vector<double> maxent_gradient(const std::vector<Trajectory>& trajectories, const Visitation& learner,
                                    const StateSpace& space) {
    if (trajectories.empty()) throw InsufficientData("gradient needs at least one trajectory");
    const std::size_t dim = space.feature_dim();
    const double horizon = static_cast<double>(space.hours());
    std::vector<double> grad(dim, 0.0);

    const double w = 1.0 / (static_cast<double>(trajectories.size()) * horizon);
    for (const auto& t : trajectories) {
        for (const auto& s : t.states) {
            const auto phi = featurize(s, space);
            for (std::size_t d = 0; d < dim; ++d) grad[d] += w * phi[d];
        }
    }
    for (const auto& step : learner.per_step) {
        for (std::size_t s = 0; s < space.size(); ++s) {
            if (step[s] == 0.0) continue;
            const auto phi = featurize(space.state(s), space);
            const double m = step[s] / horizon;
            for (std::size_t d = 0; d < dim; ++d) grad[d] -= m * phi[d];
        }
    }
    return grad;
}

RewardWeights apply_update(const RewardWeights& theta, std::span<const double> grad, std::span<const int> directions,
                           const TrainingConfig& config) {
    if (grad.size() != theta.size() || directions.size() != theta.size()) {
        throw InvalidConfig("theta, gradient and directions must have the same length");
    }
    RewardWeights out = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const int g = directions[i];
        if (g < -1 || g > 1) throw InvalidGuidance("direction " + std::to_string(g) + " at index " + std::to_string(i));
        out[i] += config.alpha * grad[i] + config.lambda_llm * static_cast<double>(g);
    }
    return out;
}

} // namespace silic
