#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "silic/errors.hpp"
#include "silic/solver.hpp"
#include "silic/synth.hpp"
#include "support.hpp"

using namespace silic;
namespace st = silic::testing;
using silic::testing::make_toy;
using silic::testing::toy_shapes;

namespace {

double logsumexp2(double a, double b) {
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Backward induction hour by hour through transition_distribution, sharing
// nothing with the solver's compiled tables or sweep order.
std::vector<double> backward_values(const st::ToyMdp& toy) {
    const auto& sp = toy.space;
    std::vector<double> v(sp.size(), 0.0);
    for (int h = sp.hours() - 1; h >= 0; --h) {
        for (std::size_t i = 0; i < sp.size(); ++i) {
            const State s = sp.state(i);
            if (s.hour != h) continue;
            const double r = reward(toy.theta, s, sp);
            if (sp.is_terminal(s)) {
                v[i] = r + std::log(2.0);
                continue;
            }
            double q[2];
            for (int a = 0; a < 2; ++a) {
                double ev = 0.0;
                for (const auto& succ : transition_distribution(s, static_cast<Action>(a), toy.model.transition, sp)) {
                    ev += succ.probability * v[sp.index(succ.state)];
                }
                q[a] = r + toy.config.gamma * ev;
            }
            v[i] = logsumexp2(q[0], q[1]);
        }
    }
    return v;
}

} // namespace

TEST(SoftValueIteration, MatchesBackwardInduction) {
    std::uint64_t seed = 1;
    for (const auto& shape : toy_shapes()) {
        for (double gamma : {0.0, 0.5, 0.95, 1.0}) {
            const auto toy = make_toy(shape, seed++, gamma);
            const auto v = soft_value_iteration(toy.theta, toy.dynamics, toy.config);
            const auto oracle = backward_values(toy);
            for (std::size_t i = 0; i < oracle.size(); ++i) ASSERT_NEAR(v.values[i], oracle[i], 1e-10);
        }
    }
}

TEST(SoftValueIteration, TerminalValueIsRewardPlusLog2) {
    const auto toy = make_toy({3, 2, 2}, 4, 0.95);
    const auto v = soft_value_iteration(toy.theta, toy.dynamics, toy.config);
    for (std::size_t i = 0; i < toy.space.size(); ++i) {
        const State s = toy.space.state(i);
        if (toy.space.is_terminal(s)) EXPECT_NEAR(v.values[i], reward(toy.theta, s, toy.space) + std::log(2.0), 1e-12);
    }
}

TEST(Policy, RowsAreSoftmaxOfQ) {
    const auto toy = make_toy({4, 3, 2}, 11, 0.9);
    const auto v = soft_value_iteration(toy.theta, toy.dynamics, toy.config);
    const auto pi = extract_policy(toy.theta, v, toy.dynamics, toy.config);
    for (std::size_t i = 0; i < toy.space.size(); ++i) {
        EXPECT_NEAR(pi(i, Action::Stay) + pi(i, Action::Travel), 1.0, 1e-12);
        const State s = toy.space.state(i);
        if (toy.space.is_terminal(s)) {
            EXPECT_NEAR(pi(i, Action::Stay), 0.5, 1e-12);
            continue;
        }
        // log-ratio of the two actions equals gamma times the value gap of the successors
        double ev[2] = {0.0, 0.0};
        for (int a = 0; a < 2; ++a) {
            for (const auto& e : toy.dynamics.successors(i, static_cast<Action>(a))) ev[a] += e.probability * v.values[e.target];
        }
        EXPECT_NEAR(std::log(pi(i, Action::Travel) / pi(i, Action::Stay)), toy.config.gamma * (ev[1] - ev[0]), 1e-9);
    }
}

TEST(Policy, ExtremeWeightsStayFinite) {
    auto toy = make_toy({4, 3, 2}, 12, 0.95);
    for (auto& x : toy.theta.values) x *= 400.0;
    const auto pi = st::solve_policy(toy);
    for (const auto& row : pi.probabilities) {
        ASSERT_TRUE(std::isfinite(row[0]) && std::isfinite(row[1]));
        ASSERT_NEAR(row[0] + row[1], 1.0, 1e-9);
    }
}

TEST(Visitation, MatchesEnumeration) {
    std::uint64_t seed = 100;
    for (const auto& shape : toy_shapes()) {
        const auto toy = make_toy(shape, seed++, 0.95);
        const auto pi = st::solve_policy(toy);
        const auto vis = propagate_learner_visitation(pi, toy.dynamics);
        const auto oracle = brute_force_feature_expectation(pi, toy.dynamics);
        EXPECT_NEAR(oracle.total_probability, 1.0, 1e-12);
        for (std::size_t s = 0; s < toy.space.size(); ++s) ASSERT_NEAR(vis.aggregate[s], oracle.visitation[s], 1e-10);
        for (const auto& slice : vis.per_step) {
            EXPECT_NEAR(std::accumulate(slice.begin(), slice.end(), 0.0), 1.0, 1e-12);
        }
    }
}

TEST(Visitation, StepSlicesLiveAtTheirHour) {
    const auto toy = make_toy({4, 3, 2}, 5, 0.95);
    const auto vis = propagate_learner_visitation(st::solve_policy(toy), toy.dynamics);
    ASSERT_EQ(vis.per_step.size(), 4u);
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t s = 0; s < toy.space.size(); ++s) {
            if (toy.space.state(s).hour != static_cast<int>(t)) EXPECT_EQ(vis.per_step[t][s], 0.0);
        }
    }
}

TEST(Oracle, BudgetIsEnforced) {
    const auto toy = make_toy({4, 3, 2}, 6, 0.95);
    EXPECT_THROW(brute_force_feature_expectation(st::solve_policy(toy), toy.dynamics, 3), OracleTooLarge);
}

TEST(ExpertVisitation, NormalizedByHorizonAndDays) {
    const StateSpace space(kDefaultNMax);
    std::vector<Trajectory> ts = {
        build_day_trajectory({{480, ActivityCategory::Work}}, ActivityCategory::Home, space),
        build_day_trajectory({{600, ActivityCategory::Leisure}}, ActivityCategory::Home, space),
    };
    const auto d = expert_visitation(ts, space);
    EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(d[space.index(State{0, ActivityCategory::Home, true, 1})], 2.0 / 48.0);
    EXPECT_DOUBLE_EQ(d[space.index(State{9, ActivityCategory::Work, false, 2})], 1.0 / 48.0);
    EXPECT_THROW(expert_visitation({}, space), InsufficientData);
}

TEST(Mismatch, RankedByGapWithIndexTieBreak) {
    const StateSpace space(1, 2, 2); // 8 states
    const std::vector<double> expert = {0.5, 0.0, 0.1, 0.0, 0.2, 0.0, 0.2, 0.0};
    Visitation learner;
    learner.aggregate = {0.1, 0.3, 0.1, 0.0, 0.0, 0.2, 0.2, 0.1};
    const auto report = mismatch_top_k(expert, learner, 4, space);
    ASSERT_EQ(report.size(), 4u);
    const std::size_t expected[] = {0, 1, 4, 5};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(report[i].index, expected[i]);
    EXPECT_DOUBLE_EQ(report[0].gap, 0.4);
    EXPECT_EQ(report[2].state, space.state(4));
    EXPECT_EQ(mismatch_top_k(expert, learner, 100, space).size(), 8u);
}

TEST(Gradient, ExpertMinusLearnerOnStepScale) {
    const StateSpace space(1, 2, 2);
    const Trajectory t = build_day_trajectory({{0, ActivityCategory::Work}}, ActivityCategory::Home, space);
    Visitation learner;
    learner.aggregate.assign(space.size(), 0.0);
    learner.aggregate[space.index(State{0, ActivityCategory::Home, true, 1})] = 0.5;
    learner.aggregate[space.index(State{1, ActivityCategory::Home, true, 1})] = 0.5;
    learner.per_step = {std::vector<double>(space.size(), 0.0), std::vector<double>(space.size(), 0.0)};
    learner.per_step[0][space.index(State{0, ActivityCategory::Home, true, 1})] = 1.0;
    learner.per_step[1][space.index(State{1, ActivityCategory::Home, true, 1})] = 1.0;
    const auto g = maxent_gradient({t}, learner, space);
    ASSERT_EQ(g.size(), space.feature_dim());
    // layout: [home, work, hour0, hour1, first, count]
    EXPECT_DOUBLE_EQ(g[0], 0.5 - 1.0);
    EXPECT_DOUBLE_EQ(g[1], 0.5);
    EXPECT_DOUBLE_EQ(g[2], 0.0);
    EXPECT_DOUBLE_EQ(g[3], 0.0);
    EXPECT_DOUBLE_EQ(g[4], 0.5 - 1.0);
    EXPECT_DOUBLE_EQ(g[5], 0.0);
}

TEST(Gradient, MatchesFiniteDifferencesOfLikelihood) {
    std::uint64_t seed = 300;
    for (const auto& shape : toy_shapes()) {
        const auto toy = make_toy(shape, seed++, 1.0, true);
        const auto trajectories =
            sample_trajectories(st::solve_policy(toy), toy.dynamics, 7, derive_seed(seed, "days"));
        const CompiledDynamics dyn = st::with_observed_starts(toy, trajectories);

        RewardWeights theta = toy.theta;
        for (auto& x : theta.values) x *= -0.5;
        const auto v = soft_value_iteration(theta, dyn, toy.config);
        const auto vis = propagate_learner_visitation(extract_policy(theta, v, dyn, toy.config), dyn);
        const auto g = maxent_gradient(trajectories, vis, toy.space);

        const double h = 1e-5;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            RewardWeights up = theta, down = theta;
            up[k] += h;
            down[k] -= h;
            const double fd =
                (maxent_log_likelihood(up, trajectories, dyn) - maxent_log_likelihood(down, trajectories, dyn)) / (2 * h);
            ASSERT_NEAR(g[k], fd, 1e-4) << "coordinate " << k;
        }
    }
}

TEST(Likelihood, RequiresDeterministicTravel) {
    const auto toy = make_toy({3, 3, 2}, 8, 1.0, false);
    const auto ts = sample_trajectories(st::solve_policy(toy), toy.dynamics, 2, 1);
    EXPECT_THROW(maxent_log_likelihood(toy.theta, ts, toy.dynamics), InvalidConfig);
}

TEST(Update, BlendsGradientAndDirections) {
    TrainingConfig c;
    const RewardWeights theta{{0.5, -1.0, 0.25}};
    const std::vector<double> zero(3, 0.0), grad = {0.1, -0.2, 0.0};
    const std::vector<int> up(3, 1), none(3, 0), mixed = {1, -1, 0};

    const auto a = apply_update(theta, zero, up, c);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(a[i], theta[i] + 0.002);
    const auto b = apply_update(theta, grad, none, c);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(b[i], theta[i] + 2.0 * grad[i]);
    EXPECT_EQ(apply_update(theta, zero, none, c), theta);
    const auto m = apply_update(theta, grad, mixed, c);
    EXPECT_DOUBLE_EQ(m[1], -1.0 - 0.4 - 0.002);

    const std::vector<int> bad = {0, 2, 0};
    EXPECT_THROW(apply_update(theta, zero, bad, c), InvalidGuidance);
    EXPECT_THROW(apply_update(theta, std::vector<double>(2, 0.0), none, c), InvalidConfig);
}

TEST(Config, RangeChecks) {
    TrainingConfig c;
    EXPECT_NO_THROW(c.validate());
    c.gamma = 1.0;
    EXPECT_NO_THROW(c.validate());
    c.gamma = 1.01;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = {};
    c.eps_value = 0.0;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = {};
    c.top_k = 0;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = {};
    c.max_iters = -1;
    EXPECT_THROW(c.validate(), InvalidConfig);
}

TEST(Invariance, HourShiftLeavesPolicyUnchanged) {
    const StateSpace space(kDefaultNMax);
    EmpiricalDynamics dyn{TransitionModel(random_stochastic_matrix(5, 9)), {{State{}, 1.0}}};
    const CompiledDynamics cd(space, dyn);
    TrainingConfig c;
    Rng rng(42);
    RewardWeights theta = RewardWeights::zeros(31);
    for (auto& x : theta.values) x = rng.uniform(-2, 2);
    RewardWeights shifted = theta;
    for (int h = 0; h < 24; ++h) shifted[space.hour_slot(h)] += 3.75;
    const auto p0 = extract_policy(theta, soft_value_iteration(theta, cd, c), cd, c);
    const auto p1 = extract_policy(shifted, soft_value_iteration(shifted, cd, c), cd, c);
    for (std::size_t s = 0; s < space.size(); ++s) {
        ASSERT_NEAR(p0.probabilities[s][0], p1.probabilities[s][0], 1e-8);
        ASSERT_NEAR(p0.probabilities[s][1], p1.probabilities[s][1], 1e-8);
    }
}
