#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "silic/ccr.hpp"
#include "silic/diary.hpp"
#include "silic/guidance.hpp"
#include "silic/mdp.hpp"
#include "silic/rng.hpp"
#include "silic/solver.hpp"
#include "silic/synth.hpp"

namespace silic::testing {

inline std::filesystem::path data_dir() { return SILIC_TEST_DATA; }
inline std::filesystem::path fixture(const std::string& name) { return data_dir() / "fixtures" / name; }
inline std::filesystem::path golden(const std::string& name) { return data_dir() / "golden" / name; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A small MDP with enumerable trajectories.
struct ToyMdp {
    StateSpace space;
    EmpiricalDynamics model;
    CompiledDynamics dynamics;
    RewardWeights theta;
    TrainingConfig config;
};

struct ToyShape {
    int hours;
    int activities;
    int n_max;
};

/// Shapes used by the oracle checks; every one has at most 60 states and a
/// horizon of at most 4.
inline std::vector<ToyShape> toy_shapes() {
    return {{4, 3, 2}, {3, 3, 3}, {4, 2, 3}, {2, 5, 3}, {3, 2, 2}, {4, 5, 1}, {2, 3, 1}};
}

inline std::vector<std::vector<double>> permutation_matrix(int n, std::uint64_t seed) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform() * (i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    std::vector<std::vector<double>> m(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1.0;
    return m;
}

/// Random toy: theta ~ U[-2, 2], a random hour-0 start distribution over up
/// to three states. `deterministic` swaps the Dirichlet travel rows for a
/// permutation so trajectory enumeration by action sequence is exact.
inline ToyMdp make_toy(const ToyShape& shape, std::uint64_t seed, double gamma, bool deterministic = false) {
    StateSpace space(shape.n_max, shape.hours, shape.activities);
    Rng rng(derive_seed(seed, "toy"));
    EmpiricalDynamics dyn;
    dyn.transition = TransitionModel(deterministic ? permutation_matrix(shape.activities, derive_seed(seed, "perm"))
                                                   : random_stochastic_matrix(shape.activities, derive_seed(seed, "rows")));
    const int starts = std::min(3, shape.activities);
    std::vector<double> w;
    for (int i = 0; i < starts; ++i) w.push_back(0.1 + rng.uniform());
    double total = 0.0;
    for (double x : w) total += x;
    for (int i = 0; i < starts; ++i) {
        dyn.initial_distribution.push_back({State{0, activity_from_index(i), true, 1}, w[static_cast<std::size_t>(i)] / total});
    }
    RewardWeights theta = RewardWeights::zeros(space.feature_dim());
    for (auto& x : theta.values) x = rng.uniform(-2.0, 2.0);
    TrainingConfig config;
    config.gamma = gamma;
    config.horizon = shape.hours;
    config.eps_value = 1e-13;
    return {space, dyn, CompiledDynamics(space, dyn), theta, config};
}

/// Same travel rows, starting distribution replaced by the start-state
/// frequencies of `trajectories`.
inline CompiledDynamics with_observed_starts(const ToyMdp& toy, const std::vector<Trajectory>& trajectories) {
    EmpiricalDynamics dyn = toy.model;
    dyn.initial_distribution = estimate_empirical_dynamics(trajectories, toy.space).initial_distribution;
    return CompiledDynamics(toy.space, dyn);
}

inline Policy solve_policy(const ToyMdp& toy) {
    const auto v = soft_value_iteration(toy.theta, toy.dynamics, toy.config);
    return extract_policy(toy.theta, v, toy.dynamics, toy.config);
}

// ---- fixed prompt inputs behind the golden files --------------------------

inline std::vector<TripRecord> golden_diary_records() {
    auto rec = [](const char* day, int minute, const char* act) {
        TripRecord r;
        r.person_id = "golden";
        r.day = day;
        r.depart_minute = minute;
        r.raw_activity = act;
        return r;
    };
    return {rec("2024-03-04", 7 * 60 + 45, "Work"),       rec("2024-03-04", 12 * 60 + 10, "Meal"),
            rec("2024-03-04", 13 * 60, "Work"),           rec("2024-03-04", 17 * 60 + 30, "Home"),
            rec("2024-03-05", 8 * 60 + 5, "Work"),        rec("2024-03-05", 17 * 60 + 50, "Shopping"),
            rec("2024-03-05", 18 * 60 + 40, "Home"),      rec("2024-03-06", 9 * 60 + 15, "Escort"),
            rec("2024-03-06", 9 * 60 + 50, "Home")};
}

inline RewardWeights golden_theta() {
    RewardWeights t = RewardWeights::zeros(31);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(static_cast<int>((i * 37) % 41) - 20) / 10.0;
    }
    return t;
}

inline MismatchReport golden_report() {
    const StateSpace space(kDefaultNMax);
    MismatchReport r;
    const State states[] = {{8, ActivityCategory::Home, true, 1},   {9, ActivityCategory::Work, true, 2},
                            {18, ActivityCategory::Home, false, 4}, {12, ActivityCategory::Leisure, false, 3},
                            {7, ActivityCategory::Home, true, 1}};
    const double expert[] = {0.0125, 0.0375, 0.0291666667, 0.0, 0.0333333333};
    const double learner[] = {0.0411, 0.0102, 0.0055, 0.0198, 0.0157};
    for (std::size_t i = 0; i < 5; ++i) {
        MismatchEntry e;
        e.state = states[i];
        e.index = space.index(states[i]);
        e.expert_mass = expert[i];
        e.learner_mass = learner[i];
        e.gap = std::abs(expert[i] - learner[i]);
        r.push_back(e);
    }
    return r;
}

inline ContextProfile golden_context() {
    ContextProfile c;
    c.person_id = "golden";
    c.urban_indicator = 1;
    c.population_density = 11843.5;
    c.distance_to_transit = 312.0;
    c.network_density = 27.4;
    c.housing_density = 6120.0;
    c.residential_proportion = 0.52;
    c.commercial_proportion = 0.18;
    c.educational_proportion = 0.04;
    c.recreational_proportion = 0.11;
    c.housing_type = HousingType::MultiUnitLarge;
    return c;
}

/// The three guided prompts rendered from the fixed inputs above.
struct GoldenPrompts {
    std::string init;
    std::string update;
    std::string ccr;
};

inline GoldenPrompts render_golden_prompts() {
    const StateSpace space(kDefaultNMax);
    return {build_init_prompt(render_diary(golden_diary_records()), feature_schema_text(space)),
            build_update_prompt(golden_theta(), golden_report()),
            build_ccr_prompt(golden_theta(), golden_context(), task_for(Attribute::Income))};
}

} // namespace silic::testing
