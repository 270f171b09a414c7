#pragma once

// Travel-behavior MDP: states [hour, activity, is_first, count], two
// actions, a linear reward over a one-hot feature embedding, and
// activity-conditioned travel dynamics.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace silic {

enum class ActivityCategory : int { Home = 0, Work = 1, Education = 2, EscortErrand = 3, Leisure = 4 };

inline constexpr int kActivityCount = 5;
inline constexpr int kHoursPerDay = 24;
inline constexpr int kDefaultNMax = 10;

std::string_view activity_name(ActivityCategory a);
/// Inverse of activity_name; nullopt for anything else.
std::optional<ActivityCategory> activity_from_name(std::string_view name);
ActivityCategory activity_from_index(int index);
constexpr int to_index(ActivityCategory a) noexcept { return static_cast<int>(a); }

enum class Action : int { Stay = 0, Travel = 1 };
inline constexpr int kActionCount = 2;
constexpr int to_index(Action a) noexcept { return static_cast<int>(a); }

struct State {
    int hour = 0;
    ActivityCategory activity = ActivityCategory::Home;
    bool is_first = true;
    int count = 1;

    friend bool operator==(const State&, const State&) = default;
};

std::string to_string(const State& s);

using FeatureVector = std::vector<double>;

/// Reward weights theta; R(s) = theta . phi(s).
struct RewardWeights {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    friend bool operator==(const RewardWeights&, const RewardWeights&) = default;

    static RewardWeights zeros(std::size_t dim) { return RewardWeights{std::vector<double>(dim, 0.0)}; }
};

/// Dense enumeration of every [h, a, f, n] combination.
///
/// The production space is 24 hours x 5 activities x 2 x n_max. Toy
/// configurations shrink `hours` and `activities`; everything downstream
/// reads the dimensions from here, so the same code path serves both.
///
/// Feature layout (dim = activities + hours + 2):
///   [0, activities)                 activity one-hot
///   [activities, activities+hours)  hour one-hot
///   activities+hours                is_first (0/1)
///   activities+hours+1              count / n_max
class StateSpace {
public:
    StateSpace(int n_max, int hours = kHoursPerDay, int activities = kActivityCount);

    int n_max() const noexcept { return n_max_; }
    int hours() const noexcept { return hours_; }
    int activities() const noexcept { return activities_; }
    std::size_t size() const noexcept { return size_; }
    std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(activities_ + hours_ + 2); }

    std::size_t activity_slot(ActivityCategory a) const noexcept { return static_cast<std::size_t>(to_index(a)); }
    std::size_t hour_slot(int hour) const noexcept { return static_cast<std::size_t>(activities_ + hour); }
    std::size_t first_slot() const noexcept { return static_cast<std::size_t>(activities_ + hours_); }
    std::size_t count_slot() const noexcept { return first_slot() + 1; }

    bool contains(const State& s) const noexcept;
    bool is_terminal(const State& s) const noexcept { return s.hour == hours_ - 1; }

    std::size_t index(const State& s) const;
    State state(std::size_t index) const;

    /// Names for every feature slot, e.g. "activity_home", "hour_7".
    std::vector<std::string> feature_names() const;

private:
    int n_max_;
    int hours_;
    int activities_;
    std::size_t size_;
};

StateSpace build_state_space(int n_max);

FeatureVector featurize(const State& s, const StateSpace& space);
double reward(const RewardWeights& theta, const State& s, const StateSpace& space);
/// R(s) for every state index.
std::vector<double> reward_table(const RewardWeights& theta, const StateSpace& space);

/// Row-stochastic activity-to-activity matrix used when Travel is taken.
class TransitionModel {
public:
    TransitionModel() = default;
    /// Throws InvalidConfig unless rows are nonnegative and sum to 1 +- 1e-9.
    explicit TransitionModel(std::vector<std::vector<double>> activity_matrix);

    static TransitionModel uniform(int activities);

    int activities() const noexcept { return static_cast<int>(matrix_.size()); }
    double probability(ActivityCategory from, ActivityCategory to) const {
        return matrix_[static_cast<std::size_t>(to_index(from))][static_cast<std::size_t>(to_index(to))];
    }
    const std::vector<std::vector<double>>& matrix() const noexcept { return matrix_; }

private:
    std::vector<std::vector<double>> matrix_;
};

struct Successor {
    State state;
    double probability;
};

/// Throws TerminalState at the last hour of the space.
std::vector<Successor> transition_distribution(const State& s, Action a, const TransitionModel& model,
                                               const StateSpace& space);

} // namespace silic
