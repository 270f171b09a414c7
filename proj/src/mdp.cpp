#include "silic/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "silic/errors.hpp"

namespace silic {

namespace {

constexpr std::array<std::string_view, kActivityCount> kActivityNames = {
    "Home", "Work", "Education", "EscortErrand", "Leisure"};

std::string lower_slug(std::string_view name) {
    std::string out;
    for (char c : name) {
        if (c >= 'A' && c <= 'Z') {
            if (!out.empty()) out.push_back('_');
            out.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string_view activity_name(ActivityCategory a) {
    return kActivityNames[static_cast<std::size_t>(to_index(a))];
}

std::optional<ActivityCategory> activity_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kActivityNames.size(); ++i) {
        if (kActivityNames[i] == name) return static_cast<ActivityCategory>(i);
    }
    return std::nullopt;
}

ActivityCategory activity_from_index(int index) {
    if (index < 0 || index >= kActivityCount) {
        throw InvalidConfig("activity index out of range: " + std::to_string(index));
    }
    return static_cast<ActivityCategory>(index);
}

std::string to_string(const State& s) {
    return "(" + std::to_string(s.hour) + ", " + std::string(activity_name(s.activity)) + ", " +
           (s.is_first ? "1" : "0") + ", " + std::to_string(s.count) + ")";
}

StateSpace::StateSpace(int n_max, int hours, int activities)
    : n_max_(n_max), hours_(hours), activities_(activities), size_(0) {
    if (n_max < 1) throw InvalidConfig("n_max must be >= 1, got " + std::to_string(n_max));
    if (hours < 1) throw InvalidConfig("hours must be >= 1, got " + std::to_string(hours));
    if (activities < 1 || activities > kActivityCount) {
        throw InvalidConfig("activities must be in [1, 5], got " + std::to_string(activities));
    }
    size_ = static_cast<std::size_t>(hours) * static_cast<std::size_t>(activities) * 2u *
            static_cast<std::size_t>(n_max);
}

bool StateSpace::contains(const State& s) const noexcept {
    return s.hour >= 0 && s.hour < hours_ && to_index(s.activity) >= 0 && to_index(s.activity) < activities_ &&
           s.count >= 1 && s.count <= n_max_;
}

std::size_t StateSpace::index(const State& s) const {
    if (!contains(s)) throw InvalidConfig("state outside the state space: " + to_string(s));
    const auto h = static_cast<std::size_t>(s.hour);
    const auto a = static_cast<std::size_t>(to_index(s.activity));
    const std::size_t f = s.is_first ? 1u : 0u;
    const auto n = static_cast<std::size_t>(s.count - 1);
    return ((h * static_cast<std::size_t>(activities_) + a) * 2u + f) * static_cast<std::size_t>(n_max_) + n;
}

State StateSpace::state(std::size_t index) const {
    if (index >= size_) throw InvalidConfig("state index out of range: " + std::to_string(index));
    const auto nm = static_cast<std::size_t>(n_max_);
    State s;
    s.count = static_cast<int>(index % nm) + 1;
    index /= nm;
    s.is_first = (index % 2u) == 1u;
    index /= 2u;
    s.activity = static_cast<ActivityCategory>(index % static_cast<std::size_t>(activities_));
    s.hour = static_cast<int>(index / static_cast<std::size_t>(activities_));
    return s;
}

std::vector<std::string> StateSpace::feature_names() const {
    std::vector<std::string> names;
    names.reserve(feature_dim());
    for (int a = 0; a < activities_; ++a) {
        names.push_back("activity_" + lower_slug(kActivityNames[static_cast<std::size_t>(a)]));
    }
    for (int h = 0; h < hours_; ++h) names.push_back("hour_" + std::to_string(h));
    names.emplace_back("is_first_trip");
    names.emplace_back("activity_segment_count");
    return names;
}

StateSpace build_state_space(int n_max) { return StateSpace(n_max); }

FeatureVector featurize(const State& s, const StateSpace& space) {
    FeatureVector phi(space.feature_dim(), 0.0);
    phi[space.activity_slot(s.activity)] = 1.0;
    phi[space.hour_slot(s.hour)] = 1.0;
    phi[space.first_slot()] = s.is_first ? 1.0 : 0.0;
    phi[space.count_slot()] = static_cast<double>(s.count) / static_cast<double>(space.n_max());
    return phi;
}

double reward(const RewardWeights& theta, const State& s, const StateSpace& space) {
    if (theta.size() != space.feature_dim()) {
        throw InvalidConfig("theta has " + std::to_string(theta.size()) + " entries, expected " +
                            std::to_string(space.feature_dim()));
    }
    // Only four slots are nonzero.
    return theta[space.activity_slot(s.activity)] + theta[space.hour_slot(s.hour)] +
           (s.is_first ? theta[space.first_slot()] : 0.0) +
           theta[space.count_slot()] * (static_cast<double>(s.count) / static_cast<double>(space.n_max()));
}

std::vector<double> reward_table(const RewardWeights& theta, const StateSpace& space) {
    std::vector<double> r(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) r[i] = reward(theta, space.state(i), space);
    return r;
}

TransitionModel::TransitionModel(std::vector<std::vector<double>> activity_matrix)
    : matrix_(std::move(activity_matrix)) {
    const std::size_t n = matrix_.size();
    if (n == 0 || n > static_cast<std::size_t>(kActivityCount)) {
        throw InvalidConfig("activity matrix must have 1..5 rows");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = matrix_[i];
        if (row.size() != n) throw InvalidConfig("activity matrix must be square");
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw InvalidConfig("activity matrix row " + std::to_string(i) + " has a negative or non-finite entry");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw InvalidConfig("activity matrix row " + std::to_string(i) + " sums to " + std::to_string(sum));
        }
    }
}

TransitionModel TransitionModel::uniform(int activities) {
    const auto n = static_cast<std::size_t>(activities);
    return TransitionModel(std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0 / activities)));
}

std::vector<Successor> transition_distribution(const State& s, Action a, const TransitionModel& model,
                                               const StateSpace& space) {
    if (!space.contains(s)) throw InvalidConfig("state outside the state space: " + to_string(s));
    if (space.is_terminal(s)) throw TerminalState("no successor after hour " + std::to_string(s.hour));
    if (model.activities() != space.activities()) {
        throw InvalidConfig("transition model and state space disagree on the activity count");
    }

    if (a == Action::Stay) {
        State next = s;
        next.hour += 1;
        return {Successor{next, 1.0}};
    }

    std::vector<Successor> out;
    const auto& row = model.matrix()[static_cast<std::size_t>(to_index(s.activity))];
    for (int j = 0; j < space.activities(); ++j) {
        const double p = row[static_cast<std::size_t>(j)];
        if (p <= 0.0) continue;
        State next;
        next.hour = s.hour + 1;
        next.activity = static_cast<ActivityCategory>(j);
        next.is_first = false;
        next.count = std::min(s.count + 1, space.n_max());
        out.push_back({next, p});
    }
    return out;
}

} // namespace silic
