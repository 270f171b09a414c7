#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "silic/diary.hpp"
#include "silic/solver.hpp"

namespace silic {

inline constexpr double kLearnerProbabilityFloor = 1e-6;

/// Expert policy from action counts at visited states; (0.5, 0.5) elsewhere.
struct ExpertPolicy {
    Policy policy;
    std::vector<bool> visited;
};

ExpertPolicy estimate_expert_policy(const std::vector<Trajectory>& trajectories, const StateSpace& space);

/// sum_s D_e(s) sum_a pi_e(a|s) log(pi_e(a|s) / pi_l(a|s)). Learner rows are
/// floored at 1e-6 and renormalized first; pi_e = 0 terms contribute 0.
double kl_policy_divergence(const Policy& expert, const Policy& learner, std::span<const double> expert_visitation);

/// (1/|S|) sum_s sum_a |pi_e(a|s) - pi_l(a|s)|.
double l1_policy_distance(const Policy& expert, const Policy& learner);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);

    void add(int truth, int predicted);
    std::size_t classes() const noexcept { return counts_.size(); }
    long long at(std::size_t truth, std::size_t predicted) const { return counts_[truth][predicted]; }
    long long total() const noexcept { return total_; }
    long long true_positives(std::size_t c) const;
    long long false_positives(std::size_t c) const;
    long long false_negatives(std::size_t c) const;
    long long true_negatives(std::size_t c) const;

private:
    std::vector<std::vector<long long>> counts_;
    long long total_ = 0;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
};

struct ClassificationReport {
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;            // correct / N
    double accuracy_one_vs_rest = 0.0; // sum(TP+TN) / sum(TP+TN+FP+FN)
    double weighted_f1 = 0.0;
    ConfusionMatrix confusion{0};
};

/// Harmonic mean, 0 when both inputs are 0.
double f1_score(double precision, double recall);

/// Throws InvalidLabel for labels outside [0, classes) and InvalidConfig on a
/// length mismatch.
ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                           std::size_t classes);

nlohmann::json report_to_json(const ClassificationReport& report, const std::vector<std::string>& class_names);

} // namespace silic
