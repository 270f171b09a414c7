#include "silic/metrics.hpp"

#include <cmath>

#include "silic/errors.hpp"

namespace silic {

ExpertPolicy estimate_expert_policy(const std::vector<Trajectory>& trajectories, const StateSpace& space) {
    std::vector<std::array<double, kActionCount>> counts(space.size(), {0.0, 0.0});
    for (const auto& t : trajectories) {
        for (std::size_t i = 0; i < t.states.size(); ++i) {
            counts[space.index(t.states[i])][static_cast<std::size_t>(to_index(t.actions[i]))] += 1.0;
        }
    }
    ExpertPolicy out;
    out.policy.probabilities.resize(space.size());
    out.visited.assign(space.size(), false);
    for (std::size_t s = 0; s < space.size(); ++s) {
        const double n = counts[s][0] + counts[s][1];
        if (n > 0.0) {
            out.visited[s] = true;
            out.policy.probabilities[s] = {counts[s][0] / n, counts[s][1] / n};
        } else {
            out.policy.probabilities[s] = {0.5, 0.5};
        }
    }
    return out;
}

double kl_policy_divergence(const Policy& expert, const Policy& learner, std::span<const double> expert_visitation) {
    if (expert.size() != learner.size() || expert_visitation.size() != expert.size()) {
        throw InvalidConfig("policies and visitation must cover the same states");
    }
    double kl = 0.0;
    for (std::size_t s = 0; s < expert.size(); ++s) {
        const double d = expert_visitation[s];
        if (d == 0.0) continue;
        std::array<double, kActionCount> q{};
        double z = 0.0;
        for (std::size_t a = 0; a < kActionCount; ++a) {
            q[a] = std::max(learner.probabilities[s][a], kLearnerProbabilityFloor);
            z += q[a];
        }
        double row = 0.0;
        for (std::size_t a = 0; a < kActionCount; ++a) {
            const double p = expert.probabilities[s][a];
            if (p > 0.0) row += p * std::log(p / (q[a] / z));
        }
        kl += d * row;
    }
    return kl;
}

double l1_policy_distance(const Policy& expert, const Policy& learner) {
    if (expert.size() != learner.size() || expert.size() == 0) {
        throw InvalidConfig("policies must cover the same nonempty state set");
    }
    double total = 0.0;
    for (std::size_t s = 0; s < expert.size(); ++s) {
        for (std::size_t a = 0; a < kActionCount; ++a) {
            total += std::abs(expert.probabilities[s][a] - learner.probabilities[s][a]);
        }
    }
    return total / static_cast<double>(expert.size());
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : counts_(classes, std::vector<long long>(classes, 0)) {}

void ConfusionMatrix::add(int truth, int predicted) {
    const auto n = static_cast<int>(classes());
    if (truth < 0 || truth >= n || predicted < 0 || predicted >= n) {
        throw InvalidLabel("label out of range [0, " + std::to_string(n) + "): truth " + std::to_string(truth) +
                           ", predicted " + std::to_string(predicted));
    }
    ++counts_[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    ++total_;
}

long long ConfusionMatrix::true_positives(std::size_t c) const { return counts_[c][c]; }

long long ConfusionMatrix::false_positives(std::size_t c) const {
    long long fp = 0;
    for (std::size_t t = 0; t < classes(); ++t) {
        if (t != c) fp += counts_[t][c];
    }
    return fp;
}

long long ConfusionMatrix::false_negatives(std::size_t c) const {
    long long fn = 0;
    for (std::size_t p = 0; p < classes(); ++p) {
        if (p != c) fn += counts_[c][p];
    }
    return fn;
}

long long ConfusionMatrix::true_negatives(std::size_t c) const {
    return total_ - true_positives(c) - false_positives(c) - false_negatives(c);
}

double f1_score(double precision, double recall) {
    const double denom = precision + recall;
    return denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
}

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                           std::size_t classes) {
    if (truth.size() != predicted.size()) throw InvalidConfig("truth and prediction lengths differ");
    if (classes < 2) throw InvalidConfig("a classification task needs at least two classes");

    ClassificationReport rep;
    rep.confusion = ConfusionMatrix(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) rep.confusion.add(truth[i], predicted[i]);

    const auto& cm = rep.confusion;
    const double n = static_cast<double>(cm.total());
    long long correct = 0;
    double ovr_num = 0.0, ovr_den = 0.0;
    rep.per_class.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const auto tp = static_cast<double>(cm.true_positives(c));
        const auto fp = static_cast<double>(cm.false_positives(c));
        const auto fn = static_cast<double>(cm.false_negatives(c));
        const auto tn = static_cast<double>(cm.true_negatives(c));
        auto& m = rep.per_class[c];
        m.precision = tp + fp == 0.0 ? 0.0 : tp / (tp + fp);
        m.recall = tp + fn == 0.0 ? 0.0 : tp / (tp + fn);
        m.f1 = f1_score(m.precision, m.recall);
        m.support = cm.true_positives(c) + cm.false_negatives(c);
        correct += cm.true_positives(c);
        ovr_num += tp + tn;
        ovr_den += tp + tn + fp + fn;
    }
    if (n > 0.0) {
        rep.accuracy = static_cast<double>(correct) / n;
        rep.accuracy_one_vs_rest = ovr_num / ovr_den;
        for (const auto& m : rep.per_class) rep.weighted_f1 += static_cast<double>(m.support) / n * m.f1;
    }
    return rep;
}

nlohmann::json report_to_json(const ClassificationReport& report, const std::vector<std::string>& class_names) {
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& m = report.per_class[c];
        classes.push_back({{"class", c < class_names.size() ? class_names[c] : std::to_string(c)},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support}});
    }
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t t = 0; t < report.confusion.classes(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < report.confusion.classes(); ++p) row.push_back(report.confusion.at(t, p));
        confusion.push_back(row);
    }
    return {{"classes", classes},
            {"accuracy", report.accuracy},
            {"accuracy_one_vs_rest", report.accuracy_one_vs_rest},
            {"weighted_f1", report.weighted_f1},
            {"n", report.confusion.total()},
            {"confusion", confusion}};
}

} // namespace silic
