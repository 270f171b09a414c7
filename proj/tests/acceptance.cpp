// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "silic/errors.hpp"
#include "silic/features.hpp"
#include "silic/format.hpp"
#include "silic/metrics.hpp"
#include "silic/pipeline.hpp"
#include "support.hpp"

using namespace silic;
namespace fs = std::filesystem;
namespace st = silic::testing;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Verdict()> run;
};

std::string fmt(double x, int digits = 3) {
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

// ---- 1 ------------------------------------------------------------------

Verdict f1_cells() {
    const auto table = read_csv(st::fixture("f1_reference.csv").string());
    double worst = 0.0;
    std::size_t n = 0;
    for (const auto& [line, row] : table.rows) {
        double p = 0, r = 0, f = 0;
        if (!parse_double(row[3], p) || !parse_double(row[4], r) || !parse_double(row[5], f)) {
            return {false, "unreadable row at line " + std::to_string(line)};
        }
        worst = std::max(worst, std::abs(f1_score(p, r) - f));
        ++n;
    }
    return {n == 30 && worst <= 1e-3, std::to_string(n) + " cells, max |dF1| " + fmt(worst)};
}

// ---- 2 ------------------------------------------------------------------

Verdict visitation_oracle() {
    double worst = 0.0;
    int toys = 0;
    std::uint64_t seed = 100;
    for (const auto& shape : st::toy_shapes()) {
        const auto toy = st::make_toy(shape, seed++, 0.95);
        if (toy.space.size() > 60 || shape.hours > 4) continue;
        const auto pi = st::solve_policy(toy);
        const auto vis = propagate_learner_visitation(pi, toy.dynamics);
        const auto oracle = brute_force_feature_expectation(pi, toy.dynamics);
        for (std::size_t s = 0; s < toy.space.size(); ++s) {
            worst = std::max(worst, std::abs(vis.aggregate[s] - oracle.visitation[s]));
        }
        ++toys;
    }
    return {toys >= 5 && worst <= 1e-10, std::to_string(toys) + " toy MDPs, max error " + fmt(worst)};
}

// ---- 3 ------------------------------------------------------------------

Verdict gradient_check() {
    double worst = 0.0;
    std::size_t coords = 0;
    std::uint64_t seed = 300;
    for (const auto& shape : st::toy_shapes()) {
        const auto toy = st::make_toy(shape, seed++, 1.0, true);
        const auto days = sample_trajectories(st::solve_policy(toy), toy.dynamics, 7, derive_seed(seed, "days"));
        const CompiledDynamics dyn = st::with_observed_starts(toy, days);
        RewardWeights theta = toy.theta;
        for (auto& x : theta.values) x *= -0.5;
        const auto v = soft_value_iteration(theta, dyn, toy.config);
        const auto g = maxent_gradient(days, propagate_learner_visitation(extract_policy(theta, v, dyn, toy.config), dyn),
                                       toy.space);
        const double h = 1e-5;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            RewardWeights up = theta, down = theta;
            up[k] += h;
            down[k] -= h;
            const double fd = (maxent_log_likelihood(up, days, dyn) - maxent_log_likelihood(down, days, dyn)) / (2 * h);
            worst = std::max(worst, std::abs(fd - g[k]));
            ++coords;
        }
    }
    return {worst <= 1e-4, std::to_string(coords) + " coordinates, max |g - fd| " + fmt(worst)};
}

// ---- 4 ------------------------------------------------------------------

Verdict normalization() {
    Rng rng(2024);
    double policy_err = 0, slice_err = 0, transition_err = 0, initial_err = 0;
    const int configs = 1000;
    for (int i = 0; i < configs; ++i) {
        const int hours = 2 + static_cast<int>(rng.uniform() * 23);
        const int acts = 2 + static_cast<int>(rng.uniform() * 4);
        const int n_max = 1 + static_cast<int>(rng.uniform() * 10);
        const std::uint64_t seed = derive_seed(2024, "norm", static_cast<std::uint64_t>(i));
        auto toy = st::make_toy({hours, acts, n_max}, seed, rng.uniform(), rng.uniform() < 0.2);
        const double scale = std::pow(10.0, rng.uniform(-1.0, 2.0));
        for (auto& x : toy.theta.values) x *= scale;
        toy.config.eps_value = 1e-4;

        const auto pi = st::solve_policy(toy);
        for (const auto& row : pi.probabilities) policy_err = std::max(policy_err, std::abs(row[0] + row[1] - 1.0));
        const auto vis = propagate_learner_visitation(pi, toy.dynamics);
        for (const auto& slice : vis.per_step) {
            slice_err = std::max(slice_err, std::abs(std::accumulate(slice.begin(), slice.end(), 0.0) - 1.0));
        }
        for (std::size_t s = 0; s < toy.space.size(); ++s) {
            if (toy.space.is_terminal(toy.space.state(s))) continue;
            for (Action a : {Action::Stay, Action::Travel}) {
                double sum = 0.0;
                for (const auto& e : toy.dynamics.successors(s, a)) sum += e.probability;
                transition_err = std::max(transition_err, std::abs(sum - 1.0));
            }
        }
        // observed starts of sampled days
        const auto days = sample_trajectories(pi, toy.dynamics, 5, derive_seed(seed, "days"));
        const auto est = estimate_empirical_dynamics(days, toy.space);
        double init = 0.0;
        for (const auto& m : est.initial_distribution) init += m.probability;
        initial_err = std::max(initial_err, std::abs(init - 1.0));
        for (const auto& row : est.transition.matrix()) {
            transition_err = std::max(transition_err, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
        }
    }
    const bool ok = policy_err <= 1e-9 && slice_err <= 1e-6 && transition_err <= 1e-9 && initial_err <= 1e-9;
    return {ok, std::to_string(configs) + " configs; max errors policy " + fmt(policy_err) + ", slices " +
                    fmt(slice_err) + ", transitions " + fmt(transition_err) + ", initial " + fmt(initial_err)};
}

// ---- 5 ------------------------------------------------------------------

Verdict hour_shift() {
    const StateSpace space(kDefaultNMax);
    const EmpiricalDynamics dyn{TransitionModel(random_stochastic_matrix(space.activities(), 9)), {{State{}, 1.0}}};
    const CompiledDynamics cd(space, dyn);
    const TrainingConfig c;
    double worst = 0.0;
    for (std::uint64_t seed : {42u, 43u, 44u}) {
        Rng rng(seed);
        RewardWeights theta = RewardWeights::zeros(space.feature_dim());
        for (auto& x : theta.values) x = rng.uniform(-2, 2);
        RewardWeights shifted = theta;
        const double shift = rng.uniform(-5, 5);
        for (int h = 0; h < space.hours(); ++h) shifted[space.hour_slot(h)] += shift;
        const auto p0 = extract_policy(theta, soft_value_iteration(theta, cd, c), cd, c);
        const auto p1 = extract_policy(shifted, soft_value_iteration(shifted, cd, c), cd, c);
        for (std::size_t s = 0; s < space.size(); ++s) {
            for (std::size_t a = 0; a < 2; ++a) {
                worst = std::max(worst, std::abs(p0.probabilities[s][a] - p1.probabilities[s][a]));
            }
        }
    }
    return {space.size() == 2400 && worst <= 1e-8,
            std::to_string(space.size()) + " states, 3 shifts, max |dpi| " + fmt(worst)};
}

// ---- 6 ------------------------------------------------------------------

Verdict recovery() {
    RecoverySuiteConfig suite;
    suite.seed = 0;
    suite.agents = 20;
    suite.days = 5;
    const TrainingConfig config;
    const auto cells = ablation_grid();
    const auto results = run_recovery_suite(suite, config, cells);

    struct Means {
        double init_true = 0, final_true = 0, init_kl = 0, final_kl = 0;
    };
    std::vector<Means> m(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        int n = 0;
        for (const auto& r : results) {
            if (r.cell != cells[c].name) continue;
            m[c].init_true += r.initial_true_kl;
            m[c].final_true += r.final_true_kl;
            m[c].init_kl += r.initial_kl;
            m[c].final_kl += r.final_kl;
            ++n;
        }
        m[c].init_true /= n;
        m[c].final_true /= n;
        m[c].init_kl /= n;
        m[c].final_kl /= n;
    }
    // cells: 0 guided+guided, 1 guided+gradient, 2 zero+guided, 3 zero+gradient
    const double ratio = m[0].final_true / m[0].init_true;
    const bool ordered = m[0].final_true <= m[1].final_true && m[1].final_true <= m[3].final_true;
    const bool ordered_emp = m[0].final_kl <= m[1].final_kl && m[1].final_kl <= m[3].final_kl;

    std::ostringstream d;
    d.precision(6);
    d << "true KL ratio " << ratio << (ratio <= 0.5 ? " ok" : " FAILS") << "; true KL by cell";
    for (const auto& x : m) d << ' ' << x.final_true;
    d << (ordered ? " ordered" : " NOT ordered") << "; empirical KL ratio " << m[0].final_kl / m[0].init_kl
      << ", by cell";
    for (const auto& x : m) d << ' ' << x.final_kl;
    d << (ordered_emp ? " ordered" : " NOT ordered");
    return {ratio <= 0.5 && ordered, d.str()};
}

// ---- 7 ------------------------------------------------------------------

Verdict golden_prompts() {
    const auto p = st::render_golden_prompts();
    const std::pair<const char*, const std::string*> files[] = {
        {"init_prompt.txt", &p.init}, {"update_prompt.txt", &p.update}, {"ccr_prompt.txt", &p.ccr}};
    const char* anchors[] = {"Return the 31-dimensional vector", "each being -1, 0, or 1", "Step 1: Belief Inference"};
    std::string problems;
    for (int i = 0; i < 3; ++i) {
        const std::string on_disk = st::slurp(st::golden(files[i].first));
        if (on_disk.empty()) problems += std::string(" missing ") + files[i].first;
        else if (on_disk != *files[i].second) problems += std::string(" drift in ") + files[i].first;
        if (on_disk.find(anchors[i]) == std::string::npos) problems += std::string(" no anchor in ") + files[i].first;
    }
    return {problems.empty(), problems.empty() ? "3 files byte-identical, anchors present" : problems};
}

// ---- 8 ------------------------------------------------------------------

/// Replays one canned response for every attempt.
class Canned : public GuidanceProvider {
public:
    explicit Canned(std::string text) : text_(std::move(text)) {}
    std::string model_name() const override { return "canned"; }
    int calls = 0;

protected:
    std::string respond(const ExchangeRequest&) override {
        ++calls;
        return text_;
    }

private:
    std::string text_;
};

bool corpus_case(const nlohmann::json& c, const StateSpace& space) {
    const std::string kind = c["kind"], expect = c["expect"], text = c["response"];
    try {
        if (kind == "init") {
            if (expect == "error") {
                try {
                    parse_init_response(text);
                    return false;
                } catch (const ParseError&) {
                }
                Canned p(text);
                const auto out = p.initialize("p", "Day 1, 08:00: depart to Work\n", space);
                return out.fallback && out.theta == RewardWeights::zeros(31) && p.calls == kMaxAttempts;
            }
            const auto parsed = parse_init_response(text);
            const std::size_t warnings = expect == "clamp" ? c["warnings"].get<std::size_t>() : 0u;
            return parsed.theta.values == c["values"].get<std::vector<double>>() && parsed.warnings.size() == warnings;
        }
        if (kind == "update") {
            if (expect == "error") {
                try {
                    parse_update_response(text);
                    return false;
                } catch (const ParseError&) {
                }
                Canned p(text);
                const auto out = p.suggest_directions("p", RewardWeights::zeros(31), st::golden_report(), space);
                return out.fallback && out.directions == Directions(31, 0) && p.calls == kMaxAttempts;
            }
            return parse_update_response(text) == c["values"].get<std::vector<int>>();
        }
        const auto classes = c["classes"].get<std::size_t>();
        if (expect == "error") {
            try {
                parse_label_index(text, classes);
                return false;
            } catch (const ParseError&) {
                return true;
            }
        }
        return parse_label_index(text, classes) == c["values"][0].get<int>();
    } catch (const std::exception&) {
        return false;
    }
}

Verdict parser_corpus() {
    const StateSpace space(kDefaultNMax);
    std::istringstream in(st::slurp(st::fixture("parser_corpus.jsonl")));
    std::string line, failed;
    int n = 0, ok = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = nlohmann::json::parse(line);
        ++n;
        if (corpus_case(c, space)) ++ok;
        else failed += " " + c["name"].get<std::string>();
    }
    return {n == 50 && ok == n, std::to_string(ok) + "/" + std::to_string(n) + " cases" + failed};
}

// ---- 9 ------------------------------------------------------------------

Verdict replay() {
    const fs::path out = fs::temp_directory_path() / ("silic-acceptance-replay-" + std::to_string(::getpid()));
    fs::remove_all(out);
    RunConfig c = load_run_config(st::fixture("run_small.toml"));
    c.out_dir = out;
    run_command("train", c);
    const std::string scripted = st::slurp(out / "models.jsonl");
    std::ifstream log_in(out / "exchanges.jsonl");
    const std::size_t exchanges = read_exchange_log(log_in).size();
    c.provider = ProviderKind::Replay;
    run_command("train", c);
    const std::string replayed = st::slurp(out / "models.jsonl");
    fs::remove_all(out);
    const auto lines = std::count(scripted.begin(), scripted.end(), '\n');
    return {!scripted.empty() && scripted == replayed,
            std::to_string(lines) + " models, " + std::to_string(exchanges) + " logged exchanges, " +
                (scripted == replayed ? "identical bytes" : "bytes differ")};
}

// ---- 10 -----------------------------------------------------------------

Verdict anova() {
    const double inf = std::numeric_limits<double>::infinity();
    const auto f = anova_f_scores({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    const auto deg = anova_f_scores({{4, 1}, {4, 1}, {4, 7}, {4, 7}}, {0, 0, 1, 1});
    bool card = true;
    for (std::size_t n : {2u, 5u, 10u, 17u, 31u, 100u}) {
        std::vector<double> scores(n);
        std::vector<std::string> names(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>((i * 7919) % n) + 0.5;
            names[i] = "f" + std::to_string(i);
        }
        const auto expected = n - static_cast<std::size_t>(std::floor(0.6 * static_cast<double>(n - 1))) - 1;
        card = card && select_top_features(names, scores, 60.0).names.size() == expected;
    }
    const bool hand = f[0] == 8.0 && deg[0] == 0.0 && deg[1] == inf;
    return {hand && card, std::string("F=") + fmt(f[0]) + ", constant column " + fmt(deg[0]) +
                              ", zero within-group variance " + fmt(deg[1]) + ", cardinality " + (card ? "ok" : "wrong")};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "F1 cells recomputed from precision/recall", 1, f1_cells},
        {2, "visitation matches trajectory enumeration", 10, visitation_oracle},
        {3, "gradient matches finite differences", 30, gradient_check},
        {4, "normalization over random configurations", 30, normalization},
        {5, "hour-weight shift leaves the policy unchanged", 5, hour_shift},
        {6, "synthetic recovery and ablation ordering", 300, recovery},
        {7, "prompts match golden files", 1, golden_prompts},
        {8, "parser corpus", 1, parser_corpus},
        {9, "replay reproduces trained models", 60, replay},
        {10, "ANOVA F and percentile selection", 1, anova},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = v.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s criterion %d: %s (%s) [%.2fs of %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    v.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
