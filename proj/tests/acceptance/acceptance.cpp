// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion ids (AC1..AC7) to run a subset.

#include "generators.hpp"

#include "kucb/experiment.hpp"
#include "kucb/gram_state.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace {

using namespace kucb;
namespace fs = std::filesystem;

struct Outcome {
    bool passed;
    std::string summary;
};

struct Criterion {
    std::string id;
    double budget_seconds;
    std::function<Outcome()> run;
};

ExperimentConfig config_from(const std::string &file, const std::vector<std::string> &overrides) {
    std::vector<Override> parsed;
    for (const auto &o : overrides) { parsed.push_back(Override::parse(o)); }
    return load_config(std::string(KUCB_CONFIG_DIR) + "/" + file, parsed);
}

Outcome ac1_oracle_equivalence() {
    Rng rng(20240101);
    double worst = 0.0;
    int sequences = 0;
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 20; ++rep) {
        for (const auto &kernel : testing::kernel_zoo(rng, 3)) {
            const auto pts = testing::random_points(rng, 200, 3);
            const double rho = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
            GramState state(kernel, rho);
            for (const auto &p : pts) { state.append(p); }
            const testing::DenseKrr oracle(kernel, rho, pts);
            Eigen::VectorXd y(200);
            for (auto &x : y) { x = normal(rng); }
            const std::vector<double> targets(y.data(), y.data() + y.size());
            worst = std::max(worst, testing::relative_error(state.logdet(), oracle.logdet()));
            for (int q = 0; q < 20; ++q) {
                const Point z = q < 10 ? testing::random_point(rng, 3) : pts[static_cast<std::size_t>(q * 17 % 200)];
                worst = std::max(worst, testing::relative_error(state.posterior_variance(z), oracle.variance(z)));
                worst = std::max(worst, testing::relative_error(state.predict(z, targets), oracle.predict(z, y)));
            }
            ++sequences;
        }
    }
    return {worst <= 1e-8, fmt::format("{} sequences of n=200, worst relative error {:.2e} (limit 1e-8)", sequences, worst)};
}

Outcome ac2_bellman_residual() {
    double worst_residual = 0.0;
    double worst_gap = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SmoothMdpParams p;
        p.seed = seed;
        p.num_states = 20;
        p.num_actions = 4;
        const auto model = make_smooth_mdp(p);
        const auto sol = solve_average_reward(model, 1e-10, 1'000'000);
        worst_residual = std::max(worst_residual, sol.residual);
        worst_gap = std::max(worst_gap, std::abs(policy_gain(model, greedy_policy(sol.q)) - sol.gain));
    }
    return {worst_residual <= 1e-9 && worst_gap <= 2e-9,
            fmt::format("20 models, worst residual {:.2e} (limit 1e-9), worst greedy gain gap {:.2e} (limit 2e-9)",
                        worst_residual, worst_gap)};
}

Outcome ac3_theorem_checks() {
    int runs = 0;
    int failures = 0;
    int errors = 0;
    double worst = std::numeric_limits<double>::infinity();
    std::string worst_where;
    for (double rho : {0.1, 1.0, 10.0}) {
        for (int w : {1, 5, 25}) {
            const auto config = config_from(
                "default.yaml", {fmt::format("agent.rho={}", rho), fmt::format("agent.window={}", w), "run.horizon=2000",
                                 "run.n_seeds=10", "run.baselines=[]", "run.variance_ratio_samples=1000"});
            std::vector<SeedOutcome> outcomes(10);
            parallel_for(10, 0, [&](int i) { outcomes[static_cast<std::size_t>(i)] = run_seed(config, i); });
            for (const auto &s : outcomes) {
                ++runs;
                if (!s.ok) {
                    ++failures;
                    ++errors;
                    fmt::print("  AC3 rho={} w={} seed={} failed: {}\n", rho, w, s.seed, s.error);
                    continue;
                }
                bool ok = true;
                for (const char *name : {"elliptical", "variance_ratio", "delayed_potential"}) {
                    const CheckReport *r = s.check(name);
                    ok = ok && r != nullptr && r->passed;
                    if (r != nullptr && r->worst_margin < worst) {
                        worst = r->worst_margin;
                        worst_where = fmt::format("{} rho={} w={} seed={}", name, rho, w, s.seed);
                    }
                }
                failures += ok ? 0 : 1;
            }
        }
    }
    return {failures == 0, fmt::format("{} runs, {} failing ({} with errors); smallest margin {:.2e} ({})", runs, failures,
                                       errors, worst, worst_where)};
}

Outcome ac4_coverage() {
    const auto config = config_from("default.yaml", {"run.n_seeds=50", "run.horizon=2000", "run.baselines=[]",
                                                     "run.checks=false", "agent.delta=0.1", "agent.beta_mode=full"});
    std::vector<SeedOutcome> outcomes(50);
    parallel_for(50, 0, [&](int i) { outcomes[static_cast<std::size_t>(i)] = run_seed(config, i); });
    int violating = 0;
    int failed = 0;
    for (const auto &s : outcomes) {
        if (!s.ok) {
            ++failed;
            continue;
        }
        violating += s.agents.front().coverage_violations > 0 ? 1 : 0;
    }
    const double rate = static_cast<double>(violating + failed) / 50.0;
    return {rate <= 0.15 && failed == 0,
            fmt::format("{} of 50 seeds with a coverage violation (rate {:.2f}, limit 0.15), {} failed", violating, rate, failed)};
}

struct RegretStats {
    double kucb_avg = 0.0;
    double kucb_final = 0.0;
    double random_final = 0.0;
};

RegretStats trap_regret(std::int64_t horizon) {
    const int w = static_cast<int>(std::ceil(std::pow(static_cast<double>(horizon), 0.25) - 1e-12));
    const auto config = config_from("trap.yaml", {fmt::format("run.horizon={}", horizon), fmt::format("agent.window={}", w),
                                                  "run.n_seeds=10", "run.baselines=[random]", "run.checks=false"});
    std::vector<SeedOutcome> outcomes(10);
    parallel_for(10, 0, [&](int i) { outcomes[static_cast<std::size_t>(i)] = run_seed(config, i); });
    RegretStats stats;
    for (const auto &s : outcomes) {
        if (!s.ok) { throw std::runtime_error("seed failed: " + s.error); }
        stats.kucb_avg += s.agent("kucb").avg_regret / 10.0;
        stats.kucb_final += s.agent("kucb").final_regret / 10.0;
        stats.random_final += s.agent("random").final_regret / 10.0;
    }
    return stats;
}

Outcome ac5_no_regret_trend() {
    const auto early = trap_regret(2000);
    const auto late = trap_regret(20000);
    const double trend = late.kucb_avg / early.kucb_avg;
    const double vs_random = late.kucb_final / late.random_final;
    return {trend <= 0.6 && vs_random <= 0.7,
            fmt::format("R(T)/T {:.4f} at T=2000 (w=7), {:.4f} at T=20000 (w=12), ratio {:.3f} (limit 0.6); "
                        "final regret vs random {:.3f} (limit 0.7)",
                        early.kucb_avg, late.kucb_avg, trend, vs_random)};
}

Outcome ac6_window_tradeoff() {
    const std::vector<int> windows = {1, 2, 5, 10, 25, 50};
    std::vector<std::vector<double>> regret(10, std::vector<double>(windows.size()));
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const auto config = config_from("trap.yaml", {"run.horizon=10000", fmt::format("agent.window={}", windows[k]),
                                                      "run.n_seeds=10", "run.baselines=[]", "run.checks=false"});
        parallel_for(10, 0, [&](int i) {
            const auto s = run_seed(config, i);
            regret[static_cast<std::size_t>(i)][k] = s.ok ? s.agent("kucb").final_regret : std::nan("");
        });
    }
    int wins = 0;
    std::vector<double> mean(windows.size(), 0.0);
    for (const auto &row : regret) {
        const double interior = *std::min_element(row.begin() + 1, row.end() - 1);
        wins += interior < row.front() && interior < row.back() ? 1 : 0;
        for (std::size_t k = 0; k < row.size(); ++k) { mean[k] += row[k] / 10.0; }
    }
    std::string means;
    for (std::size_t k = 0; k < windows.size(); ++k) { means += fmt::format(" w={}:{:.0f}", windows[k], mean[k]); }
    return {wins >= 7, fmt::format("interior window beats both endpoints on {} of 10 seeds (need 7); mean regret{}", wins, means)};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Number of files that differ between two output trees, counting files present in only one.
int tree_differences(const fs::path &a, const fs::path &b) {
    std::set<std::string> names;
    for (const auto &root : {a, b}) {
        for (const auto &e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file()) { names.insert(fs::relative(e.path(), root).string()); }
        }
    }
    int diff = 0;
    for (const auto &n : names) {
        if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) { ++diff; }
    }
    return diff;
}

Outcome ac7_determinism() {
    const fs::path root = fs::temp_directory_path() / "kucb_acceptance_determinism";
    fs::remove_all(root);
    std::ostringstream log;
    const auto config = config_from("default.yaml", {"run.n_seeds=3", "run.horizon=500"});
    const auto sweep = config_from("tiny.yaml", {});
    int files = 0;
    int diff = 0;
    for (const char *rep : {"a", "b"}) {
        (void)run_experiment(config, root / rep / "run", log);
        (void)run_sweep(sweep, {1, 5}, {0.1, 1.0}, root / rep / "sweep", log);
        (void)run_verify(config, root / rep / "verify", log);
    }
    for (const char *cmd : {"run", "sweep", "verify"}) {
        diff += tree_differences(root / "a" / cmd, root / "b" / cmd);
        for (const auto &e : fs::recursive_directory_iterator(root / "a" / cmd)) { files += e.is_regular_file() ? 1 : 0; }
    }
    fs::remove_all(root);
    return {diff == 0 && files > 0, fmt::format("run/sweep/verify repeated: {} files, {} differing", files, diff)};
}

}  // namespace

int main(int argc, char **argv) {
    const std::vector<Criterion> criteria = {
        {"AC1", 30.0, ac1_oracle_equivalence},   {"AC2", 60.0, ac2_bellman_residual},
        {"AC3", 600.0, ac3_theorem_checks},      {"AC4", 900.0, ac4_coverage},
        {"AC5", 1200.0, ac5_no_regret_trend},    {"AC6", 1200.0, ac6_window_tradeoff},
        {"AC7", 0.0, ac7_determinism},
    };
    std::set<std::string> selected(argv + 1, argv + argc);
    int failed = 0;
    for (const auto &c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) { continue; }
        const auto start = std::chrono::steady_clock::now();
        Outcome result{false, ""};
        try {
            result = c.run();
        } catch (const std::exception &e) {
            result = {false, std::string("error: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = c.budget_seconds <= 0.0 || seconds <= c.budget_seconds;
        const bool passed = result.passed && in_budget;
        failed += passed ? 0 : 1;
        std::string timing = fmt::format("{:.1f} s", seconds);
        if (c.budget_seconds > 0.0) { timing += fmt::format(" of {:.0f} s", c.budget_seconds); }
        fmt::print("{} {}: {} [{}]\n", c.id, passed ? "PASS" : "FAIL", result.summary, timing);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
