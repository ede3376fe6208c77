#pragma once

#include "kucb/analysis.hpp"
#include "kucb/config.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace kucb {

struct AgentOutcome {
    std::string name;
    double final_regret = 0.0;
    double avg_regret = 0.0;
    double info_gain = 0.0;
    std::int64_t coverage_violations = -1;  // -1 when not evaluated
    RunTrace trace;
};

struct SeedOutcome {
    int index = 0;
    std::uint64_t seed = 0;
    std::uint64_t mdp_seed = 0;
    bool ok = false;
    std::string error;
    OptimalSolution solution;
    std::vector<AgentOutcome> agents;  // the optimistic agent first, then baselines in config order
    std::vector<CheckReport> checks;   // on the optimistic agent's trace
    bool optimism_asserted = false;    // optimism is only required when coverage held

    [[nodiscard]] const AgentOutcome &agent(const std::string &name) const;
    [[nodiscard]] const CheckReport *check(const std::string &name) const;
    /// Theorem checks and, when asserted, optimism all passed.
    [[nodiscard]] bool theorem_checks_passed() const;
};

/// Independent generator streams derived from one seed.
enum class Stream : std::uint64_t { Environment = 1, Policy = 2, Sampling = 3 };
[[nodiscard]] Rng make_rng(std::uint64_t seed, Stream stream);

/// Builds the model, solves it, runs every agent and, when config.run.checks is set, every check.
/// Failures are captured in the outcome rather than thrown.
[[nodiscard]] SeedOutcome run_seed(const ExperimentConfig &config, int index);

/// Runs body(i) for i in [0, n) on up to `threads` workers (0: hardware concurrency).
void parallel_for(int n, int threads, const std::function<void(int)> &body);

/// Subcommand drivers. Each writes into `out`, logs to `log` and returns a process exit status.
int run_experiment(const ExperimentConfig &config, const std::filesystem::path &out, std::ostream &log);
int run_sweep(const ExperimentConfig &config, std::vector<int> windows, std::vector<double> rhos,
              const std::filesystem::path &out, std::ostream &log);
int run_verify(const ExperimentConfig &config, const std::filesystem::path &out, std::ostream &log);
int solve_models(const ExperimentConfig &config, const std::filesystem::path &out, std::ostream &log);
int generate_models(const ExperimentConfig &config, const std::filesystem::path &out, std::ostream &log);

/// ceil(T^{(p-1)/(4p+4)}).
[[nodiscard]] int theoretical_window(std::int64_t horizon, double p);

}  // namespace kucb
