#pragma once

#include "kucb/agent.hpp"
#include "kucb/errors.hpp"
#include "kucb/mdp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kucb {

/// Invalid configuration. line() is 1-based, 0 when the problem has no source position.
class ConfigError : public InvalidInput {
public:
    ConfigError(const std::string &message, int line)
        : InvalidInput(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

struct KernelConfig {
    KernelFamily family = KernelFamily::SquaredExponential;
    double lengthscale = 0.3;
    double nu = 2.5;
    double variance = 1.0;

    [[nodiscard]] KernelSpec spec(int input_dim) const;
};

enum class ProfileKind { Auto, Polynomial, Exponential, Explicit, Estimated };

struct ProfileConfig {
    ProfileKind kind = ProfileKind::Auto;
    double scale = 1.0;
    double exponent = 2.0;
    double rate = 1.0;
    std::vector<double> eigenvalues;
    std::optional<double> psi_max;
};

struct MdpSection {
    std::uint64_t seed = 0;
    int states = 20;
    int actions = 4;
    int state_dim = 1;
    int action_dim = 1;
    KernelConfig kernel;
    double mixing_eps = 0.1;
    double roughness = 3.0;
    double reward_scale = 0.5;
    bool vary_with_seed = true;  // seed i draws model mdp.seed + i
};

struct AgentSection {
    int window = 10;
    double rho = 1.0;
    std::optional<KernelConfig> kernel;        // k over (s, a); defaults to the MDP kernel
    std::optional<KernelConfig> state_kernel;  // k' over s; defaults to the agent kernel's family
    ProfileConfig profile;
    double delta = 0.1;
    std::optional<double> c_f;  // defaults to w
    std::optional<double> c_v;  // defaults to w
    std::optional<double> psi_max;
    BetaMode beta_mode = BetaMode::Full;
    double beta_scale = 1.0;
    std::optional<double> beta;
    RegressionBackend backend = RegressionBackend::Grid;
};

struct RunSection {
    std::int64_t horizon = 2000;
    int n_seeds = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> baselines;  // subset of random, greedy_no_bonus, oracle_policy
    double solver_tol = 1e-10;
    std::int64_t solver_max_iters = 1'000'000;
    std::int64_t variance_ratio_samples = 1000;
    bool checks = true;
    int threads = 0;  // 0: hardware concurrency
};

struct OutputSection {
    std::string directory = "out";
    bool emit_plot_data = false;
    double gamma_reference_p = 2.0;
    double gamma_reference_c = 1.0;
};

struct SweepSection {
    std::vector<int> windows;
    std::vector<double> rhos;
};

struct ExperimentConfig {
    MdpSection mdp;
    AgentSection agent;
    RunSection run;
    OutputSection output;
    SweepSection sweep;

    /// Throws ConfigError for out-of-range values.
    void validate() const;
};

/// key=value with a dotted key, e.g. agent.window=5 or agent.kernel.lengthscale=0.2.
struct Override {
    std::string key;
    std::string value;

    static Override parse(const std::string &text);
};

/// Parses YAML text. Unknown keys and malformed values are ConfigErrors carrying the source line.
[[nodiscard]] ExperimentConfig parse_config(const std::string &text, const std::vector<Override> &overrides = {});
[[nodiscard]] ExperimentConfig load_config(const std::string &path, const std::vector<Override> &overrides = {});

/// Canonical YAML rendering of a fully specified config; parse_config(to_yaml(c)) == c.
[[nodiscard]] std::string to_yaml(const ExperimentConfig &config);

[[nodiscard]] std::string to_string(BetaMode mode);
[[nodiscard]] std::string to_string(RegressionBackend backend);
[[nodiscard]] std::string to_string(ProfileKind kind);

/// Model parameters for seed index i.
[[nodiscard]] SmoothMdpParams mdp_params(const ExperimentConfig &config, int seed_index);

/// Agent kernel, state kernel, eigendecay profile and confidence constants resolved against their defaults.
/// `model` supplies the states for the Estimated profile.
[[nodiscard]] AgentConfig agent_config(const ExperimentConfig &config, const MdpModel &model);

}  // namespace kucb
