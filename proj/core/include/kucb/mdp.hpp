#pragma once

#include "kucb/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace kucb {

using Rng = std::mt19937_64;

/// Finite MDP whose states and actions are embedded in unit boxes.
/// Transitions are stored as an (S*A) x S row-stochastic matrix, row s*A + a.
struct MdpModel {
    std::vector<Point> states;
    std::vector<Point> actions;
    Eigen::MatrixXd rewards;      // S x A, entries in [0, 1]
    Eigen::MatrixXd transitions;  // (S*A) x S
    double mixing_eps = 0.0;

    [[nodiscard]] int num_states() const noexcept { return static_cast<int>(states.size()); }
    [[nodiscard]] int num_actions() const noexcept { return static_cast<int>(actions.size()); }
    [[nodiscard]] Eigen::Index row(int s, int a) const noexcept { return static_cast<Eigen::Index>(s) * num_actions() + a; }

    /// z = (s, a) as one concatenated point.
    [[nodiscard]] Point state_action(int s, int a) const;
    /// All state-action points in row order.
    [[nodiscard]] std::vector<Point> state_action_grid() const;

    /// Throws InvalidInput if rows are not stochastic or rewards leave [0, 1].
    void validate() const;
};

struct SmoothMdpParams {
    std::uint64_t seed = 0;
    int num_states = 10;
    int num_actions = 3;
    int state_dim = 1;
    int action_dim = 1;
    KernelSpec kernel = KernelSpec::squared_exponential(2, 0.3);  // over (s, a)
    double mixing_eps = 0.1;
    double roughness = 3.0;
    double reward_scale = 0.5;
};

/// Random MDP with kernel-smooth dynamics.
///
/// For each successor s', a logit g_{s'}(z) = sum_i c_i k(z, u_i) over S anchor
/// points u_i, with c scaled to unit RKHS norm. Rows are
/// (1 - eps) softmax(roughness * g(z)) + eps / S. Rewards are
/// clip(0.5 + reward_scale * h(z), 0, 1) for another unit-norm h.
[[nodiscard]] MdpModel make_smooth_mdp(const SmoothMdpParams &params);

struct OptimalSolution {
    double gain = 0.0;          // J*
    Eigen::VectorXd bias;       // v*, anchored at v*(0) = 0
    Eigen::MatrixXd q;          // q*, S x A
    double span = 0.0;          // max v* - min v*
    std::int64_t iterations = 0;
    double residual = 0.0;      // max_s |J* + v*(s) - max_a (r + P v*)(s, a)|
};

/// Relative value iteration on the aperiodicity transform P' = (P + I) / 2.
[[nodiscard]] OptimalSolution solve_average_reward(const MdpModel &model, double tol = 1e-10,
                                                   std::int64_t max_iters = 1'000'000);

struct Transition {
    int next_state;
    double reward;
};

/// Samples s' by inverse CDF on one uniform draw.
[[nodiscard]] Transition step(const MdpModel &model, int s, int a, Rng &rng);

/// [Pv](s, a).
[[nodiscard]] double expected_value(const MdpModel &model, const Eigen::VectorXd &v, int s, int a);

/// Long-run average reward of a stationary randomized policy (S x A action
/// probabilities), from its stationary distribution.
[[nodiscard]] double policy_gain(const MdpModel &model, const Eigen::MatrixXd &policy);

/// Deterministic policy as a one-hot S x A matrix.
[[nodiscard]] Eigen::MatrixXd greedy_policy(const Eigen::MatrixXd &q);

/// Optimal expected total reward over a horizon of `horizon` steps, by backward induction.
[[nodiscard]] Eigen::VectorXd finite_horizon_values(const MdpModel &model, int horizon);

}  // namespace kucb
