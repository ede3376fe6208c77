#pragma once

#include "kucb/confidence.hpp"
#include "kucb/gram_state.hpp"
#include "kucb/grid_regressor.hpp"
#include "kucb/mdp.hpp"
#include "kucb/trace.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace kucb {

enum class RegressionBackend {
    Grid,   // compressed sufficient statistics over the finite state-action grid
    Dense,  // incremental Cholesky over the full point history
};

struct AgentConfig {
    int window = 10;
    double rho = 1.0;
    std::int64_t horizon = 1000;
    KernelSpec kernel = KernelSpec::squared_exponential(2, 0.3);  // k over (s, a)
    ConfidenceParams confidence;
    double beta_scale = 1.0;
    std::optional<double> fixed_beta;  // bypasses the confidence module (ablations, sabotage)
    RegressionBackend backend = RegressionBackend::Grid;
    bool retain_plans = false;

    void validate() const;
};

/// What the learner may see: rewards and the state-action embedding, never P.
struct AgentView {
    int num_states = 0;
    int num_actions = 0;
    Eigen::MatrixXd rewards;
    std::vector<Point> grid;

    static AgentView of(const MdpModel &model);
};

/// Kernel ridge predictor of [P v] frozen at a batch anchor, evaluated on the grid.
class WindowRegression {
public:
    virtual ~WindowRegression() = default;

    [[nodiscard]] virtual std::int64_t observations() const = 0;
    [[nodiscard]] virtual double logdet() const = 0;
    [[nodiscard]] virtual Eigen::VectorXd variance() const = 0;

    /// f-hat over the grid for targets y_j = next_values(s_{j+1}).
    [[nodiscard]] virtual Eigen::VectorXd predict(const Eigen::VectorXd &next_values) const = 0;
};

/// Backed by a GramState snapshot and the successor history.
class DenseWindowRegression final : public WindowRegression {
public:
    DenseWindowRegression(const GramState &snapshot, std::vector<int> successors, const std::vector<Point> &grid);

    [[nodiscard]] std::int64_t observations() const override { return static_cast<std::int64_t>(successors_.size()); }
    [[nodiscard]] double logdet() const override { return logdet_; }
    [[nodiscard]] Eigen::VectorXd variance() const override { return variance_; }
    [[nodiscard]] Eigen::VectorXd predict(const Eigen::VectorXd &next_values) const override;

private:
    std::vector<int> successors_;
    double logdet_;
    Eigen::MatrixXd weights_;  // row g: alpha_n(g)
    Eigen::VectorXd variance_;
};

/// Backed by a GridPosterior and successor counts N(g, s').
class GridWindowRegression final : public WindowRegression {
public:
    GridWindowRegression(GridPosterior posterior, Eigen::MatrixXd successor_counts);

    [[nodiscard]] std::int64_t observations() const override { return posterior_.size(); }
    [[nodiscard]] double logdet() const override { return posterior_.logdet(); }
    [[nodiscard]] Eigen::VectorXd variance() const override { return posterior_.variance(); }
    [[nodiscard]] Eigen::VectorXd predict(const Eigen::VectorXd &next_values) const override;

private:
    GridPosterior posterior_;
    Eigen::MatrixXd successor_counts_;
};

/// Backward recursion over one window: v[w] = 0 and, for h = w..1,
///   q[h](z) = clip(r(z) + f-hat_h(z) + beta sigma(z), 0, w),  v[h](s) = max_a q[h](s, a),
/// where f-hat_h regresses v[h+1] at the observed successors.
[[nodiscard]] WindowPlan plan_window(const WindowRegression &regression, const AgentView &view, int window,
                                     double beta, std::int64_t anchor);

/// argmax_a q[h](s, a), lowest index on ties. h is 1-based.
[[nodiscard]] int select_action(const WindowPlan &plan, int h, int state);

/// beta for a batch: beta_scale * confidence_width with delta split evenly over
/// the ceil(T / w) planning events, unless fixed_beta is set.
[[nodiscard]] double batch_beta(const AgentConfig &config, std::int64_t observations, double logdet);

/// Runs the optimistic agent for config.horizon steps from state 0.
[[nodiscard]] RunTrace run_agent(const MdpModel &model, const AgentConfig &config, Rng &rng);

/// Uniformly random actions.
[[nodiscard]] RunTrace run_random(const MdpModel &model, std::int64_t horizon, Rng &env_rng, Rng &policy_rng);

/// Greedy on the exact q*.
[[nodiscard]] RunTrace run_oracle_policy(const MdpModel &model, const Eigen::MatrixXd &q_star, std::int64_t horizon,
                                         Rng &env_rng);

}  // namespace kucb
