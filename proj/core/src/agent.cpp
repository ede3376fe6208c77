#include "kucb/agent.hpp"

#include "kucb/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace kucb {

void AgentConfig::validate() const {
    if (window < 1) { throw InvalidInput(fmt::format("window must be >= 1, got {}", window)); }
    if (horizon < 1) { throw InvalidInput(fmt::format("horizon must be >= 1, got {}", horizon)); }
    if (window > horizon) { throw InvalidInput(fmt::format("window {} exceeds horizon {}", window, horizon)); }
    if (!(rho > 0.0) || !std::isfinite(rho)) { throw InvalidInput(fmt::format("rho must be positive, got {}", rho)); }
    if (!(beta_scale > 0.0)) { throw InvalidInput(fmt::format("beta_scale must be positive, got {}", beta_scale)); }
    if (fixed_beta && !(*fixed_beta >= 0.0)) { throw InvalidInput("fixed beta must be nonnegative"); }
    kernel.validate();
    confidence.validate();
}

AgentView AgentView::of(const MdpModel &model) {
    AgentView view;
    view.num_states = model.num_states();
    view.num_actions = model.num_actions();
    view.rewards = model.rewards;
    view.grid = model.state_action_grid();
    return view;
}

DenseWindowRegression::DenseWindowRegression(const GramState &snapshot, std::vector<int> successors,
                                             const std::vector<Point> &grid)
    : successors_(std::move(successors)), logdet_(snapshot.logdet()) {
    if (successors_.size() != snapshot.size()) {
        throw InvalidInput(fmt::format("{} successors for {} observations", successors_.size(), snapshot.size()));
    }
    const auto g = static_cast<Eigen::Index>(grid.size());
    const auto n = static_cast<Eigen::Index>(snapshot.size());
    weights_.resize(g, n);
    variance_.resize(g);
    for (Eigen::Index i = 0; i < g; ++i) {
        const auto &z = grid[static_cast<std::size_t>(i)];
        if (n > 0) { weights_.row(i) = snapshot.weights(z).transpose(); }
        variance_(i) = snapshot.posterior_variance(z);
    }
}

Eigen::VectorXd DenseWindowRegression::predict(const Eigen::VectorXd &next_values) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(successors_.size()));
    for (std::size_t j = 0; j < successors_.size(); ++j) { y(static_cast<Eigen::Index>(j)) = next_values(successors_[j]); }
    if (y.size() == 0) { return Eigen::VectorXd::Zero(weights_.rows()); }
    return weights_ * y;
}

GridWindowRegression::GridWindowRegression(GridPosterior posterior, Eigen::MatrixXd successor_counts)
    : posterior_(std::move(posterior)), successor_counts_(std::move(successor_counts)) {}

Eigen::VectorXd GridWindowRegression::predict(const Eigen::VectorXd &next_values) const {
    return posterior_.predict(successor_counts_ * next_values);
}

WindowPlan plan_window(const WindowRegression &regression, const AgentView &view, int window, double beta,
                       std::int64_t anchor) {
    if (window < 1) { throw InvalidInput("window must be >= 1"); }
    if (!(beta >= 0.0)) { throw InvalidInput(fmt::format("beta must be nonnegative, got {}", beta)); }
    const int ns = view.num_states;
    const int na = view.num_actions;
    const double cap = static_cast<double>(window);

    WindowPlan plan;
    plan.anchor = anchor;
    plan.observations = regression.observations();
    plan.logdet = regression.logdet();
    plan.beta = beta;
    plan.sigma = regression.variance().cwiseSqrt();
    plan.q.assign(static_cast<std::size_t>(window), Eigen::MatrixXd());
    plan.prediction.assign(static_cast<std::size_t>(window), Eigen::VectorXd());
    plan.v.assign(static_cast<std::size_t>(window) + 1, Eigen::VectorXd::Zero(ns));

    for (int h = window; h >= 1; --h) {
        const auto hi = static_cast<std::size_t>(h);
        Eigen::VectorXd fhat = regression.predict(plan.v[hi]);
        Eigen::MatrixXd q(ns, na);
        for (int s = 0; s < ns; ++s) {
            for (int a = 0; a < na; ++a) {
                const Eigen::Index g = static_cast<Eigen::Index>(s) * na + a;
                // beta = inf with sigma = 0 is a certain point, not a NaN.
                const double bonus = plan.sigma(g) > 0.0 ? beta * plan.sigma(g) : 0.0;
                q(s, a) = std::clamp(view.rewards(s, a) + fhat(g) + bonus, 0.0, cap);
            }
        }
        plan.v[hi - 1] = q.rowwise().maxCoeff();
        plan.q[hi - 1] = std::move(q);
        plan.prediction[hi - 1] = std::move(fhat);
    }
    return plan;
}

int select_action(const WindowPlan &plan, int h, int state) {
    if (h < 1 || h > plan.window()) { throw InvalidInput(fmt::format("step {} outside window of {}", h, plan.window())); }
    const auto &q = plan.q[static_cast<std::size_t>(h - 1)];
    int best = 0;
    for (int a = 1; a < q.cols(); ++a) {
        if (q(state, a) > q(state, best)) { best = a; }
    }
    return best;
}

double batch_beta(const AgentConfig &config, std::int64_t observations, double logdet) {
    if (config.fixed_beta) { return *config.fixed_beta; }
    ConfidenceParams params = config.confidence;
    params.rho = config.rho;
    const std::int64_t batches = (config.horizon + config.window - 1) / config.window;
    params.delta = config.confidence.delta / static_cast<double>(batches);
    return config.beta_scale * confidence_width(params, observations, logdet);
}

namespace {

RunTrace empty_trace(const MdpModel &model, std::string agent, int window, double rho, double delta,
                     const KernelSpec &kernel) {
    RunTrace trace;
    trace.agent = std::move(agent);
    trace.num_states = model.num_states();
    trace.num_actions = model.num_actions();
    trace.window = window;
    trace.rho = rho;
    trace.delta = delta;
    trace.kernel = kernel;
    trace.grid = model.state_action_grid();
    return trace;
}

class History {
public:
    History(const AgentConfig &config, const AgentView &view) : backend_(config.backend), grid_(&view.grid) {
        if (backend_ == RegressionBackend::Grid) {
            grid_reg_ = std::make_unique<GridRegressor>(config.kernel, config.rho, view.grid);
            counts_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(view.grid.size()), view.num_states);
        } else {
            dense_ = std::make_unique<GramState>(config.kernel, config.rho);
        }
    }

    void add(std::size_t grid_index, int successor) {
        if (backend_ == RegressionBackend::Grid) {
            grid_reg_->add(grid_index);
            counts_(static_cast<Eigen::Index>(grid_index), successor) += 1.0;
        } else {
            dense_->append((*grid_)[grid_index]);
            successors_.push_back(successor);
        }
    }

    [[nodiscard]] std::unique_ptr<WindowRegression> freeze() const {
        if (backend_ == RegressionBackend::Grid) {
            return std::make_unique<GridWindowRegression>(grid_reg_->factorize(), counts_);
        }
        return std::make_unique<DenseWindowRegression>(dense_->snapshot(), successors_, *grid_);
    }

private:
    RegressionBackend backend_;
    const std::vector<Point> *grid_;
    std::unique_ptr<GridRegressor> grid_reg_;
    Eigen::MatrixXd counts_;
    std::unique_ptr<GramState> dense_;
    std::vector<int> successors_;
};

}  // namespace

RunTrace run_agent(const MdpModel &model, const AgentConfig &config, Rng &rng) {
    config.validate();
    const AgentView view = AgentView::of(model);
    if (static_cast<int>(view.grid.front().size()) != config.kernel.input_dim) {
        throw InvalidInput(fmt::format("agent kernel expects dimension {}, state-action points have {}",
                                       config.kernel.input_dim, view.grid.front().size()));
    }
    RunTrace trace = empty_trace(model, "kucb", config.window, config.rho, config.confidence.delta, config.kernel);
    trace.steps.reserve(static_cast<std::size_t>(config.horizon));

    History history(config, view);
    WindowPlan plan;
    int state = 0;
    for (std::int64_t t = 1; t <= config.horizon; ++t) {
        if ((t - 1) % config.window == 0) {
            const auto regression = history.freeze();
            const double beta = batch_beta(config, regression->observations(), regression->logdet());
            plan = plan_window(*regression, view, config.window, beta, t - 1);
            trace.batches.push_back({plan.anchor, plan.observations, plan.logdet, 0.5 * plan.logdet, beta});
            ++trace.planning_calls;
            if (config.retain_plans) { trace.plans.push_back(plan); }
        }
        const int h = static_cast<int>(t - plan.anchor);
        const int action = select_action(plan, h, state);
        const auto g = static_cast<std::size_t>(model.row(state, action));
        const Transition tr = step(model, state, action, rng);
        trace.steps.push_back({t, state, action, tr.reward, plan.sigma(static_cast<Eigen::Index>(g)), plan.anchor, plan.beta});
        history.add(g, tr.next_state);
        state = tr.next_state;
    }
    return trace;
}

RunTrace run_random(const MdpModel &model, std::int64_t horizon, Rng &env_rng, Rng &policy_rng) {
    if (horizon < 1) { throw InvalidInput("horizon must be >= 1"); }
    RunTrace trace = empty_trace(model, "random", 1, 1.0, 0.0, KernelSpec{});
    std::uniform_int_distribution<int> pick(0, model.num_actions() - 1);
    int state = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const int action = pick(policy_rng);
        const Transition tr = step(model, state, action, env_rng);
        trace.steps.push_back({t, state, action, tr.reward, 0.0, t - 1, 0.0});
        state = tr.next_state;
    }
    return trace;
}

RunTrace run_oracle_policy(const MdpModel &model, const Eigen::MatrixXd &q_star, std::int64_t horizon, Rng &env_rng) {
    if (horizon < 1) { throw InvalidInput("horizon must be >= 1"); }
    if (q_star.rows() != model.num_states() || q_star.cols() != model.num_actions()) {
        throw InvalidInput("q* shape does not match the model");
    }
    RunTrace trace = empty_trace(model, "oracle_policy", 1, 1.0, 0.0, KernelSpec{});
    int state = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
        int action = 0;
        for (int a = 1; a < model.num_actions(); ++a) {
            if (q_star(state, a) > q_star(state, action)) { action = a; }
        }
        const Transition tr = step(model, state, action, env_rng);
        trace.steps.push_back({t, state, action, tr.reward, 0.0, t - 1, 0.0});
        state = tr.next_state;
    }
    return trace;
}

}  // namespace kucb
