#include "kucb/mdp.hpp"

#include "kucb/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace kucb {

namespace {

constexpr double kDamping = 0.5;
constexpr int kMaxGenerationAttempts = 5;

std::vector<Point> uniform_points(int count, int dim, Rng &rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> pts(static_cast<std::size_t>(count), Point(static_cast<std::size_t>(dim)));
    for (auto &p : pts) {
        for (auto &x : p) { x = unit(rng); }
    }
    return pts;
}

// Coefficients of a random unit-RKHS-norm function over the anchor set, or an
// empty vector when the anchors are degenerate for this draw.
Eigen::VectorXd unit_norm_coefficients(const Eigen::MatrixXd &anchor_gram, Rng &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd c(anchor_gram.rows());
    for (Eigen::Index i = 0; i < c.size(); ++i) { c(i) = normal(rng); }
    const double norm2 = c.dot(anchor_gram * c);
    if (!(norm2 > 1e-12) || !std::isfinite(norm2)) { return {}; }
    return c / std::sqrt(norm2);
}

std::optional<MdpModel> try_generate(const SmoothMdpParams &params, std::uint64_t seed) {
    Rng rng(seed);
    const int ns = params.num_states;
    const int na = params.num_actions;

    MdpModel model;
    model.mixing_eps = params.mixing_eps;
    model.states = uniform_points(ns, params.state_dim, rng);
    model.actions = uniform_points(na, params.action_dim, rng);
    const auto anchors = uniform_points(ns, params.state_dim + params.action_dim, rng);
    const Eigen::MatrixXd anchor_gram = gram(params.kernel, anchors);

    Eigen::MatrixXd logit_coeffs(ns, ns);  // column s' holds the coefficients of g_{s'}
    for (int sp = 0; sp < ns; ++sp) {
        auto c = unit_norm_coefficients(anchor_gram, rng);
        if (c.size() == 0) { return std::nullopt; }
        logit_coeffs.col(sp) = c;
    }
    const auto reward_coeffs = unit_norm_coefficients(anchor_gram, rng);
    if (reward_coeffs.size() == 0) { return std::nullopt; }

    const auto grid = model.state_action_grid();
    const auto g = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd cross(g, ns);  // k(z, u_i)
    for (Eigen::Index r = 0; r < g; ++r) {
        for (int i = 0; i < ns; ++i) { cross(r, i) = eval(params.kernel, grid[static_cast<std::size_t>(r)], anchors[static_cast<std::size_t>(i)]); }
    }

    const Eigen::MatrixXd logits = params.roughness * (cross * logit_coeffs);
    const Eigen::VectorXd smooth_reward = cross * reward_coeffs;

    model.transitions.resize(g, ns);
    model.rewards.resize(ns, na);
    const double floor = params.mixing_eps / static_cast<double>(ns);
    for (Eigen::Index r = 0; r < g; ++r) {
        const double top = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - top).exp();
        e /= e.sum();
        model.transitions.row(r) = (1.0 - params.mixing_eps) * e.array() + floor;
        model.transitions.row(r) /= model.transitions.row(r).sum();
        model.rewards(r / na, r % na) = std::clamp(0.5 + params.reward_scale * smooth_reward(r), 0.0, 1.0);
    }
    return model;
}

}  // namespace

Point MdpModel::state_action(int s, int a) const {
    Point z = states[static_cast<std::size_t>(s)];
    const auto &act = actions[static_cast<std::size_t>(a)];
    z.insert(z.end(), act.begin(), act.end());
    return z;
}

std::vector<Point> MdpModel::state_action_grid() const {
    std::vector<Point> grid;
    grid.reserve(states.size() * actions.size());
    for (int s = 0; s < num_states(); ++s) {
        for (int a = 0; a < num_actions(); ++a) { grid.push_back(state_action(s, a)); }
    }
    return grid;
}

void MdpModel::validate() const {
    const auto ns = static_cast<Eigen::Index>(states.size());
    const auto na = static_cast<Eigen::Index>(actions.size());
    if (ns < 1 || na < 1) { throw InvalidInput("MDP needs at least one state and one action"); }
    if (rewards.rows() != ns || rewards.cols() != na) { throw InvalidInput("reward table shape does not match S x A"); }
    if (transitions.rows() != ns * na || transitions.cols() != ns) {
        throw InvalidInput("transition matrix shape does not match (S*A) x S");
    }
    if ((rewards.array() < 0.0).any() || (rewards.array() > 1.0).any()) { throw InvalidInput("rewards must lie in [0, 1]"); }
    const double floor = mixing_eps / static_cast<double>(ns);
    for (Eigen::Index r = 0; r < transitions.rows(); ++r) {
        if (std::abs(transitions.row(r).sum() - 1.0) > 1e-12) {
            throw InvalidInput(fmt::format("transition row {} sums to {}", r, transitions.row(r).sum()));
        }
        if (transitions.row(r).minCoeff() < floor - 1e-15) {
            throw InvalidInput(fmt::format("transition row {} falls below the mixing floor", r));
        }
    }
}

MdpModel make_smooth_mdp(const SmoothMdpParams &params) {
    if (params.num_states < 2 || params.num_actions < 2) { throw InvalidInput("smooth MDP needs S >= 2 and A >= 2"); }
    if (params.state_dim < 1 || params.action_dim < 1) { throw InvalidInput("state and action dimensions must be >= 1"); }
    if (!(params.mixing_eps > 0.0 && params.mixing_eps <= 0.5)) {
        throw InvalidInput(fmt::format("mixing_eps must lie in (0, 0.5], got {}", params.mixing_eps));
    }
    if (!(params.roughness >= 0.0) || !std::isfinite(params.roughness)) { throw InvalidInput("roughness must be >= 0"); }
    if (!(params.reward_scale >= 0.0)) { throw InvalidInput("reward_scale must be >= 0"); }
    params.kernel.validate();
    if (params.kernel.input_dim != params.state_dim + params.action_dim) {
        throw InvalidInput(fmt::format("MDP kernel input_dim {} must equal state_dim + action_dim = {}",
                                       params.kernel.input_dim, params.state_dim + params.action_dim));
    }
    for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
        if (auto model = try_generate(params, params.seed + static_cast<std::uint64_t>(attempt))) {
            model->validate();
            return *std::move(model);
        }
    }
    throw NumericalError(fmt::format("kernel is degenerate on sampled anchors for seeds {}..{}", params.seed,
                                     params.seed + kMaxGenerationAttempts - 1));
}

OptimalSolution solve_average_reward(const MdpModel &model, double tol, std::int64_t max_iters) {
    const int ns = model.num_states();
    const int na = model.num_actions();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ns);
    Eigen::VectorXd next(ns);
    Eigen::VectorXd diff(ns);

    auto bellman = [&](const Eigen::VectorXd &values, Eigen::VectorXd &out) {
        const Eigen::VectorXd pv = model.transitions * values;
        for (int s = 0; s < ns; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < na; ++a) { best = std::max(best, model.rewards(s, a) + pv(model.row(s, a))); }
            out(s) = best;
        }
    };

    OptimalSolution sol;
    double span = std::numeric_limits<double>::infinity();
    std::int64_t it = 0;
    for (; it < max_iters; ++it) {
        bellman(v, next);
        // One sweep of the damped operator: v <- tau T v + (1 - tau) v.
        diff = kDamping * (next - v);
        span = diff.maxCoeff() - diff.minCoeff();
        v += diff;
        v.array() -= v(0);
        if (span <= tol) { break; }
    }
    if (span > tol) {
        throw ConvergenceError(fmt::format("relative value iteration did not converge in {} iterations", max_iters), span);
    }

    bellman(v, next);
    const Eigen::VectorXd gap = next - v;
    sol.gain = 0.5 * (gap.maxCoeff() + gap.minCoeff());
    sol.bias = v;
    sol.iterations = it + 1;
    sol.residual = (gap.array() - sol.gain).abs().maxCoeff();
    sol.span = v.maxCoeff() - v.minCoeff();

    const Eigen::VectorXd pv = model.transitions * v;
    sol.q.resize(ns, na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) { sol.q(s, a) = model.rewards(s, a) + pv(model.row(s, a)) - sol.gain; }
    }
    return sol;
}

Transition step(const MdpModel &model, int s, int a, Rng &rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    const auto row = model.transitions.row(model.row(s, a));
    double cum = 0.0;
    int next = model.num_states() - 1;
    for (int sp = 0; sp < model.num_states(); ++sp) {
        cum += row(sp);
        if (u < cum) {
            next = sp;
            break;
        }
    }
    return {next, model.rewards(s, a)};
}

double expected_value(const MdpModel &model, const Eigen::VectorXd &v, int s, int a) {
    return model.transitions.row(model.row(s, a)).dot(v);
}

double policy_gain(const MdpModel &model, const Eigen::MatrixXd &policy) {
    const int ns = model.num_states();
    const int na = model.num_actions();
    if (policy.rows() != ns || policy.cols() != na) { throw InvalidInput("policy must be an S x A matrix"); }
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ns, ns);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(ns);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            p.row(s) += policy(s, a) * model.transitions.row(model.row(s, a));
            r(s) += policy(s, a) * model.rewards(s, a);
        }
    }
    // mu^T (P - I) = 0 and 1^T mu = 1, solved in the least-squares sense.
    Eigen::MatrixXd system(ns + 1, ns);
    system.topRows(ns) = p.transpose() - Eigen::MatrixXd::Identity(ns, ns);
    system.row(ns).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ns + 1);
    rhs(ns) = 1.0;
    const Eigen::VectorXd mu = system.colPivHouseholderQr().solve(rhs);
    return mu.dot(r);
}

Eigen::MatrixXd greedy_policy(const Eigen::MatrixXd &q) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, best)) { best = a; }
        }
        pi(s, best) = 1.0;
    }
    return pi;
}

Eigen::VectorXd finite_horizon_values(const MdpModel &model, int horizon) {
    const int ns = model.num_states();
    const int na = model.num_actions();
    Eigen::VectorXd values = Eigen::VectorXd::Zero(ns);
    for (int j = 0; j < horizon; ++j) {
        const Eigen::VectorXd pv = model.transitions * values;
        Eigen::VectorXd next(ns);
        for (int s = 0; s < ns; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < na; ++a) { best = std::max(best, model.rewards(s, a) + pv(model.row(s, a))); }
            next(s) = best;
        }
        values = next;
    }
    return values;
}

}  // namespace kucb
