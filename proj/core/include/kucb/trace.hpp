#pragma once

#include "kucb/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace kucb {

/// Optimistic value tables for one planning window anchored at t0.
/// Index h - 1 addresses step t0 + h of the window, h = 1..w.
struct WindowPlan {
    std::int64_t anchor = 0;  // t0
    std::int64_t observations = 0;
    double logdet = 0.0;
    double beta = 0.0;
    Eigen::VectorXd sigma;                    // sigma_{t0}(z) over the grid
    std::vector<Eigen::VectorXd> prediction;  // f-hat used by q[h], over the grid
    std::vector<Eigen::MatrixXd> q;           // S x A, entries in [0, w]
    std::vector<Eigen::VectorXd> v;           // w + 1 entries, v[w] == 0

    [[nodiscard]] int window() const noexcept { return static_cast<int>(q.size()); }
};

struct StepRecord {
    std::int64_t t = 0;  // 1-based
    int state = 0;
    int action = 0;
    double reward = 0.0;
    double sigma = 0.0;  // sigma_{t0}(z_t), the delayed uncertainty the action was chosen with
    std::int64_t anchor = 0;
    double beta = 0.0;
};

struct BatchRecord {
    std::int64_t anchor = 0;
    std::int64_t observations = 0;
    double logdet = 0.0;
    double info_gain = 0.0;
    double beta = 0.0;
};

/// Realized trajectory of one agent on one MDP.
struct RunTrace {
    std::string agent;
    std::uint64_t seed = 0;
    int num_states = 0;
    int num_actions = 0;
    int window = 1;
    double rho = 1.0;
    double delta = 0.1;
    KernelSpec kernel;
    std::vector<Point> grid;  // state-action points, row s * A + a
    std::vector<StepRecord> steps;
    std::vector<BatchRecord> batches;
    std::vector<WindowPlan> plans;  // present only when planning internals were retained
    std::int64_t planning_calls = 0;

    [[nodiscard]] std::size_t grid_index(const StepRecord &r) const noexcept {
        return static_cast<std::size_t>(r.state) * static_cast<std::size_t>(num_actions) + static_cast<std::size_t>(r.action);
    }
    [[nodiscard]] const Point &point(std::size_t step) const { return grid[grid_index(steps[step])]; }
};

}  // namespace kucb
