#pragma once

#include "kucb/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace kucb {

class GridPosterior;

/// Kernel ridge regression when every observation point is drawn from a fixed
/// finite grid g_1..g_G.
///
/// With c_i observations at g_i and D = diag(sqrt(c)), the push-through identity
/// gives, exactly,
///   (K_n + rho I)^{-1} restricted to the grid = D (D K_G D + rho I)^{-1} D,
///   log det(I + K_n / rho) = log det(I + D K_G D / rho),
/// so each factorization costs O(G^3) regardless of n.
class GridRegressor {
public:
    GridRegressor(KernelSpec kernel, double rho, std::vector<Point> grid);

    void add(std::size_t grid_index);

    [[nodiscard]] std::int64_t size() const noexcept { return total_; }
    [[nodiscard]] std::span<const std::int64_t> counts() const noexcept { return counts_; }
    [[nodiscard]] const std::vector<Point> &grid() const noexcept { return grid_; }
    [[nodiscard]] const Eigen::MatrixXd &grid_gram() const noexcept { return gram_; }
    [[nodiscard]] double rho() const noexcept { return rho_; }

    [[nodiscard]] GridPosterior factorize() const;

private:
    KernelSpec kernel_;
    double rho_;
    std::vector<Point> grid_;
    Eigen::MatrixXd gram_;
    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
};

/// Frozen factorization of a GridRegressor.
class GridPosterior {
public:
    [[nodiscard]] std::int64_t size() const noexcept { return n_; }
    [[nodiscard]] double logdet() const noexcept { return logdet_; }
    [[nodiscard]] double info_gain() const noexcept { return 0.5 * logdet_; }

    /// Posterior variance at every grid point.
    [[nodiscard]] const Eigen::VectorXd &variance() const noexcept { return variance_; }

    /// Predictions at every grid point given per-grid-point sums of targets,
    /// target_sums(i) = sum of y_j over observations j located at g_i.
    [[nodiscard]] Eigen::VectorXd predict(const Eigen::VectorXd &target_sums) const;

private:
    friend class GridRegressor;

    std::int64_t n_ = 0;
    double logdet_ = 0.0;
    Eigen::VectorXd sqrt_counts_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::MatrixXd whitened_;  // L^{-1} D K_G
    Eigen::VectorXd variance_;
};

}  // namespace kucb
