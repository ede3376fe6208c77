#include "kucb/grid_regressor.hpp"

#include "kucb/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace kucb {

GridRegressor::GridRegressor(KernelSpec kernel, double rho, std::vector<Point> grid)
    : kernel_(std::move(kernel)), rho_(rho), grid_(std::move(grid)) {
    kernel_.validate();
    if (!(rho_ > 0.0) || !std::isfinite(rho_)) { throw InvalidInput(fmt::format("rho must be positive, got {}", rho_)); }
    if (grid_.empty()) { throw InvalidInput("grid regressor needs at least one grid point"); }
    gram_ = gram(kernel_, grid_);
    counts_.assign(grid_.size(), 0);
}

void GridRegressor::add(std::size_t grid_index) {
    if (grid_index >= counts_.size()) {
        throw InvalidInput(fmt::format("grid index {} out of range (grid size {})", grid_index, counts_.size()));
    }
    ++counts_[grid_index];
    ++total_;
}

GridPosterior GridRegressor::factorize() const {
    const auto g = static_cast<Eigen::Index>(grid_.size());
    GridPosterior post;
    post.n_ = total_;
    post.sqrt_counts_.resize(g);
    for (Eigen::Index i = 0; i < g; ++i) { post.sqrt_counts_(i) = std::sqrt(static_cast<double>(counts_[static_cast<std::size_t>(i)])); }

    const auto &d = post.sqrt_counts_;
    Eigen::MatrixXd m = d.asDiagonal() * gram_ * d.asDiagonal();
    m.diagonal().array() += rho_;
    post.llt_.compute(m);
    if (post.llt_.info() != Eigen::Success) { throw NumericalError("grid regressor factorization failed"); }

    const Eigen::MatrixXd &l = post.llt_.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < g; ++i) { logdet += std::log(l(i, i) * l(i, i) / rho_); }
    // Nonnegative in exact arithmetic; unvisited rows contribute rounding noise only.
    post.logdet_ = std::max(0.0, logdet);

    post.whitened_ = d.asDiagonal() * gram_;
    post.llt_.matrixL().solveInPlace(post.whitened_);
    post.variance_ = (gram_.diagonal() - post.whitened_.colwise().squaredNorm().transpose()).cwiseMax(0.0);
    return post;
}

Eigen::VectorXd GridPosterior::predict(const Eigen::VectorXd &target_sums) const {
    if (target_sums.size() != sqrt_counts_.size()) {
        throw InvalidInput(fmt::format("predict got {} target sums for a grid of {}", target_sums.size(), sqrt_counts_.size()));
    }
    // f = K_G D (D K_G D + rho I)^{-1} D^+ Y, with D^+ Y = 0 where no observations exist.
    Eigen::VectorXd y(target_sums.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y(i) = sqrt_counts_(i) > 0.0 ? target_sums(i) / sqrt_counts_(i) : 0.0;
    }
    llt_.matrixL().solveInPlace(y);
    return whitened_.transpose() * y;
}

}  // namespace kucb
