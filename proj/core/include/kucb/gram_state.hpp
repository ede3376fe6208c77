#pragma once

#include "kucb/kernels.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace kucb {

/// Kernel ridge regression over a growing point sequence z_1..z_n.
///
/// Holds the lower Cholesky factor L of (K_n + rho I), extended by one row per
/// append, and log det(I + K_n / rho) accumulated alongside. Rows are immutable
/// once written and shared between copies, so a snapshot is O(n) and never
/// observes later appends.
class GramState {
public:
    GramState(KernelSpec kernel, double rho);

    /// Extends the factor by z. Returns sigma^2_n(z), the variance before insertion.
    double append(std::span<const double> z);

    /// sigma^2_n(z) = k(z,z) - k_n(z)^T (K_n + rho I)^{-1} k_n(z), clamped at 0.
    [[nodiscard]] double posterior_variance(std::span<const double> z) const;

    /// k_n(z)^T (K_n + rho I)^{-1} targets.
    [[nodiscard]] double predict(std::span<const double> z, std::span<const double> targets) const;

    /// alpha_n(z) = (K_n + rho I)^{-1} k_n(z); predict() is alpha_n(z) . targets.
    [[nodiscard]] Eigen::VectorXd weights(std::span<const double> z) const;

    /// L^{-1} k_n(z). Entry i only depends on z_1..z_{i+1}, so prefixes of the
    /// result serve every earlier prefix of the data.
    [[nodiscard]] Eigen::VectorXd whitened(std::span<const double> z) const;

    /// 0.5 log det(I + K_n / rho) for the observed points.
    [[nodiscard]] double info_gain() const noexcept { return 0.5 * logdet_; }
    [[nodiscard]] double logdet() const noexcept { return logdet_; }

    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
    [[nodiscard]] bool empty() const noexcept { return rows_.empty(); }
    [[nodiscard]] double rho() const noexcept { return rho_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] const KernelSpec &kernel() const noexcept { return kernel_; }

    /// Row i of L, entries 0..i.
    [[nodiscard]] std::span<const double> factor_row(std::size_t i) const { return rows_[i]->factor; }
    [[nodiscard]] std::span<const double> point(std::size_t i) const { return rows_[i]->point; }

    /// Dense copy of L (tests and diagnostics).
    [[nodiscard]] Eigen::MatrixXd factor() const;

    /// Read-only view frozen at the current size.
    [[nodiscard]] GramState snapshot() const { return *this; }

private:
    struct Row {
        Point point;
        std::vector<double> factor;
    };

    void forward_solve(std::span<const double> z, std::vector<double> &out) const;
    void backward_solve(std::vector<double> &x) const;

    KernelSpec kernel_;
    double rho_;
    double logdet_ = 0.0;
    double jitter_ = 0.0;
    std::vector<std::shared_ptr<const Row>> rows_;
};

}  // namespace kucb
