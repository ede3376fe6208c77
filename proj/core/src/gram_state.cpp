#include "kucb/gram_state.hpp"

#include "kucb/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace kucb {

namespace {

constexpr double kJitterFactor = 1e-10;

double dot(const double *a, const double *b, std::size_t n) {
    const auto len = static_cast<Eigen::Index>(n);
    return Eigen::Map<const Eigen::VectorXd>(a, len).dot(Eigen::Map<const Eigen::VectorXd>(b, len));
}

}  // namespace

GramState::GramState(KernelSpec kernel, double rho) : kernel_(std::move(kernel)), rho_(rho) {
    kernel_.validate();
    if (!(rho_ > 0.0) || !std::isfinite(rho_)) { throw InvalidInput(fmt::format("rho must be positive, got {}", rho_)); }
}

void GramState::forward_solve(std::span<const double> z, std::vector<double> &out) const {
    const std::size_t n = rows_.size();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &row = rows_[i]->factor;
        const double kz = eval(kernel_, z, rows_[i]->point);
        out[i] = (kz - dot(row.data(), out.data(), i)) / row[i];
    }
}

void GramState::backward_solve(std::vector<double> &x) const {
    // Solves L^T y = x in place; L is stored by rows, so sweep columns of L^T.
    for (std::size_t i = rows_.size(); i-- > 0;) {
        const auto &row = rows_[i]->factor;
        x[i] /= row[i];
        const double xi = x[i];
        for (std::size_t j = 0; j < i; ++j) { x[j] -= row[j] * xi; }
    }
}

double GramState::append(std::span<const double> z) {
    if (z.size() != static_cast<std::size_t>(kernel_.input_dim)) {
        throw InvalidInput(fmt::format("point has dimension {}, kernel expects {}", z.size(), kernel_.input_dim));
    }
    auto row = std::make_shared<Row>();
    row->point.assign(z.begin(), z.end());
    forward_solve(z, row->factor);

    const double kzz = eval(kernel_, z, z);
    const double projected = std::inner_product(row->factor.begin(), row->factor.end(), row->factor.begin(), 0.0);
    double schur = kzz + rho_ - projected;
    if (!(schur > 0.0)) {
        const double extra = kJitterFactor * kzz;
        schur += extra;
        jitter_ += extra;
        if (!(schur > 0.0)) {
            throw NumericalError(fmt::format("Schur complement {} is not positive after jitter at n = {}", schur, size()));
        }
    }
    const double variance = std::max(0.0, schur - rho_);
    row->factor.push_back(std::sqrt(schur));
    rows_.push_back(std::move(row));
    logdet_ += std::log1p(variance / rho_);
    return variance;
}

Eigen::VectorXd GramState::whitened(std::span<const double> z) const {
    std::vector<double> u;
    forward_solve(z, u);
    return Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
}

double GramState::posterior_variance(std::span<const double> z) const {
    if (z.size() != static_cast<std::size_t>(kernel_.input_dim)) {
        throw InvalidInput(fmt::format("point has dimension {}, kernel expects {}", z.size(), kernel_.input_dim));
    }
    std::vector<double> u;
    forward_solve(z, u);
    const double projected = std::inner_product(u.begin(), u.end(), u.begin(), 0.0);
    return std::max(0.0, eval(kernel_, z, z) - projected);
}

Eigen::VectorXd GramState::weights(std::span<const double> z) const {
    std::vector<double> x;
    forward_solve(z, x);
    backward_solve(x);
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

double GramState::predict(std::span<const double> z, std::span<const double> targets) const {
    if (z.size() != static_cast<std::size_t>(kernel_.input_dim)) {
        throw InvalidInput(fmt::format("point has dimension {}, kernel expects {}", z.size(), kernel_.input_dim));
    }
    if (targets.size() != rows_.size()) {
        throw InvalidInput(fmt::format("predict got {} targets for {} observations", targets.size(), rows_.size()));
    }
    if (rows_.empty()) { return 0.0; }
    std::vector<double> x;
    forward_solve(z, x);
    backward_solve(x);
    return dot(x.data(), targets.data(), x.size());
}

Eigen::MatrixXd GramState::factor() const {
    const auto n = static_cast<Eigen::Index>(rows_.size());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &row = rows_[static_cast<std::size_t>(i)]->factor;
        for (Eigen::Index j = 0; j <= i; ++j) { l(i, j) = row[static_cast<std::size_t>(j)]; }
    }
    return l;
}

}  // namespace kucb
