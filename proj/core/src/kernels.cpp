#include "kucb/kernels.hpp"

#include "kucb/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kucb {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

// Polynomial head sums add at most this many terms explicitly; the rest use a
// midpoint-rule integral.
constexpr std::int64_t kExplicitHeadLimit = 1'000'000;

bool is_supported_nu(double nu) { return nu == 0.5 || nu == 1.5 || nu == 2.5; }

double squared_distance(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

KernelSpec KernelSpec::linear(int dim, double variance_scale) {
    KernelSpec k;
    k.family = KernelFamily::Linear;
    k.input_dim = dim;
    k.variance_scale = variance_scale;
    k.validate();
    return k;
}

KernelSpec KernelSpec::squared_exponential(int dim, double lengthscale, double variance_scale) {
    KernelSpec k;
    k.family = KernelFamily::SquaredExponential;
    k.input_dim = dim;
    k.lengthscale = lengthscale;
    k.variance_scale = variance_scale;
    k.validate();
    return k;
}

KernelSpec KernelSpec::matern(int dim, double nu, double lengthscale, double variance_scale) {
    KernelSpec k;
    k.family = KernelFamily::Matern;
    k.input_dim = dim;
    k.nu = nu;
    k.lengthscale = lengthscale;
    k.variance_scale = variance_scale;
    k.validate();
    return k;
}

void KernelSpec::validate() const {
    if (input_dim <= 0) { throw InvalidInput(fmt::format("kernel input_dim must be positive, got {}", input_dim)); }
    if (!(variance_scale > 0.0) || !std::isfinite(variance_scale)) {
        throw InvalidInput(fmt::format("kernel variance_scale must be positive, got {}", variance_scale));
    }
    if (family == KernelFamily::Linear) { return; }
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
        throw InvalidInput(fmt::format("kernel lengthscale must be positive, got {}", lengthscale));
    }
    if (family == KernelFamily::Matern && !is_supported_nu(nu)) {
        throw InvalidInput(fmt::format("Matern nu must be one of 0.5, 1.5, 2.5; got {}", nu));
    }
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::Linear: return "linear";
        case KernelFamily::SquaredExponential: return "squared_exponential";
        case KernelFamily::Matern: return "matern";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string &name) {
    if (name == "linear") { return KernelFamily::Linear; }
    if (name == "squared_exponential" || name == "se" || name == "rbf") { return KernelFamily::SquaredExponential; }
    if (name == "matern") { return KernelFamily::Matern; }
    throw InvalidInput(fmt::format("unknown kernel family '{}'", name));
}

double eval(const KernelSpec &kernel, std::span<const double> x, std::span<const double> y) {
    const auto dim = static_cast<std::size_t>(kernel.input_dim);
    if (x.size() != dim || y.size() != dim) {
        throw InvalidInput(fmt::format("kernel expects points of dimension {}, got {} and {}", dim, x.size(), y.size()));
    }
    switch (kernel.family) {
        case KernelFamily::Linear: {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) { dot += x[i] * y[i]; }
            return kernel.variance_scale * dot;
        }
        case KernelFamily::SquaredExponential: {
            const double l2 = kernel.lengthscale * kernel.lengthscale;
            return kernel.variance_scale * std::exp(-squared_distance(x, y) / (2.0 * l2));
        }
        case KernelFamily::Matern: {
            const double r = std::sqrt(squared_distance(x, y)) / kernel.lengthscale;
            if (kernel.nu == 0.5) { return kernel.variance_scale * std::exp(-r); }
            if (kernel.nu == 1.5) {
                const double a = kSqrt3 * r;
                return kernel.variance_scale * (1.0 + a) * std::exp(-a);
            }
            const double a = kSqrt5 * r;
            return kernel.variance_scale * (1.0 + a + a * a / 3.0) * std::exp(-a);
        }
    }
    return 0.0;
}

Eigen::MatrixXd gram(const KernelSpec &kernel, std::span<const Point> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) { k(i, j) = eval(kernel, points[i], points[j]); }
    }
    // eval is symmetric in exact arithmetic; this pins the stored matrix to it.
    return 0.5 * (k + k.transpose());
}

EigenProfile EigenProfile::polynomial(double scale, double exponent, double psi_max) {
    EigenProfile p;
    p.kind = Kind::Polynomial;
    p.scale = scale;
    p.exponent = exponent;
    p.psi_max = psi_max;
    p.validate();
    return p;
}

EigenProfile EigenProfile::exponential(double scale, double rate, double psi_max) {
    EigenProfile p;
    p.kind = Kind::Exponential;
    p.scale = scale;
    p.rate = rate;
    p.psi_max = psi_max;
    p.validate();
    return p;
}

EigenProfile EigenProfile::explicit_values(std::vector<double> eigenvalues, double psi_max) {
    EigenProfile p;
    p.kind = Kind::Explicit;
    p.eigenvalues = std::move(eigenvalues);
    p.psi_max = psi_max;
    p.validate();
    return p;
}

void EigenProfile::validate() const {
    if (!(psi_max > 0.0)) { throw InvalidInput(fmt::format("psi_max must be positive, got {}", psi_max)); }
    switch (kind) {
        case Kind::Polynomial:
            if (!(scale > 0.0)) { throw InvalidInput("polynomial eigendecay constant C must be positive"); }
            if (!(exponent > 1.0)) {
                throw InvalidInput(fmt::format("polynomial eigendecay needs p > 1, got {}", exponent));
            }
            break;
        case Kind::Exponential:
            if (!(scale > 0.0) || !(rate > 0.0)) {
                throw InvalidInput("exponential eigendecay needs positive constant and rate");
            }
            break;
        case Kind::Explicit:
            if (eigenvalues.empty()) { throw InvalidInput("explicit eigenvalue list is empty"); }
            for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
                if (!(eigenvalues[i] >= 0.0) || !std::isfinite(eigenvalues[i])) {
                    throw InvalidInput(fmt::format("eigenvalue {} is negative or not finite", i + 1));
                }
                if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) {
                    throw InvalidInput("explicit eigenvalues must be nonincreasing");
                }
            }
            break;
    }
}

double EigenProfile::eigenvalue(std::int64_t m) const {
    if (m < 1) { throw InvalidInput("eigenvalue index is 1-based"); }
    switch (kind) {
        case Kind::Polynomial: return scale * std::pow(static_cast<double>(m), -exponent);
        case Kind::Exponential: return scale * std::exp(-rate * static_cast<double>(m - 1));
        case Kind::Explicit:
            return static_cast<std::size_t>(m) <= eigenvalues.size() ? eigenvalues[static_cast<std::size_t>(m - 1)] : 0.0;
    }
    return 0.0;
}

TailSums tail_sums(const EigenProfile &profile, std::int64_t truncation) {
    if (truncation < 1) { throw InvalidInput(fmt::format("truncation level must be >= 1, got {}", truncation)); }
    TailSums out;
    switch (profile.kind) {
        case EigenProfile::Kind::Explicit: {
            const auto &ev = profile.eigenvalues;
            const auto cut = std::min<std::size_t>(ev.size(), static_cast<std::size_t>(truncation));
            for (std::size_t i = 0; i < ev.size(); ++i) { (i < cut ? out.head : out.tail) += ev[i]; }
            break;
        }
        case EigenProfile::Kind::Polynomial: {
            const double c = profile.scale;
            const double p = profile.exponent;
            const double cap = c * p / (p - 1.0);
            const double m = static_cast<double>(truncation);
            const std::int64_t explicit_terms = std::min(truncation, kExplicitHeadLimit);
            if (truncation > explicit_terms) {
                // Terms L+1..M by the midpoint rule over [L + 1/2, M + 1/2].
                const double lo = static_cast<double>(explicit_terms) + 0.5;
                out.head = c / (p - 1.0) * (std::pow(lo, 1.0 - p) - std::pow(m + 0.5, 1.0 - p));
            }
            // Smallest terms first.
            for (std::int64_t i = explicit_terms; i >= 1; --i) { out.head += c * std::pow(static_cast<double>(i), -p); }
            out.head = std::min(out.head, cap);
            out.tail = c / (p - 1.0) * std::pow(m, 1.0 - p);
            break;
        }
        case EigenProfile::Kind::Exponential: {
            const double c = profile.scale;
            const double q = std::exp(-profile.rate);
            const double qm = std::exp(-profile.rate * static_cast<double>(truncation));
            out.head = c * (1.0 - qm) / (1.0 - q);
            out.tail = c * qm / (1.0 - q);
            break;
        }
    }
    return out;
}

EigenProfile default_profile(const KernelSpec &kernel) {
    kernel.validate();
    switch (kernel.family) {
        case KernelFamily::SquaredExponential: return EigenProfile::exponential(1.0, 1.0);
        case KernelFamily::Matern:
            return EigenProfile::polynomial(1.0, 1.0 + 2.0 * kernel.nu / static_cast<double>(kernel.input_dim));
        case KernelFamily::Linear: {
            // E[x x^T] for x ~ U[0,1]^d is 11^T / 4 + I / 12.
            const auto d = static_cast<std::size_t>(kernel.input_dim);
            std::vector<double> ev(d, kernel.variance_scale / 12.0);
            ev[0] += kernel.variance_scale * static_cast<double>(d) / 4.0;
            return EigenProfile::explicit_values(std::move(ev));
        }
    }
    throw InvalidInput("unknown kernel family");
}

EigenProfile estimate_state_profile(const KernelSpec &kernel, std::span<const Point> states) {
    if (states.size() < 2) { throw InvalidInput("estimating a state profile needs at least two states"); }
    const double n = static_cast<double>(states.size());
    const Eigen::MatrixXd k = gram(kernel, states);
    const double trace = k.trace();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
    if (solver.info() != Eigen::Success) { throw NumericalError("eigendecomposition of the state Gram matrix failed"); }
    const Eigen::VectorXd &values = solver.eigenvalues();  // ascending
    if (values(0) < -1e-8 * trace) {
        throw NumericalError(fmt::format("state Gram matrix is not PSD: min eigenvalue {}", values(0)));
    }

    std::vector<double> ev(states.size());
    double psi = 0.0;
    const auto last = values.size() - 1;
    for (Eigen::Index i = 0; i <= last; ++i) {
        ev[static_cast<std::size_t>(i)] = std::max(0.0, values(last - i)) / n;
        psi = std::max(psi, solver.eigenvectors().col(last - i).cwiseAbs().maxCoeff() * std::sqrt(n));
    }
    return EigenProfile::explicit_values(std::move(ev), psi);
}

}  // namespace kucb
