#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kucb {

using Point = std::vector<double>;

enum class KernelFamily { Linear, SquaredExponential, Matern };

/// A positive-definite kernel over points of a fixed dimension.
///
/// Linear:             k(x, y) = s * <x, y>
/// SquaredExponential: k(x, y) = s * exp(-|x - y|^2 / (2 l^2))
/// Matern(nu):         closed forms for nu in {1/2, 3/2, 5/2}, r = |x - y| / l
struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    int input_dim = 1;
    double lengthscale = 1.0;
    double nu = 2.5;
    double variance_scale = 1.0;

    static KernelSpec linear(int dim, double variance_scale = 1.0);
    static KernelSpec squared_exponential(int dim, double lengthscale, double variance_scale = 1.0);
    static KernelSpec matern(int dim, double nu, double lengthscale, double variance_scale = 1.0);

    /// Throws InvalidInput for non-positive hyperparameters or unsupported nu.
    void validate() const;
};

[[nodiscard]] std::string to_string(KernelFamily family);
[[nodiscard]] KernelFamily kernel_family_from_string(const std::string &name);

[[nodiscard]] double eval(const KernelSpec &kernel, std::span<const double> x, std::span<const double> y);

/// Symmetric Gram matrix; exact symmetry is enforced by averaging with the transpose.
[[nodiscard]] Eigen::MatrixXd gram(const KernelSpec &kernel, std::span<const Point> points);

/// Mercer eigenvalue profile of a kernel, lambda_1 >= lambda_2 >= ...
struct EigenProfile {
    enum class Kind { Polynomial, Exponential, Explicit };

    Kind kind = Kind::Polynomial;
    double scale = 1.0;     // C
    double exponent = 2.0;  // p, Polynomial: lambda_m = C m^-p
    double rate = 1.0;      // Exponential: lambda_m = C exp(-rate (m - 1))
    std::vector<double> eigenvalues;  // Explicit, nonincreasing
    double psi_max = 1.0;

    static EigenProfile polynomial(double scale, double exponent, double psi_max = 1.0);
    static EigenProfile exponential(double scale, double rate, double psi_max = 1.0);
    static EigenProfile explicit_values(std::vector<double> eigenvalues, double psi_max = 1.0);

    /// lambda_m for 1-based m; Explicit profiles return 0 past the end of the list.
    [[nodiscard]] double eigenvalue(std::int64_t m) const;

    void validate() const;
};

struct TailSums {
    double head = 0.0;  // sum_{m <= M} lambda_m
    double tail = 0.0;  // upper bound on sum_{m > M} lambda_m
};

/// Head sum and tail bound at truncation level M >= 1.
[[nodiscard]] TailSums tail_sums(const EigenProfile &profile, std::int64_t truncation);

/// SE -> Exponential(1, 1); Matern(nu) in dimension d -> Polynomial(1, 1 + 2 nu / d);
/// Linear(d) -> Explicit spectrum of the second-moment operator of the uniform measure on [0,1]^d.
[[nodiscard]] EigenProfile default_profile(const KernelSpec &kernel);

/// Explicit profile from the spectrum of gram(states) / |states|.
[[nodiscard]] EigenProfile estimate_state_profile(const KernelSpec &kernel, std::span<const Point> states);

}  // namespace kucb
