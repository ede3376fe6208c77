#pragma once

#include "kucb/kernels.hpp"

#include <cstdint>

namespace kucb {

enum class BetaMode { Full, Simplified };

/// Constants of the confidence-width multiplier beta(delta).
struct ConfidenceParams {
    double c_f = 1.0;      // RKHS norm bound on f = [Pv] under k
    double c_v = 1.0;      // RKHS norm bound on v under the state kernel k'
    double psi_max = 1.0;  // uniform bound on the Mercer eigenfunctions of k'
    double delta = 0.1;
    double rho = 1.0;
    EigenProfile state_profile = EigenProfile::exponential(1.0, 1.0);
    BetaMode mode = BetaMode::Full;

    void validate() const;
};

/// Mercer truncation level M for n observations.
///
/// Polynomial(p): ceil(n^{1/(p-1)}); Exponential: ceil(log n);
/// Explicit: smallest M with n * tail(M) <= head(M). Always >= 1.
[[nodiscard]] std::int64_t choose_truncation(const EigenProfile &profile, std::int64_t n);

/// C_f + (C_v psi / sqrt(rho)) sqrt(head(M)) sqrt(log(M / delta) + logdet)
///     + (2 C_v psi / sqrt(rho)) sqrt(n tail(M)),
/// where logdet = log det(I + K_n / rho).
[[nodiscard]] double beta_full(const ConfidenceParams &params, std::int64_t n, double logdet, std::int64_t truncation);

/// C_f + (C_v / sqrt(rho)) sqrt(log(n / delta) + gamma), gamma = 0.5 logdet.
[[nodiscard]] double beta_simplified(const ConfidenceParams &params, std::int64_t n, double gamma);

/// Dispatches on params.mode. n = 0 is served by M = 1 (Full) or n = 1 (Simplified).
[[nodiscard]] double confidence_width(const ConfidenceParams &params, std::int64_t n, double logdet);

}  // namespace kucb
