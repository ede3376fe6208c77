#include "kucb/confidence.hpp"

#include "kucb/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kucb {

namespace {

// ceil(n^{1/q}) overflows int64 quickly for q < 1; saturate well below it.
constexpr double kMaxTruncation = 9.0e15;

}  // namespace

void ConfidenceParams::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) { throw InvalidInput(fmt::format("delta must lie in (0, 1), got {}", delta)); }
    if (!(c_f >= 0.0) || !(c_v >= 0.0)) { throw InvalidInput("RKHS norm bounds C_f and C_v must be nonnegative"); }
    if (!(psi_max > 0.0)) { throw InvalidInput(fmt::format("psi_max must be positive, got {}", psi_max)); }
    if (!(rho > 0.0)) { throw InvalidInput(fmt::format("rho must be positive, got {}", rho)); }
    state_profile.validate();
}

std::int64_t choose_truncation(const EigenProfile &profile, std::int64_t n) {
    if (n < 1) { throw InvalidInput(fmt::format("choose_truncation needs n >= 1, got {}", n)); }
    if (n == 1) { return 1; }
    const double nd = static_cast<double>(n);
    switch (profile.kind) {
        case EigenProfile::Kind::Polynomial: {
            if (!(profile.exponent > 1.0)) {
                throw InvalidInput(fmt::format("polynomial eigendecay needs p > 1, got {}", profile.exponent));
            }
            const double q = profile.exponent - 1.0;
            const double m = std::ceil(std::pow(nd, 1.0 / q) - 1e-9);
            return static_cast<std::int64_t>(std::clamp(m, 1.0, kMaxTruncation));
        }
        case EigenProfile::Kind::Exponential:
            return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::log(nd))));
        case EigenProfile::Kind::Explicit: {
            const auto len = static_cast<std::int64_t>(profile.eigenvalues.size());
            for (std::int64_t m = 1; m < len; ++m) {
                const auto sums = tail_sums(profile, m);
                if (sums.tail * nd <= sums.head) { return m; }
            }
            return std::max<std::int64_t>(1, len);
        }
    }
    return 1;
}

double beta_full(const ConfidenceParams &params, std::int64_t n, double logdet, std::int64_t truncation) {
    if (n < 0) { throw InvalidInput("beta_full needs n >= 0"); }
    if (!(logdet >= 0.0)) { throw InvalidInput(fmt::format("log det(I + K/rho) must be nonnegative, got {}", logdet)); }
    if (truncation < 1) { throw InvalidInput("truncation level must be >= 1"); }

    const auto sums = tail_sums(params.state_profile, truncation);
    const double scale = params.c_v * params.psi_max / std::sqrt(params.rho);
    // 2 log sqrt((M / delta) det(I + K/rho)) = log(M / delta) + logdet
    const double log_term = std::log(static_cast<double>(truncation) / params.delta) + logdet;
    const double head_term = scale * std::sqrt(sums.head) * std::sqrt(log_term);
    const double tail_term = 2.0 * scale * std::sqrt(static_cast<double>(n) * sums.tail);
    return params.c_f + head_term + tail_term;
}

double beta_simplified(const ConfidenceParams &params, std::int64_t n, double gamma) {
    if (!(gamma >= 0.0)) { throw InvalidInput(fmt::format("information gain must be nonnegative, got {}", gamma)); }
    if (n < 1) { throw InvalidInput("beta_simplified needs n >= 1"); }
    const double inner = std::log(static_cast<double>(n) / params.delta) + gamma;
    if (!(inner >= 0.0)) {
        throw InvalidInput(fmt::format("log(n / delta) + gamma = {} is negative", inner));
    }
    return params.c_f + params.c_v / std::sqrt(params.rho) * std::sqrt(inner);
}

double confidence_width(const ConfidenceParams &params, std::int64_t n, double logdet) {
    if (params.mode == BetaMode::Simplified) {
        return beta_simplified(params, std::max<std::int64_t>(n, 1), 0.5 * logdet);
    }
    const std::int64_t m = n >= 1 ? choose_truncation(params.state_profile, n) : 1;
    return beta_full(params, n, logdet, m);
}

}  // namespace kucb
