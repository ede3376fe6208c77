#pragma once

#include "kucb/gram_state.hpp"
#include "kucb/mdp.hpp"
#include "kucb/trace.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace kucb {

/// Absolute tolerance on check margins.
inline constexpr double kCheckTolerance = 1e-9;

struct CheckReport {
    std::string name;
    bool passed = true;
    double worst_margin = 0.0;  // bound minus realized; negative means violated
    std::string location;       // where the worst margin occurred
    std::int64_t violations = 0;
    std::int64_t evaluated = 0;
    std::vector<std::pair<std::string, double>> details;  // named diagnostics

    [[nodiscard]] double detail(const std::string &key) const;
};

/// Prefix sums of J* - r_t.
[[nodiscard]] std::vector<double> cumulative_regret(const RunTrace &trace, double j_star);

/// |[P v_{h+1}](z) - f-hat(z)| <= beta sigma(z) for every retained batch, every h and every grid point.
/// Throws InvalidInput when the trace carries no plans.
[[nodiscard]] CheckReport check_coverage(const RunTrace &trace, const MdpModel &model);

/// Dense factorization of the trace's point sequence, appended one step at a time.
/// Every replay-based check accepts it so that one replay can serve all of them.
[[nodiscard]] GramState replay_trace(const RunTrace &trace);

/// sum_t sigma^2_{t-1}(z_t) <= 2 gamma(T) / log(1 + 1/rho), replayed without delay.
[[nodiscard]] CheckReport check_elliptical(const RunTrace &trace);
[[nodiscard]] CheckReport check_elliptical(const RunTrace &trace, const GramState &replay);

/// sum_t sigma_{t0(t)}(z_t) <= sqrt(2 gamma(T) / L * (T + 2 w^2 gamma(T/w) / L)), L = log(1 + 1/rho),
/// with gamma(T/w) the largest realized information gain over the w interleaved subsequences.
[[nodiscard]] CheckReport check_delayed_potential(const RunTrace &trace, int window);
[[nodiscard]] CheckReport check_delayed_potential(const RunTrace &trace, int window, const GramState &replay);

/// For sampled t' < t and grid points z:
///   sigma^2_t(z) <= sigma^2_{t'}(z) <= (1 + sum_{j=t'+1}^{t} sigma^2_{t'}(z_j) / rho) sigma^2_t(z).
/// Margins are reported in variance units (both sides multiplied by sigma^2_t) to avoid dividing by
/// near-zero variances. The same bound without the 1/rho factor is evaluated as a diagnostic only
/// ("unnormalized_worst_margin", "unnormalized_violations"); it fails whenever rho < 1 and a sampled
/// z sits on a freshly appended point.
[[nodiscard]] CheckReport check_variance_ratio(const RunTrace &trace, std::int64_t samples, Rng &rng);
[[nodiscard]] CheckReport check_variance_ratio(const RunTrace &trace, std::int64_t samples, Rng &rng,
                                               const GramState &replay);

/// v_plan[1](s) >= V_w(s) - 1e-8 for every retained batch, V_w the exact w-step optimal value.
[[nodiscard]] CheckReport check_optimism(const RunTrace &trace, const MdpModel &model);

/// C (t/rho)^{1/p} log(1 + t/rho)^{1 - 1/p}.
[[nodiscard]] double gamma_bound_poly(double t, double rho, double p, double c_bound);

}  // namespace kucb
