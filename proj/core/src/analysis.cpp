#include "kucb/analysis.hpp"

#include "kucb/errors.hpp"
#include "kucb/gram_state.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kucb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class MarginTracker {
public:
    explicit MarginTracker(std::string name) { report_.name = std::move(name); report_.worst_margin = kInf; }

    template <typename LocationFn>
    void observe(double margin, LocationFn &&location) {
        ++report_.evaluated;
        if (margin < -kCheckTolerance) { ++report_.violations; }
        if (margin < report_.worst_margin) {
            report_.worst_margin = margin;
            report_.location = location();
        }
    }

    CheckReport finish() {
        if (report_.evaluated == 0) { report_.worst_margin = 0.0; }
        report_.passed = report_.worst_margin >= -kCheckTolerance;
        return std::move(report_);
    }

    CheckReport &report() { return report_; }

private:
    CheckReport report_;
};

void require_replay_of(const RunTrace &trace, const GramState &replay) {
    if (replay.size() != trace.steps.size() || replay.rho() != trace.rho) {
        throw InvalidInput(fmt::format("replay of {} points does not match a trace of {} steps", replay.size(),
                                       trace.steps.size()));
    }
}

// 1/2 log det(I + K/rho) over the steps start, start + stride, ... Every point lies on the
// grid, so with c visits per grid point and D = diag(sqrt(c)) the determinant equals
// det(I + D K_G D / rho), an O(G^3) computation independent of the number of steps.
double subsequence_info_gain(const RunTrace &trace, const Eigen::MatrixXd &grid_gram, std::size_t start,
                             std::size_t stride) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(grid_gram.rows());
    for (std::size_t i = start; i < trace.steps.size(); i += stride) {
        d(static_cast<Eigen::Index>(trace.grid_index(trace.steps[i]))) += 1.0;
    }
    d = d.cwiseSqrt();
    Eigen::MatrixXd m = d.asDiagonal() * grid_gram * d.asDiagonal() / trace.rho;
    m.diagonal().array() += 1.0;
    const Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) { throw NumericalError("subsequence information gain factorization failed"); }
    return llt.matrixLLT().diagonal().array().log().sum();
}

double potential_denominator(double rho) { return std::log1p(1.0 / rho); }

}  // namespace

GramState replay_trace(const RunTrace &trace) {
    GramState state(trace.kernel, trace.rho);
    for (std::size_t i = 0; i < trace.steps.size(); ++i) { state.append(trace.point(i)); }
    return state;
}

double CheckReport::detail(const std::string &key) const {
    for (const auto &[k, v] : details) {
        if (k == key) { return v; }
    }
    throw InvalidInput(fmt::format("check '{}' has no detail '{}'", name, key));
}

std::vector<double> cumulative_regret(const RunTrace &trace, double j_star) {
    std::vector<double> out;
    out.reserve(trace.steps.size());
    double acc = 0.0;
    for (const auto &r : trace.steps) {
        acc += j_star - r.reward;
        out.push_back(acc);
    }
    return out;
}

CheckReport check_coverage(const RunTrace &trace, const MdpModel &model) {
    if (trace.plans.empty()) { throw InvalidInput("coverage check needs retained planning internals"); }
    MarginTracker tracker("coverage");
    const auto g = static_cast<Eigen::Index>(trace.grid.size());
    for (const auto &plan : trace.plans) {
        for (int h = 1; h <= plan.window(); ++h) {
            const auto &next = plan.v[static_cast<std::size_t>(h)];
            const Eigen::VectorXd truth = model.transitions * next;
            const auto &fhat = plan.prediction[static_cast<std::size_t>(h - 1)];
            for (Eigen::Index z = 0; z < g; ++z) {
                const double width = std::isinf(plan.beta) ? kInf : plan.beta * plan.sigma(z);
                const double margin = width - std::abs(truth(z) - fhat(z));
                tracker.observe(margin, [&] { return fmt::format("t0={} h={} z={}", plan.anchor, h, z); });
            }
        }
    }
    tracker.report().details.emplace_back("batches", static_cast<double>(trace.plans.size()));
    return tracker.finish();
}

CheckReport check_elliptical(const RunTrace &trace) { return check_elliptical(trace, replay_trace(trace)); }

CheckReport check_elliptical(const RunTrace &trace, const GramState &state) {
    require_replay_of(trace, state);
    MarginTracker tracker("elliptical");
    // sigma^2_{t-1}(z_t) is the Schur complement of the t-th append minus rho.
    double lhs = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double d = state.factor_row(i)[i];
        lhs += std::max(0.0, d * d - state.rho());
    }
    const double rhs = 2.0 * state.info_gain() / potential_denominator(trace.rho);
    tracker.observe(rhs - lhs, [&] { return fmt::format("T={}", trace.steps.size()); });
    auto report = tracker.finish();
    report.details = {{"lhs", lhs}, {"rhs", rhs}, {"gamma", state.info_gain()}};
    return report;
}

CheckReport check_delayed_potential(const RunTrace &trace, int window) {
    return check_delayed_potential(trace, window, replay_trace(trace));
}

CheckReport check_delayed_potential(const RunTrace &trace, int window, const GramState &full) {
    if (window < 1) { throw InvalidInput("window must be >= 1"); }
    require_replay_of(trace, full);
    MarginTracker tracker("delayed_potential");
    const auto n = trace.steps.size();

    double lhs = 0.0;
    double sigma_mismatch = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto &rec = trace.steps[i];
        lhs += rec.sigma;
        // sigma^2_{t0}(z_t) from the replayed factor: k(z,z) - |L[t, :t0]|^2.
        const auto row = full.factor_row(i);
        double acc = 0.0;
        for (std::int64_t j = 0; j < rec.anchor; ++j) { acc += row[static_cast<std::size_t>(j)] * row[static_cast<std::size_t>(j)]; }
        const double k = eval(trace.kernel, trace.point(i), trace.point(i));
        sigma_mismatch = std::max(sigma_mismatch, std::abs(std::sqrt(std::max(0.0, k - acc)) - rec.sigma));
    }

    double gamma_sub = window == 1 ? full.info_gain() : 0.0;
    if (window > 1 && n > 0) {
        const Eigen::MatrixXd grid_gram = gram(trace.kernel, trace.grid);
        for (int r = 0; r < window; ++r) {
            gamma_sub = std::max(gamma_sub, subsequence_info_gain(trace, grid_gram, static_cast<std::size_t>(r),
                                                                  static_cast<std::size_t>(window)));
        }
    }

    const double l = potential_denominator(trace.rho);
    const double w = static_cast<double>(window);
    const double rhs = std::sqrt(2.0 * full.info_gain() / l * (static_cast<double>(n) + 2.0 * w * w * gamma_sub / l));
    tracker.observe(rhs - lhs, [&] { return fmt::format("T={} w={}", n, window); });
    auto report = tracker.finish();
    report.details = {{"lhs", lhs},
                      {"rhs", rhs},
                      {"gamma", full.info_gain()},
                      {"gamma_subsequence", gamma_sub},
                      {"sigma_replay_mismatch", sigma_mismatch}};
    return report;
}

CheckReport check_variance_ratio(const RunTrace &trace, std::int64_t samples, Rng &rng) {
    return check_variance_ratio(trace, samples, rng, replay_trace(trace));
}

CheckReport check_variance_ratio(const RunTrace &trace, std::int64_t samples, Rng &rng, const GramState &full) {
    require_replay_of(trace, full);
    MarginTracker tracker("variance_ratio");
    const auto n = static_cast<std::int64_t>(trace.steps.size());
    const auto g = trace.grid.size();
    if (n == 0 || samples <= 0) { return tracker.finish(); }

    // Prefix sums of squared whitened entries give sigma^2_m(z) = k(z,z) - cum[m] for every m.
    std::vector<std::vector<double>> cum(g);
    std::vector<double> prior(g);
    for (std::size_t z = 0; z < g; ++z) {
        const Eigen::VectorXd wz = full.whitened(trace.grid[z]);
        auto &c = cum[z];
        c.assign(static_cast<std::size_t>(n) + 1, 0.0);
        for (std::int64_t i = 0; i < n; ++i) { c[static_cast<std::size_t>(i) + 1] = c[static_cast<std::size_t>(i)] + wz(i) * wz(i); }
        prior[z] = eval(trace.kernel, trace.grid[z], trace.grid[z]);
    }
    const auto variance = [&](std::size_t z, std::int64_t m) {
        return std::max(0.0, prior[z] - cum[z][static_cast<std::size_t>(m)]);
    };

    std::uniform_int_distribution<std::int64_t> pick_t(1, n);
    std::uniform_int_distribution<std::size_t> pick_z(0, g - 1);
    double raw_worst = kInf;
    std::int64_t raw_violations = 0;
    double max_ratio = 1.0;
    for (std::int64_t s = 0; s < samples; ++s) {
        const std::int64_t t = pick_t(rng);
        const std::int64_t tp = std::uniform_int_distribution<std::int64_t>(0, t - 1)(rng);
        const std::size_t z = pick_z(rng);

        const double var_tp = variance(z, tp);
        const double var_t = variance(z, t);
        double spread = 0.0;
        for (std::int64_t j = tp; j < t; ++j) { spread += variance(trace.grid_index(trace.steps[static_cast<std::size_t>(j)]), tp); }

        const auto where = [&] { return fmt::format("t'={} t={} z={}", tp, t, z); };
        tracker.observe(var_tp - var_t, where);
        tracker.observe((1.0 + spread / trace.rho) * var_t - var_tp, where);

        const double raw = (1.0 + spread) * var_t - var_tp;
        if (raw < -kCheckTolerance) { ++raw_violations; }
        raw_worst = std::min(raw_worst, raw);
        if (var_t > 0.0) { max_ratio = std::max(max_ratio, var_tp / var_t); }
    }
    auto report = tracker.finish();
    report.details = {{"samples", static_cast<double>(samples)},
                      {"max_ratio", max_ratio},
                      {"unnormalized_worst_margin", raw_worst},
                      {"unnormalized_violations", static_cast<double>(raw_violations)}};
    return report;
}

CheckReport check_optimism(const RunTrace &trace, const MdpModel &model) {
    if (trace.plans.empty()) { throw InvalidInput("optimism check needs retained planning internals"); }
    MarginTracker tracker("optimism");
    const Eigen::VectorXd exact = finite_horizon_values(model, trace.window);
    for (const auto &plan : trace.plans) {
        const auto &v1 = plan.v.front();
        for (Eigen::Index s = 0; s < v1.size(); ++s) {
            // Absorb the looser diagnostic tolerance into the margin.
            tracker.observe(v1(s) - exact(s) + 1e-8 - kCheckTolerance,
                            [&] { return fmt::format("t0={} s={}", plan.anchor, s); });
        }
    }
    return tracker.finish();
}

double gamma_bound_poly(double t, double rho, double p, double c_bound) {
    if (!(p > 1.0)) { throw InvalidInput(fmt::format("gamma_bound_poly needs p > 1, got {}", p)); }
    if (!(rho > 0.0)) { throw InvalidInput("rho must be positive"); }
    if (t <= 0.0) { return 0.0; }
    const double x = t / rho;
    return c_bound * std::pow(x, 1.0 / p) * std::pow(std::log1p(x), 1.0 - 1.0 / p);
}

}  // namespace kucb
