#include "generators.hpp"

#include "kucb/errors.hpp"
#include "kucb/gram_state.hpp"
#include "kucb/grid_regressor.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace kucb {
namespace {

using testing::DenseKrr;
using testing::grid_sequence;
using testing::kernel_zoo;
using testing::random_point;
using testing::random_points;
using testing::relative_error;

GramState build(const KernelSpec &k, double rho, const std::vector<Point> &pts) {
    GramState s(k, rho);
    for (const auto &p : pts) { s.append(p); }
    return s;
}

TEST(GramStateAppend, FirstPointFactor) {
    GramState s(KernelSpec::matern(1, 1.5, 0.5, 0.8), 0.3);
    s.append(Point{0.2});
    ASSERT_EQ(s.size(), 1U);
    EXPECT_DOUBLE_EQ(s.factor_row(0)[0], std::sqrt(0.8 + 0.3));
}

TEST(GramStateAppend, FactorReconstructsRegularizedGram) {
    Rng rng(1);
    const auto kernel = KernelSpec::squared_exponential(2, 0.4);
    const auto pts = random_points(rng, 50, 2);
    const auto s = build(kernel, 0.5, pts);
    const Eigen::MatrixXd l = s.factor();
    Eigen::MatrixXd want = gram(kernel, pts);
    want.diagonal().array() += 0.5;
    EXPECT_LE((l * l.transpose() - want).norm() / want.norm(), 1e-10);
}

TEST(GramStateAppend, LogdetMatchesDenseOracle) {
    Rng rng(2);
    for (const auto &kernel : kernel_zoo(rng, 2)) {
        const auto pts = random_points(rng, 30, 2);
        for (double rho : {0.1, 1.0, 10.0}) {
            const auto s = build(kernel, rho, pts);
            EXPECT_LE(relative_error(s.logdet(), DenseKrr(kernel, rho, pts).logdet()), 1e-8);
            double from_factor = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) { from_factor += 2.0 * std::log(s.factor_row(i)[i]); }
            from_factor -= static_cast<double>(s.size()) * std::log(rho);
            EXPECT_LE(relative_error(s.logdet(), from_factor), 1e-8);
        }
    }
}

TEST(GramStateAppend, ReturnsVarianceBeforeInsertion) {
    Rng rng(3);
    const auto kernel = KernelSpec::matern(2, 2.5, 0.3);
    GramState s(kernel, 1.0);
    for (int i = 0; i < 20; ++i) {
        const Point z = random_point(rng, 2);
        const double before = s.posterior_variance(z);
        const double logdet = s.logdet();
        EXPECT_NEAR(s.append(z), before, 1e-12);
        EXPECT_NEAR(s.logdet() - logdet, std::log1p(before / 1.0), 1e-12);
    }
}

TEST(GramStateAppend, DuplicatesWithNegligibleRegularizationStayFinite) {
    GramState s(KernelSpec::squared_exponential(1, 0.3), 1e-300);
    for (int i = 0; i < 5; ++i) { s.append(Point{0.5}); }
    EXPECT_GE(s.jitter(), 0.0);
    EXPECT_GE(s.posterior_variance(Point{0.5}), 0.0);
    EXPECT_TRUE(std::isfinite(s.logdet()));
}

TEST(GramStateAppend, DimensionMismatch) {
    GramState s(KernelSpec::squared_exponential(2, 0.3), 1.0);
    EXPECT_THROW(s.append(Point{0.1}), InvalidInput);
}

TEST(PosteriorVariance, EmptyStateIsPrior) {
    const GramState s(KernelSpec::squared_exponential(2, 0.3, 0.6), 1.0);
    EXPECT_EQ(s.posterior_variance(Point{0.1, 0.9}), 0.6);
}

TEST(PosteriorVariance, SingleObservationAtQuery) {
    GramState s(KernelSpec::squared_exponential(1, 1.0), 1.0);
    s.append(Point{0.3});
    EXPECT_DOUBLE_EQ(s.posterior_variance(Point{0.3}), 0.5);
}

TEST(PosteriorVariance, SmallRegularizationShrinksToNearZero) {
    GramState s(KernelSpec::squared_exponential(1, 1.0), 0.01);
    s.append(Point{0.7});
    const double v = s.posterior_variance(Point{0.7});
    EXPECT_NEAR(v, 0.01 / 1.01, 1e-15);
    EXPECT_LE(v, 0.0099100);
}

TEST(Predict, EmptyStateGivesZero) {
    const GramState s(KernelSpec::squared_exponential(1, 1.0), 1.0);
    EXPECT_EQ(s.predict(Point{0.2}, std::vector<double>{}), 0.0);
}

TEST(Predict, SingleObservationShrinksTowardZero) {
    GramState s(KernelSpec::squared_exponential(1, 1.0), 1.0);
    s.append(Point{0.2});
    EXPECT_DOUBLE_EQ(s.predict(Point{0.2}, std::vector<double>{3.0}), 1.5);
}

TEST(Predict, LinearInTargets) {
    Rng rng(4);
    const auto pts = random_points(rng, 25, 2);
    const auto s = build(KernelSpec::matern(2, 1.5, 0.3), 0.5, pts);
    std::normal_distribution<double> normal;
    std::vector<double> u(25);
    std::vector<double> v(25);
    std::vector<double> mix(25);
    for (int i = 0; i < 25; ++i) {
        u[static_cast<std::size_t>(i)] = normal(rng);
        v[static_cast<std::size_t>(i)] = normal(rng);
        mix[static_cast<std::size_t>(i)] = 2.0 * u[static_cast<std::size_t>(i)] - 3.0 * v[static_cast<std::size_t>(i)];
    }
    const Point z = random_point(rng, 2);
    EXPECT_NEAR(s.predict(z, mix), 2.0 * s.predict(z, u) - 3.0 * s.predict(z, v), 1e-10);
    const Eigen::VectorXd w = s.weights(z);
    EXPECT_NEAR(s.predict(z, u), w.dot(Eigen::Map<const Eigen::VectorXd>(u.data(), 25)), 1e-12);
}

TEST(Predict, RejectsWrongTargetLength) {
    GramState s(KernelSpec::squared_exponential(1, 1.0), 1.0);
    s.append(Point{0.2});
    EXPECT_THROW((void)s.predict(Point{0.2}, std::vector<double>{1.0, 2.0}), InvalidInput);
    EXPECT_THROW((void)s.predict(Point{0.2, 0.1}, std::vector<double>{1.0}), InvalidInput);
}

TEST(InfoGain, ClosedForms) {
    GramState s(KernelSpec::squared_exponential(1, 1.0), 1.0);
    EXPECT_EQ(s.info_gain(), 0.0);
    s.append(Point{0.5});
    EXPECT_NEAR(s.info_gain(), 0.5 * std::log(2.0), 1e-15);
    EXPECT_NEAR(s.info_gain(), 0.3466, 1e-4);
    for (int n = 2; n <= 40; ++n) {
        s.append(Point{0.5});
        EXPECT_NEAR(s.info_gain(), 0.5 * std::log(1.0 + n), 1e-12) << n;
    }
}

TEST(Snapshot, FrozenAgainstLaterAppends) {
    Rng rng(5);
    const auto kernel = KernelSpec::squared_exponential(2, 0.3);
    GramState s = build(kernel, 1.0, random_points(rng, 10, 2));
    const GramState snap = s.snapshot();
    const Point z = random_point(rng, 2);
    const double before = snap.posterior_variance(z);
    s.append(z);
    EXPECT_EQ(snap.posterior_variance(z), before);
    EXPECT_EQ(snap.size(), 10U);
    EXPECT_LT(s.posterior_variance(z), before);
}

TEST(Snapshot, EmptySnapshotBehavesAsEmpty) {
    GramState s(KernelSpec::squared_exponential(1, 0.3), 1.0);
    const GramState snap = s.snapshot();
    s.append(Point{0.1});
    EXPECT_EQ(snap.size(), 0U);
    EXPECT_EQ(snap.posterior_variance(Point{0.1}), 1.0);
    EXPECT_EQ(snap.info_gain(), 0.0);
}

TEST(Snapshot, EqualsDeepCopyBitForBit) {
    Rng rng(6);
    const auto kernel = KernelSpec::matern(2, 2.5, 0.4);
    const auto pts = random_points(rng, 30, 2);
    GramState s = build(kernel, 0.7, pts);
    const GramState snap = s.snapshot();
    const GramState copy = build(kernel, 0.7, pts);
    s.append(random_point(rng, 2));
    for (int i = 0; i < 10; ++i) {
        const Point z = random_point(rng, 2);
        EXPECT_EQ(snap.posterior_variance(z), copy.posterior_variance(z));
    }
}

TEST(KrrProperty, VarianceIsMonotoneAndBounded) {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        for (const auto &kernel : kernel_zoo(rng, 2)) {
            GramState s(kernel, 0.5);
            const auto probes = random_points(rng, 5, 2);
            std::vector<double> prev;
            for (const auto &z : probes) { prev.push_back(s.posterior_variance(z)); }
            for (int i = 0; i < 20; ++i) {
                s.append(random_point(rng, 2));
                for (std::size_t j = 0; j < probes.size(); ++j) {
                    const double v = s.posterior_variance(probes[j]);
                    EXPECT_LE(v, prev[j] + 1e-10);
                    EXPECT_GE(v, 0.0);
                    EXPECT_LE(v, eval(kernel, probes[j], probes[j]) + 1e-12);
                    prev[j] = v;
                }
            }
        }
    }
}

TEST(KrrProperty, MatchesDenseOracle) {
    Rng rng(8);
    std::uniform_int_distribution<int> size(1, 200);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 4; ++trial) {
        for (const auto &kernel : kernel_zoo(rng, 3)) {
            const auto pts = random_points(rng, size(rng), 3);
            const auto s = build(kernel, 0.3, pts);
            const DenseKrr oracle(kernel, 0.3, pts);
            Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
            for (auto &x : y) { x = normal(rng); }
            const std::vector<double> targets(y.data(), y.data() + y.size());
            for (int q = 0; q < 5; ++q) {
                const Point z = random_point(rng, 3);
                EXPECT_LE(relative_error(s.posterior_variance(z), oracle.variance(z)), 1e-8);
                EXPECT_LE(relative_error(s.predict(z, targets), oracle.predict(z, y)), 1e-8);
            }
            EXPECT_LE(relative_error(s.logdet(), oracle.logdet()), 1e-8);
        }
    }
}

// The ratio of nested posterior variances is bounded by 1 + sum of earlier variances / rho.
TEST(KrrProperty, VarianceRatioBoundWithRegularizationScaling) {
    Rng rng(9);
    std::uniform_int_distribution<int> horizon(1, 40);
    for (double rho : {0.1, 1.0, 10.0}) {
        for (int trial = 0; trial < 40; ++trial) {
            const auto kernel = KernelSpec::squared_exponential(2, 0.3);
            const int t = horizon(rng);
            const int tp = std::uniform_int_distribution<int>(0, t)(rng);
            const auto pts = random_points(rng, t, 2);
            const Point z = std::bernoulli_distribution(0.5)(rng) ? pts[static_cast<std::size_t>(t - 1)] : random_point(rng, 2);
            GramState early(kernel, rho);
            for (int i = 0; i < tp; ++i) { early.append(pts[static_cast<std::size_t>(i)]); }
            GramState late = early.snapshot();
            double spread = 0.0;
            for (int i = tp; i < t; ++i) {
                spread += early.posterior_variance(pts[static_cast<std::size_t>(i)]);
                late.append(pts[static_cast<std::size_t>(i)]);
            }
            const double ratio = early.posterior_variance(z) / late.posterior_variance(z);
            EXPECT_GE(ratio, 1.0 - 1e-9);
            EXPECT_LE(ratio, 1.0 + spread / rho + 1e-9);
        }
    }
}

// Without the 1/rho factor the bound fails as soon as rho < 1: one observation at z gives
// sigma^2_0(z) / sigma^2_1(z) = (k + rho) / rho = 1 + k / rho > 1 + k.
TEST(KrrProperty, UnscaledVarianceRatioBoundFailsForSmallRegularization) {
    const auto kernel = KernelSpec::squared_exponential(1, 0.3);
    const Point z{0.4};
    for (double rho : {0.1, 0.5}) {
        GramState s(kernel, rho);
        const double prior = s.posterior_variance(z);
        s.append(z);
        const double ratio = prior / s.posterior_variance(z);
        EXPECT_NEAR(ratio, 1.0 + 1.0 / rho, 1e-9);
        EXPECT_GT(ratio, 1.0 + prior + 0.5);
        EXPECT_LE(ratio, 1.0 + prior / rho + 1e-9);
    }
}

TEST(KrrProperty, EllipticalPotential) {
    Rng rng(10);
    std::uniform_int_distribution<int> horizon(1, 500);
    for (double rho : {0.1, 1.0, 10.0}) {
        for (int trial = 0; trial < 6; ++trial) {
            const auto kernel = trial % 2 == 0 ? KernelSpec::squared_exponential(2, 0.3) : KernelSpec::matern(2, 1.5, 0.3);
            const auto grid = random_points(rng, 30, 2);
            const auto seq = trial < 3 ? grid_sequence(rng, grid, horizon(rng)) : random_points(rng, horizon(rng), 2);
            GramState s(kernel, rho);
            double sum = 0.0;
            for (const auto &z : seq) { sum += s.append(z); }
            EXPECT_LE(sum, 2.0 * s.info_gain() / std::log1p(1.0 / rho) + 1e-9);
        }
    }
}

TEST(GridRegressor, AgreesWithIncrementalState) {
    Rng rng(12);
    const auto kernel = KernelSpec::squared_exponential(2, 0.3);
    const auto grid = random_points(rng, 40, 2);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    std::normal_distribution<double> normal;
    for (double rho : {0.1, 1.0}) {
        GridRegressor reg(kernel, rho, grid);
        GramState dense(kernel, rho);
        std::vector<std::size_t> where;
        for (int i = 0; i < 300; ++i) {
            const auto g = pick(rng);
            reg.add(g);
            dense.append(grid[g]);
            where.push_back(g);
        }
        const auto post = reg.factorize();
        EXPECT_EQ(post.size(), 300);
        EXPECT_LE(relative_error(post.logdet(), dense.logdet()), 1e-8);

        std::vector<double> targets(where.size());
        Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t j = 0; j < where.size(); ++j) {
            targets[j] = normal(rng);
            sums(static_cast<Eigen::Index>(where[j])) += targets[j];
        }
        const Eigen::VectorXd pred = post.predict(sums);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto gi = static_cast<Eigen::Index>(g);
            EXPECT_NEAR(post.variance()(gi), dense.posterior_variance(grid[g]), 1e-9);
            EXPECT_LE(relative_error(pred(gi), dense.predict(grid[g], targets)), 1e-8);
        }
    }
}

TEST(GridRegressor, EmptyHistoryIsThePrior) {
    const auto kernel = KernelSpec::squared_exponential(1, 0.3);
    const GridRegressor reg(kernel, 1.0, {{0.0}, {0.5}});
    const auto post = reg.factorize();
    EXPECT_EQ(post.logdet(), 0.0);
    EXPECT_EQ(post.variance()(0), 1.0);
    EXPECT_EQ(post.predict(Eigen::VectorXd::Zero(2)).norm(), 0.0);
    GridRegressor bad(kernel, 1.0, {{0.0}});
    EXPECT_THROW(bad.add(3), InvalidInput);
}

}  // namespace
}  // namespace kucb

namespace kucb {
namespace {

TEST(GridRegressor, LogdetIsNeverNegative) {
    Rng rng(13);
    const auto kernel = KernelSpec::squared_exponential(2, 0.3);
    const auto grid = testing::random_points(rng, 80, 2);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    for (double rho : {10.0, 100.0, 1e4}) {
        GridRegressor reg(kernel, rho, grid);
        for (int i = 0; i < 30; ++i) {
            EXPECT_GE(reg.factorize().logdet(), 0.0) << "rho=" << rho << " n=" << i;
            reg.add(pick(rng));
        }
    }
}

}  // namespace
}  // namespace kucb
