#include "kucb/confidence.hpp"
#include "kucb/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace kucb {
namespace {

ConfidenceParams params_with(EigenProfile profile) {
    ConfidenceParams p;
    p.state_profile = std::move(profile);
    return p;
}

TEST(ChooseTruncation, PolynomialRoots) {
    EXPECT_EQ(choose_truncation(EigenProfile::polynomial(1.0, 2.0), 16), 16);
    EXPECT_EQ(choose_truncation(EigenProfile::polynomial(1.0, 3.0), 16), 4);
    EXPECT_EQ(choose_truncation(EigenProfile::polynomial(1.0, 3.0), 17), 5);
}

TEST(ChooseTruncation, SingleObservationIsOne) {
    EXPECT_EQ(choose_truncation(EigenProfile::polynomial(1.0, 2.0), 1), 1);
    EXPECT_EQ(choose_truncation(EigenProfile::exponential(1.0, 1.0), 1), 1);
    EXPECT_EQ(choose_truncation(EigenProfile::explicit_values({1.0, 0.5}), 1), 1);
}

TEST(ChooseTruncation, ExponentialIsCeilLog) {
    EXPECT_EQ(choose_truncation(EigenProfile::exponential(1.0, 1.0), 100), 5);
    EXPECT_EQ(choose_truncation(EigenProfile::exponential(1.0, 1.0), 3), 2);
}

TEST(ChooseTruncation, ExplicitSmallestBalancedLevel) {
    const auto profile = EigenProfile::explicit_values({1.0, 0.1, 0.01, 0.001});
    // n * tail <= head: M=1 needs n <= 1/0.111, M=2 needs n <= 1.1/0.011, M=3 needs n <= 1.11/0.001.
    EXPECT_EQ(choose_truncation(profile, 5), 1);
    EXPECT_EQ(choose_truncation(profile, 50), 2);
    EXPECT_EQ(choose_truncation(profile, 500), 3);
    EXPECT_EQ(choose_truncation(profile, 5000), 4);
}

TEST(ChooseTruncation, RejectsBadInputs) {
    EigenProfile flat = EigenProfile::polynomial(1.0, 2.0);
    flat.exponent = 1.0;
    EXPECT_THROW((void)choose_truncation(flat, 10), InvalidInput);
    EXPECT_THROW((void)choose_truncation(EigenProfile::polynomial(1.0, 2.0), 0), InvalidInput);
}

TEST(ChooseTruncation, AlwaysPositiveAndNondecreasing) {
    const std::vector<EigenProfile> profiles = {EigenProfile::polynomial(1.0, 1.5), EigenProfile::polynomial(2.0, 4.0),
                                                EigenProfile::exponential(1.0, 0.5),
                                                EigenProfile::explicit_values({1.0, 0.3, 0.2, 0.0})};
    for (const auto &profile : profiles) {
        std::int64_t prev = 1;
        for (std::int64_t n = 1; n <= 5000; n = n * 3 + 1) {
            const auto m = choose_truncation(profile, n);
            EXPECT_GE(m, prev);
            prev = m;
        }
    }
}

TEST(BetaFull, OnlyNormBoundWithoutStateTerm) {
    ConfidenceParams p = params_with(EigenProfile::polynomial(1.0, 2.0));
    p.c_f = 1.0;
    p.c_v = 0.0;
    EXPECT_DOUBLE_EQ(beta_full(p, 0, 0.0, 1), 1.0);
}

TEST(BetaFull, HandEvaluatedHeadTerm) {
    ConfidenceParams p = params_with(EigenProfile::explicit_values({1.0}));
    p.c_f = 0.7;
    p.c_v = 1.0;
    p.psi_max = 1.0;
    p.rho = 1.0;
    p.delta = std::exp(-1.0);
    EXPECT_NEAR(beta_full(p, 0, 0.0, 1), 1.7, 1e-15);
}

TEST(BetaFull, ClosedFormWithTail) {
    ConfidenceParams p = params_with(EigenProfile::polynomial(1.0, 2.0));
    p.c_f = 2.0;
    p.c_v = 3.0;
    p.psi_max = 1.5;
    p.rho = 0.5;
    p.delta = 0.05;
    const std::int64_t n = 40;
    const std::int64_t m = 7;
    const double logdet = 3.2;
    double head = 0.0;
    for (int i = 1; i <= m; ++i) { head += 1.0 / (i * i); }
    const double tail = 1.0 / static_cast<double>(m);
    const double scale = 3.0 * 1.5 / std::sqrt(0.5);
    const double want = 2.0 + scale * std::sqrt(head) * std::sqrt(std::log(m / 0.05) + logdet) +
                        2.0 * scale * std::sqrt(static_cast<double>(n) * tail);
    EXPECT_NEAR(beta_full(p, n, logdet, m), want, 1e-12);
}

TEST(BetaFull, RejectsNegativeLogdet) {
    const ConfidenceParams p;
    EXPECT_THROW((void)beta_full(p, 3, -0.1, 1), InvalidInput);
}

TEST(BetaFull, DoublingRegularizationDecreasesWidth) {
    ConfidenceParams p = params_with(EigenProfile::polynomial(1.0, 2.0));
    p.c_v = 2.0;
    const double before = beta_full(p, 100, 5.0, 10);
    p.rho *= 2.0;
    EXPECT_LT(beta_full(p, 100, 5.0, 10), before);
}

TEST(BetaFull, ZeroTailReducesToTwoTerms) {
    ConfidenceParams p = params_with(EigenProfile::explicit_values({0.6, 0.3}));
    p.c_f = 1.0;
    p.c_v = 2.0;
    const double want = 1.0 + 2.0 * std::sqrt(0.9) * std::sqrt(std::log(2.0 / p.delta) + 4.0);
    EXPECT_NEAR(beta_full(p, 1000, 4.0, 2), want, 1e-12);
}

TEST(BetaFullProperty, MonotoneInEveryArgument) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    std::uniform_int_distribution<std::int64_t> count(1, 5000);
    for (int trial = 0; trial < 200; ++trial) {
        ConfidenceParams p = params_with(EigenProfile::polynomial(unit(rng) + 0.5, 1.2 + 3.0 * unit(rng)));
        p.c_f = 5.0 * unit(rng);
        p.c_v = 5.0 * unit(rng);
        p.psi_max = 0.5 + unit(rng);
        p.rho = 0.1 + 5.0 * unit(rng);
        p.delta = unit(rng) * 0.5;
        const auto n = count(rng);
        const auto m = choose_truncation(p.state_profile, n);
        const double logdet = 20.0 * unit(rng);
        const double base = beta_full(p, n, logdet, m);

        EXPECT_GE(beta_full(p, n, logdet + 1.0, m), base);
        EXPECT_GE(beta_full(p, n + 10, logdet, m), base);
        auto q = p;
        q.c_f += 0.5;
        EXPECT_GE(beta_full(q, n, logdet, m), base);
        q = p;
        q.c_v += 0.5;
        EXPECT_GE(beta_full(q, n, logdet, m), base);
        q = p;
        q.psi_max += 0.5;
        EXPECT_GE(beta_full(q, n, logdet, m), base);
        q = p;
        q.rho *= 1.5;
        EXPECT_LE(beta_full(q, n, logdet, m), base);
        q = p;
        q.delta *= 1.5;
        EXPECT_LE(beta_full(q, n, logdet, m), base);
    }
}

TEST(BetaSimplified, ZeroBounds) {
    ConfidenceParams p;
    p.c_f = 0.0;
    p.c_v = 0.0;
    EXPECT_EQ(beta_simplified(p, 10, 3.0), 0.0);
}

TEST(BetaSimplified, UnitLogTerm) {
    ConfidenceParams p;
    p.c_f = 1.0;
    p.c_v = 1.0;
    p.rho = 1.0;
    p.delta = std::exp(-1.0);
    EXPECT_NEAR(beta_simplified(p, 1, 0.0), 2.0, 1e-15);
}

TEST(BetaSimplified, MonotoneInGainAndRejectsNegative) {
    ConfidenceParams p;
    double prev = beta_simplified(p, 10, 0.0);
    for (double gamma = 0.5; gamma < 50.0; gamma += 0.5) {
        const double b = beta_simplified(p, 10, gamma);
        EXPECT_GT(b, prev);
        prev = b;
    }
    EXPECT_THROW((void)beta_simplified(p, 10, -1.0), InvalidInput);
    EXPECT_THROW((void)beta_simplified(p, 0, 1.0), InvalidInput);
}

TEST(BetaForms, SimplifiedWithinConstantFactorOfFull) {
    ConfidenceParams p = params_with(EigenProfile::polynomial(1.0, 2.0));
    for (std::int64_t n : {10, 100, 1000}) {
        // Realized log det grows like sqrt(n) log n for p = 2.
        const double logdet = std::sqrt(static_cast<double>(n)) * std::log1p(static_cast<double>(n));
        const double full = beta_full(p, n, logdet, choose_truncation(p.state_profile, n));
        const double simple = beta_simplified(p, n, 0.5 * logdet);
        EXPECT_GE(simple / full, 0.1) << n;
        EXPECT_LE(simple / full, 10.0) << n;
    }
}

TEST(ConfidenceWidth, DispatchesOnMode) {
    ConfidenceParams p = params_with(EigenProfile::polynomial(1.0, 2.0));
    EXPECT_EQ(confidence_width(p, 16, 2.0), beta_full(p, 16, 2.0, 16));
    EXPECT_EQ(confidence_width(p, 0, 0.0), beta_full(p, 0, 0.0, 1));
    p.mode = BetaMode::Simplified;
    EXPECT_EQ(confidence_width(p, 16, 2.0), beta_simplified(p, 16, 1.0));
    EXPECT_EQ(confidence_width(p, 0, 0.0), beta_simplified(p, 1, 0.0));
}

TEST(ConfidenceParams, Validation) {
    ConfidenceParams p;
    EXPECT_NO_THROW(p.validate());
    p.delta = 1.0;
    EXPECT_THROW(p.validate(), InvalidInput);
    p.delta = 0.1;
    p.c_v = -1.0;
    EXPECT_THROW(p.validate(), InvalidInput);
    p.c_v = 1.0;
    p.rho = 0.0;
    EXPECT_THROW(p.validate(), InvalidInput);
}

}  // namespace
}  // namespace kucb
