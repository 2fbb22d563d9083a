#include <gtest/gtest.h>

#include <cmath>

#include "ptme/error.hpp"
#include "ptme/metrics.hpp"
#include "ptme/rng.hpp"
#include "tau_oracle.hpp"

using namespace ptme;

TEST(Mape, HandExample) {
    const std::vector<double> y{1, 2, 4}, p{1.1, 1.8, 4.0};
    EXPECT_NEAR(mape(y, p), 20.0 / 3.0, 1e-12);
    EXPECT_EQ(mape(y, y), 0.0);
}

TEST(Mape, Guards) {
    const std::vector<double> one{1};
    EXPECT_THROW(mape(one, one), DimensionError);
    EXPECT_THROW(mape(std::vector<double>{0, 1}, std::vector<double>{1, 1}), DomainError);
    EXPECT_THROW(mape(std::vector<double>{1, 2}, std::vector<double>{1, 1, 1}), DimensionError);
}

TEST(Mape, ScaleInvariant) {
    const std::vector<double> y{1, 2, 4, 7}, p{1.5, 1.9, 3.0, 8.0};
    std::vector<double> y3, p3;
    for (std::size_t i = 0; i < y.size(); ++i) {
        y3.push_back(3 * y[i]);
        p3.push_back(3 * p[i]);
    }
    EXPECT_NEAR(mape(y, p), mape(y3, p3), 1e-12);
}

TEST(Rmse, HandExample) {
    EXPECT_NEAR(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}), std::sqrt(12.5), 1e-12);
    EXPECT_NEAR(rmse(std::vector<double>{0, 0}, std::vector<double>{-6, 8}),
                2 * std::sqrt(12.5), 1e-12);
}

TEST(Kendall, HandExamples) {
    EXPECT_NEAR(kendall_tau_a(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 1.0 / 3.0, 1e-15);
    EXPECT_EQ(kendall_tau_a(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 45}), 1.0);
    EXPECT_EQ(kendall_tau_a(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}), -1.0);
    EXPECT_NEAR(*kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 2}),
                2.0 / std::sqrt(6.0), 1e-12);
}

TEST(Kendall, TauBDegenerateLists) {
    // One list entirely tied: numerator 0, tau-b reported as 0.
    EXPECT_EQ(kendall_tau_b(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}), 0.0);
    EXPECT_FALSE(kendall_tau_b(std::vector<double>{2, 2}, std::vector<double>{5, 5}).has_value());
}

TEST(Kendall, TieFreeTauAEqualsTauB) {
    Rng rng(1);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.below(100);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.uniform01();
            b[i] = rng.uniform01();
        }
        EXPECT_EQ(kendall_tau_a(a, b), *kendall_tau_b(a, b));
    }
}

TEST(Kendall, MatchesBruteForce) {
    Rng rng(2);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 2 + rng.below(120);
        const std::uint64_t levels = 1 + rng.below(20);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.below(levels));
            b[i] = static_cast<double>(rng.below(levels));
        }
        const auto o = oracle::tau(a, b);
        const auto c = kendall_pair_counts(a, b);
        EXPECT_EQ(c.concordant, o.concordant);
        EXPECT_EQ(c.discordant, o.discordant);
        EXPECT_EQ(kendall_tau_a(a, b), o.tau_a);
        EXPECT_EQ(kendall_tau_b(a, b), o.tau_b);
    }
}

TEST(Kendall, InvariantUnderMonotoneTransformAndPermutation) {
    Rng rng(4);
    std::vector<double> a(60), b(60);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<double>(rng.below(15));
        b[i] = rng.uniform(-1, 1);
    }
    std::vector<double> ea, cb;
    for (double v : a) ea.push_back(std::exp(v));
    for (double v : b) cb.push_back(v * v * v + 2);
    EXPECT_EQ(kendall_tau_a(a, b), kendall_tau_a(ea, cb));
    EXPECT_EQ(kendall_tau_b(a, b), kendall_tau_b(ea, cb));

    std::vector<std::size_t> perm(a.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<double> pa, pb;
    for (auto i : perm) {
        pa.push_back(a[i]);
        pb.push_back(b[i]);
    }
    EXPECT_EQ(kendall_tau_a(a, b), kendall_tau_a(pa, pb));
    EXPECT_NEAR(mape(std::vector<double>(ea), cb), mape(std::vector<double>(ea), cb), 0);
}
