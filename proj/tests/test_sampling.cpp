#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ptme/design_space.hpp"
#include "ptme/error.hpp"
#include "ptme/rng.hpp"
#include "ptme/statistics.hpp"

using namespace ptme;

namespace {

// Stratum index of v in [lo, hi] split into n equal cells; last cell closed.
std::size_t stratum(double v, double lo, double hi, std::size_t n) {
    const double t = (v - lo) / (hi - lo) * static_cast<double>(n);
    return std::min(n - 1, static_cast<std::size_t>(std::floor(t)));
}

bool lhs_occupancy_is_one(const DesignMatrix& m, const DesignSpace& s) {
    const auto n = static_cast<std::size_t>(m.rows());
    for (std::size_t j = 0; j < s.dim(); ++j) {
        if (!s.is_free(j)) continue;
        std::vector<int> hits(n, 0);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            ++hits[stratum(m(i, static_cast<Eigen::Index>(j)), s.sampling_lower(j), s.sampling_upper(j), n)];
        if (std::any_of(hits.begin(), hits.end(), [](int h) { return h != 1; })) return false;
    }
    return true;
}

}  // namespace

TEST(DesignSpace, RejectsBadConfigurations) {
    EXPECT_THROW(DesignSpace({}, {}, {}, false), ConfigError);
    EXPECT_THROW(DesignSpace({1.0}, {0.0}, {std::nullopt}, false), ConfigError);
    EXPECT_THROW(DesignSpace({0.0, 0.0}, {1.0}, {std::nullopt}, false), ConfigError);
    EXPECT_THROW(DesignSpace({0.0}, {NAN}, {std::nullopt}, false), ConfigError);
}

TEST(DesignSpace, TrafficDefaultMask) {
    const auto s = DesignSpace::traffic_default(6);
    EXPECT_TRUE(s.integer_valued());
    EXPECT_EQ(s.free_count(), 3u);
    for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_EQ(s.is_free(j), j % 2 == 0);
        if (s.is_free(j)) {
            EXPECT_EQ(s.lower(j), 4.0);
            EXPECT_EQ(s.upper(j), 60.0);
        } else {
            EXPECT_EQ(s.fixed(j), 4.0);
        }
    }
}

TEST(Sampling, RejectsZeroSamples) {
    const auto s = DesignSpace::box(2, 0.0, 1.0);
    EXPECT_THROW(uniform_random_sample(s, 0, 1), ConfigError);
    EXPECT_THROW(latin_hypercube_sample(s, 0, 1), ConfigError);
}

TEST(Sampling, AllFixedSpaceGivesConstantRows) {
    const auto s = DesignSpace::box(3, 4.0, 4.0, true);
    for (auto m : {SamplingMethod::urs, SamplingMethod::lhs}) {
        const DesignMatrix x = sample_design(s, m, 3, 9);
        ASSERT_EQ(x.rows(), 3);
        EXPECT_TRUE((x.array() == 4.0).all());
    }
}

TEST(Sampling, UniformColumnMeans) {
    const auto s = DesignSpace::box(2, 4.0, 60.0);
    const DesignMatrix x = uniform_random_sample(s, 10000, 42);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double mean = x.col(j).mean();
        EXPECT_GE(mean, 28.0);
        EXPECT_LE(mean, 36.0);
    }
}

TEST(Sampling, DeterministicPerSeed) {
    const auto s = DesignSpace::traffic_default(10);
    for (auto m : {SamplingMethod::urs, SamplingMethod::lhs}) {
        EXPECT_EQ(sample_design(s, m, 50, 7), sample_design(s, m, 50, 7));
        EXPECT_NE(sample_design(s, m, 50, 7), sample_design(s, m, 50, 8));
    }
}

TEST(Sampling, SingleStratumSpansDomain) {
    const auto s = DesignSpace::box(1, 4.0, 60.0);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const double v = latin_hypercube_sample(s, 1, seed)(0, 0);
        EXPECT_GT(v, 4.0);
        EXPECT_LE(v, 60.0);
    }
}

TEST(Sampling, FourStrataOnUnitInterval) {
    const auto s = DesignSpace::box(1, 0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        DesignMatrix x = latin_hypercube_sample(s, 4, seed);
        std::vector<double> col(x.data(), x.data() + 4);
        std::sort(col.begin(), col.end());
        for (int k = 0; k < 4; ++k) {
            EXPECT_GE(col[k], 0.25 * k);
            EXPECT_LT(col[k], 0.25 * (k + 1));
        }
    }
}

TEST(Sampling, LhsOccupancyProperty) {
    Rng rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 1 + rng.below(300);
        const std::size_t d = 1 + rng.below(8);
        const auto s = DesignSpace::box(d, -rng.uniform(0, 10), rng.uniform(1, 10));
        EXPECT_TRUE(lhs_occupancy_is_one(latin_hypercube_sample(s, n, rng.next()), s));
    }
}

TEST(Sampling, LhsOccupancyLarge) {
    const auto s = DesignSpace::box(190, 4.0, 60.0);
    EXPECT_TRUE(lhs_occupancy_is_one(latin_hypercube_sample(s, 1000, 11), s));
}

TEST(Sampling, BoundsRespected) {
    Rng rng(5);
    const auto s = DesignSpace::traffic_default(20);
    for (int rep = 0; rep < 20; ++rep) {
        for (auto m : {SamplingMethod::urs, SamplingMethod::lhs}) {
            const DesignMatrix x = sample_design(s, m, 1 + rng.below(200), rng.next());
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                ASSERT_TRUE(s.contains(row_span(x, i)));
                for (Eigen::Index j = 0; j < x.cols(); ++j) ASSERT_EQ(x(i, j), std::round(x(i, j)));
            }
        }
    }
}

TEST(Quantize, RoundsAndClamps) {
    const auto s = DesignSpace::box(2, 4.0, 60.0, true);
    DesignMatrix x(1, 2);
    x << 59.7, 3.2;
    const DesignMatrix q = quantize(x, s);
    EXPECT_EQ(q(0, 0), 60.0);
    EXPECT_EQ(q(0, 1), 4.0);
}

TEST(Quantize, FixedEntriesUntouched) {
    const auto s = DesignSpace::traffic_default(2);
    DesignMatrix x(1, 2);
    x << 10.4, 4.0;
    const DesignMatrix q = quantize(x, s);
    EXPECT_EQ(q(0, 0), 10.0);
    EXPECT_EQ(q(0, 1), 4.0);
}

TEST(Quantize, Lhs57IsBijectionOntoGrid) {
    const auto s = DesignSpace::traffic_default(10);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DesignMatrix x = sample_design(s, SamplingMethod::lhs, 57, seed);
        for (std::size_t j = 0; j < 10; j += 2) {
            std::set<int> seen;
            for (Eigen::Index i = 0; i < 57; ++i) seen.insert(static_cast<int>(x(i, static_cast<Eigen::Index>(j))));
            ASSERT_EQ(seen.size(), 57u);
            EXPECT_EQ(*seen.begin(), 4);
            EXPECT_EQ(*seen.rbegin(), 60);
        }
        EXPECT_NEAR(average_entropy(x, s), std::log2(57.0), 1e-12);
    }
}

TEST(Sampling, LhsEntropyAtLeastUrs) {
    const auto s = DesignSpace::traffic_default(40);
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double l = average_entropy(sample_design(s, SamplingMethod::lhs, 300, seed), s);
        const double u = average_entropy(sample_design(s, SamplingMethod::urs, 300, seed), s);
        wins += l >= u;
    }
    EXPECT_GE(wins, 8);
}

TEST(DesignCsv, RoundTrip) {
    const auto s = DesignSpace::box(3, 0.0, 1.0);
    const DesignMatrix x = uniform_random_sample(s, 5, 1);
    std::stringstream ss;
    write_design_csv(ss, x);
    EXPECT_EQ(ss.str().substr(0, 9), "x0,x1,x2\n");
    EXPECT_EQ(read_design_csv(ss), x);
}

TEST(DesignCsv, ReportsLineNumber) {
    std::stringstream ss("x0,x1\n1,2\n3,oops\n");
    try {
        read_design_csv(ss);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(SamplingMethod, Names) {
    EXPECT_EQ(parse_sampling_method("lhs"), SamplingMethod::lhs);
    EXPECT_EQ(parse_sampling_method("urs"), SamplingMethod::urs);
    EXPECT_THROW(parse_sampling_method("sobol"), ConfigError);
    EXPECT_EQ(to_string(SamplingMethod::lhs), "lhs");
}
