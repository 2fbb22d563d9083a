#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ptme/error.hpp"
#include "ptme/objective.hpp"
#include "ptme/swarm.hpp"

using namespace ptme;

namespace {

class ConstantEvaluator final : public Evaluator {
public:
    explicit ConstantEvaluator(std::size_t d) : d_(d) {}
    std::size_t dim() const override { return d_; }
    std::vector<double> evaluate(const DesignMatrix& x) const override {
        return std::vector<double>(static_cast<std::size_t>(x.rows()), 5.0);
    }

private:
    std::size_t d_;
};

}  // namespace

TEST(PsoParams, Defaults) {
    const PsoParams p;
    EXPECT_EQ(p.swarm_size, 100u);
    EXPECT_EQ(p.max_evaluations, 30000u);
    EXPECT_EQ(p.phi_personal, 2.05);
    EXPECT_EQ(p.phi_global, 2.05);
    EXPECT_EQ(p.velocity_truncation, 0.5);
    EXPECT_DOUBLE_EQ(p.inertia(0), 0.5);
    EXPECT_DOUBLE_EQ(p.inertia(298), 0.1);
    PsoParams bad;
    bad.max_evaluations = 10;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Pso, SphereConvergence) {
    const auto space = DesignSpace::box(10, -5, 5);
    const SyntheticObjective sphere(SyntheticKind::sphere, 10, std::vector<double>(10, 1.0), space);
    const ObjectiveEvaluator eval(sphere);
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) hits += pso_run(eval, space, PsoParams{}, seed).best_fitness - 1.0 < 1e-2;
    EXPECT_GE(hits, 9);
}

TEST(Pso, Invariants) {
    const auto space = DesignSpace::traffic_default(12);
    const SyntheticObjective f(SyntheticKind::rastrigin, 12, std::vector<double>(12, 20.0), space);
    const ObjectiveEvaluator eval(f);
    PsoParams p;
    p.swarm_size = 20;
    p.max_evaluations = 2000;
    std::vector<DesignMatrix> positions;
    const auto res = pso_run(eval, space, p, 3, [&](std::size_t, const DesignMatrix& x, const DesignMatrix& v) {
        positions.push_back(x);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                const auto jj = static_cast<std::size_t>(j);
                ASSERT_GE(x(i, j), space.lower(jj));
                ASSERT_LE(x(i, j), space.upper(jj));
                ASSERT_LE(std::abs(v(i, j)) / (space.upper(jj) - space.lower(jj) + (space.is_free(jj) ? 0 : 1)),
                          p.velocity_truncation + 1e-12);
            }
    });
    for (std::size_t g = 1; g < res.trajectory.size(); ++g)
        EXPECT_LE(res.trajectory[g].best_fitness, res.trajectory[g - 1].best_fitness);
    for (double v : res.best_position) EXPECT_EQ(v, std::round(v));
    EXPECT_TRUE(space.contains(res.best_position));
    EXPECT_EQ(res.evaluations, 2000u);
    EXPECT_EQ(positions.size(), 100u);

    const auto again = pso_run(eval, space, p, 3);
    EXPECT_EQ(again.best_position, res.best_position);
    ASSERT_EQ(again.trajectory.size(), res.trajectory.size());
    for (std::size_t g = 0; g < res.trajectory.size(); ++g)
        EXPECT_EQ(again.trajectory[g].best_fitness, res.trajectory[g].best_fitness);
}

TEST(Pso, BudgetOfOneGeneration) {
    const auto space = DesignSpace::box(3, 0, 1);
    const SyntheticObjective f(SyntheticKind::linear, 3, {}, space);
    const ObjectiveEvaluator eval(f);
    PsoParams p;
    p.swarm_size = 10;
    p.max_evaluations = 10;
    std::vector<double> initial;
    const auto res = pso_run(eval, space, p, 4, [&](std::size_t g, const DesignMatrix& x, const DesignMatrix&) {
        if (g == 0) initial = eval.evaluate(x);
    });
    EXPECT_EQ(res.trajectory.size(), 1u);
    EXPECT_EQ(res.best_fitness, *std::min_element(initial.begin(), initial.end()));
}

TEST(Pso, StationaryAttractor) {
    // A lone particle sits at x = p = b, so v <- w v keeps it at rest.
    const auto space = DesignSpace::box(2, 0, 1);
    const SyntheticObjective f(SyntheticKind::sphere, 2, {0.5, 0.5}, space);
    const ObjectiveEvaluator eval(f);
    PsoParams p;
    p.swarm_size = 1;
    p.max_evaluations = 5;
    pso_run(eval, space, p, 9, [&](std::size_t, const DesignMatrix&, const DesignMatrix& v) {
        EXPECT_TRUE(v.isZero());
    });
}

TEST(Sapso, OracleSurrogateMatchesPso) {
    const auto space = DesignSpace::box(6, -5, 5);
    const SyntheticObjective f(SyntheticKind::sphere, 6, std::vector<double>(6, 0.5), space);
    const ObjectiveEvaluator eval(f);
    PsoParams p;
    p.max_evaluations = 5000;
    const auto pso = pso_run(eval, space, p, 12);
    const auto sapso = sapso_run(eval, eval, space, p, 12);
    ASSERT_EQ(pso.trajectory.size(), sapso.search.trajectory.size());
    for (std::size_t g = 0; g < pso.trajectory.size(); ++g)
        EXPECT_EQ(pso.trajectory[g].best_fitness, sapso.search.trajectory[g].best_fitness);
    EXPECT_EQ(sapso.real_evaluations, 1u);
    EXPECT_EQ(sapso.surrogate_evaluations, p.max_evaluations);
    EXPECT_EQ(sapso.real_value, pso.best_fitness);
}

TEST(Sapso, ConstantSurrogateNeverImproves) {
    const auto space = DesignSpace::box(4, 0, 1);
    const SyntheticObjective f(SyntheticKind::linear, 4, {}, space);
    const ObjectiveEvaluator real(f);
    const ConstantEvaluator flat(4);
    PsoParams p;
    p.swarm_size = 10;
    p.max_evaluations = 200;
    const auto res = sapso_run(flat, real, space, p, 2);
    for (const auto& t : res.search.trajectory) EXPECT_EQ(t.best_fitness, 5.0);
    EXPECT_EQ(res.surrogate_value, 5.0);
    EXPECT_EQ(res.real_value, f.evaluate(res.search.best_position));
    EXPECT_EQ(res.real_evaluations, 1u);
}

TEST(Sapso, DimensionMismatch) {
    const auto space = DesignSpace::box(4, 0, 1);
    const MlpModel m = build(MlpSpec::for_dim(3), 1);
    const SyntheticObjective f(SyntheticKind::linear, 4, {}, space);
    EXPECT_THROW(sapso_run(m, f, space, PsoParams{}, 1), DimensionError);
}

TEST(Compare, TableAndTests) {
    const RunGroup a{"a", {1, 2, 3, 4, 5}}, b{"b", {1, 2, 3, 4, 5}}, c{"c", {10, 11, 12, 13, 14}};
    const auto t = compare_runs({a, b, c});
    ASSERT_EQ(t.groups.size(), 3u);
    EXPECT_EQ(t.groups[0].median, 3);
    EXPECT_EQ(t.groups[0].q1, 2);
    ASSERT_EQ(t.tests.size(), 3u);
    EXPECT_EQ(t.tests[0].p_value, 1.0);
    EXPECT_TRUE(t.tests[1].significant);
    EXPECT_THROW(compare_runs({a}), ConfigError);
    EXPECT_THROW(compare_runs({a, RunGroup{"empty", {}}}), ConfigError);
    std::stringstream ss;
    write_comparison_csv(ss, t);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "group,n,min,q1,median,q3,max,mean");
}

TEST(Trajectory, Csv) {
    std::stringstream ss;
    write_trajectory_csv(ss, {{0, 100, 2.5}, {1, 200, 1.25}});
    EXPECT_EQ(ss.str(), "generation,FE,best_fitness\n0,100,2.5\n1,200,1.25\n");
}
