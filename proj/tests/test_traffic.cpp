#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ptme/error.hpp"
#include "ptme/objective.hpp"
#include "ptme/rng.hpp"
#include "ptme/traffic.hpp"

using namespace ptme;

namespace {

// 0 -> 1 -> 2 -> 3, all links 1 s, no signals.
TrafficInstance chain(int horizon) {
    TrafficInstance t;
    t.name = "chain";
    t.node_count = 4;
    t.links = {{0, 1, 1, 2}, {1, 2, 1, 2}, {2, 3, 1, 2}};
    t.vehicles = {{0, {0, 1, 2}}};
    t.simulation_time = horizon;
    return t;
}

// Two-link path through one signalised node with a red and a green phase.
TrafficInstance signalised(int horizon) {
    TrafficInstance t;
    t.name = "signal";
    t.node_count = 3;
    t.links = {{0, 1, 1, 4}, {1, 2, 1, 4}};
    Intersection x;
    x.node = 1;
    x.incoming = {0};
    x.phases = {Phase{"r"}, Phase{"G"}};
    t.intersections = {x};
    t.vehicles = {{0, {0, 1}}};
    t.simulation_time = horizon;
    return t;
}

TrafficPlan random_plan(std::size_t n, Rng& rng) {
    TrafficPlan p;
    for (std::size_t i = 0; i < n; ++i) p.durations.push_back(4 + static_cast<int>(rng.below(57)));
    return p;
}

}  // namespace

TEST(GreenRed, HandExample) {
    TrafficInstance t;
    t.node_count = 4;
    t.links = {{0, 1, 1, 1}, {2, 1, 1, 1}, {3, 1, 1, 1}};
    Intersection x;
    x.node = 1;
    x.incoming = {0, 1, 2};
    x.phases = {Phase{"GGr"}, Phase{"Grr"}};
    t.intersections = {x};
    const TrafficPlan plan{{10, 5}};
    EXPECT_DOUBLE_EQ(green_red_ratio(t, plan).value, 22.5);
    const TrafficPlan twice{{20, 10}};
    EXPECT_DOUBLE_EQ(green_red_ratio(t, twice).value, 45.0);
}

TEST(GreenRed, NoGreenAndZeroRed) {
    TrafficInstance t;
    t.node_count = 2;
    t.links = {{0, 1, 1, 1}};
    Intersection x;
    x.node = 1;
    x.incoming = {0};
    x.phases = {Phase{"r"}, Phase{"G"}};
    t.intersections = {x};
    const auto p = green_red_ratio(t, TrafficPlan{{7, 9}});
    EXPECT_EQ(p.value, 0.0);
    EXPECT_EQ(p.zero_red_phases, 1u);
    EXPECT_THROW(green_red_ratio(t, TrafficPlan{{7}}), DimensionError);
}

TEST(Objective, HandExample) {
    SimOutcome o{1000, 500, 10, 2};
    const auto f = combine_objective(o, 22.5, 100);
    EXPECT_NEAR(f.value, 1700.0 / 122.5, 1e-9);
    EXPECT_FALSE(f.unbounded);
}

TEST(Objective, MonotoneInGreenRedAndEmptyDemand) {
    SimOutcome o{300, 40, 5, 0};
    EXPECT_GT(combine_objective(o, 1.0, 100).value, combine_objective(o, 2.0, 100).value);
    EXPECT_EQ(combine_objective(SimOutcome{}, 3.0, 100).value, 0.0);
    const auto inf = combine_objective(SimOutcome{0, 0, 0, 3}, 0.0, 100);
    EXPECT_TRUE(inf.unbounded);
    EXPECT_TRUE(std::isinf(inf.value));
}

TEST(Simulate, EmptyDemand) {
    auto t = chain(50);
    t.vehicles.clear();
    const auto o = simulate(t, TrafficPlan{});
    EXPECT_EQ(o.travel_time, 0);
    EXPECT_EQ(o.waiting_time, 0);
    EXPECT_EQ(o.delivered, 0);
    EXPECT_EQ(o.undelivered, 0);
}

TEST(Simulate, AlwaysGreenChain) {
    const auto o = simulate(chain(20), TrafficPlan{});
    EXPECT_EQ(o.travel_time, 3);
    EXPECT_EQ(o.waiting_time, 0);
    EXPECT_EQ(o.delivered, 1);
    EXPECT_EQ(o.undelivered, 0);
}

TEST(Simulate, ZeroHorizon) {
    const auto o = simulate(chain(0), TrafficPlan{});
    EXPECT_EQ(o.undelivered, 1);
    EXPECT_EQ(o.delivered, 0);
}

TEST(Simulate, RedSignalAccruesWaiting) {
    // Red for 5 s: queued at the stop line from t=1, released at t=5.
    const auto o = simulate(signalised(30), TrafficPlan{{5, 5}});
    EXPECT_EQ(o.delivered, 1);
    EXPECT_GT(o.waiting_time, 0);
    EXPECT_EQ(o.travel_time, 6);
    EXPECT_EQ(o.waiting_time, 4);
    const auto fast = simulate(signalised(30), TrafficPlan{{1, 5}});
    EXPECT_LT(fast.travel_time, o.travel_time);
}

TEST(Simulate, RejectsNonPositiveDurations) {
    EXPECT_THROW(simulate(signalised(30), TrafficPlan{{0, 5}}), DomainError);
}

TEST(Presets, PhaseCountsMatchTargets) {
    const std::vector<std::pair<std::string, std::size_t>> expected{
        {"malaga-like", 190}, {"stockholm-like", 370}, {"paris-like", 378}};
    for (const auto& [name, dim] : expected) {
        const auto inst = make_preset(name);
        EXPECT_EQ(inst.phase_count(), dim) << name;
        EXPECT_NO_THROW(inst.validate());
    }
    EXPECT_THROW(make_preset("lisbon-like"), ConfigError);
}

TEST(Presets, ConservationAndPositivity) {
    Rng rng(17);
    for (const auto& name : preset_names()) {
        const auto inst = make_preset(name);
        const auto total = static_cast<std::int64_t>(inst.vehicles.size());
        for (int rep = 0; rep < 25; ++rep) {
            const auto plan = random_plan(inst.phase_count(), rng);
            const auto o = simulate(inst, plan);
            ASSERT_EQ(o.delivered + o.undelivered, total);
            const auto f = objective(inst, plan);
            ASSERT_TRUE(std::isfinite(f.value));
            ASSERT_GT(f.value, 0.0);
        }
    }
}

TEST(Simulate, LongerHorizonNeverDeliversFewer) {
    Rng rng(3);
    auto inst = make_preset("malaga-like");
    const auto plan = random_plan(inst.phase_count(), rng);
    std::int64_t prev = -1;
    for (int horizon : {100, 300, 500, 700, 900}) {
        inst.simulation_time = horizon;
        const auto o = simulate(inst, plan);
        EXPECT_GE(o.delivered, prev);
        prev = o.delivered;
    }
}

TEST(Simulate, Deterministic) {
    Rng rng(8);
    const auto inst = make_preset("paris-like");
    const auto plan = random_plan(inst.phase_count(), rng);
    const auto a = simulate(inst, plan), b = simulate(inst, plan);
    EXPECT_EQ(a.travel_time, b.travel_time);
    EXPECT_EQ(a.waiting_time, b.waiting_time);
    EXPECT_EQ(a.delivered, b.delivered);
}

TEST(InstanceFile, RoundTrip) {
    const auto inst = make_preset("malaga-like");
    std::stringstream ss;
    write_instance(ss, inst);
    const auto back = read_instance(ss);
    EXPECT_EQ(back.name, inst.name);
    EXPECT_EQ(back.phase_count(), inst.phase_count());
    EXPECT_EQ(back.vehicles.size(), inst.vehicles.size());
    Rng rng(2);
    const auto plan = random_plan(inst.phase_count(), rng);
    EXPECT_EQ(objective(inst, plan).value, objective(back, plan).value);
}

TEST(InstanceFile, ErrorsCarryLineNumbers) {
    std::stringstream ss("format ptme-traffic 1\nsimulation_time 10\nnodes 2\nlink 0 1 x 1\n");
    try {
        read_instance(ss);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
    std::stringstream missing("simulation_time 10\n");
    EXPECT_THROW(read_instance(missing), ConfigError);
}

TEST(InstanceFile, ShippedPresetsMatchGenerator) {
    for (const auto& name : preset_names()) {
        const std::string path = std::string(PTME_DATA_DIR) + "/presets/" + name + ".txt";
        std::ifstream in(path);
        ASSERT_TRUE(in) << path;
        std::stringstream shipped, generated;
        shipped << in.rdbuf();
        write_instance(generated, make_preset(name));
        EXPECT_EQ(shipped.str(), generated.str()) << name;
    }
}

TEST(TrafficObjective, RoundsToPlan) {
    const TrafficObjective f(make_preset("malaga-like"));
    EXPECT_EQ(f.dim(), 190u);
    std::vector<double> x(190, 10.0), y(190, 10.2);
    EXPECT_EQ(f.evaluate(x), f.evaluate(y));
    EXPECT_EQ(f.default_space().free_count(), 95u);
}

TEST(Synthetic, ClosedForms) {
    const std::vector<double> c{0.5, -1.0};
    const SyntheticObjective sphere(SyntheticKind::sphere, 2, c, DesignSpace::box(2, -5, 5));
    EXPECT_EQ(sphere.evaluate(c), 1.0);
    const std::vector<double> a{1.5, 0.0}, b{-0.5, -2.0};
    EXPECT_EQ(sphere.evaluate(a), sphere.evaluate(b));
    const std::vector<double> zero{0, 0};
    EXPECT_EQ(synthetic_objective("linear", zero), 1.0);
    EXPECT_EQ(synthetic_objective("rastrigin-like", zero), 1.0);
    EXPECT_THROW(synthetic_objective("ackley", zero), ConfigError);
}
