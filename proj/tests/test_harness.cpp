#include <gtest/gtest.h>

#include <sstream>

#include "ptme/error.hpp"
#include "ptme/harness.hpp"

using namespace ptme;

namespace {

StudyConfig tiny() {
    StudyConfig c;
    c.methods = {SamplingMethod::urs, SamplingMethod::lhs};
    c.sizes = {20, 40};
    c.n_test = 10;
    c.trials = 2;
    c.train.epochs = 3;
    return c;
}

}  // namespace

TEST(StudyConfig, Validation) {
    StudyConfig c = tiny();
    EXPECT_NO_THROW(c.validate());
    c.sizes = {40, 20};
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny();
    c.trials = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny();
    c.inference_batch = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    const auto p = StudyConfig::paper_scale();
    EXPECT_EQ(p.trials, 10u);
    EXPECT_EQ(p.n_test, 10000u);
    EXPECT_EQ(p.sizes.front(), 1000u);
}

TEST(Study, StructuralCounts) {
    const auto space = DesignSpace::box(3, 0, 1);
    const SyntheticObjective f(SyntheticKind::linear, 3, {}, space);
    StudyConfig c;
    c.methods = {SamplingMethod::urs};
    c.sizes = {10};
    c.n_test = 10;
    c.trials = 1;
    Meter meter;
    const auto r = run_study(c, f, space, meter);
    ASSERT_EQ(r.cells.size(), 1u);
    ASSERT_EQ(r.cells[0].trials.size(), 1u);
    const auto& t = r.cells[0].trials[0];
    EXPECT_EQ(t.inference.size(), 10u);
    EXPECT_EQ(t.predictions.size(), 10u);
    EXPECT_TRUE(std::isfinite(t.precision.mape));
    EXPECT_TRUE(std::isfinite(t.train_mse));
    const auto rows = r.raw_rows();
    EXPECT_EQ(rows.size(), 11u);
}

TEST(Study, BatchedInferenceCounts) {
    const auto space = DesignSpace::box(2, 0, 1);
    const SyntheticObjective f(SyntheticKind::sphere, 2, {}, space);
    StudyConfig c = tiny();
    c.inference_batch = 3;
    Meter meter;
    const auto r = run_study(c, f, space, meter);
    EXPECT_EQ(r.cells.size(), 4u);
    for (const auto& cell : r.cells) {
        EXPECT_EQ(cell.trials.size(), 2u);
        for (const auto& t : cell.trials) EXPECT_EQ(t.inference.size(), 4u);  // ceil(10 / 3)
    }
    std::size_t items = 0;
    for (const auto& row : r.raw_rows())
        if (row.phase == "infer" && row.method == "urs" && row.size == 20 && row.trial == 0) items += row.items;
    EXPECT_EQ(items, 10u);
}

TEST(Study, DeterministicPredictionsAndSharedTestSet) {
    const auto space = DesignSpace::traffic_default(6);
    const SyntheticObjective f(SyntheticKind::sphere, 6, std::vector<double>(6, 30), space);
    Meter meter;
    const auto a = run_study(tiny(), f, space, meter);
    const auto b = run_study(tiny(), f, space, meter);
    EXPECT_EQ(a.test_x, b.test_x);
    for (std::size_t i = 0; i < a.cells.size(); ++i)
        for (std::size_t t = 0; t < a.cells[i].trials.size(); ++t)
            EXPECT_EQ(a.cells[i].trials[t].predictions, b.cells[i].trials[t].predictions);
    EXPECT_EQ(a.tau_mismatches, 0u);
}

TEST(Study, RejectsDimensionMismatch) {
    const SyntheticObjective f(SyntheticKind::linear, 3, {}, DesignSpace::box(3, 0, 1));
    Meter meter;
    EXPECT_THROW(run_study(tiny(), f, DesignSpace::box(2, 0, 1), meter), DimensionError);
}

TEST(Summary, FlagsAndNormalization) {
    const auto space = DesignSpace::box(2, 0, 1);
    const SyntheticObjective f(SyntheticKind::sphere, 2, {}, space);
    Meter meter;
    const auto report = run_study(tiny(), f, space, meter);
    const auto summary = summarize_rows(report.raw_rows());
    bool saw_energy = false;
    int best_flags = 0;
    for (const auto& s : summary) {
        saw_energy |= s.metric == "cpu_energy_j";
        best_flags += s.best_across_sizes;
        EXPECT_TRUE(s.p_value_vs_other.has_value());
    }
    EXPECT_EQ(saw_energy, report.energy_available);
    EXPECT_GT(best_flags, 0);
    for (const auto& n : normalize_report(summary)) {
        if (n.size == 20) {
            EXPECT_EQ(n.normalized, 1.0);
            EXPECT_EQ(n.ideal_linear, 1.0);
        } else {
            EXPECT_EQ(n.ideal_linear, 2.0);
        }
    }
}

TEST(Normalize, LinearMetricAndMissingBaseline) {
    std::vector<SummaryRow> s;
    for (std::size_t size : {100, 1000, 10000}) {
        SummaryRow r;
        r.method = "lhs";
        r.size = size;
        r.phase = "train";
        r.metric = "wall_time_s";
        r.mean = 0.5 * static_cast<double>(size);
        s.push_back(r);
    }
    for (const auto& n : normalize_report(s)) EXPECT_DOUBLE_EQ(n.normalized, n.ideal_linear);
    s.erase(s.begin());
    SummaryRow other = s.front();
    other.method = "urs";
    other.size = 100;
    s.push_back(other);
    EXPECT_THROW(normalize_report(s), ConfigError);
}

TEST(RawCsv, RoundTrip) {
    const auto space = DesignSpace::box(2, 0, 1);
    const SyntheticObjective f(SyntheticKind::linear, 2, {}, space);
    Meter meter;
    const auto rows = run_study(tiny(), f, space, meter).raw_rows();
    std::stringstream ss;
    write_raw_csv(ss, rows);
    const auto back = read_raw_csv(ss);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].phase, rows[i].phase);
        EXPECT_EQ(back[i].record.wall_time_s, rows[i].record.wall_time_s);
        EXPECT_EQ(back[i].precision.has_value(), rows[i].precision.has_value());
        if (rows[i].precision) EXPECT_EQ(back[i].precision->tau_a, rows[i].precision->tau_a);
    }
    std::stringstream bad("nope\n");
    EXPECT_THROW(read_raw_csv(bad), ConfigError);
}

TEST(Manifest, OrderedOverwrite) {
    Manifest m;
    m.set("b", 1);
    m.set("a", 2.5);
    m.set("b", true);
    std::stringstream ss;
    m.write(ss);
    EXPECT_EQ(ss.str(), "b=true\na=2.5\n");
}
