#include <gtest/gtest.h>

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ptme/error.hpp"
#include "ptme/rng.hpp"
#include "ptme/telemetry.hpp"

using namespace ptme;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path root;
    Fixture() {
        root = fs::temp_directory_path() / ("ptme_rapl_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(root);
    }
    ~Fixture() { fs::remove_all(root); }
    void domain(const std::string& dir, const std::string& name, std::uint64_t value, std::uint64_t range) {
        fs::create_directories(root / dir);
        std::ofstream(root / dir / "name") << name << '\n';
        set(dir, value);
        std::ofstream(root / dir / "max_energy_range_uj") << range << '\n';
    }
    void set(const std::string& dir, std::uint64_t value) { std::ofstream(root / dir / "energy_uj") << value << '\n'; }
};

}  // namespace

TEST(Counter, WrapArithmetic) {
    EXPECT_EQ(counter_delta(5'000'000, 2'000'000, 10'000'000), 7'000'000u);
    EXPECT_EQ(counter_delta(100, 300, 1000), 200u);
}

TEST(Counter, DeltasNeverNegativeAcrossWraps) {
    Rng rng(6);
    const std::uint64_t range = 1'000'000;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::uint64_t prev = rng.below(range);
        const std::uint64_t step = rng.below(range);
        const std::uint64_t cur = (prev + step) % range;
        const std::uint64_t d = counter_delta(prev, cur, range);
        EXPECT_EQ(d, step);
    }
}

TEST(Probe, FixtureSnapshotAndUnits) {
    Fixture fx;
    fx.domain("intel-rapl:0", "package-0", 1'000'000, 10'000'000);
    fx.domain("intel-rapl:0:0", "dram", 0, 10'000'000);
    EnergyProbe probe(fx.root.string());
    ASSERT_TRUE(probe.available());
    const auto a = probe.read();
    ASSERT_TRUE(a);
    fx.set("intel-rapl:0", 2'000'000);
    fx.set("intel-rapl:0:0", 500'000);
    const auto b = probe.read();
    const auto e = probe.delta(*a, *b);
    EXPECT_DOUBLE_EQ(e.cpu_j, 1.0);
    EXPECT_DOUBLE_EQ(e.dram_j, 0.5);
    EXPECT_TRUE(e.has_dram);
}

TEST(Probe, WrapInFixture) {
    Fixture fx;
    fx.domain("intel-rapl:0", "package-0", 5'000'000, 10'000'000);
    EnergyProbe probe(fx.root.string());
    const auto a = probe.read();
    fx.set("intel-rapl:0", 2'000'000);
    EXPECT_DOUBLE_EQ(probe.delta(*a, *probe.read()).cpu_j, 7.0);
}

TEST(Probe, SumsPackagesAcrossSockets) {
    Fixture fx;
    fx.domain("intel-rapl:0", "package-0", 0, 100'000'000);
    fx.domain("intel-rapl:1", "package-1", 0, 100'000'000);
    EnergyProbe probe(fx.root.string());
    const auto a = probe.read();
    fx.set("intel-rapl:0", 1'000'000);
    fx.set("intel-rapl:1", 3'000'000);
    EXPECT_DOUBLE_EQ(probe.delta(*a, *probe.read()).cpu_j, 4.0);
}

TEST(Probe, MissingRootDegrades) {
    EnergyProbe probe("/nonexistent/powercap");
    EXPECT_FALSE(probe.available());
    Meter meter(probe);
    const auto rec = meter.measure([] {});
    EXPECT_FALSE(rec.energy_available());
    EXPECT_FALSE(rec.dram_energy_j.has_value());
}

TEST(Probe, ReadCounterFile) {
    Fixture fx;
    std::ofstream(fx.root / "energy_uj") << "1000000\n";
    EXPECT_EQ(read_counter_file((fx.root / "energy_uj").string()), 1'000'000u);
    EXPECT_FALSE(read_counter_file((fx.root / "missing").string()).has_value());
}

TEST(Meter, MeasuresFixtureEnergy) {
    Fixture fx;
    fx.domain("intel-rapl:0", "package-0", 100, 1000);
    Meter meter{EnergyProbe(fx.root.string())};
    const auto rec = meter.measure([&] { fx.set("intel-rapl:0", 50); });
    ASSERT_TRUE(rec.energy_available());
    EXPECT_DOUBLE_EQ(*rec.cpu_energy_j, 950e-6);
}

TEST(Meter, EmptyRegion) {
    Meter meter;
    const auto rec = meter.measure([] {});
    EXPECT_LT(rec.wall_time_s, 0.01);
    EXPECT_LT(rec.peak_memory_bytes, 64 * 1024);
}

TEST(Meter, SleepRegion) {
    Meter meter;
    const auto rec = meter.measure([] { std::this_thread::sleep_for(std::chrono::milliseconds(200)); });
    EXPECT_GE(rec.wall_time_s, 0.2);
    EXPECT_LE(rec.wall_time_s, 0.3);
}

TEST(Meter, PeakMemoryOfLargeAllocation) {
    if (!heap::hooks_installed()) GTEST_SKIP() << "allocator hooks not linked";
    Meter meter;
    const std::size_t bytes = 100u * 1000u * 1000u;
    const auto rec = meter.measure([&] {
        std::vector<char> buf(bytes);
        std::memset(buf.data(), 1, buf.size());
        return buf[12345];
    });
    EXPECT_GE(rec.second.peak_memory_bytes, static_cast<double>(bytes));
    EXPECT_EQ(rec.first, 1);
}

TEST(Meter, NestedRegionThrows) {
    Meter meter;
    EXPECT_THROW(meter.measure([&] { meter.measure([] {}); }), ProtocolError);
    EXPECT_FALSE(Meter::region_active());
    const auto rec = meter.measure([] { return 3; });
    EXPECT_EQ(rec.first, 3);
}

TEST(Meter, PerItemDivision) {
    MeasurementRecord r;
    r.cpu_energy_j = 4.0;
    r.wall_time_s = 2.0;
    r.peak_memory_bytes = 100;
    const auto p = r.per_item(4);
    EXPECT_DOUBLE_EQ(*p.cpu_energy_j, 1.0);
    EXPECT_DOUBLE_EQ(p.wall_time_s, 0.5);
    EXPECT_DOUBLE_EQ(p.peak_memory_bytes, 100);
}
