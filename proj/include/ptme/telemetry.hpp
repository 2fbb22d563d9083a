#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace ptme {

/// Energy, time and memory consumed by one measured region.
struct MeasurementRecord {
    std::optional<double> cpu_energy_j;   // package domains, summed over sockets
    std::optional<double> dram_energy_j;  // dram domains, summed over sockets
    double wall_time_s = 0.0;
    double peak_memory_bytes = 0.0;

    bool energy_available() const noexcept { return cpu_energy_j.has_value(); }

    /// Divides time and energies by `count`; peak memory is left as is.
    MeasurementRecord per_item(std::size_t count) const;
};

enum class RaplDomainKind { package, dram };

struct RaplDomain {
    std::string path;  // directory holding energy_uj / max_energy_range_uj
    std::string name;
    RaplDomainKind kind = RaplDomainKind::package;
    std::uint64_t max_energy_range_uj = 0;
};

struct CounterSnapshot {
    std::vector<std::uint64_t> energy_uj;  // one per probe domain
};

/// Wrap-corrected difference of a monotone counter that rolls over at `range`.
std::uint64_t counter_delta(std::uint64_t previous, std::uint64_t current, std::uint64_t range);

/// Reads package and DRAM energy counters from a powercap hierarchy
/// (normally /sys/class/powercap). An unreadable or empty hierarchy yields a
/// probe with available() == false instead of an error.
class EnergyProbe {
public:
    static constexpr const char* kDefaultRoot = "/sys/class/powercap";

    EnergyProbe() = default;
    explicit EnergyProbe(const std::string& root);

    bool available() const noexcept { return available_; }
    const std::vector<RaplDomain>& domains() const noexcept { return domains_; }
    const std::string& root() const noexcept { return root_; }

    /// Raw counters in microjoules. Empty optional when any counter becomes
    /// unreadable.
    std::optional<CounterSnapshot> read() const;

    struct Energy {
        double cpu_j = 0.0;
        double dram_j = 0.0;
        bool has_dram = false;
    };
    /// Energy between two snapshots, wrap corrected per domain.
    Energy delta(const CounterSnapshot& before, const CounterSnapshot& after) const;

private:
    std::string root_;
    std::vector<RaplDomain> domains_;
    bool available_ = false;
};

/// Reads one powercap counter file (decimal microjoules).
std::optional<std::uint64_t> read_counter_file(const std::string& path);

/// Net heap growth since the active region opened, tracked by the allocator
/// hooks linked with the measuring code.
namespace heap {
bool tracking_enabled() noexcept;
/// Whether this binary carries the malloc interposition hooks.
bool hooks_installed() noexcept;
void begin_region() noexcept;
/// Returns the high-water mark (bytes) of net allocation since begin_region.
std::int64_t end_region() noexcept;
std::int64_t current_net() noexcept;
}  // namespace heap

/// Opens process-exclusive measured regions. Only one region may be open in
/// the process at any time; a nested attempt throws ProtocolError.
class Meter {
public:
    Meter() = default;
    explicit Meter(EnergyProbe probe) : probe_(std::move(probe)) {}

    const EnergyProbe& probe() const noexcept { return probe_; }

    /// Runs `region` and returns its result (if any) with the record.
    template <class F>
    auto measure(F&& region) {
        Region guard(*this);
        if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
            std::forward<F>(region)();
            return guard.finish();
        } else {
            auto result = std::forward<F>(region)();
            MeasurementRecord rec = guard.finish();
            return std::pair<decltype(result), MeasurementRecord>(std::move(result), rec);
        }
    }

    static bool region_active() noexcept;

private:
    class Region {
    public:
        explicit Region(Meter& meter);
        ~Region();
        Region(const Region&) = delete;
        Region& operator=(const Region&) = delete;
        MeasurementRecord finish();

    private:
        Meter& meter_;
        std::optional<CounterSnapshot> energy_before_;
        std::chrono::steady_clock::time_point start_;
        bool open_ = true;
    };

    EnergyProbe probe_;
};

}  // namespace ptme
