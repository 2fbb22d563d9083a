#include "ptme/telemetry.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>

#include "ptme/error.hpp"
#include "ptme/format.hpp"

#if !defined(PTME_NO_HEAP_HOOKS) && defined(__GLIBC__)
#define PTME_HEAP_HOOKS 1
#include <malloc.h>
#endif

namespace ptme {

// ---------------------------------------------------------------------------
// Allocation tracking
// ---------------------------------------------------------------------------

namespace {
std::atomic<bool> g_tracking{false};
std::atomic<std::int64_t> g_net{0};
std::atomic<std::int64_t> g_peak{0};
std::atomic<bool> g_region_open{false};
}  // namespace

namespace heap {

bool tracking_enabled() noexcept { return g_tracking.load(std::memory_order_relaxed); }

bool hooks_installed() noexcept {
#ifdef PTME_HEAP_HOOKS
    return true;
#else
    return false;
#endif
}

void begin_region() noexcept {
    g_net.store(0, std::memory_order_relaxed);
    g_peak.store(0, std::memory_order_relaxed);
    g_tracking.store(true, std::memory_order_release);
}

std::int64_t end_region() noexcept {
    g_tracking.store(false, std::memory_order_release);
    return g_peak.load(std::memory_order_relaxed);
}

std::int64_t current_net() noexcept { return g_net.load(std::memory_order_relaxed); }

}  // namespace heap

}  // namespace ptme

#ifdef PTME_HEAP_HOOKS

// glibc supports replacing malloc; every entry point forwards to the libc
// implementation and only adjusts the counters while a region is open.
extern "C" {
void* __libc_malloc(std::size_t);
void __libc_free(void*);
void* __libc_calloc(std::size_t, std::size_t);
void* __libc_realloc(void*, std::size_t);
void* __libc_memalign(std::size_t, std::size_t);
void* __libc_valloc(std::size_t);
void* __libc_pvalloc(std::size_t);
}

namespace {

inline void note_growth(std::int64_t bytes) noexcept {
    using ptme::g_net;
    using ptme::g_peak;
    const std::int64_t now = g_net.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    std::int64_t peak = g_peak.load(std::memory_order_relaxed);
    while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
    }
}

inline void on_alloc(void* p) noexcept {
    if (p && ptme::g_tracking.load(std::memory_order_relaxed))
        note_growth(static_cast<std::int64_t>(malloc_usable_size(p)));
}

inline void on_free(void* p) noexcept {
    if (p && ptme::g_tracking.load(std::memory_order_relaxed))
        ptme::g_net.fetch_sub(static_cast<std::int64_t>(malloc_usable_size(p)),
                              std::memory_order_relaxed);
}

}  // namespace

extern "C" {

void* malloc(std::size_t n) noexcept {
    void* p = __libc_malloc(n);
    on_alloc(p);
    return p;
}

void free(void* p) noexcept {
    on_free(p);
    __libc_free(p);
}

void* calloc(std::size_t count, std::size_t size) noexcept {
    void* p = __libc_calloc(count, size);
    on_alloc(p);
    return p;
}

void* realloc(void* p, std::size_t n) noexcept {
    const bool tracking = ptme::g_tracking.load(std::memory_order_relaxed);
    const std::int64_t before = tracking && p ? static_cast<std::int64_t>(malloc_usable_size(p)) : 0;
    void* q = __libc_realloc(p, n);
    if (tracking) {
        if (q)
            note_growth(static_cast<std::int64_t>(malloc_usable_size(q)) - before);
        else if (n == 0)
            ptme::g_net.fetch_sub(before, std::memory_order_relaxed);
    }
    return q;
}

void* memalign(std::size_t alignment, std::size_t n) noexcept {
    void* p = __libc_memalign(alignment, n);
    on_alloc(p);
    return p;
}

void* aligned_alloc(std::size_t alignment, std::size_t n) noexcept {
    return memalign(alignment, n);
}

int posix_memalign(void** out, std::size_t alignment, std::size_t n) noexcept {
    if (alignment % sizeof(void*) != 0 || (alignment & (alignment - 1)) != 0) return 22;  // EINVAL
    void* p = memalign(alignment, n);
    if (!p) return 12;  // ENOMEM
    *out = p;
    return 0;
}

void* valloc(std::size_t n) noexcept {
    void* p = __libc_valloc(n);
    on_alloc(p);
    return p;
}

void* pvalloc(std::size_t n) noexcept {
    void* p = __libc_pvalloc(n);
    on_alloc(p);
    return p;
}

}  // extern "C"

#endif  // PTME_HEAP_HOOKS

namespace ptme {

// ---------------------------------------------------------------------------
// Energy counters
// ---------------------------------------------------------------------------

MeasurementRecord MeasurementRecord::per_item(std::size_t count) const {
    MeasurementRecord r = *this;
    if (count <= 1) return r;
    const double k = static_cast<double>(count);
    r.wall_time_s /= k;
    if (r.cpu_energy_j) *r.cpu_energy_j /= k;
    if (r.dram_energy_j) *r.dram_energy_j /= k;
    return r;
}

std::uint64_t counter_delta(std::uint64_t previous, std::uint64_t current, std::uint64_t range) {
    if (current >= previous) return current - previous;
    if (range == 0 || previous > range) return current;
    return range - previous + current;
}

std::optional<std::uint64_t> read_counter_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string text;
    std::getline(in, text);
    try {
        const long long v = parse_int(text);
        if (v < 0) return std::nullopt;
        return static_cast<std::uint64_t>(v);
    } catch (const ConfigError&) {
        return std::nullopt;
    }
}

EnergyProbe::EnergyProbe(const std::string& root) : root_(root) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) return;
    std::vector<RaplDomain> found;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        const fs::path dir = entry.path();
        if (!fs::is_directory(dir, ec)) continue;
        std::ifstream name_file(dir / "name");
        std::string name;
        if (!name_file || !std::getline(name_file, name)) continue;
        name = std::string(trim(name));
        RaplDomain d;
        d.path = dir.string();
        d.name = name;
        if (name.rfind("package", 0) == 0)
            d.kind = RaplDomainKind::package;
        else if (name == "dram")
            d.kind = RaplDomainKind::dram;
        else
            continue;
        if (!read_counter_file((dir / "energy_uj").string())) continue;
        d.max_energy_range_uj = read_counter_file((dir / "max_energy_range_uj").string()).value_or(0);
        found.push_back(std::move(d));
    }
    std::sort(found.begin(), found.end(),
              [](const RaplDomain& a, const RaplDomain& b) { return a.path < b.path; });
    const bool has_package = std::any_of(found.begin(), found.end(), [](const RaplDomain& d) {
        return d.kind == RaplDomainKind::package;
    });
    if (!has_package) return;
    domains_ = std::move(found);
    available_ = true;
}

std::optional<CounterSnapshot> EnergyProbe::read() const {
    if (!available_) return std::nullopt;
    CounterSnapshot snap;
    snap.energy_uj.reserve(domains_.size());
    for (const auto& d : domains_) {
        auto v = read_counter_file(d.path + "/energy_uj");
        if (!v) return std::nullopt;
        snap.energy_uj.push_back(*v);
    }
    return snap;
}

EnergyProbe::Energy EnergyProbe::delta(const CounterSnapshot& before,
                                       const CounterSnapshot& after) const {
    if (before.energy_uj.size() != domains_.size() || after.energy_uj.size() != domains_.size())
        throw DimensionError("energy snapshot does not match probe domains");
    Energy e;
    for (std::size_t i = 0; i < domains_.size(); ++i) {
        const double joules =
            static_cast<double>(counter_delta(before.energy_uj[i], after.energy_uj[i],
                                              domains_[i].max_energy_range_uj)) * 1e-6;
        if (domains_[i].kind == RaplDomainKind::package) {
            e.cpu_j += joules;
        } else {
            e.dram_j += joules;
            e.has_dram = true;
        }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Measured regions
// ---------------------------------------------------------------------------

bool Meter::region_active() noexcept { return g_region_open.load(std::memory_order_acquire); }

Meter::Region::Region(Meter& meter) : meter_(meter) {
    if (g_region_open.exchange(true, std::memory_order_acq_rel))
        throw ProtocolError("a measured region is already open in this process");
    energy_before_ = meter_.probe_.read();
    heap::begin_region();
    start_ = std::chrono::steady_clock::now();
}

Meter::Region::~Region() {
    if (open_) {
        heap::end_region();
        g_region_open.store(false, std::memory_order_release);
    }
}

MeasurementRecord Meter::Region::finish() {
    const auto stop = std::chrono::steady_clock::now();
    const std::int64_t peak = heap::end_region();
    MeasurementRecord rec;
    rec.wall_time_s = std::chrono::duration<double>(stop - start_).count();
    rec.peak_memory_bytes = static_cast<double>(std::max<std::int64_t>(peak, 0));
    if (energy_before_) {
        if (auto after = meter_.probe_.read()) {
            const auto e = meter_.probe_.delta(*energy_before_, *after);
            rec.cpu_energy_j = e.cpu_j;
            if (e.has_dram) rec.dram_energy_j = e.dram_j;
        }
    }
    open_ = false;
    g_region_open.store(false, std::memory_order_release);
    return rec;
}

}  // namespace ptme
