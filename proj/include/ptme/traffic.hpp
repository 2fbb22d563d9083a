#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ptme/objective.hpp"

namespace ptme {

/// One signal phase. `state` has one character per incoming link of the
/// intersection: 'G' lets that approach discharge, 'r' holds it.
struct Phase {
    std::string state;

    int green() const noexcept;
    int red() const noexcept;
};

struct Link {
    int from = 0;
    int to = 0;
    int travel_time = 1;  // seconds of free flow
    int capacity = 1;     // vehicles present at once (moving plus queued)
};

struct Intersection {
    int node = 0;
    std::vector<int> incoming;  // link ids, in state-string order
    std::vector<Phase> phases;
};

struct Vehicle {
    int departure = 0;
    std::vector<int> route;  // link ids, consecutive
};

struct TrafficInstance {
    std::string name;
    int node_count = 0;
    std::vector<Link> links;
    std::vector<Intersection> intersections;
    std::vector<Vehicle> vehicles;
    int simulation_time = 0;

    /// Total phases over all intersections: the plan length.
    std::size_t phase_count() const noexcept;
    /// Throws ConfigError describing the first inconsistency.
    void validate() const;
};

/// Phase durations in seconds, flattened in intersection then phase order.
struct TrafficPlan {
    std::vector<int> durations;

    /// Rounds each entry to the nearest integer.
    static TrafficPlan from_values(std::span<const double> x);
};

struct GreenRedRatio {
    double value = 0.0;
    std::size_t zero_red_phases = 0;  // phases skipped to avoid dividing by zero
};

/// P = sum over phases of d * g / r.
GreenRedRatio green_red_ratio(const TrafficInstance& instance, const TrafficPlan& plan);

struct SimOutcome {
    double travel_time = 0.0;   // TT_v
    double waiting_time = 0.0;  // TT_EP
    std::int64_t delivered = 0;    // NV_D
    std::int64_t undelivered = 0;  // NV_ND
};

/// Deterministic 1 s point-queue simulation over the instance horizon.
///
/// Each step: signals advance; every link queue head discharges onto its next
/// link if the approach is green and the next link has room (one vehicle per
/// link per step); due departures enter their first link if it has room; then
/// moving vehicles advance one second, joining the link queue (or arriving,
/// on their last link) once the link's travel time has elapsed. Queued or
/// held vehicles accrue one second of waiting per step. Travel time runs from
/// departure to arrival, or to the horizon for undelivered vehicles.
SimOutcome simulate(const TrafficInstance& instance, const TrafficPlan& plan);

struct ObjectiveValue {
    double value = 0.0;
    bool unbounded = false;  // NV_D = 0 and P = 0; value is +infinity
};

/// F = (TT_v + TT_EP + NV_ND * T_S) / (NV_D^2 + P).
ObjectiveValue combine_objective(const SimOutcome& outcome, double green_red, double horizon);
ObjectiveValue objective(const TrafficInstance& instance, const TrafficPlan& plan);

/// Plain-text instance format, see docs in README.
void write_instance(std::ostream& out, const TrafficInstance& instance);
TrafficInstance read_instance(std::istream& in, const std::string& name = "instance");
TrafficInstance load_instance(const std::string& path);

struct GridPreset {
    std::string name;
    int rows = 0;
    int cols = 0;
    int two_phase = 0;   // intersections with phases [NS, EW]
    int four_phase = 0;  // [NS, all-red, EW, all-red]
    int six_phase = 0;   // [NS, all-red, EW, all-red, N+E, all-red]
    int vehicles = 0;
    int simulation_time = 0;
    int departure_window = 0;
    std::uint64_t seed = 0;
};

/// Names of the bundled presets: malaga-like, stockholm-like, paris-like.
std::vector<std::string> preset_names();
GridPreset preset_parameters(const std::string& name);
TrafficInstance make_grid_instance(const GridPreset& preset);
TrafficInstance make_preset(const std::string& name);

/// Objective adapter over an instance. Points are rounded to integer plans;
/// an unbounded value evaluates to +infinity.
class TrafficObjective final : public Objective {
public:
    explicit TrafficObjective(TrafficInstance instance);

    std::string name() const override { return instance_.name; }
    std::size_t dim() const override { return dim_; }
    double evaluate(std::span<const double> x) const override;
    DesignSpace default_space() const override { return DesignSpace::traffic_default(dim_); }

    const TrafficInstance& instance() const noexcept { return instance_; }

private:
    TrafficInstance instance_;
    std::size_t dim_;
};

}  // namespace ptme
