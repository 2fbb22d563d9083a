#include "ptme/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ptme/error.hpp"
#include "ptme/format.hpp"
#include "ptme/rng.hpp"

namespace ptme {

int Phase::green() const noexcept {
    return static_cast<int>(std::count(state.begin(), state.end(), 'G'));
}

int Phase::red() const noexcept {
    return static_cast<int>(std::count(state.begin(), state.end(), 'r'));
}

std::size_t TrafficInstance::phase_count() const noexcept {
    std::size_t n = 0;
    for (const auto& i : intersections) n += i.phases.size();
    return n;
}

void TrafficInstance::validate() const {
    const auto fail = [](const std::string& msg) { throw ConfigError("invalid instance: " + msg); };
    if (node_count <= 0) fail("node count must be positive");
    if (simulation_time < 0) fail("simulation time must be non-negative");
    const int n_links = static_cast<int>(links.size());
    for (int l = 0; l < n_links; ++l) {
        const Link& k = links[static_cast<std::size_t>(l)];
        if (k.from < 0 || k.from >= node_count || k.to < 0 || k.to >= node_count)
            fail("link " + std::to_string(l) + " references an unknown node");
        if (k.travel_time < 1) fail("link " + std::to_string(l) + " travel time must be >= 1");
        if (k.capacity < 1) fail("link " + std::to_string(l) + " capacity must be >= 1");
    }
    std::vector<int> signalled(links.size(), 0);
    std::vector<int> node_seen(static_cast<std::size_t>(node_count), 0);
    for (std::size_t i = 0; i < intersections.size(); ++i) {
        const Intersection& x = intersections[i];
        const std::string where = "intersection " + std::to_string(i);
        if (x.node < 0 || x.node >= node_count) fail(where + " references an unknown node");
        if (node_seen[static_cast<std::size_t>(x.node)]++) fail(where + " duplicates a signalled node");
        if (x.phases.empty()) fail(where + " has no phases");
        for (int l : x.incoming) {
            if (l < 0 || l >= n_links) fail(where + " references an unknown link");
            if (links[static_cast<std::size_t>(l)].to != x.node)
                fail(where + " lists link " + std::to_string(l) + " which does not end at its node");
            if (signalled[static_cast<std::size_t>(l)]++) fail("link " + std::to_string(l) + " is signalled twice");
        }
        for (const Phase& p : x.phases) {
            if (p.state.size() != x.incoming.size())
                fail(where + " phase state length differs from its incoming link count");
            if (p.state.find_first_not_of("Gr") != std::string::npos)
                fail(where + " phase state may contain only 'G' and 'r'");
        }
    }
    for (std::size_t v = 0; v < vehicles.size(); ++v) {
        const Vehicle& veh = vehicles[v];
        const std::string where = "vehicle " + std::to_string(v);
        if (veh.route.empty()) fail(where + " has an empty route");
        if (veh.departure < 0) fail(where + " departs before time 0");
        for (std::size_t k = 0; k < veh.route.size(); ++k) {
            const int l = veh.route[k];
            if (l < 0 || l >= n_links) fail(where + " references an unknown link");
            if (k > 0 && links[static_cast<std::size_t>(veh.route[k - 1])].to != links[static_cast<std::size_t>(l)].from)
                fail(where + " route is not connected");
        }
    }
}

TrafficPlan TrafficPlan::from_values(std::span<const double> x) {
    TrafficPlan plan;
    plan.durations.reserve(x.size());
    for (double v : x) plan.durations.push_back(static_cast<int>(std::lround(v)));
    return plan;
}

namespace {

void check_plan(const TrafficInstance& instance, const TrafficPlan& plan) {
    if (plan.durations.size() != instance.phase_count())
        throw DimensionError("plan has " + std::to_string(plan.durations.size()) +
                             " durations, instance has " + std::to_string(instance.phase_count()) +
                             " phases");
}

}  // namespace

GreenRedRatio green_red_ratio(const TrafficInstance& instance, const TrafficPlan& plan) {
    check_plan(instance, plan);
    GreenRedRatio out;
    std::size_t k = 0;
    for (const auto& x : instance.intersections) {
        for (const auto& p : x.phases) {
            const int d = plan.durations[k++];
            const int r = p.red();
            if (r == 0) {
                ++out.zero_red_phases;
                continue;
            }
            out.value += static_cast<double>(d) * static_cast<double>(p.green()) / static_cast<double>(r);
        }
    }
    return out;
}

SimOutcome simulate(const TrafficInstance& instance, const TrafficPlan& plan) {
    check_plan(instance, plan);
    for (int d : plan.durations)
        if (d < 1) throw DomainError("phase durations must be at least 1 second");

    const std::size_t n_links = instance.links.size();
    const std::size_t n_veh = instance.vehicles.size();
    const int horizon = instance.simulation_time;
    SimOutcome out;
    if (n_veh == 0) return out;

    std::vector<int> capacity(n_links), travel(n_links);
    for (std::size_t l = 0; l < n_links; ++l) {
        capacity[l] = instance.links[l].capacity;
        travel[l] = instance.links[l].travel_time;
    }

    // Signals: links without a controlling intersection are always green.
    std::vector<char> green(n_links, 1);
    struct SignalState {
        std::size_t first_duration;  // index into plan
        std::size_t phase = 0;
        int remaining = 0;
    };
    std::vector<SignalState> signals(instance.intersections.size());
    const auto apply_phase = [&](std::size_t i) {
        const Intersection& x = instance.intersections[i];
        const std::string& state = x.phases[signals[i].phase].state;
        for (std::size_t k = 0; k < x.incoming.size(); ++k)
            green[static_cast<std::size_t>(x.incoming[k])] = state[k] == 'G';
    };
    {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < signals.size(); ++i) {
            signals[i].first_duration = offset;
            signals[i].remaining = plan.durations[offset];
            offset += instance.intersections[i].phases.size();
            apply_phase(i);
        }
    }

    // Per-link FIFO queues as ring buffers; length never exceeds capacity.
    std::vector<std::size_t> q_offset(n_links + 1, 0);
    for (std::size_t l = 0; l < n_links; ++l) q_offset[l + 1] = q_offset[l] + static_cast<std::size_t>(capacity[l]);
    std::vector<int> q_buf(q_offset.back());
    std::vector<int> q_head(n_links, 0), q_size(n_links, 0), occupancy(n_links, 0);

    std::vector<int> order(n_veh);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return instance.vehicles[static_cast<std::size_t>(a)].departure <
               instance.vehicles[static_cast<std::size_t>(b)].departure;
    });

    // Vehicles whose departure is due but whose first link is full.
    std::vector<std::vector<int>> origin(n_links);
    std::vector<std::size_t> origin_head(n_links, 0);
    std::vector<int> origin_links;
    std::vector<char> is_origin(n_links, 0);
    for (const auto& v : instance.vehicles) {
        const auto first = static_cast<std::size_t>(v.route.front());
        if (!is_origin[first]) {
            is_origin[first] = 1;
            origin_links.push_back(static_cast<int>(first));
        }
    }
    std::sort(origin_links.begin(), origin_links.end());

    std::vector<int> route_pos(n_veh, 0), remaining(n_veh, 0), arrival(n_veh, -1);
    std::vector<int> moving, still_moving;
    moving.reserve(n_veh);
    still_moving.reserve(n_veh);
    std::size_t next_departure = 0;
    double waiting = 0.0;

    const auto enter = [&](int v, std::size_t link) {
        ++occupancy[link];
        remaining[static_cast<std::size_t>(v)] = travel[link];
        moving.push_back(v);
    };

    for (int t = 0; t < horizon; ++t) {
        if (t > 0) {
            for (std::size_t i = 0; i < signals.size(); ++i) {
                SignalState& s = signals[i];
                if (--s.remaining > 0) continue;
                s.phase = (s.phase + 1) % instance.intersections[i].phases.size();
                s.remaining = plan.durations[s.first_duration + s.phase];
                apply_phase(i);
            }
        }

        for (std::size_t l = 0; l < n_links; ++l) {
            if (q_size[l] == 0) continue;
            const int v = q_buf[q_offset[l] + static_cast<std::size_t>(q_head[l])];
            const auto& route = instance.vehicles[static_cast<std::size_t>(v)].route;
            const auto next = static_cast<std::size_t>(route[static_cast<std::size_t>(route_pos[static_cast<std::size_t>(v)]) + 1]);
            if (green[l] && occupancy[next] < capacity[next]) {
                q_head[l] = (q_head[l] + 1) % capacity[l];
                --q_size[l];
                --occupancy[l];
                ++route_pos[static_cast<std::size_t>(v)];
                enter(v, next);
            }
            waiting += q_size[l];
        }

        while (next_departure < n_veh &&
               instance.vehicles[static_cast<std::size_t>(order[next_departure])].departure <= t) {
            const int v = order[next_departure++];
            origin[static_cast<std::size_t>(instance.vehicles[static_cast<std::size_t>(v)].route.front())].push_back(v);
        }
        for (int li : origin_links) {
            const auto l = static_cast<std::size_t>(li);
            auto& pending = origin[l];
            if (origin_head[l] < pending.size() && occupancy[l] < capacity[l]) enter(pending[origin_head[l]++], l);
            waiting += static_cast<double>(pending.size() - origin_head[l]);
        }

        still_moving.clear();
        for (int v : moving) {
            const auto vi = static_cast<std::size_t>(v);
            if (--remaining[vi] > 0) {
                still_moving.push_back(v);
                continue;
            }
            const auto& route = instance.vehicles[vi].route;
            const auto l = static_cast<std::size_t>(route[static_cast<std::size_t>(route_pos[vi])]);
            if (static_cast<std::size_t>(route_pos[vi]) + 1 == route.size()) {
                --occupancy[l];
                arrival[vi] = t + 1;
            } else {
                q_buf[q_offset[l] + static_cast<std::size_t>((q_head[l] + q_size[l]) % capacity[l])] = v;
                ++q_size[l];
            }
        }
        moving.swap(still_moving);
    }

    for (std::size_t v = 0; v < n_veh; ++v) {
        const int dep = instance.vehicles[v].departure;
        if (arrival[v] >= 0) {
            ++out.delivered;
            out.travel_time += arrival[v] - dep;
        } else {
            ++out.undelivered;
            out.travel_time += std::max(0, horizon - dep);
        }
    }
    out.waiting_time = waiting;
    return out;
}

ObjectiveValue combine_objective(const SimOutcome& outcome, double green_red, double horizon) {
    const double numerator = outcome.travel_time + outcome.waiting_time +
                             static_cast<double>(outcome.undelivered) * horizon;
    const double delivered = static_cast<double>(outcome.delivered);
    const double denominator = delivered * delivered + green_red;
    if (denominator == 0.0) return {std::numeric_limits<double>::infinity(), true};
    return {numerator / denominator, false};
}

ObjectiveValue objective(const TrafficInstance& instance, const TrafficPlan& plan) {
    const GreenRedRatio p = green_red_ratio(instance, plan);
    const SimOutcome sim = simulate(instance, plan);
    return combine_objective(sim, p.value, static_cast<double>(instance.simulation_time));
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

void write_instance(std::ostream& out, const TrafficInstance& inst) {
    out << "# ptme traffic instance\n";
    out << "# link <from> <to> <travel_time> <capacity>   (ids are implicit, 0-based)\n";
    out << "# intersection <node> <incoming link ids, comma separated>\n";
    out << "# phase <state: one G/r per incoming link>   (belongs to the last intersection)\n";
    out << "# vehicle <departure> <node> <node> ...\n";
    out << "format ptme-traffic 1\n";
    out << "name " << inst.name << '\n';
    out << "simulation_time " << inst.simulation_time << '\n';
    out << "nodes " << inst.node_count << '\n';
    for (const auto& l : inst.links)
        out << "link " << l.from << ' ' << l.to << ' ' << l.travel_time << ' ' << l.capacity << '\n';
    for (const auto& x : inst.intersections) {
        out << "intersection " << x.node << ' ';
        for (std::size_t k = 0; k < x.incoming.size(); ++k) out << (k ? "," : "") << x.incoming[k];
        out << '\n';
        for (const auto& p : x.phases) out << "phase " << p.state << '\n';
    }
    for (const auto& v : inst.vehicles) {
        out << "vehicle " << v.departure << ' ' << inst.links[static_cast<std::size_t>(v.route.front())].from;
        for (int l : v.route) out << ' ' << inst.links[static_cast<std::size_t>(l)].to;
        out << '\n';
    }
}

TrafficInstance read_instance(std::istream& in, const std::string& name) {
    TrafficInstance inst;
    inst.name = name;
    std::map<std::pair<int, int>, int> link_of;
    std::string line;
    int line_no = 0;
    bool saw_format = false;
    bool saw_horizon = false;
    const auto fail = [&](const std::string& msg) {
        throw ConfigError("instance line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::istringstream ss{std::string(body)};
        std::string key;
        ss >> key;
        std::vector<std::string> args;
        for (std::string a; ss >> a;) args.push_back(a);
        const auto num = [&](std::size_t i) -> int {
            if (i >= args.size()) fail("'" + key + "' is missing an argument");
            try {
                return static_cast<int>(parse_int(args[i]));
            } catch (const ConfigError&) {
                fail("'" + args[i] + "' is not an integer");
            }
            return 0;
        };
        if (key == "format") {
            if (args.size() != 2 || args[0] != "ptme-traffic" || args[1] != "1")
                fail("unsupported format line");
            saw_format = true;
        } else if (key == "name") {
            if (args.empty()) fail("'name' needs a value");
            inst.name = args[0];
        } else if (key == "simulation_time") {
            inst.simulation_time = num(0);
            saw_horizon = true;
        } else if (key == "nodes") {
            inst.node_count = num(0);
        } else if (key == "link") {
            if (args.size() != 4) fail("'link' expects from to travel_time capacity");
            Link l{num(0), num(1), num(2), num(3)};
            if (!link_of.emplace(std::pair{l.from, l.to}, static_cast<int>(inst.links.size())).second)
                fail("duplicate link " + args[0] + "->" + args[1]);
            inst.links.push_back(l);
        } else if (key == "intersection") {
            if (args.size() != 2) fail("'intersection' expects node and incoming link list");
            Intersection x;
            x.node = num(0);
            for (const auto& id : split(args[1], ',')) {
                try {
                    x.incoming.push_back(static_cast<int>(parse_int(id)));
                } catch (const ConfigError&) {
                    fail("bad link id '" + id + "'");
                }
            }
            inst.intersections.push_back(std::move(x));
        } else if (key == "phase") {
            if (inst.intersections.empty()) fail("'phase' before any intersection");
            if (args.size() != 1) fail("'phase' expects a single state string");
            inst.intersections.back().phases.push_back(Phase{args[0]});
        } else if (key == "vehicle") {
            if (args.size() < 3) fail("'vehicle' expects a departure and at least two nodes");
            Vehicle v;
            v.departure = num(0);
            for (std::size_t k = 2; k < args.size(); ++k) {
                auto it = link_of.find({num(k - 1), num(k)});
                if (it == link_of.end()) fail("no link " + args[k - 1] + "->" + args[k]);
                v.route.push_back(it->second);
            }
            inst.vehicles.push_back(std::move(v));
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (!saw_format) throw ConfigError("instance is missing the 'format ptme-traffic 1' line");
    if (!saw_horizon) throw ConfigError("instance is missing 'simulation_time'");
    inst.validate();
    return inst;
}

TrafficInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open instance file '" + path + "'");
    return read_instance(in, path);
}

// ---------------------------------------------------------------------------
// Grid presets
// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() { return {"malaga-like", "stockholm-like", "paris-like"}; }

GridPreset preset_parameters(const std::string& name) {
    // Phase totals: 190, 370, 378 over 56, 75, 70 intersections.
    if (name == "malaga-like") return {name, 7, 8, 17, 39, 0, 400, 700, 350, 190};
    if (name == "stockholm-like") return {name, 5, 15, 0, 40, 35, 480, 800, 400, 370};
    if (name == "paris-like") return {name, 7, 10, 0, 21, 49, 440, 760, 380, 378};
    throw ConfigError("unknown preset '" + name + "' (expected malaga-like, stockholm-like or paris-like)");
}

TrafficInstance make_grid_instance(const GridPreset& p) {
    if (p.rows < 2 || p.cols < 2) throw ConfigError("grid presets need at least 2x2 nodes");
    if (p.two_phase + p.four_phase + p.six_phase != p.rows * p.cols)
        throw ConfigError("phase layout counts must cover every grid node");
    Rng rng(p.seed);
    TrafficInstance inst;
    inst.name = p.name;
    inst.node_count = p.rows * p.cols;
    inst.simulation_time = p.simulation_time;

    const auto node = [&](int r, int c) { return r * p.cols + c; };
    constexpr int dr[4] = {-1, 0, 1, 0};  // N E S W
    constexpr int dc[4] = {0, 1, 0, -1};
    std::map<std::pair<int, int>, int> link_of;
    for (int r = 0; r < p.rows; ++r) {
        for (int c = 0; c < p.cols; ++c) {
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (rr < 0 || rr >= p.rows || cc < 0 || cc >= p.cols) continue;
                const int tt = 3 + static_cast<int>(rng.below(6));
                link_of[{node(r, c), node(rr, cc)}] = static_cast<int>(inst.links.size());
                inst.links.push_back({node(r, c), node(rr, cc), tt, 2 * tt});
            }
        }
    }

    std::vector<int> layout;
    layout.insert(layout.end(), static_cast<std::size_t>(p.two_phase), 2);
    layout.insert(layout.end(), static_cast<std::size_t>(p.four_phase), 4);
    layout.insert(layout.end(), static_cast<std::size_t>(p.six_phase), 6);
    rng.shuffle(std::span<int>(layout));

    for (int r = 0; r < p.rows; ++r) {
        for (int c = 0; c < p.cols; ++c) {
            Intersection x;
            x.node = node(r, c);
            std::vector<int> dirs;  // approach direction of each incoming link
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (rr < 0 || rr >= p.rows || cc < 0 || cc >= p.cols) continue;
                x.incoming.push_back(link_of.at({node(rr, cc), x.node}));
                dirs.push_back(k);
            }
            const auto state = [&](std::initializer_list<int> open) {
                std::string s;
                for (int d : dirs) s += std::find(open.begin(), open.end(), d) != open.end() ? 'G' : 'r';
                return Phase{s};
            };
            const Phase ns = state({0, 2}), ew = state({1, 3}), hold = state({}), ne = state({0, 1});
            switch (layout[static_cast<std::size_t>(x.node)]) {
                case 2: x.phases = {ns, ew}; break;
                case 4: x.phases = {ns, hold, ew, hold}; break;
                default: x.phases = {ns, hold, ew, hold, ne, hold}; break;
            }
            inst.intersections.push_back(std::move(x));
        }
    }

    std::vector<std::pair<int, int>> boundary;
    for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c)
            if (r == 0 || c == 0 || r == p.rows - 1 || c == p.cols - 1) boundary.emplace_back(r, c);
    const int min_distance = (p.rows + p.cols) / 2;
    for (int v = 0; v < p.vehicles; ++v) {
        std::pair<int, int> from, to;
        do {
            from = boundary[rng.below(boundary.size())];
            to = boundary[rng.below(boundary.size())];
        } while (std::abs(from.first - to.first) + std::abs(from.second - to.second) < min_distance);
        std::vector<char> moves;
        moves.insert(moves.end(), static_cast<std::size_t>(std::abs(to.first - from.first)), 'v');
        moves.insert(moves.end(), static_cast<std::size_t>(std::abs(to.second - from.second)), 'h');
        rng.shuffle(std::span<char>(moves));
        Vehicle veh;
        veh.departure = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, p.departure_window))));
        int r = from.first, c = from.second;
        for (char m : moves) {
            int nr = r, nc = c;
            if (m == 'v') nr += to.first > r ? 1 : -1;
            else nc += to.second > c ? 1 : -1;
            veh.route.push_back(link_of.at({node(r, c), node(nr, nc)}));
            r = nr;
            c = nc;
        }
        inst.vehicles.push_back(std::move(veh));
    }
    inst.validate();
    return inst;
}

TrafficInstance make_preset(const std::string& name) { return make_grid_instance(preset_parameters(name)); }

TrafficObjective::TrafficObjective(TrafficInstance instance)
    : instance_(std::move(instance)), dim_(instance_.phase_count()) {
    instance_.validate();
}

double TrafficObjective::evaluate(std::span<const double> x) const {
    if (x.size() != dim_)
        throw DimensionError("plan has " + std::to_string(x.size()) + " entries, instance has " +
                             std::to_string(dim_) + " phases");
    return objective(instance_, TrafficPlan::from_values(x)).value;
}

}  // namespace ptme
