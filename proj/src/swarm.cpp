#include "ptme/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ptme/error.hpp"
#include "ptme/format.hpp"
#include "ptme/rng.hpp"
#include "ptme/statistics.hpp"

namespace ptme {

void PsoParams::validate() const {
    if (swarm_size == 0) throw ConfigError("swarm size must be positive");
    if (max_evaluations < swarm_size)
        throw ConfigError("evaluation budget must cover at least the initial swarm");
    if (velocity_truncation <= 0.0) throw ConfigError("velocity truncation factor must be positive");
}

double PsoParams::inertia(std::size_t generation) const {
    const std::size_t total = (max_evaluations + swarm_size - 1) / swarm_size;
    const std::size_t updates = total > 1 ? total - 1 : 1;  // generations after initialization
    if (updates <= 1) return inertia_start;
    const double t = std::min(1.0, static_cast<double>(generation) / static_cast<double>(updates - 1));
    return inertia_start + (inertia_end - inertia_start) * t;
}

PsoResult pso_run(const Evaluator& objective, const DesignSpace& space, const PsoParams& params,
                  std::uint64_t seed, const SwarmObserver& observer) {
    params.validate();
    if (objective.dim() != space.dim())
        throw DimensionError("objective dimension " + std::to_string(objective.dim()) +
                             " does not match space dimension " + std::to_string(space.dim()));
    const auto n = static_cast<Eigen::Index>(params.swarm_size);
    const auto d = static_cast<Eigen::Index>(space.dim());
    Rng rng(seed);

    std::vector<double> vmax(space.dim());
    for (std::size_t j = 0; j < space.dim(); ++j)
        vmax[j] = params.velocity_truncation * (space.upper(j) - space.lower(j));

    DesignMatrix x(n, d), v = DesignMatrix::Zero(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            x(i, j) = space.is_free(jj) ? rng.uniform(space.lower(jj), space.upper(jj)) : space.fixed(jj);
        }

    const auto evaluate = [&](const DesignMatrix& positions) {
        std::vector<double> f =
            objective.evaluate(space.integer_valued() ? quantize(positions, space) : positions);
        if (f.size() != static_cast<std::size_t>(n)) throw DimensionError("evaluator returned wrong count");
        return f;
    };

    PsoResult result;
    std::vector<double> fitness = evaluate(x);
    DesignMatrix personal = x;
    std::vector<double> personal_fit = fitness;
    std::size_t best = static_cast<std::size_t>(
        std::min_element(personal_fit.begin(), personal_fit.end()) - personal_fit.begin());
    Eigen::RowVectorXd global = personal.row(static_cast<Eigen::Index>(best));
    double global_fit = personal_fit[best];

    std::size_t evaluations = params.swarm_size;
    std::size_t generation = 0;
    result.trajectory.push_back({generation, evaluations, global_fit});
    if (observer) observer(generation, x, v);

    while (evaluations < params.max_evaluations) {
        const double w = params.inertia(generation);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const auto jj = static_cast<std::size_t>(j);
                const double r1 = rng.uniform01();
                const double r2 = rng.uniform01();
                if (!space.is_free(jj)) continue;
                double vel = w * v(i, j) + params.phi_personal * r1 * (personal(i, j) - x(i, j)) +
                             params.phi_global * r2 * (global[j] - x(i, j));
                vel = std::clamp(vel, -vmax[jj], vmax[jj]);
                v(i, j) = vel;
                x(i, j) = std::clamp(x(i, j) + vel, space.lower(jj), space.upper(jj));
            }
        }
        fitness = evaluate(x);
        for (std::size_t i = 0; i < params.swarm_size; ++i) {
            if (fitness[i] < personal_fit[i]) {
                personal_fit[i] = fitness[i];
                personal.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(i));
            }
        }
        for (std::size_t i = 0; i < params.swarm_size; ++i) {
            if (personal_fit[i] < global_fit) {
                global_fit = personal_fit[i];
                global = personal.row(static_cast<Eigen::Index>(i));
            }
        }
        evaluations += params.swarm_size;
        ++generation;
        result.trajectory.push_back({generation, evaluations, global_fit});
        if (observer) observer(generation, x, v);
    }

    DesignMatrix best_row = global;
    if (space.integer_valued()) best_row = quantize(best_row, space);
    result.best_position.assign(best_row.data(), best_row.data() + best_row.size());
    result.best_fitness = global_fit;
    result.evaluations = evaluations;
    return result;
}

SapsoResult sapso_run(const Evaluator& surrogate, const Evaluator& real_objective,
                      const DesignSpace& space, const PsoParams& params, std::uint64_t seed) {
    if (surrogate.dim() != space.dim() || real_objective.dim() != space.dim())
        throw DimensionError("surrogate input dimension " + std::to_string(surrogate.dim()) +
                             " does not match space dimension " + std::to_string(space.dim()));
    CountingEvaluator counted_surrogate(surrogate);
    CountingEvaluator counted_real(real_objective);
    SapsoResult out;
    out.search = pso_run(counted_surrogate, space, params, seed);
    out.surrogate_value = out.search.best_fitness;
    DesignMatrix best(1, static_cast<Eigen::Index>(space.dim()));
    std::copy(out.search.best_position.begin(), out.search.best_position.end(), best.data());
    out.real_value = counted_real.evaluate(best).front();
    out.surrogate_evaluations = counted_surrogate.count();
    out.real_evaluations = counted_real.count();
    return out;
}

SapsoResult sapso_run(const MlpModel& surrogate, const Objective& real_objective,
                      const DesignSpace& space, const PsoParams& params, std::uint64_t seed) {
    SurrogateEvaluator s(surrogate);
    ObjectiveEvaluator r(real_objective);
    return sapso_run(s, r, space, params, seed);
}

GroupStats group_stats(const RunGroup& g) {
    if (g.final_values.empty()) throw ConfigError("group '" + g.name + "' is empty");
    GroupStats s;
    s.name = g.name;
    s.count = g.final_values.size();
    s.min = *std::min_element(g.final_values.begin(), g.final_values.end());
    s.max = *std::max_element(g.final_values.begin(), g.final_values.end());
    s.q1 = quantile(g.final_values, 0.25);
    s.median = quantile(g.final_values, 0.5);
    s.q3 = quantile(g.final_values, 0.75);
    s.mean = summarize(g.final_values).mean;
    return s;
}

ComparisonTable compare_runs(const std::vector<RunGroup>& groups) {
    if (groups.size() < 2) throw ConfigError("a comparison needs at least two groups");
    ComparisonTable table;
    for (const auto& g : groups) table.groups.push_back(group_stats(g));
    for (std::size_t a = 0; a < groups.size(); ++a) {
        for (std::size_t b = a + 1; b < groups.size(); ++b) {
            const auto mw = mann_whitney_u(groups[a].final_values, groups[b].final_values);
            table.tests.push_back({groups[a].name, groups[b].name, mw.u_a, mw.p_value,
                                   mw.p_value < kSignificanceLevel});
        }
    }
    return table;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory) {
    out << "generation,FE,best_fitness\n";
    for (const auto& p : trajectory)
        out << p.generation << ',' << p.evaluations << ',' << format_double(p.best_fitness) << '\n';
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
    out << "group,n,min,q1,median,q3,max,mean\n";
    for (const auto& g : table.groups)
        out << g.name << ',' << g.count << ',' << format_double(g.min) << ',' << format_double(g.q1)
            << ',' << format_double(g.median) << ',' << format_double(g.q3) << ','
            << format_double(g.max) << ',' << format_double(g.mean) << '\n';
}

void write_pairwise_csv(std::ostream& out, const ComparisonTable& table) {
    out << "group_a,group_b,u_a,p_value,significant\n";
    for (const auto& t : table.tests)
        out << t.a << ',' << t.b << ',' << format_double(t.u_a) << ',' << format_double(t.p_value)
            << ',' << (t.significant ? 1 : 0) << '\n';
}

}  // namespace ptme
