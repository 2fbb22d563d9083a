#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ptme/design_space.hpp"
#include "ptme/mlp.hpp"
#include "ptme/objective.hpp"

namespace ptme {

struct PsoParams {
    std::size_t swarm_size = 100;
    std::size_t max_evaluations = 30000;
    double phi_personal = 2.05;
    double phi_global = 2.05;
    double inertia_start = 0.5;
    double inertia_end = 0.1;
    double velocity_truncation = 0.5;  // |v_j| <= factor * (upper_j - lower_j)

    void validate() const;
    /// Inertia for generation g: linear from start to end over the
    /// max_evaluations / swarm_size generations of the run.
    double inertia(std::size_t generation) const;
};

/// Fitness of a whole generation at once; rows are (quantized) positions.
/// Particles are independent within a generation, so batching does not
/// change the dynamics.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> evaluate(const DesignMatrix& positions) const = 0;
};

/// Routes every row through an Objective.
class ObjectiveEvaluator final : public Evaluator {
public:
    explicit ObjectiveEvaluator(const Objective& objective) : objective_(objective) {}
    std::size_t dim() const override { return objective_.dim(); }
    std::vector<double> evaluate(const DesignMatrix& positions) const override {
        return evaluate_rows(objective_, positions);
    }

private:
    const Objective& objective_;
};

/// Batched surrogate prediction.
class SurrogateEvaluator final : public Evaluator {
public:
    explicit SurrogateEvaluator(const MlpModel& model) : model_(model) {}
    std::size_t dim() const override { return model_.input_dim(); }
    std::vector<double> evaluate(const DesignMatrix& positions) const override {
        return model_.predict(positions);
    }

private:
    const MlpModel& model_;
};

struct TrajectoryPoint {
    std::size_t generation = 0;
    std::size_t evaluations = 0;
    double best_fitness = 0.0;
};

struct PsoResult {
    std::vector<double> best_position;  // quantized for integer spaces
    double best_fitness = 0.0;
    std::vector<TrajectoryPoint> trajectory;
    std::size_t evaluations = 0;
};

/// Per-generation observer, called after each generation's updates. Receives
/// continuous positions and velocities (one particle per row).
using SwarmObserver =
    std::function<void(std::size_t generation, const DesignMatrix& positions, const DesignMatrix& velocities)>;

/// Global-best PSO: random initial swarm, zero velocities, per-dimension
/// U(0,1) draws, velocity clamp, hard position clamp; positions are quantized
/// only when evaluated on integer spaces. Stops once the evaluation count
/// reaches max_evaluations.
PsoResult pso_run(const Evaluator& objective, const DesignSpace& space, const PsoParams& params,
                  std::uint64_t seed, const SwarmObserver& observer = {});

struct SapsoResult {
    PsoResult search;           // trajectory of surrogate fitness
    double surrogate_value = 0.0;
    double real_value = 0.0;
    std::size_t surrogate_evaluations = 0;
    std::size_t real_evaluations = 0;
};

/// Runs the swarm on the surrogate, then evaluates the final best once with
/// the real objective.
SapsoResult sapso_run(const Evaluator& surrogate, const Evaluator& real_objective,
                      const DesignSpace& space, const PsoParams& params, std::uint64_t seed);
SapsoResult sapso_run(const MlpModel& surrogate, const Objective& real_objective,
                      const DesignSpace& space, const PsoParams& params, std::uint64_t seed);

/// Evaluator wrapper that counts calls (rows evaluated).
class CountingEvaluator final : public Evaluator {
public:
    explicit CountingEvaluator(const Evaluator& inner) : inner_(inner) {}
    std::size_t dim() const override { return inner_.dim(); }
    std::vector<double> evaluate(const DesignMatrix& positions) const override {
        count_ += static_cast<std::size_t>(positions.rows());
        return inner_.evaluate(positions);
    }
    std::size_t count() const noexcept { return count_; }

private:
    const Evaluator& inner_;
    mutable std::size_t count_ = 0;
};

struct RunGroup {
    std::string name;
    std::vector<double> final_values;
};

struct GroupStats {
    std::string name;
    std::size_t count = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

struct PairwiseTest {
    std::string a, b;
    double u_a = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct ComparisonTable {
    std::vector<GroupStats> groups;
    std::vector<PairwiseTest> tests;  // every unordered pair of groups
};

/// Boxplot statistics of one group. Throws ConfigError when it is empty.
GroupStats group_stats(const RunGroup& group);

/// Boxplot statistics per group and Mann-Whitney tests between groups.
ComparisonTable compare_runs(const std::vector<RunGroup>& groups);

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory);
void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
void write_pairwise_csv(std::ostream& out, const ComparisonTable& table);

}  // namespace ptme
