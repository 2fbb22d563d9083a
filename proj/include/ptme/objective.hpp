#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ptme/design_space.hpp"

namespace ptme {

/// An expensive black-box objective to be minimized. Implementations must
/// be pure so that concurrent evaluation of distinct points is safe.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual double evaluate(std::span<const double> x) const = 0;
    /// Search domain the objective is normally studied on.
    virtual DesignSpace default_space() const = 0;
};

/// Evaluates every row of `x`.
std::vector<double> evaluate_rows(const Objective& objective, const DesignMatrix& x);

enum class SyntheticKind { sphere, rastrigin, linear };

/// Closed-form test functions, offset by +1 so they stay positive on
/// non-negative domains:
///   sphere     1 + sum (x_j - c_j)^2
///   rastrigin  1 + 10 D + sum ((x_j - c_j)^2 - 10 cos(2 pi (x_j - c_j)))
///   linear     1 + sum x_j
class SyntheticObjective final : public Objective {
public:
    SyntheticObjective(SyntheticKind kind, std::size_t dim, std::vector<double> shift = {},
                       DesignSpace space = DesignSpace::box(1, 0.0, 1.0));
    /// Accepts "sphere", "rastrigin" (or "rastrigin-like") and "linear".
    static SyntheticKind parse_kind(const std::string& name);

    std::string name() const override;
    std::size_t dim() const override { return dim_; }
    double evaluate(std::span<const double> x) const override;
    DesignSpace default_space() const override { return space_; }

    const std::vector<double>& shift() const noexcept { return shift_; }

private:
    SyntheticKind kind_;
    std::size_t dim_;
    std::vector<double> shift_;
    DesignSpace space_;
};

double synthetic_objective(const std::string& name, std::span<const double> x);

}  // namespace ptme
