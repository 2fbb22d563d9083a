#include "ptme/objective.hpp"

#include <cmath>
#include <numbers>

#include "ptme/error.hpp"

namespace ptme {

std::vector<double> evaluate_rows(const Objective& objective, const DesignMatrix& x) {
    if (static_cast<std::size_t>(x.cols()) != objective.dim())
        throw DimensionError("design width " + std::to_string(x.cols()) +
                             " does not match objective dimension " +
                             std::to_string(objective.dim()));
    std::vector<double> y(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        y[static_cast<std::size_t>(i)] = objective.evaluate(row_span(x, i));
    return y;
}

SyntheticObjective::SyntheticObjective(SyntheticKind kind, std::size_t dim,
                                       std::vector<double> shift, DesignSpace space)
    : kind_(kind), dim_(dim), shift_(std::move(shift)), space_(std::move(space)) {
    if (dim_ == 0) throw ConfigError("synthetic objective needs a positive dimension");
    if (shift_.empty()) shift_.assign(dim_, 0.0);
    if (shift_.size() != dim_) throw DimensionError("shift vector length differs from dimension");
    if (space_.dim() != dim_) space_ = DesignSpace::box(dim_, 0.0, 1.0);
}

SyntheticKind SyntheticObjective::parse_kind(const std::string& name) {
    if (name == "sphere") return SyntheticKind::sphere;
    if (name == "rastrigin" || name == "rastrigin-like") return SyntheticKind::rastrigin;
    if (name == "linear") return SyntheticKind::linear;
    throw ConfigError("unknown synthetic objective '" + name + "'");
}

std::string SyntheticObjective::name() const {
    switch (kind_) {
        case SyntheticKind::sphere: return "sphere";
        case SyntheticKind::rastrigin: return "rastrigin";
        case SyntheticKind::linear: return "linear";
    }
    return "?";
}

double SyntheticObjective::evaluate(std::span<const double> x) const {
    if (x.size() != dim_)
        throw DimensionError("point has " + std::to_string(x.size()) + " entries, objective expects " +
                             std::to_string(dim_));
    double sum = 0.0;
    switch (kind_) {
        case SyntheticKind::sphere:
            for (std::size_t j = 0; j < dim_; ++j) sum += (x[j] - shift_[j]) * (x[j] - shift_[j]);
            return 1.0 + sum;
        case SyntheticKind::rastrigin:
            for (std::size_t j = 0; j < dim_; ++j) {
                const double z = x[j] - shift_[j];
                sum += z * z - 10.0 * std::cos(2.0 * std::numbers::pi * z);
            }
            return 1.0 + 10.0 * static_cast<double>(dim_) + sum;
        case SyntheticKind::linear:
            for (double v : x) sum += v;
            return 1.0 + sum;
    }
    return 0.0;
}

double synthetic_objective(const std::string& name, std::span<const double> x) {
    return SyntheticObjective(SyntheticObjective::parse_kind(name), x.size()).evaluate(x);
}

}  // namespace ptme
