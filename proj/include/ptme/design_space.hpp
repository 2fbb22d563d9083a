#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ptme {

/// Row-major so that each sample is a contiguous span.
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const DesignMatrix& m, Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

/// Box-bounded search domain with optional per-variable fixed values.
///
/// A variable is free when it has no fixed value and lower < upper. A
/// variable whose bounds coincide behaves as fixed at that value.
class DesignSpace {
public:
    DesignSpace(std::vector<double> lower, std::vector<double> upper,
                std::vector<std::optional<double>> fixed_value, bool integer_valued);

    /// Every variable in [lower, upper], none fixed.
    static DesignSpace box(std::size_t dim, double lower, double upper, bool integer_valued = false);

    /// Traffic-plan default: free variables in [4, 60]; every second variable
    /// (zero-based positions 1, 3, 5, ...) fixed at 4; integer valued.
    static DesignSpace traffic_default(std::size_t dim);

    std::size_t dim() const noexcept { return lower_.size(); }
    bool integer_valued() const noexcept { return integer_valued_; }
    double lower(std::size_t j) const { return lower_[j]; }
    double upper(std::size_t j) const { return upper_[j]; }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    bool is_free(std::size_t j) const { return free_[j]; }
    std::size_t free_count() const noexcept;
    /// Value of a non-free variable.
    double fixed(std::size_t j) const { return lower_[j]; }

    /// Interval the samplers draw from. For integer spaces this is the union
    /// of rounding cells [lower - 1/2, upper + 1/2] so every grid value is
    /// equally likely after quantization.
    double sampling_lower(std::size_t j) const;
    double sampling_upper(std::size_t j) const;

    bool contains(std::span<const double> x) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<bool> free_;
    bool integer_valued_;
};

struct Dataset {
    DesignMatrix x;
    std::vector<double> y;

    std::size_t size() const noexcept { return y.size(); }
};

DesignMatrix uniform_random_sample(const DesignSpace& space, std::size_t n, std::uint64_t seed);

/// Latin hypercube design: each free column has exactly one sample per
/// equal-width stratum of the sampling interval.
DesignMatrix latin_hypercube_sample(const DesignSpace& space, std::size_t n, std::uint64_t seed);

/// Rounds free entries to the nearest integer and clamps them to bounds.
DesignMatrix quantize(const DesignMatrix& matrix, const DesignSpace& space);

enum class SamplingMethod { urs, lhs };

std::string to_string(SamplingMethod m);
SamplingMethod parse_sampling_method(const std::string& name);

/// Dispatches on the method and quantizes when the space is integer valued.
DesignMatrix sample_design(const DesignSpace& space, SamplingMethod method, std::size_t n,
                           std::uint64_t seed);

/// CSV with header x0,...,x{D-1}. Integral values are written without a
/// fractional part; others with round-trip precision.
void write_design_csv(std::ostream& out, const DesignMatrix& matrix);
DesignMatrix read_design_csv(std::istream& in);

}  // namespace ptme
