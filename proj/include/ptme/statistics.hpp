#pragma once

#include <span>
#include <vector>

#include "ptme/design_space.hpp"

namespace ptme {

struct Summary {
    double mean = 0.0;
    double stdev = 0.0;  // sample standard deviation (n - 1); 0 for n < 2
    std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

/// Linear-interpolation quantile (type 7) of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

enum class MannWhitneyMethod { automatic, exact, normal };

struct MannWhitneyResult {
    double u_a = 0.0;  // U statistic of the first sample
    double u_b = 0.0;
    double p_value = 1.0;  // two-sided
    bool exact = false;
};

/// Two-sided Mann-Whitney U test with mid-ranks for ties. `automatic` uses
/// exact enumeration of the rank-sum distribution when n_a + n_b <= 20 and a
/// tie-corrected normal approximation with continuity correction otherwise.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 MannWhitneyMethod method = MannWhitneyMethod::automatic);

inline constexpr double kSignificanceLevel = 0.05;

struct LogNormalFit {
    double mu = 0.0;        // mean of ln y
    double sigma2 = 0.0;    // population variance of ln y
    double mean = 0.0;      // exp(mu + sigma2 / 2)
    double variance = 0.0;  // (exp(sigma2) - 1) exp(2 mu + sigma2)
};

/// Maximum-likelihood log-normal fit. Throws DomainError on non-positive data.
LogNormalFit fit_lognormal(std::span<const double> y);

/// Average over free variables of the base-2 Shannon entropy of each
/// column's histogram on the integer grid [lower, upper]. Requires an
/// integer-valued space; throws ConfigError otherwise.
double average_entropy(const DesignMatrix& matrix, const DesignSpace& space);

}  // namespace ptme
