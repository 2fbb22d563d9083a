#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace ptme {

/// Precision metrics between true and predicted objective values. All
/// functions require equal-length inputs with at least two entries and throw
/// DimensionError otherwise.

/// Mean absolute percentage error, in percent. Throws DomainError on a zero truth.
double mape(std::span<const double> y_true, std::span<const double> y_pred);

double rmse(std::span<const double> y_true, std::span<const double> y_pred);

/// Pair classification over all n(n-1)/2 unordered index pairs.
struct PairCounts {
    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t tied_true_only = 0;
    std::int64_t tied_pred_only = 0;
    std::int64_t tied_both = 0;
};

/// O(n log n) counting (sort plus merge-sort inversion count).
PairCounts kendall_pair_counts(std::span<const double> y_true, std::span<const double> y_pred);

/// Kendall's tau-a: ties count toward neither class, denominator n(n-1)/2.
double kendall_tau_a(std::span<const double> y_true, std::span<const double> y_pred);

/// Kendall's tau-b. Empty when both lists are entirely tied. When exactly one
/// list is entirely tied the numerator is necessarily zero and 0 is returned.
std::optional<double> kendall_tau_b(std::span<const double> y_true, std::span<const double> y_pred);

double tau_a_from_counts(const PairCounts& c);
std::optional<double> tau_b_from_counts(const PairCounts& c);

}  // namespace ptme
