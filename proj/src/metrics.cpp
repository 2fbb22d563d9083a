#include "ptme/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ptme/error.hpp"

namespace ptme {

namespace {

void check_pairs(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size())
        throw DimensionError("true/predicted lists differ in length (" +
                             std::to_string(y_true.size()) + " vs " +
                             std::to_string(y_pred.size()) + ")");
    if (y_true.size() < 2) throw DimensionError("at least two prediction pairs are required");
}

/// Number of tied pairs among consecutive equal runs of a sorted sequence.
template <class Eq>
std::int64_t tied_pairs(std::size_t n, Eq&& equal_to_prev) {
    std::int64_t total = 0;
    std::int64_t run = 1;
    for (std::size_t i = 1; i < n; ++i) {
        if (equal_to_prev(i)) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total + run * (run - 1) / 2;
}

/// Sorts `v` ascending and returns the number of inversions removed.
std::int64_t count_inversions(std::vector<double>& v) {
    std::vector<double> buf(v.size());
    std::int64_t swaps = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, v.size());
            const std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    swaps += static_cast<std::int64_t>(mid - i);
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
        }
        v.swap(buf);
    }
    return swaps;
}

}  // namespace

double mape(std::span<const double> y_true, std::span<const double> y_pred) {
    check_pairs(y_true, y_pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == 0.0)
            throw DomainError("MAPE undefined: true value at index " + std::to_string(i) +
                              " is zero");
        sum += std::abs(y_pred[i] - y_true[i]) / std::abs(y_true[i]);
    }
    return sum / static_cast<double>(y_true.size()) * 100.0;
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    check_pairs(y_true, y_pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double r = y_pred[i] - y_true[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(y_true.size()));
}

// Knight's algorithm: sort by (true, pred); ties in true and joint ties are
// runs in that order; discordant pairs are the inversions of the pred column.
PairCounts kendall_pair_counts(std::span<const double> y_true, std::span<const double> y_pred) {
    check_pairs(y_true, y_pred);
    const std::size_t n = y_true.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (y_true[a] != y_true[b]) return y_true[a] < y_true[b];
        return y_pred[a] < y_pred[b];
    });

    const std::int64_t ties_true = tied_pairs(
        n, [&](std::size_t i) { return y_true[order[i]] == y_true[order[i - 1]]; });
    const std::int64_t ties_joint = tied_pairs(n, [&](std::size_t i) {
        return y_true[order[i]] == y_true[order[i - 1]] &&
               y_pred[order[i]] == y_pred[order[i - 1]];
    });

    std::vector<double> pred(n);
    for (std::size_t i = 0; i < n; ++i) pred[i] = y_pred[order[i]];
    const std::int64_t discordant = count_inversions(pred);
    const std::int64_t ties_pred =
        tied_pairs(n, [&](std::size_t i) { return pred[i] == pred[i - 1]; });

    const std::int64_t total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    PairCounts c;
    c.tied_both = ties_joint;
    c.tied_true_only = ties_true - ties_joint;
    c.tied_pred_only = ties_pred - ties_joint;
    c.discordant = discordant;
    c.concordant = total - c.tied_true_only - c.tied_pred_only - c.tied_both - discordant;
    return c;
}

double tau_a_from_counts(const PairCounts& c) {
    const std::int64_t total =
        c.concordant + c.discordant + c.tied_true_only + c.tied_pred_only + c.tied_both;
    return static_cast<double>(c.concordant - c.discordant) / static_cast<double>(total);
}

std::optional<double> tau_b_from_counts(const PairCounts& c) {
    const double informative = static_cast<double>(c.concordant + c.discordant);
    const double left = informative + static_cast<double>(c.tied_true_only);
    const double right = informative + static_cast<double>(c.tied_pred_only);
    if (left == 0.0 && right == 0.0) return std::nullopt;
    if (left == 0.0 || right == 0.0) return 0.0;
    return static_cast<double>(c.concordant - c.discordant) / std::sqrt(left * right);
}

double kendall_tau_a(std::span<const double> y_true, std::span<const double> y_pred) {
    return tau_a_from_counts(kendall_pair_counts(y_true, y_pred));
}

std::optional<double> kendall_tau_b(std::span<const double> y_true,
                                    std::span<const double> y_pred) {
    return tau_b_from_counts(kendall_pair_counts(y_true, y_pred));
}

}  // namespace ptme
