#include "ptme/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ptme/error.hpp"

namespace ptme {

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

/// Twice the mid-rank of every pooled value (integers), plus the tie term
/// sum(t^3 - t) over tie groups.
struct PooledRanks {
    std::vector<long long> doubled;  // first n_a entries belong to sample a
    double tie_term = 0.0;
};

PooledRanks pooled_ranks(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size() + b.size();
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    PooledRanks r;
    r.doubled.assign(n, 0);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        // ranks i+1 .. j+1 share the mid-rank (i + j + 2) / 2
        const long long twice_mid = static_cast<long long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) r.doubled[order[k]] = twice_mid;
        const double t = static_cast<double>(j - i + 1);
        r.tie_term += t * t * t - t;
        i = j + 1;
    }
    return r;
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 MannWhitneyMethod method) {
    if (a.empty() || b.empty()) throw DomainError("Mann-Whitney U needs two non-empty samples");
    const std::size_t na = a.size(), nb = b.size(), n = na + nb;
    const PooledRanks ranks = pooled_ranks(a, b);
    long long twice_ra = 0;
    for (std::size_t i = 0; i < na; ++i) twice_ra += ranks.doubled[i];

    MannWhitneyResult res;
    const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
    res.u_a = static_cast<double>(twice_ra) / 2.0 - dna * (dna + 1.0) / 2.0;
    res.u_b = dna * dnb - res.u_a;

    const bool exact = method == MannWhitneyMethod::exact ||
                       (method == MannWhitneyMethod::automatic && n <= 20);
    res.exact = exact;
    if (exact) {
        // Distribution of the doubled rank sum over all C(n, na) subsets.
        const long long max_sum = std::accumulate(ranks.doubled.begin(), ranks.doubled.end(), 0LL);
        std::vector<std::vector<double>> ways(na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
        ways[0][0] = 1.0;
        for (std::size_t item = 0; item < n; ++item) {
            const auto r = static_cast<std::size_t>(ranks.doubled[item]);
            for (std::size_t k = std::min(item + 1, na); k >= 1; --k) {
                auto& dst = ways[k];
                const auto& src = ways[k - 1];
                for (std::size_t s = max_sum; s >= r; --s) {
                    dst[s] += src[s - r];
                    if (s == r) break;
                }
            }
        }
        const long long centre = static_cast<long long>(na * (n + 1));  // 2 * E[R_a]
        const long long observed = std::llabs(twice_ra - centre);
        double extreme = 0.0, total = 0.0;
        for (std::size_t s = 0; s < ways[na].size(); ++s) {
            const double w = ways[na][s];
            if (w == 0.0) continue;
            total += w;
            if (std::llabs(static_cast<long long>(s) - centre) >= observed) extreme += w;
        }
        res.p_value = std::min(1.0, extreme / total);
        return res;
    }

    const double dn = static_cast<double>(n);
    const double mu = dna * dnb / 2.0;
    const double var = dna * dnb / 12.0 * ((dn + 1.0) - ranks.tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        res.p_value = 1.0;
        return res;
    }
    const double z = std::max(0.0, std::abs(res.u_a - mu) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return res;
}

LogNormalFit fit_lognormal(std::span<const double> y) {
    if (y.empty()) throw DomainError("log-normal fit of an empty sample");
    double sum = 0.0;
    for (double v : y) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw DomainError("log-normal fit requires finite positive values");
        sum += std::log(v);
    }
    const double n = static_cast<double>(y.size());
    LogNormalFit f;
    f.mu = sum / n;
    double ss = 0.0;
    for (double v : y) ss += (std::log(v) - f.mu) * (std::log(v) - f.mu);
    f.sigma2 = ss / n;
    f.mean = std::exp(f.mu + f.sigma2 / 2.0);
    f.variance = std::expm1(f.sigma2) * std::exp(2.0 * f.mu + f.sigma2);
    return f;
}

double average_entropy(const DesignMatrix& matrix, const DesignSpace& space) {
    if (!space.integer_valued())
        throw ConfigError("entropy is defined on integer-valued spaces only");
    if (static_cast<std::size_t>(matrix.cols()) != space.dim())
        throw DimensionError("design matrix width does not match space dimension");
    if (matrix.rows() == 0) throw DomainError("entropy of an empty design");
    const double n = static_cast<double>(matrix.rows());
    double total = 0.0;
    std::size_t free_vars = 0;
    std::vector<double> counts;
    for (std::size_t j = 0; j < space.dim(); ++j) {
        if (!space.is_free(j)) continue;
        ++free_vars;
        const auto lo = static_cast<long long>(std::ceil(space.lower(j)));
        const auto hi = static_cast<long long>(std::floor(space.upper(j)));
        counts.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            const double v = matrix(i, static_cast<Eigen::Index>(j));
            const double r = std::round(v);
            if (std::abs(v - r) > 1e-9 || r < static_cast<double>(lo) || r > static_cast<double>(hi))
                throw DomainError("entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") is not on the integer grid of its bounds");
            counts[static_cast<std::size_t>(static_cast<long long>(r) - lo)] += 1.0;
        }
        double h = 0.0;
        for (double c : counts) {
            if (c > 0.0) h -= c / n * std::log2(c / n);
        }
        total += h;
    }
    return free_vars ? total / static_cast<double>(free_vars) : 0.0;
}

}  // namespace ptme
