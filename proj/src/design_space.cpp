#include "ptme/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "ptme/error.hpp"
#include "ptme/format.hpp"
#include "ptme/rng.hpp"

namespace ptme {

DesignSpace::DesignSpace(std::vector<double> lower, std::vector<double> upper,
                         std::vector<std::optional<double>> fixed_value, bool integer_valued)
    : lower_(std::move(lower)), upper_(std::move(upper)), integer_valued_(integer_valued) {
    const std::size_t d = lower_.size();
    if (d == 0) throw ConfigError("design space must have at least one variable");
    if (upper_.size() != d || (!fixed_value.empty() && fixed_value.size() != d))
        throw ConfigError("design space arrays differ in length");
    free_.assign(d, true);
    for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(lower_[j]) || !std::isfinite(upper_[j]))
            throw ConfigError("non-finite bound for x" + std::to_string(j));
        if (!fixed_value.empty() && fixed_value[j]) {
            lower_[j] = upper_[j] = *fixed_value[j];
            free_[j] = false;
            continue;
        }
        if (lower_[j] > upper_[j])
            throw ConfigError("lower bound exceeds upper bound for x" + std::to_string(j));
        if (lower_[j] == upper_[j]) free_[j] = false;
    }
}

DesignSpace DesignSpace::box(std::size_t dim, double lower, double upper, bool integer_valued) {
    return DesignSpace(std::vector<double>(dim, lower), std::vector<double>(dim, upper), {},
                       integer_valued);
}

DesignSpace DesignSpace::traffic_default(std::size_t dim) {
    std::vector<std::optional<double>> fixed(dim);
    for (std::size_t j = 1; j < dim; j += 2) fixed[j] = 4.0;
    return DesignSpace(std::vector<double>(dim, 4.0), std::vector<double>(dim, 60.0),
                       std::move(fixed), true);
}

std::size_t DesignSpace::free_count() const noexcept {
    return static_cast<std::size_t>(std::count(free_.begin(), free_.end(), true));
}

double DesignSpace::sampling_lower(std::size_t j) const {
    return integer_valued_ && free_[j] ? lower_[j] - 0.5 : lower_[j];
}

double DesignSpace::sampling_upper(std::size_t j) const {
    return integer_valued_ && free_[j] ? upper_[j] + 0.5 : upper_[j];
}

bool DesignSpace::contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] >= lower_[j] && x[j] <= upper_[j])) return false;
    }
    return true;
}

namespace {

void check_count(std::size_t n) {
    if (n == 0) throw ConfigError("sample count must be at least 1");
}

DesignMatrix fixed_filled(const DesignSpace& space, std::size_t n) {
    DesignMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(space.dim()));
    for (std::size_t j = 0; j < space.dim(); ++j) {
        if (!space.is_free(j)) m.col(static_cast<Eigen::Index>(j)).setConstant(space.fixed(j));
    }
    return m;
}

}  // namespace

DesignMatrix uniform_random_sample(const DesignSpace& space, std::size_t n, std::uint64_t seed) {
    check_count(n);
    DesignMatrix m = fixed_filled(space, n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < space.dim(); ++j) {
            if (!space.is_free(j)) continue;
            const double lo = space.sampling_lower(j);
            const double hi = space.sampling_upper(j);
            double v = rng.uniform(lo, hi);
            if (v >= hi) v = std::nextafter(hi, lo);
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return m;
}

DesignMatrix latin_hypercube_sample(const DesignSpace& space, std::size_t n, std::uint64_t seed) {
    check_count(n);
    DesignMatrix m = fixed_filled(space, n);
    Rng rng(seed);
    const double count = static_cast<double>(n);
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 0; j < space.dim(); ++j) {
        if (!space.is_free(j)) continue;
        const double a = space.sampling_lower(j);
        const double b = space.sampling_upper(j);
        std::iota(perm.begin(), perm.end(), std::size_t{1});
        rng.shuffle(std::span<std::size_t>(perm));
        for (std::size_t i = 0; i < n; ++i) {
            const double k = static_cast<double>(perm[i]);
            const double u = rng.uniform_open01();
            double v = a + (b - a) * (k - u) / count;
            // Keep rounding from landing on a neighbouring stratum.
            const double lo = a + (b - a) * (k - 1.0) / count;
            const double hi = a + (b - a) * k / count;
            if (v < lo) v = lo;
            if (v >= hi && perm[i] != n) v = std::nextafter(hi, lo);
            if (v > b) v = b;
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return m;
}

DesignMatrix quantize(const DesignMatrix& matrix, const DesignSpace& space) {
    if (static_cast<std::size_t>(matrix.cols()) != space.dim())
        throw DimensionError("design matrix width does not match space dimension");
    DesignMatrix out = matrix;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < space.dim(); ++j) {
            if (!space.is_free(j)) continue;
            double& v = out(i, static_cast<Eigen::Index>(j));
            v = std::clamp(std::round(v), space.lower(j), space.upper(j));
        }
    }
    return out;
}

std::string to_string(SamplingMethod m) { return m == SamplingMethod::urs ? "urs" : "lhs"; }

SamplingMethod parse_sampling_method(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "urs") return SamplingMethod::urs;
    if (lower == "lhs") return SamplingMethod::lhs;
    throw ConfigError("unknown sampling method '" + name + "' (expected urs or lhs)");
}

DesignMatrix sample_design(const DesignSpace& space, SamplingMethod method, std::size_t n,
                           std::uint64_t seed) {
    DesignMatrix m = method == SamplingMethod::urs ? uniform_random_sample(space, n, seed)
                                                   : latin_hypercube_sample(space, n, seed);
    return space.integer_valued() ? quantize(m, space) : m;
}

void write_design_csv(std::ostream& out, const DesignMatrix& matrix) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) out << (j ? ",x" : "x") << j;
    out << '\n';
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            if (j) out << ',';
            out << format_double(matrix(i, j));
        }
        out << '\n';
    }
}

DesignMatrix read_design_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("design CSV is empty");
    const auto header = split(trim(line), ',');
    const std::size_t d = header.size();
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        if (fields.size() != d)
            throw ConfigError("design CSV line " + std::to_string(line_no) + ": expected " +
                              std::to_string(d) + " fields");
        for (const auto& f : fields) {
            try {
                values.push_back(parse_double(f));
            } catch (const ConfigError& e) {
                throw ConfigError("design CSV line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        ++rows;
    }
    DesignMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

}  // namespace ptme
