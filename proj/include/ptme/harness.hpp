#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ptme/design_space.hpp"
#include "ptme/mlp.hpp"
#include "ptme/objective.hpp"
#include "ptme/telemetry.hpp"

namespace ptme {

struct StudyConfig {
    std::vector<SamplingMethod> methods{SamplingMethod::urs, SamplingMethod::lhs};
    std::vector<std::size_t> sizes{100, 1000, 10000};
    std::size_t n_test = 1000;
    std::size_t trials = 3;
    std::uint64_t seed = 1;
    std::size_t inference_batch = 1;  // k predictions per measured region
    TrainParams train;
    bool keep_models = false;

    /// Full-size protocol: sizes 1k..1M, 10 trials, 10,000 test samples.
    static StudyConfig paper_scale();
    void validate() const;
};

struct PrecisionMetrics {
    double mape = 0.0;
    double rmse = 0.0;
    double tau_a = 0.0;
    std::optional<double> tau_b;
};

PrecisionMetrics precision_metrics(std::span<const double> y_true, std::span<const double> y_pred);

/// One measured region as written to study_raw.csv. Training rows also carry
/// the trial's precision metrics and final training loss.
struct RegionRow {
    std::string method;
    std::size_t size = 0;
    std::size_t trial = 0;
    std::string phase;  // "train" or "infer"
    std::size_t index = 0;
    std::size_t items = 1;  // predictions covered by the region
    MeasurementRecord record;  // per item for inference rows
    std::optional<double> train_mse;
    std::optional<PrecisionMetrics> precision;
};

struct TrialResult {
    std::size_t trial = 0;
    MeasurementRecord training;
    double train_mse = 0.0;
    std::vector<MeasurementRecord> inference;  // per-prediction (divided by batch size)
    std::vector<double> predictions;           // one per test sample
    PrecisionMetrics precision;
};

struct StudyCell {
    SamplingMethod method = SamplingMethod::urs;
    std::size_t size = 0;
    std::vector<TrialResult> trials;
    std::vector<MlpModel> models;  // filled when keep_models is set
};

struct PtmeStudyReport {
    StudyConfig config;
    std::string objective_name;
    DesignMatrix test_x;
    std::vector<double> test_y;
    std::vector<StudyCell> cells;
    bool energy_available = false;
    /// Trials whose tau-a and tau-b differ (only possible with ties).
    std::size_t tau_mismatches = 0;

    const StudyCell& cell(SamplingMethod method, std::size_t size) const;
    std::vector<RegionRow> raw_rows() const;
};

using StudyProgress = std::function<void(const std::string& message)>;

/// Runs the measuring procedure: one shared URS test set with true values,
/// then for every (method, size) and trial a fresh training sample, a
/// measured training run and measured inference over the test set.
PtmeStudyReport run_study(const StudyConfig& config, const Objective& objective,
                          const DesignSpace& space, Meter& meter,
                          const StudyProgress& progress = {});

enum class MetricDirection { lower_is_better, higher_is_better };

struct SummaryRow {
    std::string method;
    std::size_t size = 0;
    std::string phase;   // train, infer or precision
    std::string metric;  // cpu_energy_j, dram_energy_j, wall_time_s, peak_memory_bytes, mape, ...
    std::size_t count = 0;
    double mean = 0.0;
    double stdev = 0.0;
    std::optional<double> p_value_vs_other;  // Mann-Whitney against the other method
    bool better_than_other = false;          // significantly better than the other method
    bool best_across_sizes = false;          // best mean among sizes of this method
};

/// Mean/stdev per (method, size, metric) with significance flags. Energy
/// metrics are omitted when no row carries them.
std::vector<SummaryRow> summarize_rows(const std::vector<RegionRow>& rows);

struct NormalizedRow {
    std::string method;
    std::size_t size = 0;
    std::string phase;
    std::string metric;
    double mean = 0.0;
    double normalized = 1.0;    // mean / mean at the baseline size
    double ideal_linear = 1.0;  // size / baseline size
};

/// Divides every metric by its value at the smallest size of the same method.
/// Throws ConfigError when a method lacks the overall smallest size.
std::vector<NormalizedRow> normalize_report(const std::vector<SummaryRow>& summary);

void write_raw_csv(std::ostream& out, const std::vector<RegionRow>& rows);
std::vector<RegionRow> read_raw_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_normalized_csv(std::ostream& out, const std::vector<NormalizedRow>& rows);

/// Ordered key=value manifest.
class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void set(const std::string& key, std::size_t value) { set(key, static_cast<std::int64_t>(value)); }
    void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    void write(std::ostream& out) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Records the framework's resolved modelling choices that the protocol
/// leaves open (input encoding, normalization, accounting rules).
void add_design_choices(Manifest& manifest);

}  // namespace ptme
