#include "ptme/harness.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "ptme/error.hpp"
#include "ptme/format.hpp"
#include "ptme/metrics.hpp"
#include "ptme/rng.hpp"
#include "ptme/statistics.hpp"

namespace ptme {

StudyConfig StudyConfig::paper_scale() {
    StudyConfig c;
    c.sizes = {1000, 10000, 100000, 1000000};
    c.n_test = 10000;
    c.trials = 10;
    return c;
}

void StudyConfig::validate() const {
    if (methods.empty()) throw ConfigError("at least one sampling method is required");
    if (sizes.empty()) throw ConfigError("at least one training size is required");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) throw ConfigError("training sizes must be positive");
        if (i > 0 && sizes[i] <= sizes[i - 1])
            throw ConfigError("training sizes must be strictly increasing");
    }
    if (trials < 1) throw ConfigError("trial count must be at least 1");
    if (n_test < 2) throw ConfigError("the test set needs at least two samples");
    if (inference_batch < 1) throw ConfigError("inference batch factor must be at least 1");
    if (train.epochs < 0 || train.batch_size == 0 || !(train.learning_rate > 0.0))
        throw ConfigError("invalid training parameters");
}

PrecisionMetrics precision_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
    PrecisionMetrics m;
    m.mape = mape(y_true, y_pred);
    m.rmse = rmse(y_true, y_pred);
    const PairCounts counts = kendall_pair_counts(y_true, y_pred);
    m.tau_a = tau_a_from_counts(counts);
    m.tau_b = tau_b_from_counts(counts);
    return m;
}

const StudyCell& PtmeStudyReport::cell(SamplingMethod method, std::size_t size) const {
    for (const auto& c : cells)
        if (c.method == method && c.size == size) return c;
    throw ConfigError("study has no cell for " + to_string(method) + " / " + std::to_string(size));
}

std::vector<RegionRow> PtmeStudyReport::raw_rows() const {
    std::vector<RegionRow> rows;
    for (const auto& c : cells) {
        for (const auto& t : c.trials) {
            RegionRow tr;
            tr.method = to_string(c.method);
            tr.size = c.size;
            tr.trial = t.trial;
            tr.phase = "train";
            tr.items = c.size;
            tr.record = t.training;
            tr.train_mse = t.train_mse;
            tr.precision = t.precision;
            rows.push_back(tr);
            const std::size_t k = config.inference_batch;
            for (std::size_t i = 0; i < t.inference.size(); ++i) {
                RegionRow ir;
                ir.method = tr.method;
                ir.size = c.size;
                ir.trial = t.trial;
                ir.phase = "infer";
                ir.index = i;
                ir.items = std::min(k, test_y.size() - i * k);
                ir.record = t.inference[i];
                rows.push_back(std::move(ir));
            }
        }
    }
    return rows;
}

PtmeStudyReport run_study(const StudyConfig& config, const Objective& objective,
                          const DesignSpace& space, Meter& meter, const StudyProgress& progress) {
    config.validate();
    if (objective.dim() != space.dim())
        throw DimensionError("objective dimension does not match the design space");
    const auto say = [&](const std::string& m) {
        if (progress) progress(m);
    };

    PtmeStudyReport report;
    report.config = config;
    report.objective_name = objective.name();
    report.energy_available = meter.probe().available();

    // Common test data, sampled once.
    report.test_x = sample_design(space, SamplingMethod::urs, config.n_test, derive_seed(config.seed, "test"));
    report.test_y = evaluate_rows(objective, report.test_x);
    say("test set: " + std::to_string(config.n_test) + " samples evaluated");

    const MlpSpec spec = MlpSpec::for_space(space);
    const std::size_t k = config.inference_batch;
    const std::size_t n_test = config.n_test;

    for (SamplingMethod method : config.methods) {
        for (std::size_t size : config.sizes) {
            StudyCell cell;
            cell.method = method;
            cell.size = size;
            const std::string label = to_string(method) + "/" + std::to_string(size);
            for (std::size_t trial = 0; trial < config.trials; ++trial) {
                Dataset data;
                data.x = sample_design(space, method, size, derive_seed(config.seed, "sample/" + label, trial));
                data.y = evaluate_rows(objective, data.x);

                MlpModel initial = build(spec, derive_seed(config.seed, "init/" + label, trial));
                const std::uint64_t shuffle_seed = derive_seed(config.seed, "shuffle/" + label, trial);
                auto [trained, training_record] = meter.measure(
                    [&] { return train(std::move(initial), data, config.train, shuffle_seed); });

                TrialResult result;
                result.trial = trial;
                result.training = training_record;
                result.train_mse = trained.final_mse;
                const MlpModel& model = trained.model;

                result.predictions.assign(n_test, 0.0);
                result.inference.reserve((n_test + k - 1) / k);
                for (std::size_t start = 0; start < n_test; start += k) {
                    const std::size_t stop = std::min(n_test, start + k);
                    const MeasurementRecord rec = meter.measure([&] {
                        for (std::size_t i = start; i < stop; ++i)
                            result.predictions[i] =
                                model.predict(row_span(report.test_x, static_cast<Eigen::Index>(i)));
                    });
                    result.inference.push_back(rec.per_item(stop - start));
                }

                result.precision = precision_metrics(report.test_y, result.predictions);
                if (!result.precision.tau_b || *result.precision.tau_b != result.precision.tau_a)
                    ++report.tau_mismatches;
                if (config.keep_models) cell.models.push_back(model);
                say(label + " trial " + std::to_string(trial + 1) + "/" + std::to_string(config.trials) +
                    ": train " + format_double(training_record.wall_time_s) + " s, MAPE " +
                    format_double(result.precision.mape));
                cell.trials.push_back(std::move(result));
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

namespace {

struct MetricDef {
    const char* phase;
    const char* name;
    MetricDirection direction;
};

constexpr MetricDef kMetrics[] = {
    {"train", "cpu_energy_j", MetricDirection::lower_is_better},
    {"train", "dram_energy_j", MetricDirection::lower_is_better},
    {"train", "wall_time_s", MetricDirection::lower_is_better},
    {"train", "peak_memory_bytes", MetricDirection::lower_is_better},
    {"train", "train_mse", MetricDirection::lower_is_better},
    {"infer", "cpu_energy_j", MetricDirection::lower_is_better},
    {"infer", "dram_energy_j", MetricDirection::lower_is_better},
    {"infer", "wall_time_s", MetricDirection::lower_is_better},
    {"infer", "peak_memory_bytes", MetricDirection::lower_is_better},
    {"precision", "mape", MetricDirection::lower_is_better},
    {"precision", "rmse", MetricDirection::lower_is_better},
    {"precision", "tau_a", MetricDirection::higher_is_better},
    {"precision", "tau_b", MetricDirection::higher_is_better},
};

std::optional<double> metric_value(const RegionRow& row, const MetricDef& def) {
    const std::string phase = def.phase;
    const std::string name = def.name;
    if (phase == "precision") {
        if (row.phase != "train" || !row.precision) return std::nullopt;
        if (name == "mape") return row.precision->mape;
        if (name == "rmse") return row.precision->rmse;
        if (name == "tau_a") return row.precision->tau_a;
        return row.precision->tau_b;
    }
    if (row.phase != phase) return std::nullopt;
    if (name == "cpu_energy_j") return row.record.cpu_energy_j;
    if (name == "dram_energy_j") return row.record.dram_energy_j;
    if (name == "wall_time_s") return row.record.wall_time_s;
    if (name == "peak_memory_bytes") return row.record.peak_memory_bytes;
    return row.train_mse;
}

bool better(double a, double b, MetricDirection d) {
    return d == MetricDirection::lower_is_better ? a < b : a > b;
}

}  // namespace

std::vector<SummaryRow> summarize_rows(const std::vector<RegionRow>& rows) {
    std::vector<std::string> methods;
    std::set<std::size_t> sizes;
    for (const auto& r : rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
        sizes.insert(r.size);
    }
    // values[(metric index, method, size)]
    std::map<std::tuple<std::size_t, std::string, std::size_t>, std::vector<double>> values;
    for (const auto& r : rows) {
        for (std::size_t m = 0; m < std::size(kMetrics); ++m) {
            if (auto v = metric_value(r, kMetrics[m])) values[{m, r.method, r.size}].push_back(*v);
        }
    }

    std::vector<SummaryRow> out;
    for (std::size_t m = 0; m < std::size(kMetrics); ++m) {
        const MetricDef& def = kMetrics[m];
        for (const auto& method : methods) {
            std::vector<SummaryRow> block;
            for (std::size_t size : sizes) {
                auto it = values.find({m, method, size});
                if (it == values.end() || it->second.empty()) continue;
                const Summary s = summarize(it->second);
                SummaryRow row;
                row.method = method;
                row.size = size;
                row.phase = def.phase;
                row.metric = def.name;
                row.count = s.count;
                row.mean = s.mean;
                row.stdev = s.stdev;
                if (methods.size() == 2) {
                    const std::string& other = methods[0] == method ? methods[1] : methods[0];
                    auto jt = values.find({m, other, size});
                    if (jt != values.end() && !jt->second.empty()) {
                        const auto mw = mann_whitney_u(it->second, jt->second);
                        row.p_value_vs_other = mw.p_value;
                        row.better_than_other = mw.p_value < kSignificanceLevel &&
                                                better(s.mean, summarize(jt->second).mean, def.direction);
                    }
                }
                block.push_back(row);
            }
            if (block.empty()) continue;
            std::size_t best = 0;
            for (std::size_t i = 1; i < block.size(); ++i)
                if (better(block[i].mean, block[best].mean, def.direction)) best = i;
            block[best].best_across_sizes = true;
            out.insert(out.end(), block.begin(), block.end());
        }
    }
    return out;
}

std::vector<NormalizedRow> normalize_report(const std::vector<SummaryRow>& summary) {
    if (summary.empty()) throw ConfigError("cannot normalize an empty summary");
    std::size_t baseline = summary.front().size;
    for (const auto& r : summary) baseline = std::min(baseline, r.size);
    std::map<std::tuple<std::string, std::string, std::string>, double> base;
    for (const auto& r : summary)
        if (r.size == baseline) base[{r.method, r.phase, r.metric}] = r.mean;

    std::vector<NormalizedRow> out;
    for (const auto& r : summary) {
        auto it = base.find({r.method, r.phase, r.metric});
        if (it == base.end())
            throw ConfigError("method '" + r.method + "' has no baseline row at size " +
                              std::to_string(baseline) + " for " + r.phase + "/" + r.metric);
        NormalizedRow n;
        n.method = r.method;
        n.size = r.size;
        n.phase = r.phase;
        n.metric = r.metric;
        n.mean = r.mean;
        n.normalized = r.size == baseline ? 1.0 : r.mean / it->second;
        n.ideal_linear = static_cast<double>(r.size) / static_cast<double>(baseline);
        out.push_back(n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
    if (trim(s).empty()) return std::nullopt;
    return parse_double(s);
}

constexpr const char* kRawHeader =
    "method,size,trial,phase,index,items,cpu_energy_j,dram_energy_j,wall_time_s,peak_memory_bytes,"
    "energy_available,train_mse,mape,rmse,tau_a,tau_b";

}  // namespace

void write_raw_csv(std::ostream& out, const std::vector<RegionRow>& rows) {
    out << kRawHeader << '\n';
    for (const auto& r : rows) {
        out << r.method << ',' << r.size << ',' << r.trial << ',' << r.phase << ',' << r.index << ','
            << r.items << ',' << opt(r.record.cpu_energy_j) << ',' << opt(r.record.dram_energy_j) << ','
            << format_double(r.record.wall_time_s) << ',' << format_double(r.record.peak_memory_bytes)
            << ',' << (r.record.energy_available() ? "true" : "false") << ',' << opt(r.train_mse);
        if (r.precision) {
            out << ',' << format_double(r.precision->mape) << ',' << format_double(r.precision->rmse)
                << ',' << format_double(r.precision->tau_a) << ',' << opt(r.precision->tau_b);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

std::vector<RegionRow> read_raw_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || std::string(trim(line)) != kRawHeader)
        throw ConfigError("not a study_raw.csv file (unexpected header)");
    std::vector<RegionRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        if (f.size() != 16)
            throw ConfigError("study_raw.csv line " + std::to_string(line_no) + ": expected 16 fields");
        RegionRow r;
        r.method = f[0];
        r.size = static_cast<std::size_t>(parse_int(f[1]));
        r.trial = static_cast<std::size_t>(parse_int(f[2]));
        r.phase = f[3];
        r.index = static_cast<std::size_t>(parse_int(f[4]));
        r.items = static_cast<std::size_t>(parse_int(f[5]));
        r.record.cpu_energy_j = parse_opt(f[6]);
        r.record.dram_energy_j = parse_opt(f[7]);
        r.record.wall_time_s = parse_double(f[8]);
        r.record.peak_memory_bytes = parse_double(f[9]);
        r.train_mse = parse_opt(f[11]);
        if (!trim(f[12]).empty()) {
            PrecisionMetrics p;
            p.mape = parse_double(f[12]);
            p.rmse = parse_double(f[13]);
            p.tau_a = parse_double(f[14]);
            p.tau_b = parse_opt(f[15]);
            r.precision = p;
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "method,size,phase,metric,count,mean,stdev,p_value_vs_other,better_than_other,best_across_sizes\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.size << ',' << r.phase << ',' << r.metric << ',' << r.count << ','
            << format_double(r.mean) << ',' << format_double(r.stdev) << ',' << opt(r.p_value_vs_other)
            << ',' << (r.better_than_other ? 1 : 0) << ',' << (r.best_across_sizes ? 1 : 0) << '\n';
}

void write_normalized_csv(std::ostream& out, const std::vector<NormalizedRow>& rows) {
    out << "method,size,phase,metric,mean,normalized,ideal_linear\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.size << ',' << r.phase << ',' << r.metric << ','
            << format_double(r.mean) << ',' << format_double(r.normalized) << ','
            << format_double(r.ideal_linear) << '\n';
}

void Manifest::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }
void Manifest::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }

void Manifest::write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

void add_design_choices(Manifest& m) {
    m.set("info.surrogate_inputs", "integer plans (quantized after sampling)");
    m.set("info.integer_sampling_interval", "[lower-0.5, upper+0.5] rounding cells");
    m.set("info.input_normalization", "affine per variable from [lower, upper] to [0, 1]");
    m.set("info.target_normalization", "standardized by training mean and population std");
    m.set("info.train_mse_units", "standardized target units");
    m.set("info.weight_init", "glorot uniform, zero biases");
    m.set("info.adam", "beta1=0.9 beta2=0.999 eps=1e-8");
    m.set("info.travel_time_accounting", "departure to arrival; departure to horizon if undelivered");
    m.set("info.waiting_time_accounting", "steps queued or held at origin");
    m.set("info.zero_red_phases", "contribute 0 to the green/red ratio");
    m.set("info.energy_scope", "machine-wide RAPL package and dram domains");
    m.set("info.entropy_base", "2");
    m.set("info.pso_random_draws", "per dimension");
    m.set("info.pso_velocity_clamp", "|v_j| <= lambda * (upper_j - lower_j)");
    m.set("info.pso_inertia_schedule", "linear in generation index");
}

}  // namespace ptme
