// ptme: sampling, surrogate training, PTME studies and swarm optimization.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "ptme/design_space.hpp"
#include "ptme/error.hpp"
#include "ptme/format.hpp"
#include "ptme/harness.hpp"
#include "ptme/mlp.hpp"
#include "ptme/objective.hpp"
#include "ptme/rng.hpp"
#include "ptme/statistics.hpp"
#include "ptme/swarm.hpp"
#include "ptme/telemetry.hpp"
#include "ptme/traffic.hpp"

namespace fs = std::filesystem;
using namespace ptme;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ProblemArgs {
    std::string preset;
    std::string instance;
    std::string objective;
};

struct Problem {
    std::unique_ptr<Objective> objective;
    DesignSpace space = DesignSpace::box(1, 0, 1);
};

void add_problem_options(CLI::App* app, ProblemArgs& p) {
    auto* g = app->add_option_group("problem", "objective to study (exactly one)");
    g->add_option("--preset", p.preset, "bundled traffic preset (malaga-like, stockholm-like, paris-like)");
    g->add_option("--instance", p.instance, "traffic instance file");
    g->add_option("--objective", p.objective, "synthetic:NAME:D[:LO:HI] with NAME in sphere, rastrigin, linear");
    g->require_option(1);
}

// synthetic:NAME:D[:LO:HI]; the shift sits at the centre of the box.
Problem synthetic_problem(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3 && parts.size() != 5)
        throw ConfigError("objective '" + spec + "' must look like synthetic:NAME:D or synthetic:NAME:D:LO:HI");
    if (parts[0] != "synthetic") throw ConfigError("unknown objective family '" + parts[0] + "'");
    const auto kind = SyntheticObjective::parse_kind(parts[1]);
    const long long d = parse_int(parts[2]);
    if (d < 1) throw ConfigError("objective dimension must be positive");
    const double lo = parts.size() == 5 ? parse_double(parts[3]) : 0.0;
    const double hi = parts.size() == 5 ? parse_double(parts[4]) : 1.0;
    auto space = DesignSpace::box(static_cast<std::size_t>(d), lo, hi);
    std::vector<double> shift;
    if (kind != SyntheticKind::linear) shift.assign(static_cast<std::size_t>(d), (lo + hi) / 2.0);
    Problem p;
    p.objective = std::make_unique<SyntheticObjective>(kind, static_cast<std::size_t>(d), shift, space);
    p.space = space;
    return p;
}

Problem resolve_problem(const ProblemArgs& a) {
    if (!a.objective.empty()) return synthetic_problem(a.objective);
    Problem p;
    p.objective = std::make_unique<TrafficObjective>(a.preset.empty() ? load_instance(a.instance)
                                                                       : make_preset(a.preset));
    p.space = p.objective->default_space();
    return p;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& part : split(text, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            seeds.push_back(static_cast<std::uint64_t>(parse_int(part)));
            continue;
        }
        const long long lo = parse_int(part.substr(0, dots)), hi = parse_int(part.substr(dots + 2));
        if (lo < 0 || hi < lo) throw ConfigError("bad seed range '" + part + "'");
        for (long long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (seeds.empty()) throw ConfigError("no seeds given");
    return seeds;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

// Resolved option values of a subcommand, keyed config.<long name>.
void record_options(Manifest& m, const CLI::App* app) {
    std::vector<const CLI::Option*> options = app->get_options();
    for (const CLI::App* group : app->get_subcommands({}))
        for (const CLI::Option* o : group->get_options()) options.push_back(o);
    for (const CLI::Option* o : options) {
        const std::string name = o->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        std::string value;
        if (o->get_expected_min() == 0) {
            value = o->count() > 0 && o->as<bool>() ? "true" : "false";
        } else if (o->count() > 0) {
            const auto& r = o->results();
            for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
        } else {
            value = o->get_default_str();
        }
        m.set("config." + name, value);
    }
}

void write_manifest(const fs::path& dir, Manifest& m) {
    auto out = open_out(dir / "manifest.txt");
    m.write(out);
}

void record_measurement(Manifest& m, const std::string& prefix, const MeasurementRecord& r) {
    m.set(prefix + ".wall_time_s", r.wall_time_s);
    m.set(prefix + ".peak_memory_bytes", r.peak_memory_bytes);
    m.set(prefix + ".cpu_energy_j", r.cpu_energy_j ? format_double(*r.cpu_energy_j) : std::string("na"));
    m.set(prefix + ".dram_energy_j", r.dram_energy_j ? format_double(*r.dram_energy_j) : std::string("na"));
}

void log(bool quiet, const std::string& msg) {
    if (!quiet) std::cerr << msg << '\n';
}

// ---------------------------------------------------------------------------

struct Common {
    std::string out = "out";
    std::string rapl_root = EnergyProbe::kDefaultRoot;
    bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--out", c.out, "output directory");
    app->add_option("--rapl-root", c.rapl_root, "powercap hierarchy holding the RAPL counters");
    app->add_flag("--quiet", c.quiet, "suppress progress messages");
}

struct GenerateArgs {
    ProblemArgs problem;
    Common common;
    std::string method = "lhs";
    std::size_t n = 100;
    std::uint64_t seed = 1;
};

void cmd_generate(const GenerateArgs& a, const CLI::App* app) {
    const SamplingMethod method = parse_sampling_method(a.method);
    if (a.n == 0) throw ConfigError("--n must be positive");
    const Problem p = resolve_problem(a.problem);

    const DesignMatrix x = sample_design(p.space, method, a.n, a.seed);
    const std::vector<double> y = evaluate_rows(*p.objective, x);

    make_dir(a.common.out);
    {
        auto out = open_out(fs::path(a.common.out) / "design.csv");
        write_design_csv(out, x);
    }
    {
        auto out = open_out(fs::path(a.common.out) / "objective.csv");
        out << "y\n";
        for (double v : y) out << format_double(v) << '\n';
    }
    Manifest m;
    m.set("command", "generate");
    record_options(m, app);
    m.set("run.objective", p.objective->name());
    m.set("run.dim", p.space.dim());
    if (p.space.integer_valued()) m.set("result.average_entropy_bits", average_entropy(x, p.space));
    add_design_choices(m);
    write_manifest(a.common.out, m);
    log(a.common.quiet, "wrote " + std::to_string(a.n) + " samples to " + a.common.out);
}

std::vector<double> read_values_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (std::string(trim(line)) != "y") throw ConfigError("'" + path + "' must start with the header 'y'");
    std::vector<double> y;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            y.push_back(parse_double(line));
        } catch (const ConfigError& e) {
            throw ConfigError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return y;
}

Dataset read_dataset(const std::string& design, const std::string& values) {
    std::ifstream in(design);
    if (!in) throw ConfigError("cannot open '" + design + "'");
    Dataset d;
    d.x = read_design_csv(in);
    d.y = read_values_csv(values);
    if (static_cast<std::size_t>(d.x.rows()) != d.y.size())
        throw ConfigError("design has " + std::to_string(d.x.rows()) + " rows but values has " +
                          std::to_string(d.y.size()));
    return d;
}

struct TrainArgs {
    ProblemArgs problem;
    Common common;
    std::string design;
    std::string values;
    TrainParams params;
    std::uint64_t seed = 1;
};

void add_train_params(CLI::App* app, TrainParams& p) {
    app->add_option("--epochs", p.epochs, "training epochs")->check(CLI::NonNegativeNumber);
    app->add_option("--batch-size", p.batch_size, "mini-batch size")->check(CLI::PositiveNumber);
    app->add_option("--lr", p.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
}

void cmd_train(const TrainArgs& a, const CLI::App* app) {
    const Problem p = resolve_problem(a.problem);
    const Dataset data = read_dataset(a.design, a.values);
    if (static_cast<std::size_t>(data.x.cols()) != p.space.dim())
        throw ConfigError("design has " + std::to_string(data.x.cols()) + " columns but the objective has dimension " +
                          std::to_string(p.space.dim()));
    if (data.size() == 0) throw ConfigError("training data is empty");

    Meter meter{EnergyProbe(a.common.rapl_root)};
    MlpModel initial = build(MlpSpec::for_space(p.space), derive_seed(a.seed, "init"));
    auto [result, record] =
        meter.measure([&] { return train(std::move(initial), data, a.params, derive_seed(a.seed, "shuffle")); });

    make_dir(a.common.out);
    save_model((fs::path(a.common.out) / "model.bin").string(), result.model);
    {
        auto out = open_out(fs::path(a.common.out) / "training.csv");
        out << "epoch,mse\n";
        for (std::size_t e = 0; e < result.epoch_mse.size(); ++e)
            out << e + 1 << ',' << format_double(result.epoch_mse[e]) << '\n';
    }
    Manifest m;
    m.set("command", "train");
    record_options(m, app);
    m.set("run.objective", p.objective->name());
    m.set("run.architecture", std::to_string(p.space.dim()) + "-" +
                                  std::to_string(result.model.spec().hidden_dims[0]) + "-" +
                                  std::to_string(result.model.spec().hidden_dims[1]) + "-1");
    m.set("run.energy_available", meter.probe().available());
    m.set("result.initial_mse", result.initial_mse);
    m.set("result.final_mse", result.final_mse);
    record_measurement(m, "result.training", record);
    add_design_choices(m);
    write_manifest(a.common.out, m);
    log(a.common.quiet, "final training MSE " + format_double(result.final_mse));
}

struct StudyArgs {
    ProblemArgs problem;
    Common common;
    std::vector<std::string> methods{"urs", "lhs"};
    std::vector<std::size_t> sizes{100, 1000, 10000};
    std::size_t n_test = 1000;
    std::size_t trials = 3;
    std::uint64_t seed = 1;
    std::size_t batch_k = 1;
    bool paper_scale = false;
    bool save_models = false;
    TrainParams params;
};

void cmd_ptme(StudyArgs a, const CLI::App* app) {
    StudyConfig c;
    if (a.paper_scale) {
        c = StudyConfig::paper_scale();
        if (app->get_option("--sizes")->count() == 0) a.sizes = c.sizes;
        if (app->get_option("--n-test")->count() == 0) a.n_test = c.n_test;
        if (app->get_option("--trials")->count() == 0) a.trials = c.trials;
    }
    c.methods.clear();
    for (const auto& m : a.methods) c.methods.push_back(parse_sampling_method(m));
    c.sizes = a.sizes;
    c.n_test = a.n_test;
    c.trials = a.trials;
    c.seed = a.seed;
    c.inference_batch = a.batch_k;
    c.train = a.params;
    c.keep_models = a.save_models;
    c.validate();
    const Problem p = resolve_problem(a.problem);

    Meter meter{EnergyProbe(a.common.rapl_root)};
    if (!meter.probe().available())
        log(a.common.quiet, "RAPL counters unavailable under " + a.common.rapl_root + "; energy columns left empty");
    const PtmeStudyReport report = run_study(c, *p.objective, p.space, meter, [&](const std::string& msg) {
        log(a.common.quiet, msg);
    });
    const auto rows = report.raw_rows();
    const auto summary = summarize_rows(rows);
    const auto normalized = normalize_report(summary);

    const fs::path dir = a.common.out;
    make_dir(dir);
    {
        auto out = open_out(dir / "study_raw.csv");
        write_raw_csv(out, rows);
    }
    {
        auto out = open_out(dir / "study_summary.csv");
        write_summary_csv(out, summary);
    }
    {
        auto out = open_out(dir / "study_normalized.csv");
        write_normalized_csv(out, normalized);
    }
    if (a.save_models) {
        make_dir(dir / "models");
        for (const auto& cell : report.cells)
            for (std::size_t t = 0; t < cell.models.size(); ++t)
                save_model((dir / "models" / (to_string(cell.method) + "_" + std::to_string(cell.size) + "_t" +
                                              std::to_string(t) + ".bin"))
                               .string(),
                           cell.models[t]);
    }
    Manifest m;
    m.set("command", "ptme");
    record_options(m, app);
    m.set("run.objective", report.objective_name);
    m.set("run.dim", p.space.dim());
    m.set("run.energy_available", report.energy_available);
    m.set("run.heap_hooks", heap::hooks_installed());
    m.set("result.tau_mismatches", report.tau_mismatches);
    add_design_choices(m);
    write_manifest(dir, m);
    if (report.tau_mismatches > 0)
        log(a.common.quiet, "warning: tau-a and tau-b differ in " + std::to_string(report.tau_mismatches) + " trials");
}

struct OptimizeArgs {
    ProblemArgs problem;
    Common common;
    std::string mode = "pso";
    std::vector<std::string> models;
    bool oracle_surrogate = false;
    bool with_baseline = false;
    std::string seeds = "1..10";
    PsoParams params;
};

void cmd_optimize(const OptimizeArgs& a, const CLI::App* app) {
    if (a.mode != "pso" && a.mode != "sapso") throw ConfigError("--mode must be pso or sapso");
    const auto seeds = parse_seeds(a.seeds);
    a.params.validate();
    const Problem p = resolve_problem(a.problem);

    struct Group {
        std::string name;
        std::unique_ptr<MlpModel> model;  // empty: real objective (pso) or oracle surrogate
        bool surrogate = false;
    };
    std::vector<Group> groups;
    if (a.mode == "pso" || a.with_baseline) groups.push_back({"pso", nullptr, false});
    if (a.mode == "sapso") {
        if (a.models.empty() && !a.oracle_surrogate)
            throw ConfigError("sapso mode needs --model or --oracle-surrogate");
        if (a.oracle_surrogate) groups.push_back({"sapso-oracle", nullptr, true});
        for (const auto& path : a.models) {
            auto model = std::make_unique<MlpModel>(load_model(path));
            if (model->input_dim() != p.space.dim())
                throw ConfigError("model '" + path + "' takes " + std::to_string(model->input_dim()) +
                                  " inputs but the objective has dimension " + std::to_string(p.space.dim()));
            std::string name = "sapso-" + fs::path(path).stem().string();
            for (const auto& g : groups)
                if (g.name == name) throw ConfigError("duplicate model name '" + name + "'");
            groups.push_back({name, std::move(model), true});
        }
    }

    const fs::path dir = a.common.out;
    make_dir(dir / "trajectories");
    const ObjectiveEvaluator real(*p.objective);
    std::vector<RunGroup> runs;
    std::ostringstream results;
    results << "group,seed,surrogate_value,real_value,surrogate_evaluations,real_evaluations\n";
    for (const auto& g : groups) {
        RunGroup run{g.name, {}};
        for (std::uint64_t seed : seeds) {
            std::vector<TrajectoryPoint> trajectory;
            if (!g.surrogate) {
                const CountingEvaluator counted(real);
                const PsoResult r = pso_run(counted, p.space, a.params, seed);
                trajectory = r.trajectory;
                run.final_values.push_back(r.best_fitness);
                results << g.name << ',' << seed << ",," << format_double(r.best_fitness) << ",0,"
                        << counted.count() << '\n';
            } else {
                std::unique_ptr<Evaluator> owned;
                if (g.model) owned = std::make_unique<SurrogateEvaluator>(*g.model);
                const Evaluator& surrogate = g.model ? *owned : static_cast<const Evaluator&>(real);
                const SapsoResult r = sapso_run(surrogate, real, p.space, a.params, seed);
                trajectory = r.search.trajectory;
                run.final_values.push_back(r.real_value);
                results << g.name << ',' << seed << ',' << format_double(r.surrogate_value) << ','
                        << format_double(r.real_value) << ',' << r.surrogate_evaluations << ','
                        << r.real_evaluations << '\n';
            }
            auto out = open_out(dir / "trajectories" / (g.name + "_seed" + std::to_string(seed) + ".csv"));
            write_trajectory_csv(out, trajectory);
            log(a.common.quiet, g.name + " seed " + std::to_string(seed) + ": " + format_double(run.final_values.back()));
        }
        runs.push_back(std::move(run));
    }
    {
        auto out = open_out(dir / "results.csv");
        out << results.str();
    }
    ComparisonTable table;
    if (runs.size() >= 2) {
        table = compare_runs(runs);
        auto out = open_out(dir / "pairwise.csv");
        write_pairwise_csv(out, table);
    } else {
        table.groups.push_back(group_stats(runs.front()));
    }
    {
        auto out = open_out(dir / "comparison.csv");
        write_comparison_csv(out, table);
    }
    Manifest m;
    m.set("command", "optimize");
    record_options(m, app);
    m.set("run.objective", p.objective->name());
    m.set("run.dim", p.space.dim());
    add_design_choices(m);
    write_manifest(dir, m);
}

struct ReportArgs {
    ProblemArgs problem;
    Common common;
    std::string raw;
    std::string design;
    std::string values;
};

void cmd_report(const ReportArgs& a, const CLI::App* app) {
    if (a.raw.empty() && a.values.empty()) throw ConfigError("report needs --raw and/or --values");
    std::vector<RegionRow> rows;
    if (!a.raw.empty()) {
        std::ifstream in(a.raw);
        if (!in) throw ConfigError("cannot open '" + a.raw + "'");
        rows = read_raw_csv(in);
    }
    std::optional<Dataset> data;
    std::optional<Problem> problem;
    if (!a.values.empty()) {
        if (a.design.empty()) data = Dataset{DesignMatrix(), read_values_csv(a.values)};
        else data = read_dataset(a.design, a.values);
        if (!a.design.empty() && a.problem.preset.empty() && a.problem.instance.empty() && a.problem.objective.empty())
            throw ConfigError("--design needs --preset, --instance or --objective for the grid bounds");
        if (!a.design.empty()) problem = resolve_problem(a.problem);
    }

    const fs::path dir = a.common.out;
    make_dir(dir);
    Manifest m;
    m.set("command", "report");
    record_options(m, app);
    if (!rows.empty()) {
        const auto summary = summarize_rows(rows);
        auto out = open_out(dir / "study_summary.csv");
        write_summary_csv(out, summary);
        auto norm = open_out(dir / "study_normalized.csv");
        write_normalized_csv(norm, normalize_report(summary));
    }
    if (data) {
        const LogNormalFit fit = fit_lognormal(data->y);
        const Summary s = summarize(data->y);
        auto out = open_out(dir / "distribution.csv");
        out << "n,sample_mean,sample_variance,lognormal_mean,lognormal_variance,mu,sigma2,average_entropy_bits\n";
        out << data->size() << ',' << format_double(s.mean) << ',' << format_double(s.stdev * s.stdev) << ','
            << format_double(fit.mean) << ',' << format_double(fit.variance) << ',' << format_double(fit.mu) << ','
            << format_double(fit.sigma2) << ',';
        if (problem && problem->space.integer_valued()) {
            if (static_cast<std::size_t>(data->x.cols()) != problem->space.dim())
                throw ConfigError("design width does not match the objective dimension");
            out << format_double(average_entropy(data->x, problem->space));
        }
        out << '\n';
    }
    write_manifest(dir, m);
}

// ---------------------------------------------------------------------------

// key=value lines become --key=value tokens; empty values are skipped.
// Manifest files work too: "config." prefixes are stripped and other dotted
// keys are ignored.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + " line " + std::to_string(line_no) + ": expected key=value");
        std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (key.rfind("config.", 0) == 0) key = key.substr(7);
        else if (key.find('.') != std::string::npos || key == "command") continue;
        if (value.empty()) continue;
        if (key.empty()) throw ConfigError(path + " line " + std::to_string(line_no) + ": empty key");
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

std::string option_key(const std::string& token) {
    if (token.rfind("--", 0) != 0) return {};
    return token.substr(2, token.find('=') - 2);
}

// Splices the --config file contents right after the subcommand name,
// skipping keys that are also given as flags.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string path;
        std::size_t used = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            used = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            used = 1;
        } else {
            continue;
        }
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + used));
        std::set<std::string> given;
        for (const auto& a : args) given.insert(option_key(a));
        std::vector<std::string> tokens;
        for (auto& tok : config_tokens(path))
            if (!given.count(option_key(tok))) tokens.push_back(std::move(tok));
        args.insert(args.begin() + 2 > args.end() ? args.end() : args.begin() + 2, tokens.begin(), tokens.end());
        break;
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate PTME studies and surrogate-assisted swarm optimization"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", "ptme 0.1.0");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "sample a design and evaluate the objective");
    add_problem_options(g, gen.problem);
    add_common(g, gen.common);
    g->add_option("--method", gen.method, "urs or lhs");
    g->add_option("--n", gen.n, "number of samples");
    g->add_option("--seed", gen.seed, "random seed");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a surrogate on a generated dataset");
    add_problem_options(t, tr.problem);
    add_common(t, tr.common);
    t->add_option("--design", tr.design, "design.csv")->required();
    t->add_option("--values", tr.values, "objective.csv")->required();
    t->add_option("--seed", tr.seed, "initialization and shuffling seed");
    add_train_params(t, tr.params);

    StudyArgs st;
    auto* s = app.add_subcommand("ptme", "run the precision/time/memory/energy study");
    add_problem_options(s, st.problem);
    add_common(s, st.common);
    s->add_option("--methods", st.methods, "sampling methods")->delimiter(',');
    s->add_option("--sizes", st.sizes, "training sizes, strictly increasing")->delimiter(',');
    s->add_option("--n-test", st.n_test, "shared test set size");
    s->add_option("--trials", st.trials, "trials per method and size");
    s->add_option("--seed", st.seed, "study seed");
    s->add_option("--batch-k", st.batch_k, "predictions per measured inference region");
    s->add_flag("--paper-scale", st.paper_scale, "sizes 1k..1M, 10 trials, 10k test samples");
    s->add_flag("--save-models", st.save_models, "write every trained model to models/");
    add_train_params(s, st.params);

    OptimizeArgs op;
    auto* o = app.add_subcommand("optimize", "run PSO or surrogate-assisted PSO");
    add_problem_options(o, op.problem);
    add_common(o, op.common);
    o->add_option("--mode", op.mode, "pso or sapso");
    o->add_option("--model", op.models, "surrogate model file (repeatable, one group each)");
    o->add_flag("--oracle-surrogate", op.oracle_surrogate, "use the real objective as the surrogate");
    o->add_flag("--with-baseline", op.with_baseline, "also run plain PSO in sapso mode");
    o->add_option("--seeds", op.seeds, "seed list, e.g. 1..10 or 1,4,9");
    o->add_option("--swarm-size", op.params.swarm_size, "particles");
    o->add_option("--max-evals", op.params.max_evaluations, "evaluation budget per run");
    o->add_option("--phi1", op.params.phi_personal, "personal acceleration");
    o->add_option("--phi2", op.params.phi_global, "global acceleration");
    o->add_option("--w-start", op.params.inertia_start, "initial inertia");
    o->add_option("--w-end", op.params.inertia_end, "final inertia");
    o->add_option("--lambda", op.params.velocity_truncation, "velocity truncation factor");

    ReportArgs rp;
    auto* r = app.add_subcommand("report", "summaries from study_raw.csv and objective distributions");
    auto* rg = r->add_option_group("problem");
    rg->add_option("--preset", rp.problem.preset, "bundled traffic preset");
    rg->add_option("--instance", rp.problem.instance, "traffic instance file");
    rg->add_option("--objective", rp.problem.objective, "synthetic:NAME:D[:LO:HI]");
    rg->require_option(0, 1);
    add_common(r, rp.common);
    r->add_option("--raw", rp.raw, "study_raw.csv to summarize");
    r->add_option("--design", rp.design, "design.csv for the entropy column");
    r->add_option("--values", rp.values, "objective.csv for the log-normal fit");

    for (auto* sub : {g, t, s, o, r}) sub->add_option("--config", "key=value file (flags override it)");

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = expand_config(std::move(args));
        std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (g->parsed()) cmd_generate(gen, g);
        else if (t->parsed()) cmd_train(tr, t);
        else if (s->parsed()) cmd_ptme(st, s);
        else if (o->parsed()) cmd_optimize(op, o);
        else if (r->parsed()) cmd_report(rp, r);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
