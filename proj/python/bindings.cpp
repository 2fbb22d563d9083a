#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ptme/design_space.hpp"
#include "ptme/error.hpp"
#include "ptme/harness.hpp"
#include "ptme/metrics.hpp"
#include "ptme/mlp.hpp"
#include "ptme/objective.hpp"
#include "ptme/rng.hpp"
#include "ptme/statistics.hpp"
#include "ptme/swarm.hpp"
#include "ptme/telemetry.hpp"
#include "ptme/traffic.hpp"

namespace py = pybind11;
using namespace ptme;

namespace {

using Vector = std::vector<double>;

py::dict record_dict(const MeasurementRecord& r) {
    py::dict d;
    d["cpu_energy_j"] = r.cpu_energy_j;
    d["dram_energy_j"] = r.dram_energy_j;
    d["wall_time_s"] = r.wall_time_s;
    d["peak_memory_bytes"] = r.peak_memory_bytes;
    d["energy_available"] = r.energy_available();
    return d;
}

py::dict precision_dict(const PrecisionMetrics& p) {
    py::dict d;
    d["mape"] = p.mape;
    d["rmse"] = p.rmse;
    d["tau_a"] = p.tau_a;
    d["tau_b"] = p.tau_b;
    return d;
}

PsoParams pso_params(std::size_t swarm_size, std::size_t max_evaluations, double phi1, double phi2,
                     double w_start, double w_end, double truncation) {
    PsoParams p;
    p.swarm_size = swarm_size;
    p.max_evaluations = max_evaluations;
    p.phi_personal = phi1;
    p.phi_global = phi2;
    p.inertia_start = w_start;
    p.inertia_end = w_end;
    p.velocity_truncation = truncation;
    p.validate();
    return p;
}

py::list trajectory_list(const std::vector<TrajectoryPoint>& t) {
    py::list out;
    for (const auto& p : t) out.append(py::make_tuple(p.generation, p.evaluations, p.best_fitness));
    return out;
}

template <class F>
std::string to_csv(F&& write) {
    std::ostringstream ss;
    write(ss);
    return ss.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Core bindings for the ptme measurement framework";

    auto base = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
    (void)base;

    m.def("derive_seed", &derive_seed, py::arg("parent"), py::arg("label"), py::arg("index") = 0);

    py::class_<DesignSpace>(m, "DesignSpace")
        .def(py::init<Vector, Vector, std::vector<std::optional<double>>, bool>(), py::arg("lower"),
             py::arg("upper"), py::arg("fixed") = std::vector<std::optional<double>>{},
             py::arg("integer_valued") = false)
        .def_static("box", &DesignSpace::box, py::arg("dim"), py::arg("lower"), py::arg("upper"),
                    py::arg("integer_valued") = false)
        .def_static("traffic_default", &DesignSpace::traffic_default, py::arg("dim"))
        .def_property_readonly("dim", &DesignSpace::dim)
        .def_property_readonly("integer_valued", &DesignSpace::integer_valued)
        .def_property_readonly("lower", py::overload_cast<>(&DesignSpace::lower, py::const_))
        .def_property_readonly("upper", py::overload_cast<>(&DesignSpace::upper, py::const_))
        .def_property_readonly("free_count", &DesignSpace::free_count)
        .def("is_free", &DesignSpace::is_free)
        .def("contains", [](const DesignSpace& s, const Vector& x) { return s.contains(x); });

    m.def("uniform_random_sample", &uniform_random_sample, py::arg("space"), py::arg("n"), py::arg("seed"));
    m.def("latin_hypercube_sample", &latin_hypercube_sample, py::arg("space"), py::arg("n"), py::arg("seed"));
    m.def("quantize", &quantize, py::arg("matrix"), py::arg("space"));
    m.def(
        "sample_design",
        [](const DesignSpace& space, const std::string& method, std::size_t n, std::uint64_t seed) {
            return sample_design(space, parse_sampling_method(method), n, seed);
        },
        py::arg("space"), py::arg("method"), py::arg("n"), py::arg("seed"),
        "Samples n points with 'urs' or 'lhs', quantized on integer spaces.");
    m.def("average_entropy", &average_entropy, py::arg("matrix"), py::arg("space"));

    m.def("mape", [](const Vector& t, const Vector& p) { return mape(t, p); }, py::arg("y_true"), py::arg("y_pred"));
    m.def("rmse", [](const Vector& t, const Vector& p) { return rmse(t, p); }, py::arg("y_true"), py::arg("y_pred"));
    m.def("kendall_tau_a", [](const Vector& t, const Vector& p) { return kendall_tau_a(t, p); },
          py::arg("y_true"), py::arg("y_pred"));
    m.def("kendall_tau_b", [](const Vector& t, const Vector& p) { return kendall_tau_b(t, p); },
          py::arg("y_true"), py::arg("y_pred"));
    m.def("precision_metrics", [](const Vector& t, const Vector& p) { return precision_dict(precision_metrics(t, p)); },
          py::arg("y_true"), py::arg("y_pred"));

    m.def(
        "mann_whitney_u",
        [](const Vector& a, const Vector& b, const std::string& method) {
            MannWhitneyMethod mm = MannWhitneyMethod::automatic;
            if (method == "exact") mm = MannWhitneyMethod::exact;
            else if (method == "normal") mm = MannWhitneyMethod::normal;
            else if (method != "auto") throw ConfigError("method must be auto, exact or normal");
            const auto r = mann_whitney_u(a, b, mm);
            py::dict d;
            d["u_a"] = r.u_a;
            d["u_b"] = r.u_b;
            d["p_value"] = r.p_value;
            d["exact"] = r.exact;
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("method") = "auto");
    m.def(
        "fit_lognormal",
        [](const Vector& y) {
            const auto f = fit_lognormal(y);
            py::dict d;
            d["mu"] = f.mu;
            d["sigma2"] = f.sigma2;
            d["mean"] = f.mean;
            d["variance"] = f.variance;
            return d;
        },
        py::arg("y"));

    py::class_<MlpModel>(m, "MlpModel")
        .def_static(
            "build",
            [](const DesignSpace& space, std::uint64_t seed) { return build(MlpSpec::for_space(space), seed); },
            py::arg("space"), py::arg("seed"))
        .def_static("load", py::overload_cast<const std::string&>(&load_model), py::arg("path"))
        .def("save", [](const MlpModel& model, const std::string& path) { save_model(path, model); }, py::arg("path"))
        .def_property_readonly("input_dim", &MlpModel::input_dim)
        .def_property_readonly("hidden_dims", [](const MlpModel& model) { return model.spec().hidden_dims; })
        .def_property_readonly("parameter_count", &MlpModel::parameter_count)
        .def("predict", py::overload_cast<const DesignMatrix&>(&MlpModel::predict, py::const_), py::arg("x"))
        .def("predict_one", [](const MlpModel& model, const Vector& x) { return model.predict(x); }, py::arg("x"));

    m.def(
        "train",
        [](const MlpModel& model, const DesignMatrix& x, const Vector& y, int epochs, std::size_t batch_size,
           double lr, std::uint64_t seed) {
            TrainParams p;
            p.epochs = epochs;
            p.batch_size = batch_size;
            p.learning_rate = lr;
            Dataset data{x, y};
            py::gil_scoped_release release;
            auto r = train(model, data, p, seed);
            py::gil_scoped_acquire acquire;
            py::dict info;
            info["initial_mse"] = r.initial_mse;
            info["final_mse"] = r.final_mse;
            info["epoch_mse"] = r.epoch_mse;
            return py::make_tuple(std::move(r.model), info);
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("epochs") = 100, py::arg("batch_size") = 32,
        py::arg("lr") = 1.0e-4, py::arg("seed") = 1,
        "Trains a copy of the model and returns (model, info).");

    py::class_<Objective>(m, "Objective")
        .def_property_readonly("name", &Objective::name)
        .def_property_readonly("dim", &Objective::dim)
        .def("default_space", &Objective::default_space)
        .def("__call__", [](const Objective& o, const Vector& x) { return o.evaluate(x); }, py::arg("x"))
        .def("evaluate_rows", [](const Objective& o, const DesignMatrix& x) { return evaluate_rows(o, x); },
             py::arg("x"));

    py::class_<SyntheticObjective, Objective>(m, "SyntheticObjective")
        .def(py::init([](const std::string& kind, std::size_t dim, Vector shift, std::optional<DesignSpace> space) {
                 return SyntheticObjective(SyntheticObjective::parse_kind(kind), dim, std::move(shift),
                                           space ? *space : DesignSpace::box(dim, 0.0, 1.0));
             }),
             py::arg("kind"), py::arg("dim"), py::arg("shift") = Vector{}, py::arg("space") = py::none());

    py::class_<TrafficInstance>(m, "TrafficInstance")
        .def_readonly("name", &TrafficInstance::name)
        .def_readonly("simulation_time", &TrafficInstance::simulation_time)
        .def_property_readonly("phase_count", &TrafficInstance::phase_count)
        .def_property_readonly("vehicle_count", [](const TrafficInstance& t) { return t.vehicles.size(); })
        .def_property_readonly("link_count", [](const TrafficInstance& t) { return t.links.size(); })
        .def("to_text", [](const TrafficInstance& t) { return to_csv([&](std::ostream& o) { write_instance(o, t); }); });

    py::class_<TrafficObjective, Objective>(m, "TrafficObjective")
        .def(py::init<TrafficInstance>(), py::arg("instance"))
        .def_property_readonly("instance", &TrafficObjective::instance);

    m.def("preset_names", &preset_names);
    m.def("make_preset", &make_preset, py::arg("name"));
    m.def("load_instance", &load_instance, py::arg("path"));
    m.def(
        "simulate",
        [](const TrafficInstance& t, const Vector& plan) {
            const auto p = TrafficPlan::from_values(plan);
            const auto s = simulate(t, p);
            const auto g = green_red_ratio(t, p);
            py::dict d;
            d["travel_time"] = s.travel_time;
            d["waiting_time"] = s.waiting_time;
            d["delivered"] = s.delivered;
            d["undelivered"] = s.undelivered;
            d["green_red_ratio"] = g.value;
            d["objective"] = combine_objective(s, g.value, t.simulation_time).value;
            return d;
        },
        py::arg("instance"), py::arg("plan"));
    m.def(
        "traffic_objective",
        [](const TrafficInstance& t, const Vector& plan) { return objective(t, TrafficPlan::from_values(plan)).value; },
        py::arg("instance"), py::arg("plan"));

    m.def(
        "pso_run",
        [](const Objective& obj, std::optional<DesignSpace> space, std::uint64_t seed, std::size_t swarm_size,
           std::size_t max_evaluations, double phi1, double phi2, double w_start, double w_end, double truncation) {
            const auto p = pso_params(swarm_size, max_evaluations, phi1, phi2, w_start, w_end, truncation);
            const DesignSpace s = space ? *space : obj.default_space();
            PsoResult r;
            {
                py::gil_scoped_release release;
                r = pso_run(ObjectiveEvaluator(obj), s, p, seed);
            }
            py::dict d;
            d["best_position"] = r.best_position;
            d["best_fitness"] = r.best_fitness;
            d["evaluations"] = r.evaluations;
            d["trajectory"] = trajectory_list(r.trajectory);
            return d;
        },
        py::arg("objective"), py::arg("space") = py::none(), py::arg("seed") = 1, py::arg("swarm_size") = 100,
        py::arg("max_evaluations") = 30000, py::arg("phi1") = 2.05, py::arg("phi2") = 2.05,
        py::arg("w_start") = 0.5, py::arg("w_end") = 0.1, py::arg("velocity_truncation") = 0.5);

    m.def(
        "sapso_run",
        [](const MlpModel& model, const Objective& obj, std::optional<DesignSpace> space, std::uint64_t seed,
           std::size_t swarm_size, std::size_t max_evaluations, double phi1, double phi2, double w_start,
           double w_end, double truncation) {
            const auto p = pso_params(swarm_size, max_evaluations, phi1, phi2, w_start, w_end, truncation);
            const DesignSpace s = space ? *space : obj.default_space();
            SapsoResult r;
            {
                py::gil_scoped_release release;
                r = sapso_run(model, obj, s, p, seed);
            }
            py::dict d;
            d["best_position"] = r.search.best_position;
            d["surrogate_value"] = r.surrogate_value;
            d["real_value"] = r.real_value;
            d["surrogate_evaluations"] = r.surrogate_evaluations;
            d["real_evaluations"] = r.real_evaluations;
            d["trajectory"] = trajectory_list(r.search.trajectory);
            return d;
        },
        py::arg("model"), py::arg("objective"), py::arg("space") = py::none(), py::arg("seed") = 1,
        py::arg("swarm_size") = 100, py::arg("max_evaluations") = 30000, py::arg("phi1") = 2.05,
        py::arg("phi2") = 2.05, py::arg("w_start") = 0.5, py::arg("w_end") = 0.1,
        py::arg("velocity_truncation") = 0.5);

    m.def(
        "measure",
        [](const py::function& region, const std::string& rapl_root) {
            Meter meter{EnergyProbe(rapl_root)};
            auto [result, rec] = meter.measure([&] { return py::object(region()); });
            return py::make_tuple(result, record_dict(rec));
        },
        py::arg("region"), py::arg("rapl_root") = EnergyProbe::kDefaultRoot,
        "Runs region() in a measured region and returns (result, record). Heap peaks are not tracked in the "
        "Python module.");

    m.def(
        "run_study",
        [](const Objective& obj, std::optional<DesignSpace> space, const std::vector<std::string>& methods,
           const std::vector<std::size_t>& sizes, std::size_t n_test, std::size_t trials, std::uint64_t seed,
           std::size_t batch_k, int epochs, std::size_t batch_size, double lr) {
            StudyConfig c;
            c.methods.clear();
            for (const auto& name : methods) c.methods.push_back(parse_sampling_method(name));
            c.sizes = sizes;
            c.n_test = n_test;
            c.trials = trials;
            c.seed = seed;
            c.inference_batch = batch_k;
            c.train.epochs = epochs;
            c.train.batch_size = batch_size;
            c.train.learning_rate = lr;
            c.validate();
            const DesignSpace s = space ? *space : obj.default_space();
            PtmeStudyReport report;
            {
                py::gil_scoped_release release;
                Meter meter;
                report = run_study(c, obj, s, meter);
            }
            const auto raw = report.raw_rows();
            const auto summary = summarize_rows(raw);
            py::dict d;
            d["raw_csv"] = to_csv([&](std::ostream& o) { write_raw_csv(o, raw); });
            d["summary_csv"] = to_csv([&](std::ostream& o) { write_summary_csv(o, summary); });
            d["normalized_csv"] = to_csv([&](std::ostream& o) { write_normalized_csv(o, normalize_report(summary)); });
            d["energy_available"] = report.energy_available;
            d["tau_mismatches"] = report.tau_mismatches;
            py::list precision;
            for (const auto& cell : report.cells)
                for (const auto& t : cell.trials) {
                    py::dict row = precision_dict(t.precision);
                    row["method"] = to_string(cell.method);
                    row["size"] = cell.size;
                    row["trial"] = t.trial;
                    row["train_wall_time_s"] = t.training.wall_time_s;
                    precision.append(row);
                }
            d["trials"] = precision;
            return d;
        },
        py::arg("objective"), py::arg("space") = py::none(), py::arg("methods") = std::vector<std::string>{"urs", "lhs"},
        py::arg("sizes") = std::vector<std::size_t>{100, 1000, 10000}, py::arg("n_test") = 1000,
        py::arg("trials") = 3, py::arg("seed") = 1, py::arg("batch_k") = 1, py::arg("epochs") = 100,
        py::arg("batch_size") = 32, py::arg("lr") = 1.0e-4);
}
