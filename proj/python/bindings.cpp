#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "abcmix/engine.hpp"
#include "abcmix/error.hpp"
#include "abcmix/io.hpp"

namespace py = pybind11;
using namespace abcmix;

namespace {

py::dict summary_dict(const std::vector<io::ParameterSummary>& summary) {
    py::dict out;
    for (const auto& p : summary) {
        out[py::str(p.name)] = py::make_tuple(p.mean, p.sd);
    }
    return out;
}

ObservedDataset make_dataset(std::vector<double> values,
                             std::optional<std::vector<double>> errors, std::size_t grid_size) {
    return ObservedDataset(std::move(values), std::move(errors), grid_size);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ABC-PMC sampler for finite Gaussian mixtures";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<DegenerateSampleError>(m, "DegenerateSampleError", PyExc_RuntimeError);
    py::register_exception<DegenerateSystemError>(m, "DegenerateSystemError", PyExc_RuntimeError);
    py::register_exception<EngineAbort>(m, "EngineAbort", PyExc_RuntimeError);

    py::class_<MixtureParams>(m, "MixtureParams")
        .def(py::init<std::vector<double>, std::vector<double>, std::vector<double>>(),
             py::arg("weights"), py::arg("means"), py::arg("variances"))
        .def_property_readonly("components", &MixtureParams::components)
        .def_property_readonly("weights", &MixtureParams::weights)
        .def_property_readonly("means", &MixtureParams::means)
        .def_property_readonly("variances", &MixtureParams::variances)
        .def("permuted", [](const MixtureParams& p, std::vector<std::size_t> order) {
            return p.permuted(order);
        })
        .def(py::self == py::self)
        .def("__repr__", [](const MixtureParams& p) {
            return "MixtureParams(weights=" + py::repr(py::cast(p.weights())).cast<std::string>() +
                   ", means=" + py::repr(py::cast(p.means())).cast<std::string>() +
                   ", variances=" + py::repr(py::cast(p.variances())).cast<std::string>() + ")";
        });

    py::class_<PriorSpec>(m, "PriorSpec")
        .def(py::init<>())
        .def_readwrite("dirichlet_concentration", &PriorSpec::dirichlet_concentration)
        .def_readwrite("mean_prior_location", &PriorSpec::mean_prior_location)
        .def_readwrite("mean_prior_variance", &PriorSpec::mean_prior_variance)
        .def_readwrite("precision_shape", &PriorSpec::precision_shape)
        .def_readwrite("precision_rate", &PriorSpec::precision_rate)
        .def_readwrite("fixed_weights", &PriorSpec::fixed_weights)
        .def_readwrite("fixed_variances", &PriorSpec::fixed_variances)
        .def_property_readonly("components", &PriorSpec::components)
        .def("validate", &PriorSpec::validate);

    py::class_<DensitySummary>(m, "DensitySummary")
        .def_property_readonly("grid", &DensitySummary::grid)
        .def_property_readonly("density", &DensitySummary::density)
        .def_property_readonly("bandwidth", &DensitySummary::bandwidth)
        .def("integral", &DensitySummary::integral)
        .def("__call__", &DensitySummary::operator());

    py::class_<ObservedDataset>(m, "ObservedDataset")
        .def(py::init(&make_dataset), py::arg("values"), py::arg("errors") = py::none(),
             py::arg("grid_size") = kDefaultGridSize)
        .def_property_readonly("values", &ObservedDataset::values)
        .def_property_readonly("errors", &ObservedDataset::measurement_errors)
        .def_property_readonly("summary", &ObservedDataset::summary)
        .def("__len__", &ObservedDataset::size)
        .def("mean", &ObservedDataset::mean)
        .def("variance", &ObservedDataset::variance);

    py::class_<Particle>(m, "Particle")
        .def_readonly("params", &Particle::params)
        .def_readonly("importance_weight", &Particle::importance_weight)
        .def_readonly("distance", &Particle::distance);

    py::class_<ParticleSystem>(m, "ParticleSystem")
        .def(py::init([](std::vector<MixtureParams> params, std::vector<double> weights) {
                 if (weights.size() != params.size()) {
                     throw DomainError("one importance weight per particle");
                 }
                 ParticleSystem s;
                 for (std::size_t j = 0; j < params.size(); ++j) {
                     s.particles.push_back(Particle{std::move(params[j]), weights[j], 0.0});
                 }
                 return s;
             }),
             py::arg("params"), py::arg("weights"))
        .def_readonly("particles", &ParticleSystem::particles)
        .def_readonly("iteration", &ParticleSystem::iteration)
        .def_readonly("tolerance", &ParticleSystem::tolerance)
        .def("__len__", &ParticleSystem::size)
        .def("weights", &ParticleSystem::weights)
        .def("weight_values", &ParticleSystem::weight_values)
        .def("mean_values", &ParticleSystem::mean_values)
        .def("variance_values", &ParticleSystem::variance_values)
        .def("effective_sample_size",
             [](const ParticleSystem& s) { return effective_sample_size(s); });

    py::enum_<ParameterSet>(m, "ParameterSet")
        .value("weights", ParameterSet::weights)
        .value("means", ParameterSet::means)
        .value("variances", ParameterSet::variances);

    py::class_<RelabelReport>(m, "RelabelReport")
        .def_readonly("chosen_parameter", &RelabelReport::chosen_parameter)
        .def_readonly("separation_score", &RelabelReport::separation_score)
        .def_readonly("per_parameter_scores", &RelabelReport::per_parameter_scores);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("n_particles", &RunConfig::n_particles)
        .def_readwrite("n_init", &RunConfig::n_init)
        .def_readwrite("quantile", &RunConfig::quantile)
        .def_readwrite("retention", &RunConfig::retention)
        .def_readwrite("stop_threshold", &RunConfig::stop_threshold)
        .def_readwrite("max_iterations", &RunConfig::max_iterations)
        .def_readwrite("max_attempts_per_particle", &RunConfig::max_attempts_per_particle)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("grid_size", &RunConfig::grid_size)
        .def_readwrite("literal_kernel_density", &RunConfig::literal_kernel_density)
        .def_readwrite("use_measurement_errors", &RunConfig::use_measurement_errors)
        .def_readwrite("relabel_key", &RunConfig::relabel_key)
        .def_readwrite("threads", &RunConfig::threads)
        .def_readwrite("target_tolerance", &RunConfig::target_tolerance)
        .def_readwrite("max_simulations", &RunConfig::max_simulations)
        .def("validate", &RunConfig::validate);

    py::class_<IterationTelemetry>(m, "IterationTelemetry")
        .def_readonly("iteration", &IterationTelemetry::iteration)
        .def_readonly("tolerance", &IterationTelemetry::tolerance)
        .def_readonly("acceptance_rate", &IterationTelemetry::acceptance_rate)
        .def_readonly("ess", &IterationTelemetry::ess)
        .def_readonly("attempts", &IterationTelemetry::attempts)
        .def_readonly("marginal_shift", &IterationTelemetry::marginal_shift)
        .def_readonly("relabel", &IterationTelemetry::relabel)
        .def_readonly("seconds", &IterationTelemetry::seconds);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("system", &RunResult::system)
        .def_readonly("telemetry", &RunResult::telemetry)
        .def_property_readonly("stop_reason",
                               [](const RunResult& r) { return std::string(to_string(r.reason)); })
        .def("summary", [](const RunResult& r) {
            return summary_dict(io::posterior_summary(r.system));
        });

    m.def("data_driven_prior", &data_driven_prior, py::arg("data"), py::arg("components"));

    m.def(
        "sample_prior",
        [](const PriorSpec& prior, std::uint64_t seed) {
            Rng rng = make_stream(seed);
            return sample_prior(prior, rng);
        },
        py::arg("prior"), py::arg("seed"));

    m.def(
        "simulate",
        [](const MixtureParams& params, std::size_t n, std::uint64_t seed) {
            Rng rng = make_stream(seed);
            return simulate(params, n, rng);
        },
        py::arg("params"), py::arg("n"), py::arg("seed"));

    m.def(
        "kde", [](const std::vector<double>& x, std::size_t g) { return kde(x, g); },
        py::arg("sample"), py::arg("grid_size") = kDefaultGridSize);
    m.def(
        "weighted_kde",
        [](const std::vector<double>& x, const std::vector<double>& w, std::size_t g) {
            return weighted_kde(x, w, g);
        },
        py::arg("sample"), py::arg("weights"), py::arg("grid_size") = kDefaultGridSize);
    m.def(
        "hellinger", [](const DensitySummary& f, const DensitySummary& g) { return hellinger(f, g); },
        py::arg("f"), py::arg("g"));
    m.def(
        "abc_distance",
        [](const ObservedDataset& obs, const std::vector<double>& sim) {
            return abc_distance(obs, sim);
        },
        py::arg("observed"), py::arg("simulated"));

    m.def(
        "resample_weights",
        [](const std::vector<double>& previous, const std::vector<double>& delta,
           double retention, std::uint64_t seed) {
            Rng rng = make_stream(seed);
            return resample_weights(previous, delta, retention, rng);
        },
        py::arg("previous"), py::arg("concentration"), py::arg("retention"), py::arg("seed"));

    m.def(
        "relabel",
        [](const ParticleSystem& system, const PriorSpec& prior,
           std::optional<ParameterSet> key) { return relabel(system, prior, key); },
        py::arg("system"), py::arg("prior"), py::arg("forced_key") = py::none());

    m.def(
        "run",
        [](const PriorSpec& prior, const ObservedDataset& data, const RunConfig& config,
           const std::function<void(const IterationTelemetry&)>& on_iteration) {
            RunSink sink;
            if (on_iteration) {
                sink = [&](const IterationTelemetry& t) {
                    py::gil_scoped_acquire gil;
                    on_iteration(t);
                };
            }
            py::gil_scoped_release release;
            return run(prior, data, config, sink);
        },
        py::arg("prior"), py::arg("data"), py::arg("config"),
        py::arg("on_iteration") = py::none());

    m.def(
        "presets",
        [] {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& p : io::presets()) {
                out.emplace_back(p.name, p.description);
            }
            return out;
        });

    m.def(
        "run_preset",
        [](const std::string& name, const std::map<std::string, std::string>& overrides) {
            auto kv = io::KeyValues::parse(io::find_preset(name).config_text);
            for (const auto& [k, v] : overrides) {
                kv.set(k, v);
            }
            const std::size_t grid =
                kv.contains("grid_size") ? kv.get_size("grid_size") : kDefaultGridSize;
            const auto data = io::preset_dataset(name, grid);
            const auto setup = io::build_setup(kv, data);
            py::gil_scoped_release release;
            return run(setup.prior, data, setup.config);
        },
        py::arg("name"), py::arg("overrides") = std::map<std::string, std::string>{},
        "Runs a bundled experiment; `overrides` are config keys as strings.");

    m.def("read_dataset_csv", [](const std::filesystem::path& p) { return io::read_dataset_csv(p); },
          py::arg("path"));
}
